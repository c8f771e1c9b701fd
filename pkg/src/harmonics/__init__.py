"""Field harmonics ingestion and generalized-gradient reconstruction."""
