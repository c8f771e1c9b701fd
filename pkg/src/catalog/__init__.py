"""Study catalog: batches of reproduction runs declared in YAML."""
