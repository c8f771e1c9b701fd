"""Gauge-specific vector potentials as Cartesian monomial tables."""
