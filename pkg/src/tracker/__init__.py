"""Lattices, multi-element tracking and the convergence, efficiency and energy studies."""
