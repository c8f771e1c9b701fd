"""Reduced paraxial Hamiltonian system."""
