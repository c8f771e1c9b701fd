"""
quadtrack: quadrupole vector potentials and long-term particle tracking

Purpose: reconstruct gauge-specific vector potentials from sampled field harmonics
and integrate the paraxial equations of motion with symplectic and classical
one-step methods.
License: MIT
"""

__version__ = "0.1.0"
