"""Coefficient interpolation and instrumented field evaluation."""
