"""Shared logging, I/O, hashing and error types for quadtrack."""
