"""Similarity matching for uncertain time series."""
__version__ = "0.1.0"
