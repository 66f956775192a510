"""Likelihood-free inference for a computationally rational menu-search model."""
__version__ = "0.1.0"
