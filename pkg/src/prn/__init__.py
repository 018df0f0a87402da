"""Partial Response Networks: interpretable additive networks derived from an MLP."""

__version__ = "0.1.0"
