"""Fairness-aware flow assignment for layered urban air mobility networks."""

__version__ = "0.1.0"
