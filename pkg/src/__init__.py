"""Entanglement purification under depolarizing gate noise: F_min, F_∞ and the threshold."""

__version__ = "1.0.0"
