"""Steganographic communication hidden in simulated quantum channel noise."""

__version__ = "0.1.0"
