"""Kink solutions of variable-coefficient scalar field equations:
construction, Evans-function spectral analysis, and time-domain checks."""

__version__ = "0.1.0"
