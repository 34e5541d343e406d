"""Modifier scope detection and modifier-aware emotion classification."""

__version__ = "0.1.0"
