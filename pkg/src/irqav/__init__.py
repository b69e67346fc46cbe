"""Atomicity-violation detection for interrupt-driven C programs."""

__version__ = "0.1.0"
