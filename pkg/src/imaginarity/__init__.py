"""Imaginarity measures, real channels and qubit state-order scans."""

__version__ = "0.1.0"
