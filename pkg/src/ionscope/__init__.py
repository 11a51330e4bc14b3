"""Trapped-ion motional state synthesis and sequential filtering measurement."""

__version__ = "0.1.0"
