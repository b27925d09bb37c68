"""Minimum-eigenvalue (Loewner order) matrix tail bounds and their numerical verification."""

__version__ = "0.1.0"
