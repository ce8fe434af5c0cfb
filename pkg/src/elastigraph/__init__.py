"""Elastic ribbon graph toolkit: coverings, energies, obstructions."""

__version__ = "0.1.0"
