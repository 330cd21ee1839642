"""Exact two-qubit entanglement dynamics in a common Lorentzian reservoir."""

__version__ = "0.1.0"
