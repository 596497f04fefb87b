"""Quantum kicked rotor at quantum resonance: propagator and closed forms."""

__version__ = "0.1.0"
