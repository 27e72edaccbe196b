"""Numerical laboratory for open-system reduced dynamics, Markovianity and coherence."""

__version__ = "0.1.0"
