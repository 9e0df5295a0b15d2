"""Hidden quantum Markov models with kernel-embedded states."""

__version__ = "0.1.0"
