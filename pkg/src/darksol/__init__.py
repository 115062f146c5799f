"""Dark-soliton laboratory: 1D GPE/NPSE split-step simulations, soliton
tracking and the effective-particle model of interacting dark solitons."""

__version__ = "0.1.0"
