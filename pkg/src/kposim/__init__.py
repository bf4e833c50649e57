"""Floquet and classical-chaos diagnostics for the squeeze-driven Kerr oscillator."""

__version__ = "0.1.0"

from . import classical, cli, floquet, fock, hamiltonians, model, phasespace, tracking
from .errors import KposimError

__all__ = [
    "classical",
    "cli",
    "floquet",
    "fock",
    "hamiltonians",
    "model",
    "phasespace",
    "tracking",
    "KposimError",
    "__version__",
]
