"""Deterministic figure rendering for kposim CSV products."""

__version__ = "0.1.0"

from .io import InputError, read_csv, read_husimi_field
from .recipes import RECIPES

__all__ = ["InputError", "read_csv", "read_husimi_field", "RECIPES", "__version__"]
