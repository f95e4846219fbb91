"""Finite-horizon analysis of balance, complexity and recurrence in infinite words."""

from .errors import HorizonError, ValidationError
from .words import Alphabet, FiniteWord, WordSource, ExplicitSource, ShiftSource

__version__ = "0.1.0"

__all__ = [
    "Alphabet",
    "FiniteWord",
    "WordSource",
    "ExplicitSource",
    "ShiftSource",
    "ValidationError",
    "HorizonError",
    "__version__",
]
