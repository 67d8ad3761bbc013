"""Krein-matrix tools for star-even pencils and two wave-stability applications."""

from .errors import *  # noqa: F401,F403
from .pencil import (PolyEigenvalue, SpectrumReport, StarEvenPencil, evaluate,
                     evaluate_derivative, krein_index_of, polynomial_spectrum,
                     validate_pencil)
from .tolerances import DEFAULT, Tolerances

__version__ = "0.1.0"
