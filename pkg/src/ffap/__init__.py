"""Exact desk-scale experiments on arithmetic progressions in F_p^n with polynomially restricted gaps."""

from .ffcore import DenseFunction, FieldParams, fourier, inverse_fourier
from .gowers import gowers_norm, phase_function, phase_norm_closed_form
from .polymap import PolyMap, from_monomials, parse, serialize, sum_of_powers
from .variety import PointSet, level_set, singular_locus, wstar_count, wstar_lambda

__version__ = "0.1.0"

__all__ = [
    "DenseFunction", "FieldParams", "PointSet", "PolyMap", "fourier", "from_monomials", "gowers_norm",
    "inverse_fourier", "level_set", "parse", "phase_function", "phase_norm_closed_form", "serialize",
    "singular_locus", "sum_of_powers", "wstar_count", "wstar_lambda",
]
