"""Stability of incommensurate fractional-order LTI systems with real orders."""
from .quasipoly import (
    Affine,
    FractionalSystem,
    ModelError,
    QuasiPolynomial,
    SymbolicQuasiPolynomial,
    bind,
    evaluate,
    expand_characteristic,
    parse_affine,
    symbolic_from_terms,
)

__version__ = "0.1.0"
