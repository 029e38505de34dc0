"""Overconvergent de Rham cohomology of smooth affine curves and friends.

Exact arithmetic over the rationals or capped-precision p-adic numbers.
"""

from .arith import (
    INFINITY,
    QQ,
    PAdic,
    PAdicField,
    PrecisionExhausted,
    Qp,
    valuation,
    solve_linear,
    Matrix,
)

__all__ = [
    "INFINITY",
    "QQ",
    "PAdic",
    "PAdicField",
    "PrecisionExhausted",
    "Qp",
    "valuation",
    "solve_linear",
    "Matrix",
]

__version__ = "0.1.0"
