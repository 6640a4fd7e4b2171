"""Number coercion and formatting shared across the package.

Currency amounts and probabilities are carried as `fractions.Fraction`
internally so closed forms, the simplex solver, and threshold comparisons
are exact.  The "float" mode converts at the reporting boundary; sweeps in
float mode additionally evaluate their formulas in 64-bit arithmetic.
"""

from __future__ import annotations

from fractions import Fraction
from typing import Union

from .errors import InputError

RATIONAL = "rational"
FLOAT = "float"
MODES = (RATIONAL, FLOAT)

Num = Union[int, float, str, Fraction]


def as_fraction(value: Num) -> Fraction:
    """Coerce ints, Fractions, strings, and floats to an exact Fraction.

    Strings accept integers, decimals, and rationals written "p/q".
    Floats are read through their shortest decimal repr, so 0.1 means
    1/10 rather than the underlying binary expansion.
    """
    if isinstance(value, bool):
        raise InputError("booleans are not valid numbers")
    if isinstance(value, Fraction):
        return value
    if isinstance(value, int):
        return Fraction(value)
    if isinstance(value, float):
        try:
            return Fraction(repr(value))
        except (ValueError, OverflowError):
            raise InputError(f"non-finite value {value!r}") from None
    if isinstance(value, str):
        try:
            return Fraction(value.strip())
        except (ValueError, ZeroDivisionError):
            raise InputError(f"cannot parse number {value!r}") from None
    raise InputError(f"unsupported numeric type {type(value).__name__}")


def check_mode(mode: str) -> str:
    if mode not in MODES:
        raise InputError(f"unknown numeric mode {mode!r}; expected one of {MODES}")
    return mode


def in_mode(value, mode: str):
    """Return `value` as a float in float mode, unchanged otherwise."""
    return float(value) if mode == FLOAT else value


def sig15(value) -> str:
    """Format a number with 15 significant digits (CSV convention)."""
    return "%.15g" % float(value)
