"""Exact rational arithmetic backend.

gmpy2's mpq carries the whole engine when available (an order of magnitude
faster than fractions.Fraction); both types interoperate freely, so callers
may pass Fraction values anywhere.
"""

from __future__ import annotations

from fractions import Fraction

try:
    from gmpy2 import mpq as Rational
except ImportError:  # pragma: no cover - gmpy2 is a declared dependency
    Rational = Fraction


def rational(numerator, denominator=None):
    """Exact rational from ints, strings like ``"p/q"``, or other rationals."""
    if denominator is None:
        return Rational(numerator)
    return Rational(numerator, denominator)


ZERO = rational(0)
ONE = rational(1)
