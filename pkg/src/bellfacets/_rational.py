"""Small helpers for exact rational bookkeeping."""

from __future__ import annotations

import math
from fractions import Fraction
from typing import Iterable, Sequence


def as_fraction(value) -> Fraction:
    if isinstance(value, Fraction):
        return value
    if isinstance(value, str):
        return Fraction(value.strip())
    if isinstance(value, float):
        # floats are taken at face value; callers that want rounding use rationalize()
        return Fraction(value)
    return Fraction(value)


def fraction_str(q: Fraction) -> str:
    """Serialize as ``"num/den"`` (always with an explicit denominator)."""
    q = as_fraction(q)
    return f"{q.numerator}/{q.denominator}"


def parse_fraction(text: str) -> Fraction:
    return Fraction(text)


def common_denominator(values: Iterable[Fraction]) -> int:
    den = 1
    for v in values:
        d = v.denominator
        if d != 1:
            den = den * d // math.gcd(den, d)
    return den


def scale_to_integers(values: Sequence[Fraction]) -> tuple[list[int], int]:
    """Return ``(ints, L)`` with ``values[i] == ints[i] / L``."""
    den = common_denominator(values)
    return [int(v * den) for v in values], den


def simplest_between(lo: Fraction, hi: Fraction) -> Fraction:
    """Simplest rational in the closed interval ``[lo, hi]``.

    Walks the Stern-Brocot tree (continued-fraction form), so the result has the
    smallest denominator of any rational in the interval, and among those the
    smallest numerator.
    """
    lo, hi = as_fraction(lo), as_fraction(hi)
    if lo > hi:
        raise ValueError("empty interval")
    if lo <= 0 <= hi:
        return Fraction(0)
    if hi < 0:
        return -simplest_between(-hi, -lo)
    return _simplest_positive(lo, hi)


def _simplest_positive(lo: Fraction, hi: Fraction) -> Fraction:
    fl = lo.numerator // lo.denominator
    if Fraction(fl) == lo:
        return lo
    if fl + 1 <= hi:
        return Fraction(fl + 1)
    # both endpoints share the integer part; recurse on reciprocals of the fractional parts
    inner = _simplest_positive(1 / (hi - fl), 1 / (lo - fl))
    return fl + 1 / inner
