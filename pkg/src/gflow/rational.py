"""Exact rational numbers.

Every quantity the solvers touch is an ``mpq`` (GMP rational).  Values are
always stored in lowest terms with a positive denominator, and equality is
exact.  ``INF`` is only ever used as a symbolic bound and never enters
arithmetic.
"""

from __future__ import annotations

import math
import re

from gmpy2 import mpq, mpz

Rational = type(mpq(0))

INF = math.inf

ZERO = mpq(0)
ONE = mpq(1)

_RATIONAL_RE = re.compile(r"^[+-]?\d+(/\d+)?$")


def Q(num, den=1) -> Rational:
    """Build an exact rational; refuses floats so nothing inexact leaks in."""
    if isinstance(num, float) or isinstance(den, float):
        raise TypeError("floats are not accepted as exact rationals")
    if den == 1:
        return mpq(num)
    return mpq(num, den)


def parse_rational(text: str) -> Rational:
    """Parse ``p`` or ``p/q``; raises ValueError on anything else."""
    text = text.strip()
    if not _RATIONAL_RE.match(text):
        raise ValueError(f"not a rational number: {text!r}")
    if "/" in text:
        p, q = text.split("/")
        if mpz(q) == 0:
            raise ValueError(f"zero denominator: {text!r}")
        return mpq(mpz(p), mpz(q))
    return mpq(mpz(text))


def parse_bound(text: str):
    """Parse a rational or the literal ``inf``."""
    if text.strip() == "inf":
        return INF
    return parse_rational(text)


def fmt(x) -> str:
    if x == INF:
        return "inf"
    if x == -INF:
        return "-inf"
    x = mpq(x)
    if x.denominator == 1:
        return str(x.numerator)
    return f"{x.numerator}/{x.denominator}"


def is_inf(x) -> bool:
    return isinstance(x, float) and math.isinf(x)


def bits(x) -> int:
    """Encoding size of a rational, used to monitor number growth."""
    x = mpq(x)
    return int(x.numerator).bit_length() + int(x.denominator).bit_length()


def log2_at_least(ratio: Rational, exponent: int, k: int) -> bool:
    """Decide ``exponent <= k * log2(ratio)`` exactly.

    Equivalent to ``2**exponent <= ratio**k`` for positive ratio.
    """
    if ratio <= 0:
        return exponent <= 0 and k == 0
    if k == 0:
        return exponent <= 0
    ratio = mpq(ratio)
    num = int(ratio.numerator)
    den = int(ratio.denominator)
    # bit lengths bracket log2(ratio) within (lower, upper); only ties need powers
    lower = num.bit_length() - 1 - den.bit_length()
    upper = num.bit_length() - den.bit_length() + 1
    if exponent <= k * lower:
        return True
    if exponent >= k * upper:
        return False
    return (1 << exponent) * den ** k <= num ** k if exponent >= 0 else True
