"""Seeded random inputs shared by the batch suites and the test corpora."""
from __future__ import annotations

import random
from fractions import Fraction

from .padic import YElem


def random_rational(rng: random.Random, p: int, height: int = 10**4,
                    max_exp: int = 2) -> Fraction:
    """A rational with numerator and denominator below ``height`` times a p-power."""
    num = rng.randint(-height, height)
    den = rng.randint(1, height)
    e = rng.randint(-max_exp, max_exp)
    return Fraction(num, den) * Fraction(p) ** e


def random_pair(rng: random.Random, p: int, height: int = 10**4,
                max_exp: int = 2) -> tuple[Fraction, Fraction]:
    return random_rational(rng, p, height, max_exp), random_rational(rng, p, height, max_exp)


def random_triple(rng: random.Random, p: int, height: int = 10**4,
                  max_exp: int = 2) -> tuple[Fraction, Fraction, int]:
    """``(x0, y0, z0)`` with ``x0, y0`` in Z[1/p] and ``z0`` a nonzero integer."""
    x0 = Fraction(rng.randint(-height, height), p ** rng.randint(0, max_exp))
    y0 = Fraction(rng.randint(-height, height), p ** rng.randint(0, max_exp))
    z0 = 0
    while z0 == 0:
        z0 = rng.randint(-height, height)
    return x0, y0, z0


def random_unit_mantissa(rng: random.Random, p: int, exponent: int) -> int:
    """Nonzero m coprime to p with 2|m| < p^(exponent+1), so m/p^exponent is in Y."""
    bound = (p ** (exponent + 1) - 1) // 2
    while True:
        m = rng.randint(-bound, bound)
        if m % p:
            return m


def random_y(rng: random.Random, p: int, exponent: int) -> YElem:
    """A random element of Y with valuation exactly ``-exponent`` (exponent >= 0)."""
    return YElem(random_unit_mantissa(rng, p, exponent), exponent, p)
