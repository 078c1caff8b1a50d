"""p-adic scalars with balanced digits, valuations and the Browkin s-function.

Two kinds of scalar share one class.  An *exact* scalar wraps a rational
number.  A *truncated* scalar is known only modulo ``p**prec`` (absolute
precision) and stores the canonical representative

    sum_{j < prec} x_j p^j,   x_j in [-(p-1)/2, (p-1)/2].

Digits are balanced: for odd ``p`` the open interval (-p/2, p/2) contains
exactly the integers of absolute value at most (p-1)/2, so there are no ties.

Precision calculus for truncated operands (``N`` = absolute precision,
``v`` = valuation, or ``N`` itself when the value is indistinguishable from
zero; exact operands have ``N = +inf``):

    x +- y :  min(N_x, N_y)
    x * y  :  min(N_x + v_y, N_y + v_x)
    1 / y  :  N_y - 2 v_y          (requires v_y < N_y)
    x / y  :  x * (1 / y)

These are the worst cases of the ultrametric inequality; every result whose
precision is at least one therefore has certified digits up to index 0.
"""
from __future__ import annotations

import math
import re
from dataclasses import dataclass
from fractions import Fraction
from typing import Sequence, Union

from .errors import InsufficientPrecision, NonPAdicDenominator, NonSimpleRoot

INF = math.inf

Rational = Union[int, Fraction]


try:
    import gmpy2 as _gmpy2
except ImportError:  # pragma: no cover - pure-Python fallback below
    _gmpy2 = None


def is_odd_prime(p: int) -> bool:
    if not isinstance(p, int) or p < 3 or p % 2 == 0:
        return False
    i = 3
    while i * i <= p:
        if p % i == 0:
            return False
        i += 2
    return True


def check_prime(p: int) -> int:
    if not is_odd_prime(p):
        raise ValueError("p must be an odd prime")
    return p


def vp_int(x: int, p: int) -> Union[int, float]:
    """Valuation of an integer.

    Deep constructed expansions produce integers with valuations in the tens
    of thousands, where CPython's quadratic division dominates; gmpy2 handles
    those in near-linear time.
    """
    if x == 0:
        return INF
    if x % p:
        return 0
    if _gmpy2 is not None:
        return int(_gmpy2.remove(_gmpy2.mpz(x), p)[1])
    powers = [p]
    while x % powers[-1] == 0:
        powers.append(powers[-1] * powers[-1])
    v = 0
    for i in range(len(powers) - 2, -1, -1):
        if x % powers[i] == 0:
            x //= powers[i]
            v += 1 << i
    return v


def vp(x: Rational, p: int) -> Union[int, float]:
    x = Fraction(x)
    if x == 0:
        return INF
    return vp_int(x.numerator, p) - vp_int(x.denominator, p)


def centered(r: int, mod: int) -> int:
    """Representative of ``r`` modulo an odd ``mod`` in [-(mod-1)/2, (mod-1)/2]."""
    r %= mod
    return r - mod if r > mod // 2 else r


def split_p_part(den: int, p: int) -> tuple[int, int]:
    """Write a positive integer as ``p**e * rest`` with ``p`` not dividing rest."""
    e = vp_int(den, p)
    return int(e), den // p**e


def reduce_mod(x: Rational, p: int, N: int) -> Fraction:
    """Balanced representative of ``x`` modulo ``p**N``.

    The result is ``sum_{j<N} x_j p^j`` over the balanced digits of ``x``;
    it lies in Z[1/p].  ``N`` may be negative.
    """
    x = Fraction(x)
    if x == 0:
        return Fraction(0)
    v = vp(x, p)
    if v >= N:
        return Fraction(0)
    e = max(0, -v)
    e_den, rest = split_p_part(x.denominator, p)
    # x * p^e has p-free denominator ``rest``
    num = x.numerator * p ** (e - e_den)
    mod = p ** (N + e)
    r = centered(num * pow(rest, -1, mod), mod)
    return Fraction(r, p**e)


def balanced_digits(x: Rational, p: int, lo: int, hi: int) -> list[int]:
    """Balanced p-adic digits ``x_lo, ..., x_hi`` of ``x``."""
    if lo > hi:
        raise ValueError("empty digit window: lo > hi")
    r = reduce_mod(x, p, hi + 1)
    if r == 0:
        return [0] * (hi - lo + 1)
    start = min(lo, -split_p_part(r.denominator, p)[0])
    t = int(r * Fraction(p) ** (-start))
    out = {}
    for j in range(start, hi + 1):
        d = centered(t, p)
        out[j] = d
        t = (t - d) // p
    return [out[j] for j in range(lo, hi + 1)]


@dataclass(frozen=True)
class YElem:
    """Element ``mantissa / p**exponent`` of Y = Z[1/p] intersected with (-p/2, p/2)."""

    mantissa: int
    exponent: int
    p: int

    def __post_init__(self):
        if self.exponent < 0:
            raise ValueError("YElem exponent must be nonnegative")
        if self.mantissa == 0:
            if self.exponent != 0:
                raise ValueError("zero YElem must have exponent 0")
        elif self.mantissa % self.p == 0:
            raise ValueError("YElem mantissa divisible by p")
        # |m / p^e| < p/2  <=>  2|m| < p^(e+1)
        if 2 * abs(self.mantissa) >= self.p ** (self.exponent + 1):
            raise ValueError(f"{self.value} lies outside (-p/2, p/2)")

    @classmethod
    def from_rational(cls, x: Rational, p: int) -> "YElem":
        x = Fraction(x)
        e, rest = split_p_part(x.denominator, p)
        if rest != 1:
            raise NonPAdicDenominator(f"{x} is not in Z[1/{p}]")
        return cls(x.numerator, e, p)

    @property
    def value(self) -> Fraction:
        return Fraction(self.mantissa, self.p**self.exponent)

    @property
    def valuation(self) -> Union[int, float]:
        return INF if self.mantissa == 0 else -self.exponent

    def __str__(self):
        return str(self.value)


def zp_inv_parts(x: Rational, p: int) -> tuple[int, int]:
    """Return ``(m, e)`` with ``x = m / p**e``; ``x`` must lie in Z[1/p]."""
    x = Fraction(x)
    e, rest = split_p_part(x.denominator, p)
    if rest != 1:
        raise NonPAdicDenominator(f"{x} is not in Z[1/{p}]")
    return x.numerator, e


@dataclass(frozen=True)
class PAdicScalar:
    p: int
    value: Fraction
    prec: Union[int, None] = None  # None means exact

    def __post_init__(self):
        v = Fraction(self.value)
        if self.prec is not None:
            v = reduce_mod(v, self.p, self.prec)
        object.__setattr__(self, "value", v)

    @classmethod
    def exact(cls, x: Rational, p: int) -> "PAdicScalar":
        return cls(p, Fraction(x))

    @classmethod
    def truncated(cls, x: Rational, p: int, prec: int) -> "PAdicScalar":
        return cls(p, Fraction(x), prec)

    @property
    def is_exact(self) -> bool:
        return self.prec is None

    @property
    def precision(self) -> Union[int, float]:
        return INF if self.prec is None else self.prec

    @property
    def indistinguishable_from_zero(self) -> bool:
        return self.prec is not None and self.value == 0

    @property
    def valuation(self) -> Union[int, float, None]:
        """Exact valuation; ``None`` flags a truncated value indistinguishable from zero."""
        if self.indistinguishable_from_zero:
            return None
        return vp(self.value, self.p)

    @property
    def valuation_lower_bound(self) -> Union[int, float]:
        v = self.valuation
        return self.prec if v is None else v

    def digits(self, lo: int, hi: int) -> list[int]:
        if self.prec is not None and hi >= self.prec:
            raise InsufficientPrecision(
                f"digit {hi} requested, value known mod {self.p}^{self.prec}")
        return balanced_digits(self.value, self.p, lo, hi)

    def _coerce(self, other) -> "PAdicScalar":
        if isinstance(other, PAdicScalar):
            if other.p != self.p:
                raise ValueError("mixed primes")
            return other
        if isinstance(other, (int, Fraction)):
            return PAdicScalar(self.p, Fraction(other))
        if isinstance(other, YElem):
            return PAdicScalar(self.p, other.value)
        return NotImplemented

    def __add__(self, other):
        other = self._coerce(other)
        if other is NotImplemented:
            return other
        return add(self, other)

    __radd__ = __add__

    def __sub__(self, other):
        other = self._coerce(other)
        if other is NotImplemented:
            return other
        return sub(self, other)

    def __rsub__(self, other):
        other = self._coerce(other)
        if other is NotImplemented:
            return other
        return sub(other, self)

    def __mul__(self, other):
        other = self._coerce(other)
        if other is NotImplemented:
            return other
        return mul(self, other)

    __rmul__ = __mul__

    def __truediv__(self, other):
        other = self._coerce(other)
        if other is NotImplemented:
            return other
        return div(self, other)

    def __rtruediv__(self, other):
        other = self._coerce(other)
        if other is NotImplemented:
            return other
        return div(other, self)

    def __neg__(self):
        return PAdicScalar(self.p, -self.value, self.prec)

    def __str__(self):
        if self.prec is None:
            return str(self.value)
        return f"{self.value} + O({self.p}^{self.prec})"


def _min_prec(*precs):
    finite = [q for q in precs if q is not None]
    return min(finite) if finite else None


def add(x: PAdicScalar, y: PAdicScalar) -> PAdicScalar:
    return PAdicScalar(x.p, x.value + y.value, _min_prec(x.prec, y.prec))


def sub(x: PAdicScalar, y: PAdicScalar) -> PAdicScalar:
    return PAdicScalar(x.p, x.value - y.value, _min_prec(x.prec, y.prec))


def mul(x: PAdicScalar, y: PAdicScalar) -> PAdicScalar:
    if (x.is_exact and x.value == 0) or (y.is_exact and y.value == 0):
        return PAdicScalar(x.p, Fraction(0))
    bounds = []
    if x.prec is not None:
        bounds.append(x.prec + y.valuation_lower_bound)
    if y.prec is not None:
        bounds.append(y.prec + x.valuation_lower_bound)
    prec = min(bounds) if bounds else None
    return PAdicScalar(x.p, x.value * y.value, prec)


def inverse(y: PAdicScalar) -> PAdicScalar:
    if y.is_exact:
        if y.value == 0:
            raise ZeroDivisionError("division by exact zero")
        return PAdicScalar(y.p, 1 / y.value)
    if y.indistinguishable_from_zero:
        raise InsufficientPrecision(
            f"divisor is zero modulo {y.p}^{y.prec}")
    w = y.valuation
    return PAdicScalar(y.p, 1 / y.value, y.prec - 2 * w)


def div(x: PAdicScalar, y: PAdicScalar) -> PAdicScalar:
    return mul(x, inverse(y))


def valuation(x: Union[PAdicScalar, Rational], p: Union[int, None] = None):
    if isinstance(x, PAdicScalar):
        return x.valuation
    return vp(x, p)


def s_function(alpha: PAdicScalar) -> YElem:
    """Browkin s-function: the sum of the balanced digits of index <= 0."""
    if alpha.prec is not None and alpha.prec <= 0:
        raise InsufficientPrecision("s(alpha) needs absolute precision > 0")
    return YElem.from_rational(reduce_mod(alpha.value, alpha.p, 1), alpha.p)


def s_equivalence(x: PAdicScalar, y: PAdicScalar) -> bool:
    """Whether ``|x - y|_p < 1``, equivalently ``s(x) == s(y)``."""
    for z in (x, y):
        if z.prec is not None and z.prec < 1:
            raise InsufficientPrecision("s-equivalence needs precision >= 1")
    return (x - y).valuation_lower_bound >= 1


@dataclass(frozen=True)
class AlgebraicInput:
    poly: tuple[int, ...]  # c0, c1, ..., cd
    seed: int
    precision: int
    p: int

    def __post_init__(self):
        check_prime(self.p)
        if self.precision < 1:
            raise ValueError("precision must be >= 1")


def poly_eval(coeffs: Sequence[Rational], x):
    acc = 0
    for c in reversed(coeffs):
        acc = acc * x + c
    return acc


def poly_derivative(coeffs: Sequence[int]) -> list[int]:
    return [i * c for i, c in enumerate(coeffs)][1:]


def hensel_lift(inp: AlgebraicInput) -> PAdicScalar:
    """Lift a simple root mod p to a root mod ``p**precision`` by Newton iteration."""
    p, f = inp.p, list(inp.poly)
    df = poly_derivative(f)
    r = inp.seed % p
    if poly_eval(f, r) % p:
        raise ValueError(f"{inp.seed} is not a root of the polynomial mod {p}")
    if poly_eval(df, r) % p == 0:
        raise NonSimpleRoot(f"derivative vanishes at {inp.seed} mod {p}")
    k = 1
    while k < inp.precision:
        k = min(2 * k, inp.precision)
        mod = p**k
        r = (r - poly_eval(f, r) * pow(poly_eval(df, r), -1, mod)) % mod
    return PAdicScalar(p, Fraction(r), inp.precision)


_RATIONAL = r"[+-]?\d+(?:/[+-]?\d+)?"
_RATIONAL_RE = re.compile(rf"^{_RATIONAL}$")
_ROOT_RE = re.compile(rf"^root:([-+\d,\s]+)@([+-]?\d+)@(\d+)((?:[-+*/]{_RATIONAL})*)$")
_OP_RE = re.compile(rf"([-+*/])({_RATIONAL})")


def parse_rational(text: str) -> Fraction:
    text = text.strip()
    if not _RATIONAL_RE.match(text):
        raise ValueError(f"not a rational literal: {text!r}")
    return Fraction(text)


def parse_scalar(text: str, p: int) -> PAdicScalar:
    """Parse ``num/den`` or ``root:c0,...,cd@seed@precision[op q ...]``.

    The optional trailing operations (``+q``, ``-q``, ``*q``, ``/q`` with q
    rational) are applied left to right to the lifted root, e.g.
    ``root:-6,0,1@1@50*2+3`` is 2*sqrt(6) + 3 in Q_5.
    """
    text = text.strip()
    if _RATIONAL_RE.match(text):
        return PAdicScalar(p, parse_rational(text))
    m = _ROOT_RE.match(text)
    if not m:
        raise ValueError(f"cannot parse p-adic literal {text!r}")
    coeffs = tuple(int(c) for c in m.group(1).split(","))
    x = hensel_lift(AlgebraicInput(coeffs, int(m.group(2)), int(m.group(3)), p))
    for op, q in _OP_RE.findall(m.group(4)):
        q = Fraction(q)
        if op == "+":
            x = x + q
        elif op == "-":
            x = x - q
        elif op == "*":
            x = x * q
        else:
            x = x / q
    return x
