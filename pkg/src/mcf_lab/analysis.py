"""Bound checkers, certified x~ enclosures and constructed fast-converging expansions.

Every checker returns a :class:`~mcf_lab.report.BoundReport`.  Valuation rows
are exact integer comparisons.  Rows involving the real number x~ compare
exact rationals against an enclosure endpoint chosen so that a pass is a
proof at that index.

Constructed expansions are infinite, so their limits are represented by a
deep convergent Q_N.  The proxy is itself a valid finite expansion that shares
the first N+1 digit pairs, so all identities hold for it exactly.  A residual
valuation computed from the proxy equals the true one whenever it is below
``K_N - K_n + floor((N+2)/2)``; such rows are marked certified.
"""
from __future__ import annotations

import math
import random
from dataclasses import dataclass, field
from fractions import Fraction
from functools import lru_cache
from math import comb
from typing import Optional, Sequence

from .corpus import random_y
from .engine import (ExpansionTrace, MCFExpansion, Status, expand, from_digits)
from .errors import InsufficientPrecision, InvalidPlan
from .padic import INF, PAdicScalar, YElem, check_prime, vp, vp_int
from .report import BoundReport


# x~ enclosures

def _cubic_sign(p: int, x: Fraction) -> int:
    """Sign of X^3 - X^2/2 - X/(2p) - 1/p^3 at x, cleared of denominators."""
    v = 2 * p**3 * x**3 - p**3 * x**2 - p**2 * x - 2
    return (v > 0) - (v < 0)


@dataclass(frozen=True)
class TildeX:
    p: int
    lo: Fraction
    hi: Fraction
    kappa: int

    @property
    def width(self) -> Fraction:
        return self.hi - self.lo

    @property
    def midpoint(self) -> Fraction:
        return (self.lo + self.hi) / 2

    @property
    def companion(self) -> tuple[Fraction, Fraction]:
        """Enclosure of p*x~, the positive root of X^3 - (p/2)X^2 - (p/2)X - 1."""
        return self.p * self.lo, self.p * self.hi

    def sign_change(self) -> bool:
        return _cubic_sign(self.p, self.lo) < 0 < _cubic_sign(self.p, self.hi)

    def to_dict(self) -> dict:
        return {"p": self.p, "lo": self.lo, "hi": self.hi, "kappa": self.kappa}


@lru_cache(maxsize=256)
def tilde_x(p: int, kappa: int = 64) -> TildeX:
    """Bisect [1/2, 1] until the enclosure is at most 2^-kappa wide."""
    check_prime(p)
    if kappa < 1:
        raise ValueError("kappa must be >= 1")
    lo, hi = Fraction(1, 2), Fraction(1)
    target = Fraction(1, 2**kappa)
    while hi - lo > target:
        mid = (lo + hi) / 2
        s = _cubic_sign(p, mid)
        if s == 0:
            return TildeX(p, mid, mid, kappa)
        if s < 0:
            lo = mid
        else:
            hi = mid
    return TildeX(p, lo, hi, kappa)


# growth plans and constructed expansions

@dataclass(frozen=True)
class GrowthPlan:
    """Lower bounds on k_{n+1} and h_{n+1} used to generate digits.

    Exactly one rule is active:

    * ``ell``: k_{n+1} >= l_n + l_{n-1}, h_{n+1} >= l_n (the last entry
      repeats beyond the given sequence);
    * ``D``: k_{n+1} >= (D-1)(k_n + k_{n-1}) + 2D, h_{n+1} >= (D-1)k_n + D;
    * ``k_extra``/``h_extra``: k_{n+1} >= k_n + k_{n-1} + k_extra,
      h_{n+1} >= k_n + h_extra;
    * explicit ``k`` (k_1, k_2, ...) with optional explicit ``h``.

    ``k_0`` and ``k_{-1}`` count as 0.  ``slack`` is the largest random
    excess added to each minimal k.
    """

    ell: Optional[tuple[int, ...]] = None
    D: Optional[int] = None
    k_extra: Optional[int] = None
    h_extra: Optional[int] = None
    k: Optional[tuple[int, ...]] = None
    h: Optional[tuple] = None
    slack: int = 1

    def __post_init__(self):
        rules = [self.ell is not None, self.D is not None,
                 self.k_extra is not None, self.k is not None]
        if sum(rules) != 1:
            raise InvalidPlan("a plan needs exactly one of ell, D, k_extra or explicit k")
        if self.ell is not None:
            if not self.ell or any(x < 1 for x in self.ell):
                raise InvalidPlan("ell positivity: every l_n must be >= 1")
        if self.D is not None and self.D < 1:
            raise InvalidPlan("D must be >= 1")
        if self.k_extra is not None and self.h_extra is None:
            raise InvalidPlan("k_extra needs a matching h_extra")
        if self.k is not None:
            if any(x < 1 for x in self.k):
                raise InvalidPlan("explicit k_n must be >= 1")
            if self.h is not None and len(self.h) != len(self.k):
                raise InvalidPlan("explicit h must match explicit k in length")
        if self.slack < 0:
            raise InvalidPlan("slack must be >= 0")

    @classmethod
    def unit_k(cls, length: int) -> "GrowthPlan":
        """k_n = 1 for every n >= 1."""
        return cls(k=(1,) * length, slack=0)

    @classmethod
    def good_approximation(cls, slack: int = 1) -> "GrowthPlan":
        """k_{n+1} > k_n + k_{n-1} and h_{n+1} > k_n, enforced from n >= 1."""
        return cls(k_extra=1, h_extra=1, slack=slack)

    def ell_at(self, n: int) -> int:
        if n < 0:
            return 0
        return self.ell[n] if n < len(self.ell) else self.ell[-1]

    def f(self, n: int) -> int:
        """f(n) = l_0 + ... + l_n."""
        return sum(self.ell_at(j) for j in range(n + 1))

    def minima(self, n: int, k_n: int, k_prev: int) -> tuple[int, int]:
        """Minimal (k_{n+1}, h_{n+1}) given k_n and k_{n-1}."""
        if self.ell is not None:
            return self.ell_at(n) + self.ell_at(n - 1), self.ell_at(n)
        if self.D is not None:
            D = self.D
            return (D - 1) * (k_n + k_prev) + 2 * D, (D - 1) * k_n + D
        if self.k_extra is not None:
            return k_n + k_prev + self.k_extra, k_n + self.h_extra
        return 1, 1

    def condition_names(self) -> tuple[str, str]:
        if self.D is not None:
            return ("degree-D k growth: k_{n+1} >= (D-1)(k_n+k_{n-1}) + 2D",
                    "degree-D h floor: h_{n+1} >= (D-1)k_n + D")
        if self.ell is not None:
            return ("k_{n+1} >= l_n + l_{n-1}", "h_{n+1} >= l_n")
        return ("k_{n+1} >= k_n + k_{n-1} + k_extra", "h_{n+1} >= k_n + h_extra")

    def to_dict(self) -> dict:
        return {k: v for k, v in (("ell", self.ell), ("D", self.D), ("k_extra", self.k_extra),
                                  ("h_extra", self.h_extra), ("k", self.k), ("h", self.h),
                                  ("slack", self.slack)) if v is not None}


def _random_b(rng: random.Random, p: int, k: int, h_min: int) -> YElem:
    """b with |b|_p < |a|_p = p^k and h = nu(b) + k >= h_min (b = 0 gives h = inf)."""
    lo = max(h_min - k, 1 - k)  # nu(b) >= h_min - k and nu(b) > -k
    v = rng.randint(lo, 1)  # 1 stands for b = 0
    if v == 1:
        return YElem(0, 0, p)
    return random_y(rng, p, -v)


def _explicit_b(rng: random.Random, p: int, k: int, h) -> YElem:
    if h is None or h == INF or h == "inf":
        return YElem(0, 0, p)
    if h < 1 or h > k:
        raise InvalidPlan(f"explicit h={h} must satisfy 1 <= h <= k={k} or be infinite")
    return random_y(rng, p, k - h)


def plan_digits(plan: GrowthPlan, length: int, p: int, seed: int) -> tuple[list, list]:
    """Digit pairs 0..length-1 realizing ``plan``; raises InvalidPlan on a violated rule."""
    check_prime(p)
    rng = random.Random(seed)
    a = [random_y(rng, p, rng.randint(0, 1))]
    b = [YElem(0, 0, p) if rng.random() < 0.2 else random_y(rng, p, rng.randint(0, 1))]
    ks = [0, 0]  # k_{-1}, k_0
    k_name, h_name = plan.condition_names()
    for n in range(0, length - 1):
        k_min, h_min = plan.minima(n, ks[-1], ks[-2])
        if plan.k is not None:
            if n >= len(plan.k):
                raise InvalidPlan(f"explicit k has {len(plan.k)} entries; {length - 1} needed")
            k = plan.k[n]
            h = plan.h[n] if plan.h is not None else None
            a.append(random_y(rng, p, k))
            b.append(_explicit_b(rng, p, k, h) if plan.h is not None
                     else _random_b(rng, p, k, 1))
        else:
            k = k_min + rng.randint(0, plan.slack)
            if k < 1:
                raise InvalidPlan(f"{k_name} forces k_{n + 1} < 1")
            a.append(random_y(rng, p, k))
            b.append(_random_b(rng, p, k, h_min))
        ks.append(k)
    return a, b


def validate_plan_realization(plan: GrowthPlan, e: MCFExpansion, start: int = 0) -> None:
    """Raise InvalidPlan naming the first violated condition of ``plan`` in ``e``.

    Conditions on (k_{n+1}, h_{n+1}) are checked for n >= ``start``.
    """
    t = e.table
    k_name, h_name = plan.condition_names()
    ks = [0, 0]
    for n in range(0, e.length - 1):
        k_min, h_min = plan.minima(n, ks[-1], ks[-2])
        k, h = t.k(n + 1), t.h(n + 1)
        if n >= start and plan.k is None:
            if k < k_min:
                raise InvalidPlan(f"{k_name} fails at n={n}: k={k} < {k_min}")
            if h < h_min:
                raise InvalidPlan(f"{h_name} fails at n={n}: h={h} < {h_min}")
        ks.append(k)


def construct_fast(plan: GrowthPlan, n: int, p: int = 5, seed: int = 0, margin: int = 40,
                   keep_quotients: bool = False) -> ExpansionTrace:
    """Random expansion realizing ``plan`` with limits represented by Q_{n+margin}.

    With ``keep_quotients`` the proxy is re-expanded by the JP algorithm; the
    resulting digits must reproduce the generated ones, which doubles as an
    end-to-end check of the engine.
    """
    if n < 0 or margin < 1:
        raise ValueError("need n >= 0 and margin >= 1")
    N = n + margin
    a, b = plan_digits(plan, N + 1, p, seed)
    e = from_digits(p, a, b, Status.DEPTH_LIMITED)
    if plan.k is None:
        validate_plan_realization(plan, e)
    source = {"plan": plan.to_dict(), "seed": seed, "margin": margin, "proxy_index": N}
    if keep_quotients:
        A, B, C, _ = e.table.scaled(N)
        alpha, beta = PAdicScalar(p, Fraction(A, C)), PAdicScalar(p, Fraction(B, C))
        full = expand(alpha, beta, N + 2, keep_quotients=True)
        if full.status is not Status.FINITE or full.digit_pairs() != e.digit_pairs():
            raise AssertionError("re-expanding the proxy did not reproduce the generated digits")
        return ExpansionTrace(full, alpha, beta, proxy_index=N, source=source)
    return ExpansionTrace(e, proxy_index=N, source=source)


# rate, tightness and upper-bound checks

def _last_index(trace: ExpansionTrace, n_max: int) -> int:
    last = trace.length - 1
    if trace.proxy_index is not None:
        last = min(last, trace.proxy_index)
    return min(n_max, last)


def check_rate_theorem(trace: ExpansionTrace, n_max: int) -> BoundReport:
    rep = BoundReport("rate", params={"n_max": n_max})
    for n in range(0, _last_index(trace, n_max) + 1):
        va, vb = trace.residual_valuations(n)
        K = trace.K(n)
        rep.check(n, va + K, ">=", K + (n + 2) // 2, "nu(alpha - Q_n^alpha) >= K_n + floor((n+2)/2)",
                  certified=trace.residual_certified(n, va))
        rep.check(n, vb + K, ">=", K + (n + 3) // 2, "nu(beta - Q_n^beta) >= K_n + floor((n+3)/2)",
                  certified=trace.residual_certified(n, vb))
        m = min(va, vb)
        rep.check(n, m, ">=", n // 2 + 1, "min nu(V_n) >= floor(n/2) + 1",
                  certified=trace.residual_certified(n, m))
    return rep


def check_tightness(trace: ExpansionTrace, n_max: int) -> BoundReport:
    """Equality min nu(V_n) = floor(n/2) + 1, expected when every k_n is 1."""
    rep = BoundReport("tightness", params={"n_max": n_max})
    for n in range(0, _last_index(trace, n_max) + 1):
        m = trace.min_residual_valuation(n)
        rep.check(n, m, "==", n // 2 + 1, "min nu(V_n) = floor(n/2) + 1",
                  certified=trace.residual_certified(n, m))
    return rep


def w_valuation(trace: ExpansionTrace, n: int):
    """nu(V_{n-1}^alpha V_{n-2}^beta - V_{n-1}^beta V_{n-2}^alpha)."""
    p = trace.p
    if trace.proxy_index is not None:
        def nums(j):
            if j >= 0:
                return trace.proxy_numerators(j)
            # V_{-1} = (-1, 0), V_{-2} = (0, -1): write them over the common scale
            CN = trace.table.scaled(trace.proxy_index)[2]
            s = vp_int(CN, p)
            return (-CN, 0, s) if j == -1 else (0, -CN, s)
        xa1, xb1, s1 = nums(n - 1)
        xa2, xb2, s2 = nums(n - 2)
        return vp_int(xa1 * xb2 - xb1 * xa2, p) - s1 - s2
    Va1, Vb1 = _residual_ext(trace, n - 1)
    Va2, Vb2 = _residual_ext(trace, n - 2)
    W = Va1 * Vb2 - Vb1 * Va2
    v = W.valuation
    if v is None:
        raise InsufficientPrecision(f"W_{n} is zero at the retained precision")
    return v


def _residual_ext(trace: ExpansionTrace, j: int):
    if j >= 0:
        return trace.residual(j)
    p = trace.p
    if j == -1:
        return PAdicScalar(p, Fraction(-1)), PAdicScalar(p, Fraction(0))
    return PAdicScalar(p, Fraction(0)), PAdicScalar(p, Fraction(-1))


def check_upper_bound(trace: ExpansionTrace, n_max: int) -> BoundReport:
    rep = BoundReport("upper", params={"n_max": n_max})
    last = _last_index(trace, n_max)
    mins = {-1: 0}
    for n in range(0, last + 1):
        rep.check(n, w_valuation(trace, n), "==", trace.K(n),
                  "nu(V_{n-1}^a V_{n-2}^b - V_{n-1}^b V_{n-2}^a) = K_n")
        mins[n] = trace.min_residual_valuation(n)
    for n in range(0, last):
        s = mins[n] + mins[n - 1]
        cert = trace.residual_certified(n, mins[n]) and trace.residual_certified(n - 1, mins[n - 1]) \
            if n >= 1 else trace.residual_certified(n, mins[n])
        rep.check(n, s, "<=", trace.K(n + 1), "min_n + min_{n-1} <= K_{n+1}", certified=cert)
    return rep


def check_growth_plan(trace: ExpansionTrace, plan: GrowthPlan, n_max: int) -> BoundReport:
    """min nu(V_n) >= f(n) for an ell-plan."""
    if plan.ell is None:
        raise InvalidPlan("check_growth_plan needs an ell plan")
    rep = BoundReport("construction", params={"plan": plan.to_dict(), "n_max": n_max})
    for n in range(0, _last_index(trace, n_max) + 1):
        m = trace.min_residual_valuation(n)
        rep.check(n, m, ">=", plan.f(n), "min nu(V_n) >= f(n)",
                  certified=trace.residual_certified(n, m))
    return rep


def check_good_approximation(trace: ExpansionTrace, n_max: int) -> BoundReport:
    """nu(alpha - Q_n) > 2K_n and nu(beta - Q_n) > 2K_n."""
    rep = BoundReport("good approximation", params={"n_max": n_max})
    for n in range(0, _last_index(trace, n_max) + 1):
        K = trace.K(n)
        va, vb = trace.residual_valuations(n)
        rep.check(n, min(va, vb) + K, ">", 2 * K, "nu((alpha, beta) - Q_n) > 2K_n",
                  certified=trace.residual_certified(n, min(va, vb)))
    return rep


def check_prefix_stability(alpha: Fraction, beta: Fraction, p: int, n_max: int,
                           rng: random.Random, trials: int = 1) -> BoundReport:
    """Perturb by p^(2K_n+1) times a random p-adic integer; digits 0..n must persist."""
    rep = BoundReport("prefix stability", params={"p": p, "n_max": n_max})
    base = expand(PAdicScalar(p, Fraction(alpha)), PAdicScalar(p, Fraction(beta)), n_max + 1,
                  keep_quotients=False)
    t = base.table
    for n in range(0, min(n_max, base.length - 1) + 1):
        radius = p ** (2 * t.K(n) + 1)
        for _ in range(trials):
            da, db = (_padic_unit_fraction(rng, p) * radius for _ in range(2))
            pert = expand(PAdicScalar(p, Fraction(alpha) + da),
                          PAdicScalar(p, Fraction(beta) + db), n + 1, keep_quotients=False)
            same = pert.length >= n + 1 and pert.digit_pairs()[: n + 1] == base.digit_pairs()[: n + 1]
            rep.check(n, same, "==", True, "digits 0..n unchanged within p^-2K_n")
    return rep


def _padic_unit_fraction(rng: random.Random, p: int) -> Fraction:
    """Random rational with denominator coprime to p, so its valuation is >= 0."""
    den = rng.randint(1, 10**6)
    while den % p == 0:
        den = rng.randint(1, 10**6)
    return Fraction(rng.randint(-10**6, 10**6), den)


# Euclidean growth and heights

def _abs_max(t: tuple) -> Fraction:
    return max(abs(x) for x in t)


def growth_constant(trace: ExpansionTrace, tx: TildeX) -> Fraction:
    """H dominating the seed terms n = 0, 1, 2 against (p * x~_lo)^n."""
    t = trace.table
    rho = trace.p * tx.lo
    H = Fraction(0)
    for i in range(0, min(3, trace.length)):
        H = max(H, _abs_max(t.triple(i)) / rho**i)
    return H


def growth_bound(trace: ExpansionTrace, n_max: int, kappa: int = 64) -> BoundReport:
    p = trace.p
    tx = tilde_x(p, kappa)
    H = growth_constant(trace, tx)
    rho = p * tx.hi
    rep = BoundReport("growth", params={"p": p, "H": H, "x_lo": tx.lo, "x_hi": tx.hi})
    t = trace.table
    for n in range(0, min(n_max, trace.length - 1) + 1):
        rep.check(n, _abs_max(t.triple(n)), "<=", H * rho**n,
                  "max(|A_n|,|B_n|,|C_n|) <= H (p x~)^n")
    for n in range(0, min(n_max, trace.length - 1) + 1):
        rep.check(n, _abs_max(t.triple(n)), ">=", height_floor(n, t.K(n), tx)[1],
                  "max(|A_n|,|B_n|,|C_n|) >= 1/(3 p^K_n x~^n)")
    return rep


def height_floor(n: int, K_n: int, tx: TildeX) -> tuple[Fraction, Fraction]:
    """(1/(3 x~^n), 1/(3 p^K_n x~^n)), evaluated at the enclosure's upper end."""
    base = 3 * tx.hi**n
    return 1 / base, 1 / (base * tx.p**K_n)


def in_ball(alpha: Fraction, beta: Fraction, t: Fraction, u: Fraction, v: int, p: int,
            radius_exp: int) -> bool:
    """max(|alpha - t/v|_p, |beta - u/v|_p) < p^-radius_exp."""
    return vp(alpha - t / v, p) > radius_exp and vp(beta - u / v, p) > radius_exp


def check_height_floor(alpha: Fraction, beta: Fraction, p: int, n: int,
                       triples: Sequence[tuple], kappa: int = 64) -> BoundReport:
    """Any (t, u, v) within p^(-2K_{n+1}) of (alpha, beta) has height >= 1/(3 x~^n).

    Past the end of a finite expansion the missing k's count as 0, which only
    widens the ball.
    """
    e = expand(PAdicScalar(p, Fraction(alpha)), PAdicScalar(p, Fraction(beta)), n + 2,
               keep_quotients=False)
    if e.length < n + 1:
        raise ValueError(f"expansion has length {e.length}; n = {n} needs length >= {n + 1}")
    tx = tilde_x(p, kappa)
    r = 2 * e.table.K(min(n + 1, e.length - 1))
    floor = height_floor(n, 0, tx)[0]
    rep = BoundReport("heights", params={"p": p, "n": n, "radius_exp": r, "floor": floor})
    for t, u, v in triples:
        if v == 0 or not in_ball(alpha, beta, Fraction(t), Fraction(u), v, p, r):
            continue
        rep.check(n, max(abs(Fraction(t)), abs(Fraction(u)), abs(v)), ">=", floor,
                  f"height of ({t}, {u}, {v}) >= 1/(3 x~^n)")
    return rep


# termination bound for rational inputs

@dataclass
class StepBoundResult:
    p: int
    x0: Fraction
    y0: Fraction
    z0: int
    M: Fraction
    ceil_bound: int
    certified: bool
    bound_approx: float
    actual_steps: int
    status: str
    chain: tuple[Fraction, Fraction, Fraction, Fraction]
    report: BoundReport = field(repr=False, default=None)

    @property
    def within_bound(self) -> bool:
        """actual_steps <= ceil(-log M / log x~), counting digit pairs."""
        return self.actual_steps <= self.ceil_bound

    @property
    def transitions_within_bound(self) -> bool:
        """The number of JP divisions (digit pairs minus one) is at most the bound."""
        return self.status.startswith("Finite") and self.actual_steps - 1 <= self.ceil_bound


def step_constant(x0: Fraction, y0: Fraction, z0: int, p: int) -> Fraction:
    x, y, z = abs(Fraction(x0)), abs(Fraction(y0)), Fraction(abs(z0))
    return max(z, y / p + z / 2, x / p**2 + y / (2 * p) + (Fraction(1, 2 * p) + Fraction(1, 4)) * z)


def _smallest_power(M: Fraction, x: Fraction) -> int:
    """Smallest n >= 0 with M * x^n <= 1 (x < 1)."""
    n, v = 0, M
    while v > 1:
        v *= x
        n += 1
    return n


def ceil_step_bound(M: Fraction, p: int, kappa: int = 64, max_kappa: int = 2048) -> tuple[int, bool]:
    """ceil(-log M / log x~) and whether both enclosure ends agreed on it."""
    while True:
        tx = tilde_x(p, kappa)
        upper = _smallest_power(M, tx.hi)
        lower = _smallest_power(M, tx.lo)
        if upper == lower:
            return upper, True
        if kappa >= max_kappa:
            return upper, False
        kappa *= 2


def step_bound(x0, y0, z0: int, p: int, kappa: int = 64) -> StepBoundResult:
    from .padic import zp_inv_parts
    check_prime(p)
    if z0 == 0 or Fraction(z0).denominator != 1:
        raise ValueError("z0 must be a nonzero integer")
    x0, y0, z0 = Fraction(x0), Fraction(y0), int(z0)
    zp_inv_parts(x0, p)
    zp_inv_parts(y0, p)
    M = step_constant(x0, y0, z0, p)
    n_ceil, cert = ceil_step_bound(M, p, kappa)
    mid = float(tilde_x(p, kappa).midpoint)
    approx = math.log(M) / -math.log(mid) if M > 1 else 0.0
    e = expand(PAdicScalar(p, x0 / z0), PAdicScalar(p, y0 / z0), n_ceil + 1, keep_quotients=False)
    ax, ay, az = abs(x0), abs(y0), Fraction(abs(z0))
    chain = (M, max(az, (ay + az) / 2, (ax + ay + az) / 4), ax + ay + az, 3 * max(ax, ay, az))
    rep = BoundReport("steps", params={"p": p, "x0": x0, "y0": y0, "z0": z0, "M": M,
                                        "ceil_bound": n_ceil, "certified": cert})
    rep.check(0, e.status.value, "==", "Finite", "terminates by depth ceil(bound) + 1")
    rep.check(0, e.length - 1, "<=", n_ceil, "JP divisions <= ceil(-log M / log x~)", certified=cert)
    for i, label in enumerate(("M <= first majorant", "first majorant <= |x0|+|y0|+|z0|",
                               "|x0|+|y0|+|z0| <= 3 max")):
        rep.check(0, chain[i], "<=", chain[i + 1], label)
    return StepBoundResult(p, x0, y0, z0, M, n_ceil, cert, approx, e.length,
                           e.status_text, chain, rep)


# dependence machinery

def scaled_height(trace: ExpansionTrace, n: int) -> int:
    """M_n = max(|t_n|, |u_n|, |v_n|) with (t, u, v) = p^(K_n + delta) (A_n, B_n, C_n)."""
    A, B, C, _ = trace.table.scaled(n)
    return max(abs(A), abs(B), abs(C))


def _log10(x: int) -> float:
    shift = max(0, x.bit_length() - 64)
    return math.log10(x >> shift) + shift * math.log10(2)


def sci(x: Fraction, digits: int = 4) -> str:
    """Approximate decimal rendering of a nonnegative rational of any size."""
    if x == 0:
        return "0"
    lg = _log10(abs(x.numerator)) - _log10(x.denominator)
    e = math.floor(lg)
    return f"{10 ** (lg - e):.{digits}f}e{e:+d}"


def linear_dependence_monitor(trace: ExpansionTrace, relation: tuple, n_max: int) -> BoundReport:
    """S_n = A A_{n-1} + B B_{n-1} + C C_{n-1} against -(A V_{n-1}^alpha + B V_{n-1}^beta).

    The identity holds because A alpha + B beta + C = 0 turns S_n into
    A(A_{n-1} - C_{n-1} alpha) + B(B_{n-1} - C_{n-1} beta).
    """
    A, B, C = (Fraction(x) for x in relation)
    t = trace.table
    rep = BoundReport("dependence", params={"relation": (A, B, C), "n_max": n_max})
    last = min(n_max, trace.length)
    UM = []
    vanish_from = None
    for n in range(0, last + 1):
        An, Bn, Cn = t.triple(n - 1)
        S = A * An + B * Bn + C * Cn
        Va, Vb = _residual_ext(trace, n - 1)
        rhs = -(Va * A + Vb * B)
        diff = rhs - S
        if diff.is_exact:
            ok = diff.value == 0
        else:
            scale = min(Va.valuation_lower_bound, Vb.valuation_lower_bound)
            if diff.indistinguishable_from_zero and diff.prec <= scale:
                raise InsufficientPrecision(f"S_{n} identity undecidable at the retained precision")
            ok = diff.indistinguishable_from_zero
        rep.check(n, S, "==", S if ok else rhs.value, "S_n = -(A V_{n-1}^alpha + B V_{n-1}^beta)",
                  certified=True)
        if S == 0:
            if vanish_from is None:
                vanish_from = n
        else:
            vanish_from = None
        if n <= trace.length - 1:
            UM.append((n, _u_times_m(trace, n, 1)))
    rep.params["U_n_M_n"] = [(n, None if v is None else sci(v)) for n, v in UM]
    rep.params["S_vanishes_from"] = vanish_from
    rep.params["terminated"] = trace.expansion.status is Status.FINITE
    return rep


def literal_sign_holds(trace: ExpansionTrace, relation: tuple, n: int) -> bool:
    """Whether S_n = +(A V_{n-1}^alpha + B V_{n-1}^beta) holds exactly."""
    A, B, C = (Fraction(x) for x in relation)
    An, Bn, Cn = trace.table.triple(n - 1)
    S = A * An + B * Bn + C * Cn
    Va, Vb = _residual_ext(trace, n - 1)
    d = Va * A + Vb * B - S
    return d.value == 0 if d.is_exact else d.indistinguishable_from_zero


def _u_exponent(trace: ExpansionTrace, n: int):
    """e with U_n = p^-e, or INF when Q_n equals the input."""
    va, vb = trace.residual_valuations(n)
    return min(va, vb) + trace.K(n) if n >= 1 else min(va, vb)


def _u_times_m(trace: ExpansionTrace, n: int, D: int) -> Optional[Fraction]:
    try:
        e = _u_exponent(trace, n)
    except InsufficientPrecision:
        return None
    if e == INF:
        return Fraction(0)
    return Fraction(scaled_height(trace, n) ** D, 1) / Fraction(trace.p) ** e


@dataclass(frozen=True)
class RelationPoly:
    """F(X, Y) = sum c_ij X^i Y^j with its Taylor data at a base point."""

    coeffs: tuple  # ((i, j, c), ...) with integer c
    alpha: PAdicScalar
    beta: PAdicScalar

    @classmethod
    def at(cls, coeffs: dict, alpha: PAdicScalar, beta: PAdicScalar) -> "RelationPoly":
        items = tuple(sorted((i, j, int(c)) for (i, j), c in coeffs.items() if c))
        if not items:
            raise ValueError("F must be nonzero")
        return cls(items, alpha, beta)

    @property
    def D(self) -> int:
        return max(i + j for i, j, _ in self.coeffs)

    @property
    def K(self) -> int:
        return sum(abs(c) for _, _, c in self.coeffs)

    def __call__(self, x, y):
        return sum(c * x**i * y**j for i, j, c in self.coeffs)

    def taylor(self, i: int, j: int) -> PAdicScalar:
        """A_ij = sum_{a>=i, b>=j} c_ab C(a,i) C(b,j) alpha^(a-i) beta^(b-j)."""
        p = self.alpha.p
        acc = PAdicScalar(p, Fraction(0))
        for a, b, c in self.coeffs:
            if a >= i and b >= j:
                term = PAdicScalar(p, Fraction(c * comb(a, i) * comb(b, j)))
                for _ in range(a - i):
                    term = term * self.alpha
                for _ in range(b - j):
                    term = term * self.beta
                acc = acc + term
        return acc

    @property
    def taylor_linear(self) -> tuple[PAdicScalar, PAdicScalar]:
        return self.taylor(1, 0), self.taylor(0, 1)

    @property
    def H_exponent(self):
        """h with H = max(|A_10|_p, |A_01|_p) = p^-h."""
        vals = []
        for A in self.taylor_linear:
            if A.is_exact and A.value == 0:
                vals.append(INF)
            elif A.indistinguishable_from_zero:
                raise InsufficientPrecision("Taylor coefficient undetermined at the working precision")
            else:
                vals.append(A.valuation)
        return min(vals)

    def residual(self) -> PAdicScalar:
        return self(self.alpha, self.beta)


def relation_propagation_check(F: RelationPoly, seq: Sequence[tuple], n_max: int) -> BoundReport:
    """Contrapositive Liouville-type inequalities at every nonzero F row.

    ``seq[n] = (t_n, u_n, v_n)`` approximates (alpha, beta) as (t/v, u/v).
    Always asserted: |F(t/v, u/v)|_p >= 1/(K M^D), and the integer
    inequality |v^D F|_p >= 1/|v^D F|.  U_n >= 1/(H K M^D) is asserted on rows
    where every higher Taylor term is certified to be at most H U_n.
    """
    p = F.alpha.p
    D, K = F.D, F.K
    h = F.H_exponent
    rep = BoundReport("relation", params={"D": D, "K": K, "H_exp": h, "coeffs": list(F.coeffs)})
    higher = {(i, j): F.taylor(i, j) for i in range(D + 1) for j in range(D + 1 - i) if i + j >= 2}
    for n in range(0, min(n_max, len(seq) - 1) + 1):
        t, u, v = (Fraction(x) for x in seq[n])
        if v == 0:
            raise ValueError(f"v_{n} must be nonzero")
        x, y = t / v, u / v
        Fv = F(x, y)
        M = max(abs(t), abs(u), abs(v))
        if Fv == 0:
            rep.check(n, Fv, "==", 0, "F vanishes at the approximant", note="zero row")
            continue
        fabs = Fraction(p) ** -vp(Fv, p)
        rep.check(n, fabs, ">=", 1 / (K * M**D), "|F(t/v, u/v)|_p >= 1/(K M^D)")
        integer = v**D * Fv
        if integer.denominator == 1:
            rep.check(n, Fraction(p) ** -vp(integer, p), ">=", 1 / abs(integer),
                      "|v^D F|_p >= 1/|v^D F|")
        dx = F.alpha - x
        dy = F.beta - y
        # a coordinate that vanishes to working precision only bounds its valuation below
        ex, ey = dx.valuation_lower_bound, dy.valuation_lower_bound
        known = [v for d, v in ((dx, ex), (dy, ey)) if d.valuation is not None]
        u_exp = min(ex, ey)
        if not known or min(known) > u_exp:
            raise InsufficientPrecision(f"U_{n} undetermined at the working precision")
        if h == INF:
            continue
        # certified dominance: every higher term bounded by H * U_n
        dominated = True
        for (i, j), A in higher.items():
            lb = A.valuation_lower_bound
            if lb == INF:
                continue
            if lb + i * ex + j * ey < h + u_exp:
                dominated = False
                break
        if dominated and u_exp != INF:
            U = Fraction(p) ** -u_exp
            rep.check(n, U, ">=", Fraction(p) ** h / (K * M**D), "U_n >= 1/(H K M^D)",
                      note="linear Taylor terms dominate")
    return rep


def truncation_sequence(F: RelationPoly, n_max: int) -> list[tuple[Fraction, Fraction, int]]:
    """(t_n, u_n, 1) with t_n, u_n the balanced residues of alpha, beta mod p^n."""
    from .padic import reduce_mod
    p = F.alpha.p
    return [(reduce_mod(F.alpha.value, p, n), reduce_mod(F.beta.value, p, n), 1)
            for n in range(1, n_max + 2)]


def convergent_sequence(trace: ExpansionTrace, n_max: int) -> list[tuple[int, int, int]]:
    """(t_n, u_n, v_n) = p^(K_n + delta) (A_n, B_n, C_n) for n = 0..n_max."""
    out = []
    for n in range(0, min(n_max, trace.length - 1) + 1):
        A, B, C, _ = trace.table.scaled(n)
        out.append((A, B, C))
    return out


def default_degree_plan(D: int, slack: int = 0) -> GrowthPlan:
    """D = 2 uses k_{n+1} = k_n + k_{n-1} + 4, h_{n+1} >= k_n + 2; other D the plain rule."""
    if D == 2:
        return GrowthPlan(k_extra=4, h_extra=2, slack=slack)
    return GrowthPlan(D=D, slack=slack)


def default_margin(plan: GrowthPlan) -> int:
    """Proxy depth beyond n: 40, or 2 when k grows like a Fibonacci sequence.

    Deep proxies of Fibonacci-growth plans have enormous K_N, and their
    residual valuations are certified already at a small margin.
    """
    if plan.k_extra is not None or (plan.D is not None and plan.D >= 2):
        return 2
    return 40


def lemma_constant(trace: ExpansionTrace, D: int, n0: int) -> int:
    """C = min of nu(V_i) - (D-1)K_i - D i over i = 0..n0."""
    vals = []
    for i in range(0, n0 + 1):
        vals.append(trace.min_residual_valuation(i) - (D - 1) * trace.K(i) - D * i)
    return min(vals)


def plan_threshold(trace: ExpansionTrace, D: int) -> int:
    """n0 = max(1, last n whose k_{n+1} or h_{n+1} misses the degree-D conditions)."""
    t = trace.table
    n0 = 1
    ks = [0, 0]
    for n in range(0, trace.length - 1):
        k1, h1 = t.k(n + 1), t.h(n + 1)
        if k1 < (D - 1) * (ks[-1] + ks[-2]) + 2 * D or h1 < (D - 1) * ks[-1] + D:
            n0 = max(n0, n + 1)
        ks.append(k1)
    return n0


def fast_relation_suite(D: int, plan: Optional[GrowthPlan] = None, n_max: int = 20,
                        p: int = 5, seed: int = 0,
                        margin: Optional[int] = None,
                        trace: Optional[ExpansionTrace] = None) -> tuple[BoundReport, BoundReport]:
    """Valuation rows min nu(V_n) >= (D-1)K_n + Dn + C, plus U_n M_n^D decay evidence.

    A ``trace`` already built by :func:`construct_fast` for ``plan`` is reused.
    Returns ``(valuation_report, decay_report)``.  The decay report marks
    strict decrease beyond n0 and the first index below 10^-6; it is evidence
    for the limit, never a proof.
    """
    plan = plan or default_degree_plan(D)
    margin = default_margin(plan) if margin is None else margin
    if trace is None:
        trace = construct_fast(plan, n_max, p, seed, margin)
    # k_1, h_1 sit inside the pre-asymptotic window absorbed by C
    validate_plan_realization(GrowthPlan(D=D, slack=0), trace.expansion, start=1)
    n0 = plan_threshold(trace, D)
    C = lemma_constant(trace, D, min(n0, n_max))
    rep = BoundReport("fast relation", params={"D": D, "plan": plan.to_dict(), "n0": n0,
                                                "C": C, "p": p, "seed": seed})
    for n in range(0, n_max + 1):
        m = trace.min_residual_valuation(n)
        rep.check(n, m, ">=", (D - 1) * trace.K(n) + D * n + C,
                  "min nu(V_n) >= (D-1)K_n + Dn + C", certified=trace.residual_certified(n, m))
    decay = BoundReport("U_n M_n^D decay", params={"D": D, "n0": n0})
    values = [_u_times_m(trace, n, D) for n in range(0, n_max + 1)]
    small = [v is not None and v < Fraction(1, 10**6) for v in values]
    tail_from = next((n for n in range(len(values)) if all(small[n:])), None)
    tail = values[n0 + 1:]
    decay.params["strictly_decreasing_beyond_n0"] = all(
        a is not None and b is not None and b < a for a, b in zip(tail, tail[1:]))
    decay.params["tail_below_1e-6_from"] = tail_from
    decay.params["values"] = [(n, None if v is None else sci(v)) for n, v in enumerate(values)]
    decay.check(n_max, tail_from is not None, "==", True,
                "U_n M_n^D < 10^-6 on a tail of the window",
                note=sci(values[-1]) if values[-1] is not None else "undetermined")
    return rep, decay
