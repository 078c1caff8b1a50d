"""Deliberately naive reference implementations for differential testing.

Nothing here imports the balanced-digit or convergent code of the main
modules; digits come from plain long division and convergents from plain
Fraction recurrences.
"""
from __future__ import annotations

import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from fractions import Fraction


def _val(x: Fraction, p: int) -> int:
    if x == 0:
        raise ValueError("valuation of zero")
    v = 0
    n, d = x.numerator, x.denominator
    while n % p == 0:
        n //= p
        v += 1
    while d % p == 0:
        d //= p
        v -= 1
    return v


def _digit(x: Fraction, p: int) -> int:
    """The balanced digit d with x - d divisible by p; x must be p-integral."""
    r = x.numerator * pow(x.denominator, -1, p) % p
    return r - p if r > p // 2 else r


def naive_balanced_expand(x, p: int, N: int, lo: int = 0) -> list[int]:
    """The N balanced digits of x at indices lo, lo+1, ..., lo+N-1."""
    x = Fraction(x)
    if N < 0:
        raise ValueError("N must be >= 0")
    start = min(lo, -_neg_exponent(x, p))
    y = x * Fraction(p) ** (-start)
    digits = []
    for j in range(start, lo + N):
        d = _digit(y, p)
        if j >= lo:
            digits.append(d)
        y = (y - d) / p
    return digits


def _neg_exponent(x: Fraction, p: int) -> int:
    d, e = x.denominator, 0
    while d % p == 0:
        d //= p
        e += 1
    return e


def naive_s(x, p: int) -> Fraction:
    """Sum of the balanced digits of index <= 0, found by long division."""
    x = Fraction(x)
    if x == 0:
        return Fraction(0)
    e = _neg_exponent(x, p)
    digits = naive_balanced_expand(x, p, e + 1, lo=-e)
    return sum((Fraction(d) * Fraction(p) ** (j - e) for j, d in enumerate(digits)), Fraction(0))


def naive_convergents(a: list, b: list) -> list[tuple[Fraction, Fraction, Fraction]]:
    """(A_n, B_n, C_n) for n = 0..len(a)-1 straight from the three-term recurrences."""
    A = [Fraction(0), Fraction(1), Fraction(a[0])]
    B = [Fraction(1), Fraction(0), Fraction(b[0])]
    C = [Fraction(0), Fraction(0), Fraction(1)]
    for n in range(1, len(a)):
        for X in (A, B, C):
            X.append(Fraction(a[n]) * X[-1] + Fraction(b[n]) * X[-2] + X[-3])
    return list(zip(A[2:], B[2:], C[2:]))


@dataclass(frozen=True)
class RationalJPState:
    x: Fraction
    y: Fraction
    z: Fraction
    a: Fraction
    b: Fraction


def rational_jp(x0, y0, z0: int, p: int, max_steps: int = 10_000) -> tuple[list[RationalJPState], int]:
    """Run x_n = a_n z_n + y_{n+1}, y_n = b_n z_n + z_{n+1}, z_n = x_{n+1} until z_{n+1} = 0.

    Returns the states and the number of digit pairs emitted.
    """
    x, y, z = Fraction(x0), Fraction(y0), Fraction(z0)
    if z == 0 or z.denominator != 1:
        raise ValueError("z0 must be a nonzero integer")
    states = []
    for n in range(max_steps):
        if (z / Fraction(p) ** n).denominator != 1:
            raise AssertionError(f"z_{n}/p^{n} is not an integer")
        a = naive_s(x / z, p)
        b = naive_s(y / z, p)
        states.append(RationalJPState(x, y, z, a, b))
        y_next = x - a * z
        z_next = y - b * z
        if z_next == 0:
            return states, len(states)
        x, y, z = z, y_next, z_next
    raise RuntimeError("no termination within max_steps")


def _height(tr: tuple) -> Fraction:
    return max(abs(Fraction(c)) for c in tr)


def _ball_ok(target: Fraction, cand: Fraction, p: int, r: int) -> bool:
    d = target - cand
    return d == 0 or _val(d, p) > r


def _search_chunk(args) -> list[tuple]:
    alpha, beta, p, r, cap, ecap, vs = args
    hits = []
    lattice = [Fraction(m, p**e) for e in range(ecap + 1) for m in range(-cap, cap + 1)
               if e == 0 or m % p]
    for v in vs:
        ts = [t for t in lattice if _ball_ok(alpha, t / v, p, r)]
        if not ts:
            continue
        us = [u for u in lattice if _ball_ok(beta, u / v, p, r)]
        hits.extend((t, u, v) for t in ts for u in us)
    return hits


def small_height_search(alpha, beta, p: int, n: int, height_cap: int = 200,
                        exponent_cap: int = 2, workers: int = 1) -> dict:
    """All (t, u, v) with t, u = m/p^e (|m| <= cap, e <= exponent cap), 0 < |v| <= cap,
    inside the ball max|(alpha, beta) - (t/v, u/v)|_p < p^(-2 K_{n+1}).

    K_{n+1} comes from an independent rational run.  The t and u conditions
    are tested separately per v, which is still exhaustive because the ball
    condition splits into one condition per coordinate.
    """
    alpha, beta = Fraction(alpha), Fraction(beta)
    r = 2 * _k_sum(alpha, beta, p, n + 1)
    vs = [v for v in range(-height_cap, height_cap + 1) if v]
    workers = max(1, workers)
    chunks = [(alpha, beta, p, r, height_cap, exponent_cap, vs[i::workers]) for i in range(workers)]
    if workers == 1:
        results = [_search_chunk(chunks[0])]
    else:
        with ProcessPoolExecutor(max_workers=workers) as ex:
            results = list(ex.map(_search_chunk, chunks))
    hits = sorted((h for part in results for h in part), key=lambda h: (_height(h), h))
    return {"p": p, "n": n, "radius_exp": r, "height_cap": height_cap,
            "exponent_cap": exponent_cap, "hits": hits}


def _k_sum(alpha: Fraction, beta: Fraction, p: int, n: int) -> int:
    """K_n from a rational run; past termination the missing k's count as 0."""
    z0 = alpha.denominator * beta.denominator
    # clear p-powers from z0 so x0, y0 stay in Z[1/p]
    while z0 % p == 0:
        z0 //= p
    states, steps = rational_jp(alpha * z0, beta * z0, z0, p)
    if steps < n:
        raise ValueError(f"expansion has {steps} pairs; index {n - 1} is out of range")
    return sum(-_val(s.a, p) for s in states[1:n + 1])


def thread_cap(default: int = 1) -> int:
    """Worker count from MCF_LAB_THREADS (integer >= 1)."""
    raw = os.environ.get("MCF_LAB_THREADS")
    if raw is None:
        return default
    try:
        n = int(raw)
    except ValueError:
        raise ValueError("MCF_LAB_THREADS must be an integer >= 1") from None
    if n < 1:
        raise ValueError("MCF_LAB_THREADS must be an integer >= 1")
    return n
