"""Two-dimensional p-adic Jacobi-Perron algorithm and its convergents.

Indices follow the usual conventions: the convergent recurrences are seeded
at n = -2 and n = -1, so every accessor accepts those indices.

Convergent numerators and denominators live in Z[1/p].  They are stored as
integers scaled by ``p**E_n`` with ``E_n = K_n + delta`` (``delta`` is the
p-power in the denominators of ``a_0, b_0``).  The scaled recurrence is

    X^_n = m_n X^_{n-1} + b^_n p^(E_{n-1}-E_{n-2}) X^_{n-2} + p^(E_n-E_{n-3}) X^_{n-3}

with ``a_n = m_n / p^k_n`` and ``b_n = b^_n / p^k_n``; no gcds are needed,
which keeps deep expansions with huge ``K_n`` cheap.
"""
from __future__ import annotations

import enum
import json
from dataclasses import dataclass
from fractions import Fraction
from functools import cached_property
from typing import NamedTuple, Optional, Sequence

from .errors import IndexOutOfRange, InsufficientPrecision, PrecisionExhausted
from .padic import PAdicScalar, YElem, inverse, s_function, vp, vp_int
from .report import BoundReport, encode_value


class Status(enum.Enum):
    FINITE = "Finite"
    DEPTH_LIMITED = "DepthLimited"
    PRECISION_EXHAUSTED = "PrecisionExhausted"


class JPStep(NamedTuple):
    a: YElem
    b: YElem
    alpha: Optional[PAdicScalar]  # None when the expansion terminates here
    beta: Optional[PAdicScalar]

    @property
    def terminated(self) -> bool:
        return self.alpha is None


def jp_step(alpha: PAdicScalar, beta: PAdicScalar) -> JPStep:
    try:
        a = s_function(alpha)
        b = s_function(beta)
    except InsufficientPrecision as exc:
        raise PrecisionExhausted(str(exc)) from exc
    d = beta - b
    if d.is_exact and d.value == 0:
        return JPStep(a, b, None, None)
    if d.indistinguishable_from_zero:
        raise PrecisionExhausted(
            f"beta - s(beta) is zero modulo {d.p}^{d.prec}; termination undecidable")
    alpha_next = inverse(d)
    beta_next = (alpha - a) * alpha_next
    return JPStep(a, b, alpha_next, beta_next)


@dataclass(frozen=True, eq=False)
class MCFExpansion:
    p: int
    a: tuple
    b: tuple
    status: Status
    alphas: Optional[tuple] = None  # complete quotients, possibly one past the last pair
    betas: Optional[tuple] = None

    @property
    def length(self) -> int:
        return len(self.a)

    def __len__(self):
        return len(self.a)

    @property
    def status_text(self) -> str:
        if self.status is Status.FINITE:
            return f"Finite({self.length})"
        return self.status.value

    @property
    def has_quotients(self) -> bool:
        return self.alphas is not None

    @cached_property
    def table(self) -> "ConvergentTable":
        return ConvergentTable(self.p, self.a, self.b)

    def digit_pairs(self) -> list[tuple[Fraction, Fraction]]:
        return [(x.value, y.value) for x, y in zip(self.a, self.b)]


def validate_digits(p: int, a: Sequence[YElem], b: Sequence[YElem]) -> None:
    """Check |a_n|_p > 1 and |b_n|_p < |a_n|_p for every n >= 1."""
    if len(a) != len(b):
        raise ValueError("digit sequences differ in length")
    for n in range(1, len(a)):
        if a[n].exponent < 1:
            raise ValueError(f"|a_{n}|_p must exceed 1")
        if b[n].mantissa != 0 and b[n].exponent >= a[n].exponent:
            raise ValueError(f"|b_{n}|_p must be smaller than |a_{n}|_p")


def from_digits(p: int, a: Sequence, b: Sequence,
                status: Status = Status.DEPTH_LIMITED) -> MCFExpansion:
    a = tuple(x if isinstance(x, YElem) else YElem.from_rational(x, p) for x in a)
    b = tuple(x if isinstance(x, YElem) else YElem.from_rational(x, p) for x in b)
    validate_digits(p, a, b)
    return MCFExpansion(p, a, b, status)


def expand(alpha: PAdicScalar, beta: PAdicScalar, max_depth: int,
           keep_quotients: bool = True) -> MCFExpansion:
    if max_depth < 0:
        raise ValueError("max_depth must be >= 0")
    p = alpha.p
    a, b, alphas, betas = [], [], [alpha], [beta]
    status = Status.DEPTH_LIMITED
    cur_a, cur_b = alpha, beta
    for _ in range(max_depth):
        try:
            step = jp_step(cur_a, cur_b)
        except PrecisionExhausted:
            status = Status.PRECISION_EXHAUSTED
            # the digits themselves may still be certified
            try:
                a.append(s_function(cur_a))
                b.append(s_function(cur_b))
            except InsufficientPrecision:
                pass
            break
        a.append(step.a)
        b.append(step.b)
        if step.terminated:
            status = Status.FINITE
            break
        cur_a, cur_b = step.alpha, step.beta
        alphas.append(cur_a)
        betas.append(cur_b)
    if not keep_quotients:
        return MCFExpansion(p, tuple(a), tuple(b), status)
    return MCFExpansion(p, tuple(a), tuple(b), status, tuple(alphas), tuple(betas))


def over_p_power(num: int, E: int, p: int) -> Fraction:
    """num / p^E in lowest terms, reduced by valuation instead of a general gcd."""
    if num == 0:
        return Fraction(0)
    if E <= 0:
        return Fraction(num * p ** -E)
    v = min(vp_int(num, p), E)
    out = Fraction(0)
    # the denominator is a pure p-power, so stripping p from the numerator is a full reduction
    out._numerator, out._denominator = num // p**v, p ** (E - v)
    return out


class ConvergentTable:
    """Exact convergents A_n, B_n, C_n for n = -2 .. len-1."""

    def __init__(self, p: int, a: Sequence[YElem], b: Sequence[YElem]):
        self.p = p
        self.a = tuple(a)
        self.b = tuple(b)
        n_terms = len(self.a)
        self.delta = max([0] + [x.exponent for x in (self.a[:1] + self.b[:1])])
        # list index i holds n = i - 2
        self.E = [0, 0]
        self.Ah, self.Bh, self.Ch = [0, 1], [1, 0], [0, 0]
        if n_terms == 0:
            return
        pd = p**self.delta
        self.E.append(self.delta)
        self.Ah.append(self.a[0].value.numerator * pd // self.a[0].value.denominator)
        self.Bh.append(self.b[0].value.numerator * pd // self.b[0].value.denominator)
        self.Ch.append(pd)
        for n in range(1, n_terms):
            an, bn = self.a[n], self.b[n]
            k = an.exponent
            m = an.mantissa
            bh = bn.mantissa * p ** (k - bn.exponent) if bn.mantissa else 0
            i = n + 2
            e_prev = self.E[i - 1]
            e_new = e_prev + k
            f1 = p ** (e_prev - self.E[i - 2])
            f2 = p ** (e_new - self.E[i - 3])
            self.E.append(e_new)
            for X in (self.Ah, self.Bh, self.Ch):
                X.append(m * X[i - 1] + bh * f1 * X[i - 2] + f2 * X[i - 3])

    def __len__(self):
        return len(self.a)

    def _i(self, n: int) -> int:
        if n < -2 or n >= len(self.a):
            raise IndexOutOfRange(f"index {n} outside [-2, {len(self.a) - 1}]")
        return n + 2

    def scaled(self, n: int) -> tuple[int, int, int, int]:
        """``(p^E A_n, p^E B_n, p^E C_n, E)`` as integers."""
        i = self._i(n)
        return self.Ah[i], self.Bh[i], self.Ch[i], self.E[i]

    def triple(self, n: int) -> tuple[Fraction, Fraction, Fraction]:
        A, B, C, E = self.scaled(n)
        return tuple(over_p_power(x, E, self.p) for x in (A, B, C))

    def A(self, n):
        return self.triple(n)[0]

    def B(self, n):
        return self.triple(n)[1]

    def C(self, n):
        return self.triple(n)[2]

    def k(self, n: int) -> int:
        if n < 1 or n >= len(self.a):
            raise IndexOutOfRange(f"k_n is defined for 1 <= n < {len(self.a)}")
        return self.a[n].exponent

    def K(self, n: int) -> int:
        return self.E[self._i(n)] - self.delta if n >= 0 else 0

    def h(self, n: int):
        if n < 1 or n >= len(self.a):
            raise IndexOutOfRange(f"h_n is defined for 1 <= n < {len(self.a)}")
        return self.b[n].valuation + self.a[n].exponent

    def tilde_closed(self, n: int) -> tuple[Fraction, Fraction]:
        """A~_n = A_n C_{n-1} - A_{n-1} C_n and likewise for B~_n."""
        if n < -1:
            raise IndexOutOfRange("tilde sequences start at n = -1")
        A1, B1, C1, E1 = self.scaled(n)
        A0, B0, C0, E0 = self.scaled(n - 1)
        E = E1 + E0
        return (over_p_power(A1 * C0 - A0 * C1, E, self.p),
                over_p_power(B1 * C0 - B0 * C1, E, self.p))

    def determinant(self, n: int) -> Fraction:
        """Determinant of the stacked convergent matrix at columns n, n-1, n-2."""
        cols = [self.scaled(j) for j in (n, n - 1, n - 2)]
        (a1, b1, c1, e1), (a2, b2, c2, e2), (a3, b3, c3, e3) = cols
        det = (a1 * (b2 * c3 - b3 * c2) - a2 * (b1 * c3 - b3 * c1)
               + a3 * (b1 * c2 - b2 * c1))
        return over_p_power(det, e1 + e2 + e3, self.p)


def convergents(e: MCFExpansion, n: int) -> tuple[Fraction, Fraction, Fraction]:
    return e.table.triple(n)


def tilde_sequences(e: MCFExpansion, n: int) -> tuple[Fraction, Fraction]:
    """(A~_n, B~_n) from their own three-term recurrence."""
    if n < -1 or n >= e.length:
        raise IndexOutOfRange(f"index {n} outside [-1, {e.length - 1}]")
    # list index j holds index j - 1
    ta = [Fraction(0), Fraction(-1)]
    tb = [Fraction(0), Fraction(0)]
    if n <= 0:
        return ta[n + 1], tb[n + 1]
    ta.append(e.b[1].value)
    tb.append(Fraction(1))
    for m in range(2, n + 1):
        bn, am1 = e.b[m].value, e.a[m - 1].value
        j = m + 1
        ta.append(-bn * ta[j - 1] - am1 * ta[j - 2] + ta[j - 3])
        tb.append(-bn * tb[j - 1] - am1 * tb[j - 2] + tb[j - 3])
    return ta[n + 1], tb[n + 1]


def certified_prefix_radius(e: MCFExpansion, n: int) -> int:
    """Exponent 2K_n: inputs within p^(-2K_n) share digit pairs 0..n."""
    return 2 * e.table.K(n)


def _as_scalar(x, p) -> PAdicScalar:
    return x if isinstance(x, PAdicScalar) else PAdicScalar(p, Fraction(x))


class ExpansionTrace:
    """An expansion together with the inputs it approximates.

    ``proxy_index`` marks constructed expansions whose inputs are the deep
    convergent ``(Q_N^alpha, Q_N^beta)`` with ``N = proxy_index``; residual
    valuations then use the integer kernel directly.
    """

    def __init__(self, expansion: MCFExpansion, alpha=None, beta=None,
                 proxy_index: Optional[int] = None, source: Optional[dict] = None):
        if alpha is None and proxy_index is None:
            raise ValueError("either inputs or a proxy index are required")
        self.expansion = expansion
        self.p = expansion.p
        self._alpha = None if alpha is None else _as_scalar(alpha, self.p)
        self._beta = None if beta is None else _as_scalar(beta, self.p)
        self.proxy_index = proxy_index
        self.source = source or {}
        self._res_cache: dict = {}
        self._val_cache: dict = {}

    @property
    def alpha(self) -> PAdicScalar:
        if self._alpha is None:
            A, _, C, _ = self.table.scaled(self.proxy_index)
            self._alpha = PAdicScalar(self.p, Fraction(A, C))
        return self._alpha

    @property
    def beta(self) -> PAdicScalar:
        if self._beta is None:
            _, B, C, _ = self.table.scaled(self.proxy_index)
            self._beta = PAdicScalar(self.p, Fraction(B, C))
        return self._beta

    @classmethod
    def from_inputs(cls, alpha, beta, max_depth: int, keep_quotients: bool = True,
                    source: Optional[dict] = None) -> "ExpansionTrace":
        e = expand(alpha, beta, max_depth, keep_quotients)
        return cls(e, alpha, beta, source=source)

    @property
    def table(self) -> ConvergentTable:
        return self.expansion.table

    @property
    def length(self) -> int:
        return self.expansion.length

    def K(self, n: int) -> int:
        return self.table.K(n)

    def residual(self, n: int) -> tuple[PAdicScalar, PAdicScalar]:
        """(V_n^alpha, V_n^beta) = (C_n alpha - A_n, C_n beta - B_n)."""
        if n not in self._res_cache:
            A, B, C = self.table.triple(n)
            self._res_cache[n] = (self.alpha * C - A, self.beta * C - B)
        return self._res_cache[n]

    def residual_valuations(self, n: int) -> tuple:
        if n in self._val_cache:
            return self._val_cache[n]
        if self.proxy_index is not None:
            xa, xb, shift = self.proxy_numerators(n)
            va = vp_int(xa, self.p) - shift
            vb = vp_int(xb, self.p) - shift
        else:
            Va, Vb = self.residual(n)
            va, vb = Va.valuation, Vb.valuation
            if va is None or vb is None:
                raise InsufficientPrecision(
                    f"V_{n} is zero modulo the working precision; raise the input precision")
        self._val_cache[n] = (va, vb)
        return va, vb

    def proxy_numerators(self, n: int) -> tuple[int, int, int]:
        """Integers ``(X^a, X^b, s)`` with ``nu(V_n) = nu(X) - s`` for proxy inputs.

        ``V_n^alpha = X^a / (p^E_n * C^_N)`` where ``C^_N`` is the scaled
        denominator of the proxy, and likewise for beta.
        """
        N = self.proxy_index
        An, Bn, Cn, En = self.table.scaled(n)
        AN, BN, CN, _ = self.table.scaled(N)
        return Cn * AN - An * CN, Cn * BN - Bn * CN, En + vp_int(CN, self.p)

    def min_residual_valuation(self, n: int):
        return min(self.residual_valuations(n))

    def residual_certified(self, n: int, value) -> bool:
        """Whether a valuation of V_n computed from the proxy also holds for the true limit."""
        if self.proxy_index is None:
            return True
        N = self.proxy_index
        floor = self.K(N) - self.K(n) + (N + 2) // 2
        return value < floor

    def to_dict(self) -> dict:
        t = self.table
        steps = []
        for n in range(self.length):
            A, B, C = t.triple(n)
            tA, tB = t.tilde_closed(n)
            try:
                va, vb = self.residual_valuations(n)
            except InsufficientPrecision:
                va = vb = None
            steps.append({
                "n": n,
                "a": self.expansion.a[n].value,
                "b": self.expansion.b[n].value,
                "A": A, "B": B, "C": C,
                "tildeA": tA, "tildeB": tB,
                "h": t.h(n) if n >= 1 else None,
                "k": t.k(n) if n >= 1 else None,
                "K": t.K(n),
                "vVa": va, "vVb": vb,
            })
        return {
            "p": self.p,
            "input": self.source,
            "status": self.expansion.status_text,
            "certified_steps": self.length,
            "steps": encode_value(steps),
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=True) + "\n"


def residuals(trace: ExpansionTrace, n: int):
    """(V_n^alpha, V_n^beta, nu_p(V_n^alpha), nu_p(V_n^beta))."""
    Va, Vb = trace.residual(n)
    va, vb = trace.residual_valuations(n)
    return Va, Vb, va, vb


def _zero_decision(x: PAdicScalar, scale) -> bool:
    """Decide x == 0 where ``scale`` is the size of the quantities compared."""
    if x.is_exact:
        return x.value == 0
    if x.indistinguishable_from_zero:
        if x.prec <= scale:
            raise InsufficientPrecision("identity undecidable at the retained precision")
        return True
    return False


def identity_checks(trace: ExpansionTrace, n: int) -> BoundReport:
    """Exact identities of the convergents and complete quotients at index n."""
    rep = BoundReport("identities", params={"p": trace.p, "n": n})
    _identity_rows(trace, n, rep, matrix=_matrix_product(trace.expansion, n))
    return rep


def identity_suite(trace: ExpansionTrace, n_max: Optional[int] = None) -> BoundReport:
    e = trace.expansion
    last = e.length - 1 if n_max is None else min(n_max, e.length - 1)
    rep = BoundReport("identities", params={"p": trace.p, "n_max": last})
    prod = None
    for n in range(0, last + 1):
        prod = _step_matrix(e, n) if prod is None else _matmul(prod, _step_matrix(e, n))
        _identity_rows(trace, n, rep, matrix=prod)
    return rep


def _step_matrix(e: MCFExpansion, k: int):
    a, b = e.a[k].value, e.b[k].value
    return [[a, Fraction(1), Fraction(0)], [b, Fraction(0), Fraction(1)],
            [Fraction(1), Fraction(0), Fraction(0)]]


def _matmul(X, Y):
    return [[sum(X[i][k] * Y[k][j] for k in range(3)) for j in range(3)] for i in range(3)]


def _matrix_product(e: MCFExpansion, n: int):
    prod = _step_matrix(e, 0)
    for k in range(1, n + 1):
        prod = _matmul(prod, _step_matrix(e, k))
    return prod


def _identity_rows(trace: ExpansionTrace, n: int, rep: BoundReport, matrix) -> None:
    e, t = trace.expansion, trace.table
    cols = [t.triple(j) for j in (n, n - 1, n - 2)]
    expected = [[cols[j][i] for j in range(3)] for i in range(3)]
    rep.check(n, matrix == expected, "==", True, "matrix product")
    rep.check(n, t.determinant(n), "==", 1, "determinant")
    ta, tb = tilde_sequences(e, n)
    ca, cb = t.tilde_closed(n)
    rep.check(n, (ta, tb), "==", (ca, cb), "tilde recurrence vs closed form")
    if n >= 1:
        K = t.K(n)
        rep.check(n, vp(t.C(n), trace.p), "==", -K, "nu(C_n) = -K_n")
    if n >= 2:
        (A0, B0, C0), (A1, B1, C1), (A2, B2, C2) = cols
        qa = [A0 / C0, A1 / C1, A2 / C2]
        qb = [B0 / C0, B1 / C1, B2 / C2]
        lhs = (qa[0] - qa[1]) * (qb[0] - qb[2]) - (qb[0] - qb[1]) * (qa[0] - qa[2])
        rep.check(n, lhs, "==", 1 / (C0 * C1 * C2), "consecutive convergent difference")
    if e.alphas is not None and 2 <= n < len(e.alphas):
        _, (A1, B1, C1), (A2, B2, C2) = cols
        C3 = t.C(n - 3)
        al, be = trace.alpha, trace.beta
        lhs = (al - A1 / C1) * (be - B2 / C2) - (be - B1 / C1) * (al - A2 / C2)
        denom = e.alphas[n] * C1 + e.betas[n] * C2 + C3
        rhs = inverse(denom * (C1 * C2))
        diff = lhs - rhs
        scale = rhs.valuation_lower_bound
        rep.check(n, _zero_decision(diff, scale), "==", True, "complete quotient difference")
    if e.alphas is not None and 0 <= n and n + 1 < len(e.alphas):
        Va, Vb = trace.residual(n)
        Va1, Vb1 = trace.residual(n - 1)
        Va2, Vb2 = trace.residual(n - 2)
        an1, bn1 = e.alphas[n + 1], e.betas[n + 1]
        for V, V1, V2, name in ((Va, Va1, Va2, "alpha"), (Vb, Vb1, Vb2, "beta")):
            # alpha_{n+1} V_n + beta_{n+1} V_{n-1} + V_{n-2} = 0
            terms = (an1 * V, bn1 * V1, V2)
            z = terms[0] + terms[1] + terms[2]
            scale = min(x.valuation_lower_bound for x in terms)
            rep.check(n, _zero_decision(z, scale), "==", True, f"residual step identity ({name})")
