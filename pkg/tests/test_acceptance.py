"""Acceptance criteria 1-10, each run at its stated tolerance.

Every test records one pass/fail line, printed in the terminal summary.
"""
import random
from fractions import Fraction

from conftest import record_criterion
from mcf_lab import analysis as an
from mcf_lab import oracle
from mcf_lab.corpus import random_pair, random_rational, random_triple
from mcf_lab.engine import ExpansionTrace, Status, expand, identity_suite
from mcf_lab.padic import PAdicScalar, balanced_digits, parse_scalar, vp

F = Fraction


def X(x, p):
    return PAdicScalar(p, F(x))


def rational_trace(rng, p, depth):
    a, b = random_pair(rng, p)
    return ExpansionTrace.from_inputs(X(a, p), X(b, p), depth)


def test_criterion_01_exact_identities():
    rng = random.Random(101)
    failures, rows = [], 0
    for i in range(200):
        p = (5, 7, 11)[i % 3]
        tr = rational_trace(rng, p, 30)
        rep = identity_suite(tr)
        rows += len(rep.rows)
        if not rep.all_hold:
            failures.append((i, rep.first_violation_index))
    ok = not failures
    record_criterion(1, ok, f"200 pairs, {rows} identity rows, failures={failures[:5]}")
    assert ok


def construction_plan(i):
    plans = [an.GrowthPlan(ell=(1,), slack=2), an.GrowthPlan(ell=(1, 2, 3), slack=1),
             an.GrowthPlan.unit_k(81), an.GrowthPlan(ell=(2,), slack=0)]
    return plans[i % len(plans)]


def test_criterion_02_rate_bounds():
    bad, checked, uncertified = [], 0, 0
    for i in range(100):
        p = (5, 7)[i % 2]
        tr = an.construct_fast(construction_plan(i), 40, p=p, seed=i, margin=40)
        rep = an.check_rate_theorem(tr, 40)
        for r in rep.rows:
            if not r.certified:
                uncertified += 1
                continue
            checked += 1
            if not r.satisfied:
                bad.append((i, r.n, r.label))
    ok = not bad
    record_criterion(2, ok, f"100 constructions, {checked} certified rows "
                            f"({uncertified} uncertified), violations={bad[:3]}")
    assert ok


def test_criterion_03_tightness():
    bad = []
    for seed in range(5):
        tr = an.construct_fast(an.GrowthPlan.unit_k(81), 40, seed=seed, margin=40)
        for n in range(41):
            if tr.min_residual_valuation(n) != n // 2 + 1:
                bad.append((seed, "min", n))
        up = an.check_upper_bound(tr, 40)
        sums = [r for r in up.rows if r.label.startswith("min_n")]
        if not up.all_hold or [r.lhs for r in sums] != [n + 1 for n in range(40)]:
            bad.append((seed, "upper"))
    ok = not bad
    record_criterion(3, ok, f"k_n = 1 for n <= 40 over 5 seeds: equality everywhere, bad={bad[:3]}")
    assert ok


def test_criterion_04_fast_construction():
    bad = []
    for ell in ((1,), tuple(range(1, 80))):
        plan = an.GrowthPlan(ell=ell)
        for seed in range(3):
            tr = an.construct_fast(plan, 20, seed=seed, margin=40)
            rep = an.check_growth_plan(tr, plan, 20)
            if not rep.all_hold or not all(r.certified for r in rep.rows):
                bad.append((ell[:2], seed, rep.first_violation_index))
    consts = {}
    for D in (1, 2):
        rep, _ = an.fast_relation_suite(D, n_max=20)
        consts[D] = rep.params["C"]
        if not rep.all_hold or not all(r.certified for r in rep.rows):
            bad.append((D, rep.first_violation_index))
    ok = not bad
    record_criterion(4, ok, f"ell=1, ell=n+1, D=1 (C={consts[1]}), D=2 (C={consts[2]}), n <= 20, "
                            f"bad={bad}")
    assert ok


def test_criterion_05_prefix_stability():
    rng = random.Random(505)
    rows, bad = 0, 0
    for i in range(200):
        p = (5, 7, 11)[i % 3]
        a, b = random_pair(rng, p)
        rep = an.check_prefix_stability(a, b, p, 8, rng)
        rows += len(rep.rows)
        bad += sum(not r.satisfied for r in rep.rows)
    ok = bad == 0
    record_criterion(5, ok, f"200 pairs, {rows} perturbations of size p^-(2K_n+1), violations={bad}")
    assert ok


def test_criterion_06_termination_bound():
    rng = random.Random(606)
    literal_bad, rigorous_bad, uncert = [], [], 0
    for i in range(100):
        p = (5, 7)[i % 2]
        x0, y0, z0 = random_triple(rng, p, height=10**4)
        r = an.step_bound(x0, y0, z0, p)
        uncert += not r.certified
        if not r.status.startswith("Finite") or not r.within_bound:
            literal_bad.append((x0, y0, z0, p))
        if not r.report.all_hold:
            rigorous_bad.append((x0, y0, z0, p))
    w = an.step_bound(32, 26, 5, 5)
    worked = w.M == F(77, 10) and 2 <= w.ceil_bound and w.actual_steps == 2 and w.within_bound
    ok = not literal_bad and not rigorous_bad and worked and uncert == 0
    record_criterion(6, ok, f"100 triples terminate within ceil bound (violations={len(literal_bad)}), "
                            f"(32,26,5): M={w.M}, ceil bound={w.ceil_bound}, steps={w.actual_steps}")
    assert ok


def test_criterion_07_tilde_x():
    ps = (3, 5, 7, 11, 13, 101, 10007)
    inside = all(F(1, 2) < an.tilde_x(p).lo and an.tilde_x(p).hi < 1 and an.tilde_x(p).sign_change()
                 for p in ps)
    lo, hi = 0.5, 1.0
    for _ in range(80):
        mid = (lo + hi) / 2
        lo, hi = (mid, hi) if mid**3 - mid**2 / 2 - mid / 10 - 1 / 125 < 0 else (lo, mid)
    m5 = float(an.tilde_x(5).midpoint)
    close = abs(m5 - lo) < 1e-3
    mids = [an.tilde_x(p).midpoint for p in (5, 101, 10007)]
    monotone = mids[0] > mids[1] > mids[2] > F(1, 2)
    ok = inside and close and monotone
    record_criterion(7, ok, f"enclosures in (1/2,1): {inside}; p=5 midpoint {m5:.5f} vs "
                            f"independent {lo:.5f}; midpoints decrease to 1/2: {monotone}")
    assert ok


def test_criterion_08_growth_and_height():
    bad = []
    for i in range(50):
        p = (5, 7)[i % 2]
        plan = an.GrowthPlan(ell=(1,), slack=i % 3)
        tr = an.construct_fast(plan, 40, p=p, seed=800 + i, margin=1)
        rep = an.growth_bound(tr, 40)
        if not rep.all_hold or len(rep.rows) != 82:
            bad.append((i, rep.first_violation_index))
    pairs = [(F(32, 5), F(26, 5))]
    rng = random.Random(808)
    while len(pairs) < 3:
        a, b = random_rational(rng, 5, 300, 1), random_rational(rng, 5, 300, 1)
        if expand(X(a, 5), X(b, 5), 6).length >= 5:
            pairs.append((a, b))
    workers = oracle.thread_cap()
    hits = 0
    for a, b in pairs:
        length = expand(X(a, 5), X(b, 5), 6).length
        for n in range(min(4, length)):
            res = oracle.small_height_search(a, b, 5, n, 200, 2, workers=workers)
            hits += len(res["hits"])
            if not an.check_height_floor(a, b, 5, n, res["hits"]).all_hold:
                bad.append(("search", a, b, n))
    ok = not bad
    record_criterion(8, ok, f"50 expansions to depth 40 within growth and height bounds; "
                            f"search over {len(pairs)} pairs, n <= 3, caps 200/2: {hits} hits, bad={bad[:3]}")
    assert ok


def linear_relations():
    """50 pairs with a declared relation A alpha + B beta + C = 0."""
    rng = random.Random(909)
    out = []
    for i in range(35):
        p = (5, 7, 11)[i % 3]
        a = random_rational(rng, p)
        q, r = random_rational(rng, p, 50, 1), random_rational(rng, p, 50, 1)
        b = q * a + r
        out.append((X(a, p), X(b, p), (q, -1, r)))
    roots = [("root:-6,0,1@1@400", 5), ("root:-6,0,1@4@400", 5), ("root:1,0,1@2@400", 5),
             ("root:-2,0,1@3@400", 7), ("root:-2,0,0,1@3@400", 5)]
    for i in range(15):
        lit, p = roots[i % len(roots)]
        al = parse_scalar(lit, p)
        q, r = F(i % 4 + 2, 1 + i % 3), F(3 - i, 1)
        out.append((al, al * q + r, (q, -1, r)))
    return out


def test_criterion_09_dependence():
    literal_bad, signed_bad, rows = 0, 0, 0
    for alpha, beta, rel in linear_relations():
        tr = ExpansionTrace.from_inputs(alpha, beta, 25)
        rep = an.linear_dependence_monitor(tr, rel, 25)
        signed_bad += not rep.all_hold
        for n in range(len(rep.rows)):
            rows += 1
            literal_bad += not an.literal_sign_holds(tr, rel, n)
    propagation_bad, nonzero = [], 0
    for lit, p in (("root:-6,0,1@1@400", 5), ("root:-6,0,1@4@400", 5), ("root:-2,0,1@3@400", 7)):
        al = parse_scalar(lit, p)
        Fp = an.RelationPoly.at({(0, 1): 1, (2, 0): -1}, al, al * al)
        tr = ExpansionTrace.from_inputs(al, al * al, 25)
        for seq in (an.truncation_sequence(Fp, 60), an.convergent_sequence(tr, 25)):
            for n, (t, u, v) in enumerate(seq):
                t, u, v = F(t), F(u), F(v)
                val = Fp(t / v, u / v)
                if val == 0:
                    continue
                nonzero += 1
                M = max(abs(t), abs(u), abs(v))
                bound = 1 / (Fp.K * M**Fp.D)
                U_exp = min((Fp.alpha - t / v).valuation_lower_bound,
                            (Fp.beta - u / v).valuation_lower_bound)
                if F(p) ** -vp(val, p) < bound or F(p) ** -U_exp < F(p) ** Fp.H_exponent * bound:
                    propagation_bad.append((lit, n))
    ok = literal_bad == 0 and not propagation_bad
    record_criterion(9, ok, f"S_n = +(A V^a + B V^b) literal: {literal_bad}/{rows} rows fail "
                            f"(negated form fails on {signed_bad} relations); relation F = Y - X^2: "
                            f"{nonzero} nonzero rows, violations={len(propagation_bad)}")
    assert ok


def test_criterion_10_oracle_agreement():
    rng = random.Random(1010)
    digit_bad = 0
    for i in range(1000):
        p = (3, 5, 7, 11, 13)[i % 5]
        x = random_rational(rng, p, 10**6, 3)
        if x.denominator % p == 0 and vp(x, p) >= 0:
            continue
        lo = min(0, vp(x, p)) if x else 0
        digit_bad += balanced_digits(x, p, lo, lo + 19) != oracle.naive_balanced_expand(x, p, 20, lo)
    step_bad = 0
    for i in range(1000):
        p = (5, 7, 11)[i % 3]
        x0, y0, z0 = random_triple(rng, p)
        steps = oracle.rational_jp(x0, y0, z0, p)[1]
        e = expand(X(x0 / z0, p), X(y0 / z0, p), 10_000, keep_quotients=False)
        step_bad += not (e.status is Status.FINITE and e.length == steps)
    ok = digit_bad == 0 and step_bad == 0
    record_criterion(10, ok, f"1000 digit expansions ({digit_bad} mismatches), "
                             f"1000 step counts ({step_bad} mismatches)")
    assert ok
