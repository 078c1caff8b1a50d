import json
import random
from fractions import Fraction

import pytest
from hypothesis import given, strategies as st

from mcf_lab import oracle
from mcf_lab.corpus import random_pair
from mcf_lab.engine import (ExpansionTrace, Status, certified_prefix_radius, expand, from_digits,
                            identity_checks, identity_suite, jp_step, over_p_power, residuals,
                            tilde_sequences)
from mcf_lab.errors import IndexOutOfRange
from mcf_lab.padic import PAdicScalar, parse_scalar, vp

F = Fraction


def X(x, p=5):
    return PAdicScalar(p, F(x))


@pytest.fixture
def worked():
    return ExpansionTrace.from_inputs(X(F(32, 5)), X(F(26, 5)), 10)


def test_jp_step_worked_pair():
    s = jp_step(X(F(32, 5)), X(F(26, 5)))
    assert (s.a.value, s.b.value, s.alpha.value, s.beta.value) == (F(7, 5), F(1, 5), F(1, 5), 1)
    s2 = jp_step(s.alpha, s.beta)
    assert (s2.a.value, s2.b.value) == (F(1, 5), 1) and s2.terminated


def test_jp_step_terminates_when_beta_in_alphabet():
    s = jp_step(X(F(123, 25)), X(F(2, 5)))
    assert s.terminated and s.b.value == F(2, 5)


def test_expand_worked_pair(worked):
    e = worked.expansion
    assert e.status is Status.FINITE and e.status_text == "Finite(2)"
    assert e.digit_pairs() == [(F(7, 5), F(1, 5)), (F(1, 5), F(1))]


def test_single_pair_expansion():
    e = expand(X(F(2, 5)), X(-1), 10)
    assert e.status_text == "Finite(1)" and e.digit_pairs() == [(F(2, 5), F(-1))]


def test_convergent_rows(worked):
    t = worked.table
    assert t.triple(-2) == (0, 1, 0) and t.triple(-1) == (1, 0, 0)
    assert t.triple(0) == (F(7, 5), F(1, 5), 1)
    assert t.triple(1) == (F(32, 25), F(26, 25), F(1, 5))
    A, B, C = t.triple(1)
    assert (A / C, B / C) == (F(32, 5), F(26, 5))
    with pytest.raises(IndexOutOfRange):
        t.triple(2)


def test_tilde_seeds(worked):
    e = worked.expansion
    assert tilde_sequences(e, 0) == (-1, 0)
    assert tilde_sequences(e, 1) == (e.b[1].value, 1)
    assert worked.table.tilde_closed(1) == tilde_sequences(e, 1)


def test_residual_seeds_and_worked_values(worked):
    assert [v.value for v in worked.residual(-2)] == [0, -1]
    assert [v.value for v in worked.residual(-1)] == [-1, 0]
    Va, Vb, va, vb = residuals(worked, 0)
    assert (Va.value, Vb.value, va, vb) == (F(5), F(5), 1, 1)
    assert residuals(worked, 1)[2:] == (float("inf"), float("inf"))


def test_certified_prefix_radius(worked):
    assert certified_prefix_radius(worked.expansion, 0) == 0
    unit = from_digits(5, [F(1)] + [F(1, 5)] * 6, [F(0)] * 7)
    assert [certified_prefix_radius(unit, n) for n in range(7)] == [2 * n for n in range(7)]


def test_prefix_perturbation_example(worked):
    alpha, beta = F(32, 5), F(26, 5)
    base = worked.expansion.digit_pairs()
    for n in range(2):
        r = 2 * worked.K(n) + 1
        e = expand(X(alpha + F(5) ** r), X(beta), n + 1)
        assert e.digit_pairs()[: n + 1] == base[: n + 1]


def test_truncated_dependent_pair_exhausts_precision():
    # beta = alpha + 1 makes beta_1 = 1 exactly, which truncated inputs cannot certify
    al = parse_scalar("root:-6,0,1@1@200", 5)
    e = expand(al, al + 1, 5)
    assert e.status is Status.PRECISION_EXHAUSTED and e.length == 2


def test_truncated_independent_pair_is_depth_limited():
    e = expand(parse_scalar("root:-6,0,1@1@200", 5), parse_scalar("root:-2,0,0,1@3@200", 5), 5)
    assert e.status is Status.DEPTH_LIMITED and e.length == 5


def test_truncated_identities_hold_on_certified_prefix():
    tr = ExpansionTrace.from_inputs(parse_scalar("root:-6,0,1@1@300", 5),
                                    parse_scalar("root:-2,0,0,1@3@300", 5), 20)
    assert identity_suite(tr).all_hold


def test_from_digits_validates_alphabet():
    with pytest.raises(ValueError):
        from_digits(5, [1, 1], [0, 0])  # |a_1|_p must exceed 1
    with pytest.raises(ValueError):
        from_digits(5, [1, F(1, 5)], [0, F(2, 5)])


def test_trace_json_schema(worked):
    d = json.loads(worked.to_json())
    assert set(d) == {"p", "input", "status", "certified_steps", "steps"}
    assert d["status"] == "Finite(2)"
    keys = {"n", "a", "b", "A", "B", "C", "tildeA", "tildeB", "h", "k", "K", "vVa", "vVb"}
    assert all(set(s) == keys for s in d["steps"])
    assert d["steps"][1]["vVa"] == "inf" and d["steps"][1]["A"] == "32/25"


def test_over_p_power_matches_fraction():
    rng = random.Random(3)
    for _ in range(500):
        n = rng.randint(-10**8, 10**8) * 7 ** rng.randint(0, 4)
        E = rng.randint(-2, 6)
        got, want = over_p_power(n, E, 7), F(n) / F(7) ** E
        assert (got.numerator, got.denominator) == (want.numerator, want.denominator)
        assert hash(got) == hash(want)


def test_identity_checks_single_index(worked):
    assert identity_checks(worked, 1).all_hold


pairs = st.tuples(st.sampled_from([5, 7, 11]), st.integers(0, 10**6))


@given(pairs)
def test_identities_random_pairs(args):
    p, seed = args
    a, b = random_pair(random.Random(seed), p)
    tr = ExpansionTrace.from_inputs(X(a, p), X(b, p), 30)
    rep = identity_suite(tr)
    assert rep.all_hold, str(rep)


@given(pairs)
def test_convergents_match_naive_recurrence(args):
    p, seed = args
    a, b = random_pair(random.Random(seed), p)
    e = expand(X(a, p), X(b, p), 30)
    naive = oracle.naive_convergents([x.value for x in e.a], [y.value for y in e.b])
    assert naive == [e.table.triple(n) for n in range(e.length)]
    if e.status is Status.FINITE and e.length >= 2:
        # the last complete quotients rebuild the input; A_l / C_l does only when alpha_l is in Y
        n = e.length - 1
        al, be = e.alphas[n].value, e.betas[n].value
        rows = [e.table.triple(j) for j in (n - 1, n - 2, n - 3)]
        num_a, num_b, den = (al * rows[0][i] + be * rows[1][i] + rows[2][i] for i in range(3))
        assert (num_a / den, num_b / den) == (a, b)
        if al == e.a[n].value:
            A, B, C = naive[-1]
            assert (A / C, B / C) == (a, b)


@given(pairs)
def test_nu_c_and_w_identity(args):
    from mcf_lab.analysis import w_valuation
    p, seed = args
    a, b = random_pair(random.Random(seed), p)
    tr = ExpansionTrace.from_inputs(X(a, p), X(b, p), 30)
    for n in range(tr.length):
        if n >= 1:
            assert vp(tr.table.C(n), p) == -tr.K(n)
        if n < tr.length - 1 or tr.expansion.status is not Status.FINITE:
            assert w_valuation(tr, n) == tr.K(n)
