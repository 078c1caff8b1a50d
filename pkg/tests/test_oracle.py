import random
from fractions import Fraction

import pytest
from hypothesis import given, strategies as st

from mcf_lab import analysis as an
from mcf_lab import oracle
from mcf_lab.corpus import random_triple
from mcf_lab.engine import ExpansionTrace, expand
from mcf_lab.padic import PAdicScalar

F = Fraction


def test_naive_expand_examples():
    assert oracle.naive_balanced_expand(7, 5, 2) == [2, 1]
    assert oracle.naive_balanced_expand(0, 5, 4) == [0, 0, 0, 0]
    assert oracle.naive_balanced_expand(F(7, 5), 5, 2, lo=-1) == [2, 1]


def test_naive_s():
    assert oracle.naive_s(F(132, 5), 5) == F(7, 5)
    assert oracle.naive_s(10, 5) == 0


def test_naive_convergents_worked_pair():
    rows = oracle.naive_convergents([F(7, 5), F(1, 5)], [F(1, 5), 1])
    assert rows == [(F(7, 5), F(1, 5), 1), (F(32, 25), F(26, 25), F(1, 5))]


def test_rational_jp_worked_triple():
    states, steps = oracle.rational_jp(32, 26, 5, 5)
    assert steps == 2
    last = states[-1]
    assert last.y - last.b * last.z == 0  # z_2 = 0
    assert [(s.a, s.b) for s in states] == [(F(7, 5), F(1, 5)), (F(1, 5), 1)]


def test_rational_jp_alphabet_triple():
    assert oracle.rational_jp(F(2, 5), F(-1, 5), 1, 5)[1] == 1


def test_rational_jp_state_invariants():
    states, _ = oracle.rational_jp(F(1234, 25), F(-987, 5), 4321, 5)
    for n, s in enumerate(states):
        assert (s.z / F(5) ** n).denominator == 1
        if n + 1 < len(states):
            nxt = states[n + 1]
            assert s.x == s.a * s.z + nxt.y and s.y == s.b * s.z + nxt.z and nxt.x == s.z


@given(st.sampled_from([5, 7]), st.integers(0, 10**6))
def test_step_counts_match_engine(p, seed):
    x0, y0, z0 = random_triple(random.Random(seed), p)
    steps = oracle.rational_jp(x0, y0, z0, p)[1]
    e = expand(PAdicScalar(p, x0 / z0), PAdicScalar(p, y0 / z0), 10_000, keep_quotients=False)
    assert e.status_text == f"Finite({steps})"


def test_small_height_search_worked_pair():
    a, b = F(32, 5), F(26, 5)
    res = oracle.small_height_search(a, b, 5, 1, height_cap=200, exponent_cap=2)
    assert res["radius_exp"] == 2 and res["height_cap"] == 200
    hits = res["hits"]
    assert (F(32, 5), F(26, 5), 1) in hits
    assert hits == sorted(hits, key=lambda h: (max(abs(x) for x in h), h))
    assert an.check_height_floor(a, b, 5, 1, hits).all_hold


def test_small_height_search_finds_scaled_convergent():
    a, b = F(7, 9), F(-4, 11)
    tr = ExpansionTrace.from_inputs(PAdicScalar(5, a), PAdicScalar(5, b), 10)
    res = oracle.small_height_search(a, b, 5, 0, height_cap=60, exponent_cap=1)
    A, B, C, _ = tr.table.scaled(0)
    if max(abs(A), abs(B), abs(C)) <= 60 and an.in_ball(a, b, F(A), F(B), C, 5, res["radius_exp"]):
        assert (F(A), F(B), C) in res["hits"]
    assert an.check_height_floor(a, b, 5, 0, res["hits"]).all_hold


def test_parallel_search_is_deterministic():
    a, b = F(32, 5), F(26, 5)
    one = oracle.small_height_search(a, b, 5, 0, height_cap=30, exponent_cap=1)
    three = oracle.small_height_search(a, b, 5, 0, height_cap=30, exponent_cap=1, workers=3)
    assert one == three


def test_thread_cap(monkeypatch):
    monkeypatch.delenv("MCF_LAB_THREADS", raising=False)
    assert oracle.thread_cap() == 1
    monkeypatch.setenv("MCF_LAB_THREADS", "4")
    assert oracle.thread_cap() == 4
    monkeypatch.setenv("MCF_LAB_THREADS", "0")
    with pytest.raises(ValueError):
        oracle.thread_cap()
