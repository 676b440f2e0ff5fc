from __future__ import annotations

import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from toricendo.lambda_f1 import (IntGroupAlgebra, check_frobenius_lift, cyclotomic_level_count,
                                 frobenius_endo, frobenius_sweep, projective_root_square, random_element,
                                 transition_map_check)
from toricendo.lattice_fan import projective_space_fan, torus_fan


def test_frobenius_endo_examples():
    assert frobenius_endo(2, IntGroupAlgebra.basis(6, 1, (1,))) == IntGroupAlgebra.basis(6, 1, (2,))
    a = IntGroupAlgebra.of(5, 2, {(1, 2): 3, (4, 0): -1})
    assert frobenius_endo(11, a) == a


def test_lift_examples():
    a = IntGroupAlgebra.of(4, 1, {(0,): 1, (1,): 1})
    assert a ** 2 == IntGroupAlgebra.of(4, 1, {(0,): 1, (1,): 2, (2,): 1})
    assert frobenius_endo(2, a) == IntGroupAlgebra.of(4, 1, {(0,): 1, (2,): 1})
    assert (a ** 2 - frobenius_endo(2, a)) == IntGroupAlgebra.of(4, 1, {(1,): 2})
    assert check_frobenius_lift(2, a)
    for g in range(9):
        e = IntGroupAlgebra.basis(9, 1, (g,))
        assert (e ** 3 - frobenius_endo(3, e)).is_zero()


def test_algebra_identities():
    one = IntGroupAlgebra.one(3, 2)
    a = IntGroupAlgebra.of(3, 2, {(1, 1): 2, (0, 2): -3})
    assert a * one == a and a ** 0 == one
    assert IntGroupAlgebra.from_json(a.to_json()) == a


def test_random_battery():
    rng = np.random.default_rng(0)
    for _ in range(1000):
        n = int(rng.integers(1, 13))
        p = int(rng.choice([2, 3, 5]))
        a = random_element(rng, n, 1)
        assert check_frobenius_lift(p, a)


@settings(max_examples=60, deadline=None)
@given(st.integers(1, 6), st.sampled_from([2, 3, 5, 7]), st.data())
def test_frobenius_multiplicative(n, p, data):
    coeffs = st.dictionaries(st.tuples(st.integers(0, n - 1), st.integers(0, n - 1)), st.integers(-5, 5), max_size=6)
    a = IntGroupAlgebra.of(n, 2, data.draw(coeffs))
    b = IntGroupAlgebra.of(n, 2, data.draw(coeffs))
    assert frobenius_endo(p, a * b) == frobenius_endo(p, a) * frobenius_endo(p, b)
    assert frobenius_endo(p, a + b) == frobenius_endo(p, a) + frobenius_endo(p, b)
    assert check_frobenius_lift(p, a)


def test_sweep_matches_exact_path():
    res = frobenius_sweep(3, 1, 2, coefficients=(-1, 0, 1))
    assert res.ok and res.checked == 27
    res = frobenius_sweep(2, 2, 3)
    assert res.ok and res.checked == 5 ** 4


def test_sweep_overflow_guard():
    with pytest.raises(OverflowError):
        frobenius_sweep(8, 2, 13, coefficients=range(-100, 101), max_support=1)


def test_level_counts():
    p2 = projective_space_fan(2)
    assert cyclotomic_level_count(p2, 1)["additive"] == p2.m
    assert cyclotomic_level_count(p2, 1)["multiplicative"] == 1
    t2 = cyclotomic_level_count(torus_fan(2), 2)
    assert t2["additive"] == t2["multiplicative"] == 4
    # P^2: one rank-2 cone, three rank-1 cones, three rank-0 cones
    assert cyclotomic_level_count(p2, 3)["additive"] == 9 + 3 * 3 + 3
    with pytest.raises(ValueError):
        cyclotomic_level_count(p2, 0)


@pytest.mark.parametrize("a,b", [(2, 3), (3, 4), (4, 5), (2, 9)])
def test_level_counts_multiplicative_in_coprime_levels(a, b):
    fan = projective_space_fan(2)
    mult = [cyclotomic_level_count(fan, n)["multiplicative"] for n in (a, b, a * b)]
    assert math.gcd(a, b) == 1 and mult[2] == mult[0] * mult[1]
    per = [cyclotomic_level_count(fan, n)["per_cone"] for n in (a, b, a * b)]
    for k in per[2]:
        assert per[2][k] == per[0][k] * per[1][k]


def test_transitions():
    fan = projective_space_fan(1)
    assert transition_map_check(fan, 5, 1).ok
    rep = transition_map_check(fan, 2, 3)
    assert rep.ok and rep.surjective
    for n, t in [(4, 4), (8, 8), (3, 7), (2, 32)]:
        assert transition_map_check(projective_space_fan(2), n, t).ok
    with pytest.raises(ValueError):
        transition_map_check(fan, 9, 8)


def test_projective_root_square():
    out = projective_root_square(2, 3, 4)
    assert out["points"] == 144 and out["max_deviation"] < 1e-12


def test_sparse_sweep_counts_and_agrees():
    full = frobenius_sweep(3, 1, 2)
    sparse = frobenius_sweep(3, 1, 2, max_support=3)
    assert full.checked == sparse.checked == 125
    res = frobenius_sweep(4, 2, 3, max_support=2)
    assert res.ok and res.checked == 1 + 16 * 4 + math.comb(16, 2) * 16


def test_sweep_refuses_huge_domains():
    with pytest.raises(ValueError):
        frobenius_sweep(4, 2, 2)
