from __future__ import annotations


import pytest
from hypothesis import given, settings, strategies as st

from toricendo import intlin
from toricendo.fan_symmetry import enumerate_G, induced_quotient_map
from toricendo.lattice_fan import projective_space_fan, torus_fan
from toricendo.lattice_shells import iter_box
from toricendo.spectral_model import (EnergyLaw, LawFormatError, ScalingHom, TableRangeError, bind_law,
                                      check_covariance_law, primitive_reps, stabilizer_action,
                                      symmetric_norm_law, transport_h)


def brute_orbits(d, group, radius):
    pts = [x for x in iter_box(d, radius) if intlin.content(x) == 1]
    seen, out = set(), []
    for x in pts:
        if x in seen:
            continue
        orb = {x}
        changed = True
        while changed:
            changed = False
            for y in list(orb):
                for t in group:
                    z = tuple(intlin.matvec(t, y))
                    if z not in orb:
                        orb.add(z)
                        changed = True
        inside = {z for z in orb if max(abs(v) for v in z) <= radius}
        seen |= inside
        out.append(frozenset(inside))
    return set(out)


def test_primitive_reps_examples():
    assert primitive_reps(1, [[[1]], [[-1]]], 3) == [((1,), [(1,), (-1,)])]
    assert primitive_reps(0, [], 3) == []
    reps = primitive_reps(2, [[[1, 0], [0, 1]]], 1)
    assert len(reps) == 8 and all(len(m) == 1 for _, m in reps)


@pytest.mark.parametrize("radius", [1, 2, 4])
def test_primitive_reps_match_brute_force(radius):
    fan = projective_space_fan(2)
    sym = enumerate_G(fan)
    group = stabilizer_action(fan, sym, 1)
    reps = primitive_reps(2, group, radius)
    assert {frozenset(m) for _, m in reps} == brute_orbits(2, group, radius)
    for rep, members in reps:
        assert rep == max(members)
        # gcd is constant on orbits (all primitive here) and the stabilizer preserves it
        for t in group:
            assert intlin.content(intlin.matvec(t, rep)) == 1


def test_h_value_examples():
    fan = torus_fan(1)
    table = bind_law(EnergyLaw.from_json({"c": 1, "kind": "orbit_table", "cones": {
        "1": {"table": {"radius": 5, "entries": [[[1], 1.0], [[-1], 1.0]]}}}}), fan)
    assert table.h_value(1, (5,)) == 5.0
    norm = bind_law(EnergyLaw.from_json({"c": 1, "kind": "norm_power", "default": {"gram": "identity"}}), fan)
    assert norm.h_value(1, (-3,)) == pytest.approx(3.0, rel=1e-15)
    t2 = torus_fan(2)
    sq = bind_law(EnergyLaw.from_json({"c": 2, "kind": "norm_power", "default": {"gram": "identity"}}), t2)
    assert sq.h_value(1, (1, 2)) == pytest.approx(5.0, rel=1e-15)
    with pytest.raises(ValueError):
        sq.h_value(1, (0, 0))


def test_table_radius_is_enforced():
    fan = torus_fan(1)
    law = bind_law(EnergyLaw.from_json({"c": 1, "kind": "orbit_table", "cones": {
        "1": {"table": {"radius": 1, "entries": [[[1], 1.0], [[-1], 1.0]]}}}}), fan)
    assert law.h_value(1, (-7,)) == 7.0
    t2 = torus_fan(2)
    law2 = bind_law(EnergyLaw.from_json({"c": 1, "kind": "orbit_table", "cones": {
        "1": {"table": {"radius": 1, "entries": [[[1, 0], 1.0]]}}}}), t2)
    with pytest.raises(TableRangeError):
        law2.h_value(1, (2, 1))
    with pytest.raises(TableRangeError):
        law2.h_value(1, (0, 1))


@pytest.mark.parametrize("payload", [
    {"c": 1, "kind": "norm_power", "default": {"gram": [[1, 2], [2, 1]]}},
    {"c": 1, "kind": "norm_power", "default": {"gram": [[1, 0], [1, 1]]}},
    {"c": -1, "kind": "norm_power", "default": {"gram": "identity"}},
    {"c": 1, "kind": "weird"},
    {"c": 1, "kind": "norm_power", "default": {"sup": "identity"}},
])
def test_bad_laws_rejected(payload):
    with pytest.raises(LawFormatError):
        bind_law(EnergyLaw.from_json(payload), torus_fan(2))


def test_transport_consistent_for_symmetric_laws():
    for d in (1, 2, 3):
        fan = projective_space_fan(d)
        sym = enumerate_G(fan)
        bound = bind_law(symmetric_norm_law(fan, sym), fan, sym)
        assert transport_h(bound, radius=3).consistent


def test_transport_p1_swap_symmetric_table():
    fan = projective_space_fan(1)
    law = EnergyLaw.from_json({"c": 1, "kind": "orbit_table", "cones": {
        "1": {"table": {"radius": 4, "entries": [[[1], 2.0], [[-1], 2.0]]}}}})
    assert transport_h(bind_law(law, fan), radius=4).consistent


def test_transport_reports_conflict():
    fan = projective_space_fan(1)
    law = EnergyLaw.from_json({"c": 1, "kind": "orbit_table", "cones": {
        "1": {"table": {"radius": 4, "entries": [[[1], 2.0], [[-1], 3.0]]}}}})
    report = transport_h(bind_law(law, fan), radius=4)
    assert not report.consistent
    assert report.to_json()["conflicts"][0]["cone"] == 1


def test_transported_gram_is_consistent_by_construction():
    fan = projective_space_fan(2)
    sym = enumerate_G(fan)
    # anisotropic law on one ray cone; the other ray cones get transported copies
    law = EnergyLaw.from_json({"c": 1, "kind": "norm_power", "cones": {
        "1": {"gram": [["4/3", "-2/3"], ["-2/3", "4/3"]]}, "2": {"gram": [[3]]}}})
    bound = bind_law(law, fan, sym)
    assert bound.provenance[3].startswith("transported")
    assert transport_h(bound).consistent


def test_covariance_law_battery():
    for d in (1, 2, 3):
        fan = projective_space_fan(d)
        sym = enumerate_G(fan)
        bound = bind_law(symmetric_norm_law(fan, sym, c=1.5), fan, sym)
        res = check_covariance_law(bound, ScalingHom(1.5), samples=1000, seed=d)
        assert res.ok, res.counterexample


def test_covariance_scaling_and_invariance_cases():
    fan = projective_space_fan(1)
    sym = enumerate_G(fan)
    bound = bind_law(symmetric_norm_law(fan, sym, c=1.0), fan, sym)
    h = bound.energies[1]
    assert h.h((6,)) == 2 * h.h((3,))
    assert h.h((-3,)) == h.h((3,))


@settings(max_examples=100, deadline=None)
@given(st.lists(st.integers(-20, 20), min_size=2, max_size=2).filter(any), st.integers(1, 9),
       st.sampled_from([0.5, 1.0, 2.0, 3.0]))
def test_homogeneity(xi, n, c):
    fan = projective_space_fan(2)
    sym = enumerate_G(fan)
    for kind in ("norm_power", "orbit_table"):
        bound = bind_law(symmetric_norm_law(fan, sym, c=c, kind=kind), fan, sym)
        scaled = tuple(n * v for v in xi)
        assert bound.h_value(1, scaled) == pytest.approx(n ** c * bound.h_value(1, tuple(xi)), rel=1e-12)
    e = EnergyLaw.from_json({"c": c, "kind": "orbit_table", "default": {"sup": [[1, 1], [1, -1], [0, 2]]}})
    b2 = bind_law(e, torus_fan(2))
    assert b2.h_value(1, scaled) == pytest.approx(n ** c * b2.h_value(1, tuple(xi)), rel=1e-12)


def test_kappa_is_a_lower_bound():
    fan = projective_space_fan(2)
    bound = bind_law(symmetric_norm_law(fan), fan)
    sup = bind_law(EnergyLaw.from_json({"c": 1, "kind": "orbit_table",
                                        "default": {"sup": [[1, 1], [1, -1]]}}), torus_fan(2))
    for b in (bound, sup):
        e = b.energies[1]
        for xi in iter_box(2, 6):
            assert e.h(xi) >= e.kappa * max(abs(v) for v in xi)


def test_spectral_sums_agree_along_orbits():
    fan = projective_space_fan(2)
    sym = enumerate_G(fan)
    bound = bind_law(symmetric_norm_law(fan, sym), fan, sym)
    beta = 3.0
    for g, perm in zip(sym.G, sym.cone_perms):
        for j, e in bound.energies.items():
            t = induced_quotient_map(fan, g, j, perm[j])
            target = bound.energies[perm[j]]
            for xi in iter_box(e.d, 4):
                assert target.h(tuple(intlin.matvec(t, xi))) ** -beta == pytest.approx(e.h(xi) ** -beta, rel=1e-13)


def test_m_and_m_prime():
    fan = projective_space_fan(2)
    bound = bind_law(symmetric_norm_law(fan), fan)
    assert (bound.m, bound.m_prime) == (7, 4)
