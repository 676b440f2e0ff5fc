from __future__ import annotations

import math
from itertools import permutations, product

import pytest

from toricendo import intlin
from toricendo.fan_symmetry import (LatticeMap, decompose_primitive, enumerate_G, induced_quotient_map,
                                    is_compatible, compose_perm)
from toricendo.lattice_fan import SingularMapError, affine_space_fan, projective_space_fan, torus_fan


def brute_force_group(fan):
    """Primitive compatible maps with entries in {-1, 0, 1}, found by exhaustive search."""
    d = fan.rank
    out = set()
    for entries in product((-1, 0, 1), repeat=d * d):
        m = [list(entries[i * d:(i + 1) * d]) for i in range(d)]
        if intlin.det(m) == 0 or intlin.content(entries) != 1:
            continue
        if is_compatible(m, fan).ok:
            out.add(tuple(map(tuple, m)))
    return out


@pytest.mark.parametrize("d", [1, 2, 3])
def test_projective_group_order_and_rows(d):
    fan = projective_space_fan(d)
    sym = enumerate_G(fan)
    assert sym.order == math.factorial(d + 1)
    assert sym.is_unimodular and sym.splits and not sym.fallback
    rays = {tuple(-1 for _ in range(d))} | {tuple(int(i == j) for j in range(d)) for i in range(d)}
    # maps act on column vectors, so the images of the basis vectors are the columns
    for g in sym.G:
        cols = [tuple(c) for c in intlin.transpose(g.rows())]
        assert len(set(cols)) == d and set(cols) <= rays


@pytest.mark.parametrize("d", [1, 2])
def test_group_matches_brute_force(d):
    fan = projective_space_fan(d)
    assert {g.matrix for g in enumerate_G(fan).G} == brute_force_group(fan)


def test_count_of_ordered_row_selections():
    for d in (1, 2, 3):
        vecs = [tuple(-1 for _ in range(d))] + [tuple(int(i == j) for j in range(d)) for i in range(d)]
        count = sum(1 for rows in permutations(vecs, d) if intlin.det([list(r) for r in rows]) != 0)
        assert count == math.factorial(d + 1)


def test_p1_group():
    sym = enumerate_G(projective_space_fan(1))
    assert [g.rows() for g in sym.G] == [[[1]], [[-1]]]


def test_torus_fallback():
    sym = enumerate_G(torus_fan(2))
    assert sym.fallback and not sym.splits
    assert [g.rows() for g in sym.G] == [[[1, 0], [0, 1]]]


def test_affine_plane_is_not_unimodular():
    sym = enumerate_G(affine_space_fan(2))
    assert not sym.is_unimodular and not sym.splits
    # diag(1, 2) is a primitive compatible map with determinant 2
    assert is_compatible([[1, 0], [0, 2]], affine_space_fan(2)).ok


def test_compatibility_examples():
    p1 = projective_space_fan(1)
    swap = is_compatible([[-1]], p1)
    assert swap.ok and swap.cone_perm == {1: 1, 2: 3, 3: 2}
    for n in (1, 2, 5):
        res = is_compatible([[n]], p1)
        assert res.ok and res.cone_perm == {1: 1, 2: 2, 3: 3}
    with pytest.raises(SingularMapError):
        is_compatible([[0]], p1)
    p2 = projective_space_fan(2)
    bad = is_compatible([[1, -1], [0, 1]], p2)
    assert not bad.ok and bad.failed_cone is not None


def test_decompose_primitive():
    assert decompose_primitive([[6, 0], [0, 6]]) == (6, LatticeMap.of([[1, 0], [0, 1]]))
    assert decompose_primitive([[0, 1], [1, 0]])[0] == 1
    n, p = decompose_primitive([[0, 4], [4, 0]])
    assert n == 4 and p.rows() == [[0, 1], [1, 0]]


@pytest.mark.parametrize("d", [1, 2, 3])
def test_group_properties(d):
    fan = projective_space_fan(d)
    sym = enumerate_G(fan)
    mats = {g.matrix for g in sym.G}
    ident = tuple(tuple(int(i == j) for j in range(d)) for i in range(d))
    assert sym.G[0].matrix == ident
    # closure, inverses, distinct cone permutations
    for g in sym.G:
        for h in sym.G:
            assert g.compose(h).matrix in mats
        inv = intlin.inverse_rational(g.rows())
        assert tuple(tuple(int(x) for x in r) for r in inv) in mats
    perms = [tuple(sorted(p.items())) for p in sym.cone_perms]
    assert len(set(perms)) == len(perms)
    assert math.factorial(fan.m) % sym.order == 0
    # only the identity induces the identity permutation
    trivial = [g for g, p in zip(sym.G, sym.cone_perms) if all(p[k] == k for k in p)]
    assert [g.matrix for g in trivial] == [ident]


@pytest.mark.parametrize("d", [1, 2, 3])
def test_quotient_maps_unimodular_and_ranks_constant(d):
    fan = projective_space_fan(d)
    sym = enumerate_G(fan)
    ranks = fan.quotient_ranks()
    for g, perm in zip(sym.G, sym.cone_perms):
        for j in fan.cone_ids:
            assert ranks[j] == ranks[perm[j]]
            t = induced_quotient_map(fan, g, j, perm[j])
            if ranks[j]:
                assert abs(intlin.det(t)) == 1


def test_permutation_functoriality():
    fan = projective_space_fan(2)
    sym = enumerate_G(fan)
    for g, pg in zip(sym.G, sym.cone_perms):
        for h, ph in zip(sym.G, sym.cone_perms):
            gh = is_compatible(g.compose(h), fan).cone_perm
            assert gh == compose_perm(pg, ph)


def test_enumeration_deterministic():
    fan = projective_space_fan(3)
    assert enumerate_G(fan).to_json() == enumerate_G(fan).to_json()
