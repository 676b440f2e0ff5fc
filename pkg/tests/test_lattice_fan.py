from __future__ import annotations

import json

import pytest
from hypothesis import given, settings, strategies as st

from toricendo import lattice_fan as lf
from toricendo.fan_symmetry import enumerate_G


def kinds(report):
    return {v["kind"] for v in report.violations}


def test_p1_fan_valid():
    fan = lf.projective_space_fan(1)
    assert fan.m == 3
    assert lf.validate_fan(fan).valid


def test_lineality_reported():
    fan = lf.make_fan(1, [[], [[1]], [[-1]], [[1], [-1]]])
    assert "lineality" in kinds(lf.validate_fan(fan))


def test_missing_zero_cone_reported():
    fan = lf.make_fan(1, [[[1]]])
    report = lf.validate_fan(fan)
    assert not report.valid
    assert "missing_face" in kinds(report)


def test_missing_ray_face_reported():
    fan = lf.make_fan(2, [[], [[1, 0]], [[1, 0], [0, 1]]])
    report = lf.validate_fan(fan)
    assert any(v["kind"] == "missing_face" and v["face_rays"] == [[0, 1]] for v in report.violations)


def test_non_primitive_and_duplicate():
    fan = lf.make_fan(1, [[], [[2]], [[2]]])
    assert {"non_primitive_ray", "duplicate_cone"} <= kinds(lf.validate_fan(fan))


def test_overlapping_cones_reported():
    fan = lf.make_fan(2, [[], [[1, 0]], [[0, 1]], [[1, 1]], [[1, 0], [0, 1]], [[1, 0], [1, 1]]])
    assert "bad_intersection" in kinds(lf.validate_fan(fan))


def test_redundant_ray_reported():
    fan = lf.make_fan(2, [[], [[1, 0]], [[0, 1]], [[1, 1]], [[1, 0], [0, 1], [1, 1]]])
    assert "redundant_ray" in kinds(lf.validate_fan(fan))


@pytest.mark.parametrize("payload", [
    {"rank": 2, "cones": [{"id": 1, "rays": [[1]]}]},
    {"rank": 1, "cones": [{"id": 2, "rays": []}]},
    {"rank": 1, "cones": [{"id": 1, "rays": [["a"]]}]},
    {"cones": []},
])
def test_malformed_input_is_hard_error(payload):
    with pytest.raises(lf.FanFormatError):
        lf.fan_from_json(payload)


def test_json_roundtrip(tmp_path):
    fan = lf.projective_space_fan(2)
    path = tmp_path / "p2.json"
    path.write_text(json.dumps(fan.to_json()))
    again = lf.load_fan(path)
    assert again.to_json() == fan.to_json()


def test_orbit_lattice_ranks():
    p1 = lf.projective_space_fan(1)
    assert lf.orbit_lattice(p1, 1).quotient_rank == 1
    assert lf.orbit_lattice(p1, 2).quotient_rank == 0
    p2 = lf.projective_space_fan(2)
    for k in (2, 3, 4):
        assert lf.orbit_lattice(p2, k).quotient_rank == 1


@pytest.mark.parametrize("fan", [lf.projective_space_fan(d) for d in (1, 2, 3)]
                         + [lf.affine_space_fan(2), lf.torus_fan(2)])
def test_orbit_lattice_kills_cone_span(fan):
    for cone in fan.cones:
        ol = lf.orbit_lattice(fan, cone.id)
        assert ol.quotient_rank == fan.rank - cone.dim
        assert len(ol.perp_basis) == ol.quotient_rank
        for ray in cone.rays:
            assert ol.project(ray) == tuple([0] * ol.quotient_rank)
    zero = next(c for c in fan.cones if not c.rays)
    assert lf.orbit_lattice(fan, zero.id).quotient_rank == fan.rank


def test_relint_images_p1():
    fan = lf.projective_space_fan(1)
    assert lf.relint_image_cone(fan, [[-1]], 2) == 3
    assert lf.relint_image_cone(fan, [[2]], 1) == 1
    for k in fan.cone_ids:
        assert lf.relint_image_cone(fan, [[1]], k) == k
    with pytest.raises(lf.SingularMapError):
        lf.relint_image_cone(fan, [[0]], 1)


def test_relint_no_image():
    fan = lf.projective_space_fan(2)
    # the shear spreads the cone {e1, e2} across two cones of the fan
    assert lf.relint_image_cone(fan, [[1, -1], [0, 1]], 7) is None
    # a ray may land in the interior of a 2-cone
    assert lf.relint_image_cone(fan, [[2, 1], [1, 1]], 3) == 7


@settings(max_examples=60, deadline=None)
@given(st.integers(0, 5), st.integers(0, 5), st.integers(1, 3), st.integers(1, 3))
def test_relint_composition(i, j, n1, n2):
    fan = lf.projective_space_fan(2)
    group = enumerate_G(fan).G
    a = group[i].scaled(n1)
    b = group[j].scaled(n2)
    ab = a.compose(b)
    for k in fan.cone_ids:
        mid = lf.relint_image_cone(fan, b.matrix, k)
        assert mid is not None
        assert lf.relint_image_cone(fan, ab.matrix, k) == lf.relint_image_cone(fan, a.matrix, mid)


def test_cone_counts_by_dimension():
    fan = lf.projective_space_fan(3)
    counts = {}
    for c in fan.cones:
        counts[c.dim] = counts.get(c.dim, 0) + 1
    assert sum(counts.values()) == fan.m == 15
    assert counts[0] == 1
