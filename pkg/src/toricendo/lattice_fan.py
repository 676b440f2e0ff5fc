"""Fans, cone geometry and the orbit-cone bookkeeping.

A fan lives in N = Z^d.  For each cone sigma_k we compute

* facet inequalities inside span(sigma_k), used for exact relative-interior
  membership;
* the lattice sigma_k^perp ∩ M, with an HNF-canonical basis ``perp_basis``.

The rows of ``perp_basis`` also serve as the quotient projection
N -> N/N_k ≅ Z^{d_k}: a basis u_1..u_{d_k} of sigma^perp ∩ M identifies
Hom(sigma^perp ∩ M, Z) with Z^{d_k} via f -> (f(u_i)), and the class of x in N
maps to (<u_i, x>).  Its kernel is exactly N_k = N ∩ span(sigma_k).

Everything in this module is integer or rational arithmetic.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from fractions import Fraction
from itertools import combinations
from pathlib import Path
from typing import Iterable, Sequence

from . import intlin


class FanFormatError(ValueError):
    """Malformed fan input (wrong shapes, bad ids, non-integers)."""


class SingularMapError(ValueError):
    """A lattice map with determinant zero was supplied where det != 0 is required."""


@dataclass(frozen=True)
class Cone:
    id: int
    rays: tuple[tuple[int, ...], ...]
    dim: int

    @property
    def ray_set(self) -> frozenset[tuple[int, ...]]:
        return frozenset(self.rays)


@dataclass(frozen=True)
class ConeGeometry:
    """Derived exact data for one cone."""
    cone_id: int
    span_dim: int
    facet_normals: tuple[tuple[int, ...], ...]
    perp_basis: tuple[tuple[int, ...], ...]
    pointed: bool

    def in_span(self, x: Sequence[int]) -> bool:
        return all(sum(u * v for u, v in zip(row, x)) == 0 for row in self.perp_basis)

    def contains(self, x: Sequence[int]) -> bool:
        return self.in_span(x) and all(
            sum(n * v for n, v in zip(normal, x)) >= 0 for normal in self.facet_normals)

    def in_relint(self, x: Sequence[int]) -> bool:
        return self.in_span(x) and all(
            sum(n * v for n, v in zip(normal, x)) > 0 for normal in self.facet_normals)


@dataclass
class Fan:
    rank: int
    cones: list[Cone]
    _geometry: dict[int, ConeGeometry] = field(default_factory=dict, repr=False, compare=False)

    @property
    def m(self) -> int:
        return len(self.cones)

    @property
    def cone_ids(self) -> list[int]:
        return [c.id for c in self.cones]

    def cone(self, k: int) -> Cone:
        for c in self.cones:
            if c.id == k:
                return c
        raise KeyError(f"no cone with id {k}")

    def geometry(self, k: int) -> ConeGeometry:
        if k not in self._geometry:
            self._geometry[k] = cone_geometry(self.cone(k), self.rank)
        return self._geometry[k]

    def rays(self) -> list[tuple[int, ...]]:
        """The 1-dimensional cones' generators, in cone-id order."""
        return [c.rays[0] for c in self.cones if len(c.rays) == 1]

    def quotient_ranks(self) -> dict[int, int]:
        return {c.id: self.rank - self.geometry(c.id).span_dim for c in self.cones}

    def to_json(self) -> dict:
        return {"rank": self.rank,
                "cones": [{"id": c.id, "rays": [list(r) for r in c.rays]} for c in self.cones]}


def _int_entry(x, where: str) -> int:
    if isinstance(x, bool) or not isinstance(x, int):
        if isinstance(x, float) and x.is_integer():
            return int(x)
        raise FanFormatError(f"{where}: expected integer, got {x!r}")
    return x


def fan_from_json(data: dict) -> Fan:
    """Parse the fan JSON schema; raises FanFormatError on malformed input."""
    if not isinstance(data, dict) or "rank" not in data or "cones" not in data:
        raise FanFormatError("fan JSON needs 'rank' and 'cones'")
    d = _int_entry(data["rank"], "rank")
    if d < 0:
        raise FanFormatError("rank must be nonnegative")
    raw = data["cones"]
    if not isinstance(raw, list) or not raw:
        raise FanFormatError("'cones' must be a nonempty list")
    cones = []
    for i, entry in enumerate(raw):
        if not isinstance(entry, dict) or "id" not in entry or "rays" not in entry:
            raise FanFormatError(f"cone #{i}: needs 'id' and 'rays'")
        cid = _int_entry(entry["id"], f"cone #{i} id")
        rays = []
        for j, ray in enumerate(entry["rays"]):
            if not isinstance(ray, (list, tuple)) or len(ray) != d:
                raise FanFormatError(f"cone {cid} ray #{j}: expected a vector of length {d}")
            rays.append(tuple(_int_entry(x, f"cone {cid} ray #{j}") for x in ray))
        span = intlin.rational_rank(rays) if rays else 0
        cones.append(Cone(cid, tuple(rays), span))
    ids = sorted(c.id for c in cones)
    if ids != list(range(1, len(cones) + 1)):
        raise FanFormatError(f"cone ids must be exactly 1..{len(cones)}, got {ids}")
    cones.sort(key=lambda c: c.id)
    return Fan(d, cones)


def load_fan(path: str | Path) -> Fan:
    try:
        data = json.loads(Path(path).read_text())
    except json.JSONDecodeError as exc:
        raise FanFormatError(f"{path}: invalid JSON ({exc})") from exc
    return fan_from_json(data)


def make_fan(rank: int, cones: Iterable[Iterable[Sequence[int]]]) -> Fan:
    """Build a fan from ray lists, numbering cones 1..m in the given order."""
    return fan_from_json({"rank": rank, "cones": [
        {"id": i + 1, "rays": [list(r) for r in rays]} for i, rays in enumerate(cones)]})


def cone_geometry(cone: Cone, d: int) -> ConeGeometry:
    rays = [list(r) for r in cone.rays]
    if not rays:
        return ConeGeometry(cone.id, 0, (), tuple(tuple(r) for r in intlin.identity(d)), True)
    perp = intlin.integer_kernel(rays, d)
    k = d - len(perp)
    # basis of span(sigma): a maximal independent subset of the rays
    basis: list[list[int]] = []
    for r in rays:
        if intlin.rational_rank(basis + [r]) > len(basis):
            basis.append(r)
    normals: set[tuple[int, ...]] = set()
    for sub in combinations(range(len(rays)), k - 1):
        subrays = [rays[i] for i in sub]
        if (intlin.rational_rank(subrays) if subrays else 0) != k - 1:
            continue
        # n = sum c_i basis_i with n . s = 0 for s in subrays
        gram = [[sum(b * s for b, s in zip(bi, sr)) for bi in basis] for sr in subrays]
        null = intlin.rational_nullspace(gram, k)
        if len(null) != 1:
            continue
        coeffs = null[0]
        n = [sum(Fraction(c) * b[j] for c, b in zip(coeffs, basis)) for j in range(d)]
        n_int = intlin.primitive_integer(n)
        vals = [sum(a * b for a, b in zip(n_int, r)) for r in rays]
        if all(v >= 0 for v in vals):
            normals.add(tuple(n_int))
        elif all(v <= 0 for v in vals):
            normals.add(tuple(-x for x in n_int))
    normals_t = tuple(sorted(normals))
    pointed = bool(normals_t) and intlin.rational_rank([list(n) for n in normals_t]) == k
    return ConeGeometry(cone.id, k, normals_t, tuple(tuple(r) for r in perp), pointed)


@dataclass
class ValidationReport:
    violations: list[dict]

    @property
    def valid(self) -> bool:
        return not self.violations

    def to_json(self) -> dict:
        return {"valid": self.valid, "violations": self.violations}


def _faces(cone: Cone, geom: ConeGeometry) -> set[frozenset]:
    """Ray sets of all faces of a pointed cone (including the cone and {0})."""
    faces = {frozenset(), frozenset(cone.rays)}
    for normal in geom.facet_normals:
        on = frozenset(r for r in cone.rays if sum(a * b for a, b in zip(normal, r)) == 0)
        faces.add(on)
    # faces of faces: intersect facets
    changed = True
    while changed:
        changed = False
        for a in list(faces):
            for b in list(faces):
                c = a & b
                if c not in faces:
                    faces.add(c)
                    changed = True
    return faces


def validate_fan(fan: Fan) -> ValidationReport:
    """Report every violation; an empty list means the fan is valid."""
    out: list[dict] = []
    by_rays: dict[frozenset, list[int]] = {}
    for c in fan.cones:
        by_rays.setdefault(c.ray_set, []).append(c.id)
        for r in c.rays:
            if not any(r):
                out.append({"kind": "zero_ray", "cone": c.id, "ray": list(r)})
            elif intlin.content(r) != 1:
                out.append({"kind": "non_primitive_ray", "cone": c.id, "ray": list(r)})
        if len(set(c.rays)) != len(c.rays):
            out.append({"kind": "repeated_ray", "cone": c.id})
    for rays, ids in by_rays.items():
        if len(ids) > 1:
            out.append({"kind": "duplicate_cone", "cones": ids})
    pointed_ok = []
    for c in fan.cones:
        if any(not any(r) for r in c.rays):
            continue
        g = fan.geometry(c.id)
        if not g.pointed:
            out.append({"kind": "lineality", "cone": c.id})
            continue
        # every listed ray must be extremal
        for r in c.rays:
            if sum(1 for n in g.facet_normals if sum(a * b for a, b in zip(n, r)) == 0) < g.span_dim - 1:
                out.append({"kind": "redundant_ray", "cone": c.id, "ray": list(r)})
        pointed_ok.append(c)
    for c in pointed_ok:
        for face in sorted(_faces(c, fan.geometry(c.id)), key=lambda f: (len(f), sorted(f))):
            if face not in by_rays:
                out.append({"kind": "missing_face", "cone": c.id,
                            "face_rays": [list(r) for r in sorted(face)]})
    if frozenset() not in by_rays and not any(
            v["kind"] == "missing_face" and not v["face_rays"] for v in out):
        out.append({"kind": "missing_face", "cone": None, "face_rays": []})
    # pairwise intersections must be a common face: the cones meet in the cone
    # spanned by their shared rays, checked via a separating functional
    for a, b in combinations(pointed_ok, 2):
        common = a.ray_set & b.ray_set
        if not _meet_in_common_face(fan, a, b, common):
            out.append({"kind": "bad_intersection", "cones": [a.id, b.id]})
    return ValidationReport(out)


def _meet_in_common_face(fan: Fan, a: Cone, b: Cone, common: frozenset) -> bool:
    """True iff a ∩ b = cone(common) and cone(common) is a face of both.

    By convex separation, sigma ∩ tau is a common face iff some linear
    functional is >= 0 on sigma, <= 0 on tau and vanishes exactly on the
    intersection.  We search the finite candidate set of facet-normal
    differences and sums, then fall back to an exact LP-free point test.
    """
    ga, gb = fan.geometry(a.id), fan.geometry(b.id)
    fa = _faces(a, ga)
    fb = _faces(b, gb)
    if common not in fa or common not in fb:
        return False
    # Check that no point of relint(face of a) lies in b outside the common face:
    # every pair of faces (Fa, Fb) whose relative interiors intersect must be equal.
    for face_a in fa:
        for face_b in fb:
            if face_a == face_b:
                continue
            if _relints_meet(fan.rank, face_a, face_b):
                return False
    return True


def _relints_meet(d: int, fa: frozenset, fb: frozenset) -> bool:
    """Do relint(cone(fa)) and relint(cone(fb)) intersect?  Exact rational LP via enumeration.

    Solve sum_i s_i a_i = sum_j t_j b_j with all s_i, t_j > 0.  By scaling this is
    the feasibility of s, t >= 1; we decide it exactly with scipy-free Fourier-Motzkin
    on the (small) null space of [A | -B].
    """
    if not fa and not fb:
        return True
    if not fa or not fb:
        return False
    cols = [list(r) for r in sorted(fa)] + [[-x for x in r] for r in sorted(fb)]
    rows = intlin.transpose(cols)
    null = intlin.rational_nullspace(rows, len(cols))
    if not null:
        return False
    # need a vector in span(null) with all coordinates > 0
    return _positive_combination_exists(null)


def _positive_combination_exists(basis: list[list[Fraction]]) -> bool:
    """Exact test whether span(basis) contains a strictly positive vector.

    Gordan's alternative: span(B) has a positive vector iff no nonzero y >= 0 is
    orthogonal to span(B).  We use Fourier-Motzkin elimination on x = B^T c with
    x_i >= 1 (homogeneous scaling makes > 0 equivalent to >= 1).
    """
    n = len(basis[0])
    k = len(basis)
    # inequalities: sum_j c_j B[j][i] - 1 >= 0 for each i  ->  rows (coeffs..., const)
    ineqs = [[basis[j][i] for j in range(k)] + [Fraction(-1)] for i in range(n)]
    for var in range(k):
        pos = [q for q in ineqs if q[var] > 0]
        neg = [q for q in ineqs if q[var] < 0]
        zero = [q for q in ineqs if q[var] == 0]
        new = list(zero)
        for p in pos:
            for q in neg:
                a, b = p[var], -q[var]
                new.append([b * x + a * y for x, y in zip(p, q)])
        ineqs = _dedupe(new)
    # remaining: constant >= 0 rows
    return all(q[-1] >= 0 for q in ineqs)


def _dedupe(rows: list[list[Fraction]]) -> list[list[Fraction]]:
    seen = set()
    out = []
    for r in rows:
        scale = next((abs(x) for x in r if x != 0), None)
        key = tuple(x / scale for x in r) if scale else tuple(r)
        if key not in seen:
            seen.add(key)
            out.append(r)
    return out


@dataclass(frozen=True)
class OrbitLattice:
    cone_id: int
    perp_basis: tuple[tuple[int, ...], ...]
    quotient_rank: int
    quotient_proj: tuple[tuple[int, ...], ...]

    def project(self, x: Sequence[int]) -> tuple[int, ...]:
        return tuple(sum(u * v for u, v in zip(row, x)) for row in self.quotient_proj)

    def to_json(self) -> dict:
        return {"cone": self.cone_id, "quotient_rank": self.quotient_rank,
                "perp_basis": [list(r) for r in self.perp_basis],
                "quotient_proj": [list(r) for r in self.quotient_proj]}


def orbit_lattice(fan: Fan, k: int) -> OrbitLattice:
    g = fan.geometry(k)
    basis = [list(r) for r in g.perp_basis]
    rank = len(basis)
    if rank != fan.rank - g.span_dim:
        raise AssertionError("perp lattice rank disagrees with d - dim span")
    if rank:
        inv = intlin.smith_invariants(basis)
        if any(x != 1 for x in inv):
            raise AssertionError(f"quotient N/N_{k} is not torsion-free: {inv}")
    return OrbitLattice(k, g.perp_basis, rank, g.perp_basis)


NO_IMAGE = None


def relint_image_cone(fan: Fan, phi: Sequence[Sequence[int]], j: int) -> int | None:
    """Cone k with phi(relint sigma_j) ⊆ relint sigma_k, or None (NoImage).

    phi acts on N by x -> phi x.  The image of the ray sum (a relative-interior
    point) locates the candidate, and every ray image must lie in that cone.
    """
    phi = intlin.as_matrix(phi)
    if intlin.det(phi) == 0:
        raise SingularMapError("relint_image_cone needs a nonsingular map")
    cone = fan.cone(j)
    images = [intlin.matvec(phi, r) for r in cone.rays]
    point = [sum(col) for col in zip(*images)] if images else [0] * fan.rank
    for c in fan.cones:
        g = fan.geometry(c.id)
        if g.in_relint(point):
            if all(g.contains(x) for x in images):
                return c.id
            return NO_IMAGE
    return NO_IMAGE


# -- standard fans ---------------------------------------------------------

def projective_space_fan(d: int) -> Fan:
    """Fan of P^d: cones on all proper subsets of {e_0, e_1, ..., e_d}, e_0 = -sum e_i.

    Cones are listed by size, then lexicographically in the ray indices 0..d.
    """
    e = [tuple(-1 for _ in range(d))] + [tuple(int(i == j) for j in range(d)) for i in range(d)]
    cones = []
    for size in range(d + 1):
        for sub in combinations(range(d + 1), size):
            cones.append([e[i] for i in sub])
    return make_fan(d, cones)


def torus_fan(d: int) -> Fan:
    return make_fan(d, [[]])


def affine_space_fan(d: int) -> Fan:
    e = [tuple(int(i == j) for j in range(d)) for i in range(d)]
    cones = []
    for size in range(d + 1):
        for sub in combinations(range(d), size):
            cones.append([e[i] for i in sub])
    return make_fan(d, cones)
