"""Fan-compatible lattice maps, the primitive symmetry group and S = N x G.

Convention: a ``LatticeMap`` matrix A acts on N = Z^d by x -> A x.  It is
compatible with the fan when every cone is carried into the relative interior
of a cone and the induced map on cones is a bijection.  The transpose A^T
acts on M and on the orbit data; ``cone_perm[j] = k`` means A(relint s_j) ⊆ relint s_k.

For a compatible A, ``induced_quotient_map(fan, A, j)`` is the integer matrix
T_j : N/N_j -> N/N_{perm(j)} (in the quotient coordinates of lattice_fan).
"""

from __future__ import annotations

from dataclasses import dataclass
from itertools import combinations, permutations
from typing import Sequence

from . import intlin
from .intlin import Matrix
from .lattice_fan import Fan, SingularMapError, orbit_lattice, relint_image_cone


@dataclass(frozen=True)
class LatticeMap:
    matrix: tuple[tuple[int, ...], ...]
    det: int

    @classmethod
    def of(cls, rows: Sequence[Sequence[int]]) -> "LatticeMap":
        m = intlin.as_matrix(rows)
        d = intlin.det(m)
        if d == 0:
            raise SingularMapError(f"singular lattice map {m}")
        return cls(tuple(tuple(r) for r in m), d)

    @property
    def dim(self) -> int:
        return len(self.matrix)

    def rows(self) -> Matrix:
        return [list(r) for r in self.matrix]

    def compose(self, other: "LatticeMap") -> "LatticeMap":
        """self ∘ other (apply ``other`` first)."""
        return LatticeMap.of(intlin.matmul(self.rows(), other.rows()))

    def scaled(self, n: int) -> "LatticeMap":
        return LatticeMap.of([[n * x for x in r] for r in self.matrix])

    def apply(self, x: Sequence[int]) -> list[int]:
        return intlin.matvec(self.matrix, x)

    def to_json(self) -> list[list[int]]:
        return self.rows()


@dataclass(frozen=True)
class Compatibility:
    ok: bool
    cone_perm: dict[int, int] | None
    failed_cone: int | None


def is_compatible(phi: LatticeMap | Sequence[Sequence[int]], fan: Fan) -> Compatibility:
    """Decide compatibility exactly; returns the cone permutation or an offending cone."""
    if not isinstance(phi, LatticeMap):
        phi = LatticeMap.of(phi)
    perm: dict[int, int] = {}
    for c in fan.cones:
        k = relint_image_cone(fan, phi.matrix, c.id)
        if k is None:
            return Compatibility(False, None, c.id)
        perm[c.id] = k
    seen: dict[int, int] = {}
    for j, k in perm.items():
        if k in seen:
            return Compatibility(False, None, j)
        seen[k] = j
    return Compatibility(True, perm, None)


def decompose_primitive(phi: LatticeMap | Sequence[Sequence[int]]) -> tuple[int, LatticeMap]:
    """phi = n * phi0 with n the gcd of all entries."""
    if not isinstance(phi, LatticeMap):
        phi = LatticeMap.of(phi)
    n = intlin.content(intlin.flatten(phi.matrix))
    return n, LatticeMap.of([[x // n for x in r] for r in phi.matrix])


def induced_quotient_map(fan: Fan, phi: LatticeMap, j: int, k: int | None = None) -> Matrix:
    """Integer matrix of N/N_j -> N/N_k induced by phi, k the image cone of j."""
    if k is None:
        k = relint_image_cone(fan, phi.matrix, j)
        if k is None:
            raise ValueError(f"cone {j} has no image cone under {phi.rows()}")
    src = orbit_lattice(fan, j)
    dst = orbit_lattice(fan, k)
    if src.quotient_rank == 0 or dst.quotient_rank == 0:
        return [[0] * src.quotient_rank for _ in range(dst.quotient_rank)]
    lift = intlin.right_inverse([list(r) for r in src.quotient_proj])
    return intlin.matmul(intlin.matmul([list(r) for r in dst.quotient_proj], phi.rows()), lift)


@dataclass
class SymmetryData:
    G: list[LatticeMap]
    cone_perms: list[dict[int, int]]
    is_unimodular: bool
    splits: bool
    fallback: bool
    diagnostics: list[str]

    @property
    def order(self) -> int:
        return len(self.G)

    def to_json(self) -> dict:
        return {
            "order": self.order,
            "G": [g.to_json() for g in self.G],
            "cone_perms": [[p[k] for k in sorted(p)] for p in self.cone_perms],
            "is_unimodular": self.is_unimodular,
            "splits": self.splits,
            "fallback": self.fallback,
            "diagnostics": self.diagnostics,
        }

    def stabilizer(self, k: int) -> list[LatticeMap]:
        return [g for g, p in zip(self.G, self.cone_perms) if p[k] == k]

    def perm_of(self, g: LatticeMap) -> dict[int, int]:
        for h, p in zip(self.G, self.cone_perms):
            if h == g:
                return p
        raise KeyError("map not in G")


def _scaled_candidate(basis_idx: Sequence[int], target_idx: Sequence[int],
                      rays: list[tuple[int, ...]]) -> Matrix | None:
    """Primitive integer A with A r_b ∝ r_t (common positive factor), or None."""
    d = len(basis_idx)
    b = intlin.transpose([list(rays[i]) for i in basis_idx])      # columns = source rays
    t = intlin.transpose([list(rays[i]) for i in target_idx])
    # A b = t  <=>  b^T A^T = t^T
    sol = intlin.solve_rational(intlin.transpose(b), intlin.transpose(t))
    if sol is None:
        return None
    a = intlin.transpose(sol)
    flat = intlin.primitive_integer(intlin.flatten(a))
    if not any(flat):
        return None
    return [flat[i * d:(i + 1) * d] for i in range(d)]


def _ray_permutation(a: Matrix, rays: list[tuple[int, ...]]) -> list[int] | None:
    """Index map i -> j with A r_i a positive multiple of r_j (uniform factor), else None."""
    ray_index = {r: i for i, r in enumerate(rays)}
    out = []
    factor = None
    for r in rays:
        img = intlin.matvec(a, r)
        g = intlin.content(img)
        if g == 0:
            return None
        prim = tuple(x // g for x in img)
        if prim not in ray_index:
            return None
        if factor is None:
            factor = g
        elif g != factor:
            return None
        out.append(ray_index[prim])
    return out if len(set(out)) == len(out) else None


def _family_dimension(rays: list[tuple[int, ...]], perm: list[int]) -> int:
    """dim of {A : A r_i ∈ span(r_perm(i)) for all i}; 1 means unique up to scale."""
    d = len(rays[0])
    eqs = []
    for i, r in enumerate(rays):
        target = rays[perm[i]]
        # A r ∧ target = 0: (A r)_p t_q - (A r)_q t_p = 0; A r = sum_s A[p][s] r_s
        for p, q in combinations(range(d), 2):
            row = [0] * (d * d)
            for s in range(d):
                row[p * d + s] += r[s] * target[q]
                row[q * d + s] -= r[s] * target[p]
            eqs.append(row)
    return d * d - intlin.rational_rank(eqs) if eqs else d * d


def enumerate_G(fan: Fan) -> SymmetryData:
    """The primitive compatible maps, canonically sorted."""
    d = fan.rank
    rays = sorted(set(fan.rays()))
    ident = LatticeMap.of(intlin.identity(d))
    if d == 0 or not rays or intlin.rational_rank([list(r) for r in rays]) < d:
        perm = {c.id: c.id for c in fan.cones}
        return SymmetryData([ident], [perm], True, False, True,
                            ["rays do not span N_R; using the {nI} sub-semigroup with G = {I}"])
    basis: list[int] = []
    for i, r in enumerate(rays):
        if intlin.rational_rank([list(rays[j]) for j in basis] + [list(r)]) > len(basis):
            basis.append(i)
        if len(basis) == d:
            break
    found: dict[tuple, dict[int, int]] = {}
    diagnostics: list[str] = []
    families = False
    for target in permutations(range(len(rays)), d):
        a = _scaled_candidate(basis, target, rays)
        if a is None or intlin.det(a) == 0:
            continue
        key = tuple(tuple(r) for r in a)
        if key in found:
            continue
        rperm = _ray_permutation(a, rays)
        if rperm is None:
            continue
        comp = is_compatible(a, fan)
        if not comp.ok:
            continue
        found[key] = comp.cone_perm
        if _family_dimension(rays, rperm) > 1:
            families = True
    G = sorted(found, key=lambda m: (m != tuple(tuple(r) for r in intlin.identity(d)), m))
    maps = [LatticeMap.of(m) for m in G]
    perms = [found[m] for m in G]
    unimodular = all(abs(g.det) == 1 for g in maps) and not families
    if families:
        diagnostics.append("compatible maps with independent ray scalings exist; "
                           "primitive elements of non-unit determinant present")
    if not unimodular and not families:
        diagnostics.append("a primitive compatible map has |det| != 1")
    if not unimodular:
        diagnostics.append("S = N x G decomposition disabled")
    return SymmetryData(maps, perms, unimodular, unimodular, False, diagnostics)


def compose_perm(p: dict[int, int], q: dict[int, int]) -> dict[int, int]:
    """Permutation of the composite map (apply q's map first, then p's)."""
    return {j: p[q[j]] for j in q}
