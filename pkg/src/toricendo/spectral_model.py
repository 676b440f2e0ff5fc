"""Energy laws h_k on the orbit quotients N/N_k ≅ Z^{d_k} and the scaling g.

Two law kinds:

* ``norm_power``: h_k(xi) = (xi^T Q_k xi)^{c/2} with Q_k rational, symmetric,
  positive definite.
* ``orbit_table``: h_k(n xi*) = n^c base_k(xi*) for primitive xi*, where the
  base comes from an explicit table of values, a Gram form (xi*^T Q xi*)^{c/2}
  or a sup-form (max_i |(E xi*)_i|)^c.

Cones with no explicit entry receive a law transported from the first cone of
their symmetry orbit that has one (h_{perm(a)}(T xi) = h_a(xi)), else the
``default`` entry.  Rank-0 cones carry no energy.

Every cone energy knows a constant kappa with h(xi) >= kappa * |xi|_inf^c,
which the partition tail bounds use.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from fractions import Fraction
from pathlib import Path
from typing import Sequence

import numpy as np

from . import intlin
from .fan_symmetry import LatticeMap, SymmetryData, decompose_primitive, enumerate_G, induced_quotient_map
from .lattice_fan import Fan
from .lattice_shells import iter_box


class LawFormatError(ValueError):
    """Malformed energy-law input."""


class TableRangeError(LookupError):
    """An orbit-table law was queried outside its stored radius."""


def _frac_matrix(rows, where: str) -> list[list[Fraction]]:
    try:
        return [[Fraction(x) for x in r] for r in rows]
    except (TypeError, ValueError, ZeroDivisionError) as exc:
        raise LawFormatError(f"{where}: entries must be rationals ({exc})") from exc


def _sup_norm(x: Sequence[int]) -> int:
    return max((abs(v) for v in x), default=0)


def _split_primitive(xi: Sequence[int]) -> tuple[int, tuple[int, ...]]:
    n = intlin.content(xi)
    if n == 0:
        raise ValueError("the zero vector carries no energy")
    return n, tuple(v // n for v in xi)


class ConeEnergy:
    """h on one quotient lattice Z^{d}."""
    d: int
    c: float

    def h(self, xi: Sequence[int]) -> float:
        raise NotImplementedError

    def h_array(self, xs: np.ndarray) -> np.ndarray:
        return np.array([self.h(tuple(int(v) for v in x)) for x in xs], dtype=float)

    def weights(self, xs: np.ndarray, beta: float) -> np.ndarray:
        """h(xi)^(-beta) for each row."""
        return np.power(self.h_array(xs), -beta)

    @property
    def kappa(self) -> float:
        raise NotImplementedError

    @property
    def max_radius(self) -> int | None:
        return None

    def transported(self, t: Sequence[Sequence[int]]) -> "ConeEnergy":
        """The energy eta -> h(T^{-1} eta) on the target lattice of unimodular T."""
        raise NotImplementedError

    def to_json(self) -> dict:
        raise NotImplementedError


@dataclass
class GramEnergy(ConeEnergy):
    gram: list[list[Fraction]]
    c: float

    def __post_init__(self):
        self.d = len(self.gram)
        q = self.gram
        if any(q[i][j] != q[j][i] for i in range(self.d) for j in range(self.d)):
            raise LawFormatError("Gram matrix is not symmetric")
        # Sylvester: leading principal minors positive, computed exactly
        for k in range(1, self.d + 1):
            if _frac_det([row[:k] for row in q[:k]]) <= 0:
                raise LawFormatError("Gram matrix is not positive definite")
        self._qf = np.array([[float(x) for x in r] for r in q], dtype=float)

    def quad(self, xi: Sequence[int]) -> Fraction:
        return sum((self.gram[i][j] * xi[i] * xi[j] for i in range(self.d) for j in range(self.d)),
                   Fraction(0))

    def h(self, xi):
        if not any(xi):
            raise ValueError("the zero vector carries no energy")
        return float(self.quad(xi)) ** (self.c / 2)

    def h_array(self, xs):
        x = xs.astype(float)
        q = np.einsum("ni,ij,nj->n", x, self._qf, x)
        return np.power(q, self.c / 2)

    def weights(self, xs, beta):
        x = xs.astype(float)
        q = np.einsum("ni,ij,nj->n", x, self._qf, x)
        return np.power(q, -beta * self.c / 2)

    @property
    def kappa(self):
        lam = float(np.linalg.eigvalsh(self._qf).min())
        return (lam * (1 - 1e-12)) ** (self.c / 2)

    def transported(self, t):
        inv = intlin.inverse_rational(t)
        q = intlin.matmul(intlin.matmul(intlin.transpose(inv), self.gram), inv)
        return GramEnergy(q, self.c)

    def to_json(self):
        return {"gram": [[str(x) for x in r] for r in self.gram]}


def _frac_det(a: list[list[Fraction]]) -> Fraction:
    n = len(a)
    m = [list(r) for r in a]
    out = Fraction(1)
    for k in range(n):
        piv = next((i for i in range(k, n) if m[i][k] != 0), None)
        if piv is None:
            return Fraction(0)
        if piv != k:
            m[k], m[piv] = m[piv], m[k]
            out = -out
        out *= m[k][k]
        for i in range(k + 1, n):
            f = m[i][k] / m[k][k]
            m[i] = [x - f * y for x, y in zip(m[i], m[k])]
    return out


@dataclass
class SupEnergy(ConeEnergy):
    """h(xi) = (max_i |(E xi)_i|)^c for E of full column rank."""
    emat: list[list[Fraction]]
    c: float

    def __post_init__(self):
        self.d = len(self.emat[0]) if self.emat else 0
        if intlin.rational_rank(self.emat) != self.d:
            raise LawFormatError("sup-form matrix must have full column rank")
        self._ef = np.array([[float(x) for x in r] for r in self.emat], dtype=float)

    def h(self, xi):
        if not any(xi):
            raise ValueError("the zero vector carries no energy")
        return float(max(abs(sum(e * v for e, v in zip(row, xi))) for row in self.emat)) ** self.c

    def h_array(self, xs):
        return np.power(np.abs(xs.astype(float) @ self._ef.T).max(axis=1), self.c)

    @property
    def kappa(self):
        # a left inverse L of E gives |xi|_inf <= |L|_inf |E xi|_inf
        et = intlin.transpose(self.emat)
        gram = intlin.matmul(et, self.emat)
        left = intlin.matmul(intlin.inverse_rational(gram), et)
        norm = max(sum(abs(x) for x in row) for row in left)
        return (1 / float(norm) * (1 - 1e-12)) ** self.c

    def transported(self, t):
        inv = intlin.inverse_rational(t)
        return SupEnergy(intlin.matmul(self.emat, inv), self.c)

    def to_json(self):
        return {"sup": [[str(x) for x in r] for r in self.emat]}


@dataclass
class TableEnergy(ConeEnergy):
    """Base values on primitive vectors up to ``radius``; h(n xi*) = n^c base(xi*)."""
    entries: dict[tuple[int, ...], float]
    radius: int
    c: float
    d: int
    lower_bound: float | None = None

    def base(self, prim: tuple[int, ...]) -> float:
        if _sup_norm(prim) > self.radius:
            raise TableRangeError(f"primitive vector {prim} lies beyond the stored radius {self.radius}")
        try:
            return self.entries[prim]
        except KeyError:
            raise TableRangeError(f"no base value stored for {prim}") from None

    def h(self, xi):
        n, prim = _split_primitive(xi)
        return n ** self.c * self.base(prim)

    @property
    def kappa(self):
        return self.lower_bound if self.lower_bound is not None else 0.0

    @property
    def max_radius(self):
        return self.radius

    def transported(self, t):
        inv = intlin.inverse_rational(t)
        inv_norm = max(sum(abs(x) for x in row) for row in inv)
        radius = int(self.radius // inv_norm)
        out = {}
        for prim, v in self.entries.items():
            img = tuple(intlin.matvec(t, prim))
            if _sup_norm(img) <= radius:
                out[img] = v
        lb = None
        if self.lower_bound is not None:
            lb = self.lower_bound / float(inv_norm) ** self.c
        return TableEnergy(out, radius, self.c, self.d, lb)

    def to_json(self):
        body = {"table": {"radius": self.radius,
                          "entries": [[list(k), v] for k, v in sorted(self.entries.items())]}}
        if self.lower_bound is not None:
            body["table"]["lower_bound"] = self.lower_bound
        return body


@dataclass
class EnergyLaw:
    """Unbound law description: per-cone specs keyed by cone id plus a default."""
    c: float
    kind: str
    cones: dict[int, dict] = field(default_factory=dict)
    default: dict | None = None

    def __post_init__(self):
        if self.kind not in ("norm_power", "orbit_table"):
            raise LawFormatError(f"unknown law kind {self.kind!r}")
        if not (isinstance(self.c, (int, float)) and self.c > 0):
            raise LawFormatError("scaling exponent c must be a positive number")
        self.c = float(self.c)

    @classmethod
    def from_json(cls, data: dict) -> "EnergyLaw":
        if not isinstance(data, dict) or "c" not in data or "kind" not in data:
            raise LawFormatError("law JSON needs 'c' and 'kind'")
        try:
            c = float(Fraction(str(data["c"])))
            cones = {int(k): v for k, v in data.get("cones", {}).items()}
        except (ValueError, TypeError) as exc:
            raise LawFormatError(f"bad law JSON: {exc}") from exc
        return cls(c, data["kind"], cones, data.get("default"))

    def to_json(self) -> dict:
        out = {"c": self.c, "kind": self.kind, "cones": {str(k): v for k, v in sorted(self.cones.items())}}
        if self.default is not None:
            out["default"] = self.default
        return out


def load_law(path: str | Path) -> EnergyLaw:
    try:
        return EnergyLaw.from_json(json.loads(Path(path).read_text()))
    except json.JSONDecodeError as exc:
        raise LawFormatError(f"{path}: invalid JSON ({exc})") from exc


def _make_energy(spec: dict, kind: str, c: float, d: int) -> ConeEnergy:
    if not isinstance(spec, dict):
        raise LawFormatError(f"cone law spec must be an object, got {spec!r}")
    if "gram" in spec:
        g = spec["gram"]
        q = [[Fraction(int(i == j)) for j in range(d)] for i in range(d)] if g == "identity" \
            else _frac_matrix(g, "gram")
        if len(q) != d or any(len(r) != d for r in q):
            raise LawFormatError(f"gram must be {d}x{d}")
        return GramEnergy(q, c)
    if kind == "norm_power":
        raise LawFormatError("norm_power cone specs take only 'gram'")
    if "sup" in spec:
        e = spec["sup"]
        e = [[Fraction(int(i == j)) for j in range(d)] for i in range(d)] if e == "identity" \
            else _frac_matrix(e, "sup")
        if any(len(r) != d for r in e):
            raise LawFormatError(f"sup-form rows must have length {d}")
        return SupEnergy(e, c)
    if "table" in spec:
        t = spec["table"]
        try:
            radius = int(t["radius"])
            entries = {}
            for vec, val in t["entries"]:
                vec = tuple(int(x) for x in vec)
                if len(vec) != d:
                    raise LawFormatError(f"table vector {vec} must have length {d}")
                if intlin.content(vec) != 1:
                    raise LawFormatError(f"table vector {vec} is not primitive")
                if not float(val) > 0:
                    raise LawFormatError(f"table value at {vec} must be positive")
                entries[vec] = float(val)
            lb = t.get("lower_bound")
        except (KeyError, TypeError, ValueError) as exc:
            raise LawFormatError(f"bad table spec: {exc}") from exc
        return TableEnergy(entries, radius, c, d, None if lb is None else float(lb))
    raise LawFormatError(f"cone spec needs one of gram/sup/table: {spec!r}")


@dataclass
class ScalingHom:
    c: float

    def __call__(self, phi: LatticeMap) -> float:
        n, _ = decompose_primitive(phi)
        return float(n) ** self.c


@dataclass
class BoundLaw:
    """A law resolved against a fan: one ConeEnergy per cone with d_k >= 1."""
    law: EnergyLaw
    fan: Fan
    sym: SymmetryData
    energies: dict[int, ConeEnergy]
    ranks: dict[int, int]
    provenance: dict[int, str]

    @property
    def c(self) -> float:
        return self.law.c

    @property
    def m(self) -> int:
        return self.fan.m

    @property
    def m_prime(self) -> int:
        return sum(1 for r in self.ranks.values() if r >= 1)

    def h_value(self, k: int, xi: Sequence[int]) -> float:
        if self.ranks[k] == 0:
            raise ValueError(f"cone {k} has a rank-0 quotient and no energy")
        if not any(xi):
            raise ValueError("the zero vector carries no energy")
        return self.energies[k].h(tuple(xi))


def cone_orbits(fan: Fan, sym: SymmetryData) -> list[list[int]]:
    """G-orbits of cone ids, each sorted, listed by smallest member."""
    seen: set[int] = set()
    out = []
    for c in fan.cones:
        if c.id in seen:
            continue
        orb = sorted({p[c.id] for p in sym.cone_perms} | {c.id})
        seen.update(orb)
        out.append(orb)
    return out


def _carrier(sym: SymmetryData, a: int, j: int) -> LatticeMap | None:
    """The first element of G (in canonical order) moving cone a to cone j."""
    for g, p in zip(sym.G, sym.cone_perms):
        if p[a] == j:
            return g
    return None


def bind_law(law: EnergyLaw, fan: Fan, sym: SymmetryData | None = None) -> BoundLaw:
    sym = sym if sym is not None else enumerate_G(fan)
    ranks = fan.quotient_ranks()
    energies: dict[int, ConeEnergy] = {}
    prov: dict[int, str] = {}
    explicit = {k: _make_energy(spec, law.kind, law.c, ranks[k])
                for k, spec in law.cones.items() if k in ranks and ranks[k] >= 1}
    unknown = sorted(set(law.cones) - set(ranks))
    if unknown:
        raise LawFormatError(f"law names cones not in the fan: {unknown}")
    for orbit in cone_orbits(fan, sym):
        anchor = next((k for k in orbit if k in explicit), None)
        for j in orbit:
            if ranks[j] == 0:
                continue
            if j in explicit:
                energies[j], prov[j] = explicit[j], "explicit"
            elif anchor is not None:
                g = _carrier(sym, anchor, j)
                t = induced_quotient_map(fan, g, anchor, j)
                energies[j] = explicit[anchor].transported(t)
                prov[j] = f"transported from cone {anchor}"
            elif law.default is not None:
                energies[j], prov[j] = _make_energy(law.default, law.kind, law.c, ranks[j]), "default"
            else:
                raise LawFormatError(f"no energy given for cone {j} (rank {ranks[j]})")
    return BoundLaw(law, fan, sym, energies, ranks, prov)


def symmetric_norm_law(fan: Fan, sym: SymmetryData | None = None, c: float = 1.0,
                       kind: str = "orbit_table") -> EnergyLaw:
    """A G-invariant Gram law: on each orbit anchor Q = mean over the stabilizer of T^T T.

    Other cones of the orbit are left to transport, so the result is covariant by construction.
    """
    sym = sym if sym is not None else enumerate_G(fan)
    ranks = fan.quotient_ranks()
    cones = {}
    for orbit in cone_orbits(fan, sym):
        a = orbit[0]
        if ranks[a] == 0:
            continue
        stab = [g for g, p in zip(sym.G, sym.cone_perms) if p[a] == a]
        q = [[Fraction(0)] * ranks[a] for _ in range(ranks[a])]
        for g in stab:
            t = induced_quotient_map(fan, g, a, a)
            tt = intlin.matmul(intlin.transpose(t), t)
            q = [[x + y for x, y in zip(r1, r2)] for r1, r2 in zip(q, tt)]
        q = [[x / len(stab) for x in r] for r in q]
        cones[a] = {"gram": [[str(x) for x in r] for r in q]}
    return EnergyLaw(c, kind, cones)


def quotient_action(fan: Fan, g: LatticeMap, k: int, perm: dict[int, int]) -> list[list[int]]:
    return induced_quotient_map(fan, g, k, perm[k])


def primitive_reps(d: int, group: Sequence[Sequence[Sequence[int]]], radius: int
                   ) -> list[tuple[tuple[int, ...], list[tuple[int, ...]]]]:
    """Primitive vectors of Z^d in the sup-ball, grouped into orbits of ``group``.

    ``group`` lists integer d x d matrices (acting by x -> T x).  Each orbit is
    represented by its lexicographically largest in-ball member.  Orbits are
    listed by representative, descending.
    """
    if d == 0:
        return []
    gens = [intlin.as_matrix(t) for t in group]
    members: dict[tuple[int, ...], tuple[int, ...]] = {}
    orbits: list[list[tuple[int, ...]]] = []
    for x in iter_box(d, radius):
        if intlin.content(x) != 1 or x in members:
            continue
        orbit = {x}
        frontier = [x]
        while frontier:
            y = frontier.pop()
            for t in gens:
                z = tuple(intlin.matvec(t, y))
                if z not in orbit:
                    orbit.add(z)
                    frontier.append(z)
        inside = sorted((z for z in orbit if _sup_norm(z) <= radius), reverse=True)
        for z in inside:
            members[z] = inside[0]
        orbits.append(inside)
    orbits.sort(key=lambda o: o[0], reverse=True)
    return [(o[0], o) for o in orbits]


def stabilizer_action(fan: Fan, sym: SymmetryData, k: int) -> list[list[list[int]]]:
    return [induced_quotient_map(fan, g, k, k) for g, p in zip(sym.G, sym.cone_perms) if p[k] == k]


@dataclass
class Conflict:
    cone: int
    image_cone: int
    map: list[list[int]]
    xi: list[int]
    expected: float
    found: float

    def to_json(self) -> dict:
        return {"cone": self.cone, "image_cone": self.image_cone, "map": self.map,
                "xi": self.xi, "expected": self.expected, "found": self.found}


@dataclass
class TransportReport:
    consistent: bool
    conflicts: list[Conflict]
    checked: int

    def to_json(self) -> dict:
        return {"consistent": self.consistent, "checked": self.checked,
                "conflicts": [c.to_json() for c in self.conflicts[:20]]}


def transport_h(bound: BoundLaw, radius: int = 5, rel_tol: float = 1e-12) -> TransportReport:
    """Check h_{perm(j)}(T_j xi) = h_j(xi) for every g in G, cone j and primitive |xi| <= radius.

    Gram laws are compared exactly (T^T Q' T == Q); other kinds pointwise.
    Vectors whose image leaves a table's stored radius are skipped.
    """
    fan, sym = bound.fan, bound.sym
    conflicts: list[Conflict] = []
    checked = 0
    for g, perm in zip(sym.G, sym.cone_perms):
        for j, e in bound.energies.items():
            k = perm[j]
            t = induced_quotient_map(fan, g, j, k)
            target = bound.energies[k]
            if isinstance(e, GramEnergy) and isinstance(target, GramEnergy):
                pulled = intlin.matmul(intlin.matmul(intlin.transpose(t), target.gram), t)
                checked += 1
                if pulled != e.gram:
                    xi = _witness_vector(e.gram, pulled)
                    conflicts.append(Conflict(j, k, g.rows(), list(xi), e.h(xi), target.h(tuple(intlin.matvec(t, xi)))))
                continue
            for xi in iter_box(e.d, radius):
                if intlin.content(xi) != 1:
                    continue
                img = tuple(intlin.matvec(t, xi))
                try:
                    lhs, rhs = target.h(img), e.h(xi)
                except TableRangeError:
                    continue
                checked += 1
                if abs(lhs - rhs) > rel_tol * max(abs(lhs), abs(rhs)):
                    conflicts.append(Conflict(j, k, g.rows(), list(xi), rhs, lhs))
    return TransportReport(not conflicts, conflicts, checked)


def _witness_vector(q1, q2) -> tuple[int, ...]:
    d = len(q1)
    for xi in iter_box(d, 2):
        a = sum(q1[i][j] * xi[i] * xi[j] for i in range(d) for j in range(d))
        b = sum(q2[i][j] * xi[i] * xi[j] for i in range(d) for j in range(d))
        if a != b:
            return xi
    return tuple([1] + [0] * (d - 1))


@dataclass
class CovarianceResult:
    ok: bool
    checked: int
    counterexample: dict | None

    def to_json(self) -> dict:
        return {"ok": self.ok, "checked": self.checked, "counterexample": self.counterexample}


def check_covariance_law(bound: BoundLaw, g: ScalingHom, samples: int = 1000, seed: int = 0,
                         max_n: int = 5, radius: int = 6, rel_tol: float = 1e-12) -> CovarianceResult:
    """Sampled check of h_{perm(k)}(T xi) = n^c h_k(xi) for phi = n phi0, phi0 in G."""
    sym = bound.sym
    if not (sym.splits or sym.fallback):
        raise ValueError("covariance law needs S = N x G (symmetry data does not split)")
    rng = np.random.default_rng(seed)
    cones = sorted(bound.energies)
    if not cones:
        return CovarianceResult(True, 0, None)
    for i in range(samples):
        n = int(rng.integers(1, max_n + 1))
        gi = int(rng.integers(0, len(sym.G)))
        g0, perm = sym.G[gi], sym.cone_perms[gi]
        phi = g0.scaled(n)
        k = cones[int(rng.integers(0, len(cones)))]
        e = bound.energies[k]
        xi = tuple(int(v) for v in rng.integers(-radius, radius + 1, size=e.d))
        if not any(xi):
            xi = (1,) + xi[1:]
        t = induced_quotient_map(bound.fan, phi, k, perm[k])
        img = tuple(intlin.matvec(t, xi))
        try:
            lhs = bound.energies[perm[k]].h(img)
            rhs = g(phi) * e.h(xi)
        except TableRangeError:
            continue
        if abs(lhs - rhs) > rel_tol * max(abs(lhs), abs(rhs)):
            return CovarianceResult(False, i + 1, {"phi": phi.rows(), "cone": k, "xi": list(xi),
                                                   "lhs": lhs, "rhs": rhs})
    return CovarianceResult(True, samples, None)
