"""Integral group algebras Z[(Z/n)^rho], Frobenius lifts and finite level sets.

Elements are sparse maps from group elements (tuples mod n) to Python ints, so
coefficients never overflow.  A batched numpy path handles the exhaustive
sweeps; it refuses inputs whose coefficients could exceed int64.
"""

from __future__ import annotations

import cmath
import math
from dataclasses import dataclass
from fractions import Fraction
from itertools import combinations, islice, product
from typing import Iterable, Iterator, Mapping, Sequence

import numpy as np

from .lattice_fan import Fan


@dataclass(frozen=True)
class IntGroupAlgebra:
    n: int
    rho: int
    terms: tuple[tuple[tuple[int, ...], int], ...]

    @classmethod
    def of(cls, n: int, rho: int, terms: Mapping[Sequence[int], int] | Iterable) -> "IntGroupAlgebra":
        if n < 1 or rho < 0:
            raise ValueError("need n >= 1 and rho >= 0")
        items = terms.items() if isinstance(terms, Mapping) else terms
        acc: dict[tuple[int, ...], int] = {}
        for g, c in items:
            g = tuple(int(x) % n for x in g)
            if len(g) != rho:
                raise ValueError(f"group element {g} must have length {rho}")
            acc[g] = acc.get(g, 0) + int(c)
        return cls(n, rho, tuple(sorted((g, c) for g, c in acc.items() if c)))

    @classmethod
    def basis(cls, n: int, rho: int, g: Sequence[int]) -> "IntGroupAlgebra":
        return cls.of(n, rho, {tuple(g): 1})

    @classmethod
    def one(cls, n: int, rho: int) -> "IntGroupAlgebra":
        return cls.basis(n, rho, (0,) * rho)

    @property
    def order(self) -> int:
        return self.n ** self.rho

    def as_dict(self) -> dict[tuple[int, ...], int]:
        return dict(self.terms)

    def __add__(self, other: "IntGroupAlgebra") -> "IntGroupAlgebra":
        self._same_group(other)
        acc = self.as_dict()
        for g, c in other.terms:
            acc[g] = acc.get(g, 0) + c
        return IntGroupAlgebra.of(self.n, self.rho, acc)

    def __sub__(self, other: "IntGroupAlgebra") -> "IntGroupAlgebra":
        return self + other.scale(-1)

    def scale(self, k: int) -> "IntGroupAlgebra":
        return IntGroupAlgebra.of(self.n, self.rho, {g: k * c for g, c in self.terms})

    def __mul__(self, other: "IntGroupAlgebra") -> "IntGroupAlgebra":
        self._same_group(other)
        acc: dict[tuple[int, ...], int] = {}
        n = self.n
        for g, a in self.terms:
            for h, b in other.terms:
                k = tuple((x + y) % n for x, y in zip(g, h))
                acc[k] = acc.get(k, 0) + a * b
        return IntGroupAlgebra.of(n, self.rho, acc)

    def __pow__(self, p: int) -> "IntGroupAlgebra":
        if p < 0:
            raise ValueError("negative powers are not defined")
        result = IntGroupAlgebra.one(self.n, self.rho)
        base = self
        while p:
            if p & 1:
                result = result * base
            base = base * base
            p >>= 1
        return result

    def is_zero(self) -> bool:
        return not self.terms

    def _same_group(self, other: "IntGroupAlgebra") -> None:
        if (self.n, self.rho) != (other.n, other.rho):
            raise ValueError("elements live in different group algebras")

    def to_json(self) -> dict:
        return {"n": self.n, "rho": self.rho, "terms": [[list(g), c] for g, c in self.terms]}

    @classmethod
    def from_json(cls, data: dict) -> "IntGroupAlgebra":
        return cls.of(int(data["n"]), int(data["rho"]), [(tuple(g), c) for g, c in data["terms"]])


def frobenius_endo(p: int, a: IntGroupAlgebra) -> IntGroupAlgebra:
    """Linear extension of e_r -> e_{p r}."""
    return IntGroupAlgebra.of(a.n, a.rho, [(tuple(p * x for x in g), c) for g, c in a.terms])


def check_frobenius_lift(p: int, a: IntGroupAlgebra) -> bool:
    """a^p - frobenius_endo(p, a) has every coefficient divisible by p."""
    diff = a ** p - frobenius_endo(p, a)
    return all(c % p == 0 for _, c in diff.terms)


@dataclass
class FrobeniusSweep:
    n: int
    rho: int
    p: int
    coefficients: tuple[int, ...]
    checked: int
    witness: IntGroupAlgebra | None

    @property
    def ok(self) -> bool:
        return self.witness is None

    def to_json(self) -> dict:
        return {"n": self.n, "rho": self.rho, "p": self.p, "coefficients": list(self.coefficients),
                "checked": self.checked, "ok": self.ok,
                "witness": None if self.witness is None else self.witness.to_json()}


def _group_elements(n: int, rho: int) -> list[tuple[int, ...]]:
    return list(product(range(n), repeat=rho))


def _addition_table(n: int, rho: int) -> np.ndarray:
    elems = _group_elements(n, rho)
    index = {g: i for i, g in enumerate(elems)}
    return np.array([[index[tuple((x + y) % n for x, y in zip(g, h))] for h in elems] for g in elems],
                    dtype=np.int64)


def _batched_power(a: np.ndarray, p: int, table: np.ndarray) -> np.ndarray:
    """Rows of a (batch x |group|) raised to the p-th convolution power."""
    size = a.shape[1]

    def mul(x, y):
        out = np.zeros_like(x)
        for i in range(size):
            for j in range(size):
                out[:, table[i, j]] += x[:, i] * y[:, j]
        return out

    result = a
    for _ in range(p - 1):
        result = mul(result, a)
    return result


def _dense_rows(size: int, coeffs: np.ndarray, batch: int) -> Iterator[np.ndarray]:
    total = len(coeffs) ** size
    for start in range(0, total, batch):
        rest = np.arange(start, min(total, start + batch), dtype=np.int64)
        digits = np.empty((len(rest), size), dtype=np.int64)
        for pos in range(size):
            digits[:, pos] = rest % len(coeffs)
            rest //= len(coeffs)
        yield coeffs[digits]


def _sparse_rows(size: int, coeffs: np.ndarray, max_support: int, batch: int) -> Iterator[np.ndarray]:
    nonzero = coeffs[coeffs != 0]
    if (coeffs == 0).any():
        yield np.zeros((1, size), dtype=np.int64)
    for s in range(1, max_support + 1):
        values = np.array(list(product(nonzero, repeat=s)), dtype=np.int64).reshape(-1, s)
        per = max(1, batch // len(values))
        combos = combinations(range(size), s)
        while chunk := list(islice(combos, per)):
            idx = np.repeat(np.array(chunk, dtype=np.int64), len(values), axis=0)
            vals = np.tile(values, (len(chunk), 1))
            rows = np.zeros((len(idx), size), dtype=np.int64)
            np.put_along_axis(rows, idx, vals, axis=1)
            yield rows


def frobenius_sweep(n: int, rho: int, p: int, coefficients: Sequence[int] = (-2, -1, 0, 1, 2),
                    batch: int = 4096, max_support: int | None = None,
                    cap: int = 50_000_000) -> FrobeniusSweep:
    """Check the Frobenius lift on every element with coefficients in the given set.

    With ``max_support`` only elements with at most that many nonzero
    coefficients are enumerated (all of them).  Sweeps larger than ``cap``
    elements are refused.
    """
    size = n ** rho
    cmax = max(abs(c) for c in coefficients)
    support = size if max_support is None else min(size, max_support)
    nonzero = sum(1 for c in set(coefficients) if c != 0)
    count = (len(set(coefficients)) ** size if max_support is None
             else sum(math.comb(size, s) * nonzero ** s for s in range(support + 1)))
    if count > cap:
        raise ValueError(f"sweep would check {count} elements (cap {cap}); lower max_support")
    if float(support * cmax) ** p >= 2.0 ** 62:
        raise OverflowError("coefficients could exceed int64; use the exact path")
    elems = _group_elements(n, rho)
    index = {g: i for i, g in enumerate(elems)}
    table = _addition_table(n, rho)
    frob = np.array([index[tuple(p * x % n for x in g)] for g in elems], dtype=np.int64)
    coeffs = np.array(coefficients, dtype=np.int64)
    rows = (_dense_rows(size, coeffs, batch) if max_support is None
            else _sparse_rows(size, coeffs, max_support, batch))
    checked = 0
    for a in rows:
        power = _batched_power(a, p, table)
        image = np.zeros_like(a)
        for i in range(size):
            image[:, frob[i]] += a[:, i]
        bad = np.nonzero(((power - image) % p).any(axis=1))[0]
        if bad.size:
            row = a[bad[0]]
            witness = IntGroupAlgebra.of(n, rho, {elems[i]: int(row[i]) for i in range(size)})
            return FrobeniusSweep(n, rho, p, tuple(coefficients), checked + int(bad[0]) + 1, witness)
        checked += len(a)
    return FrobeniusSweep(n, rho, p, tuple(coefficients), checked, None)


def random_element(rng: np.random.Generator, n: int, rho: int, density: float = 0.5,
                   coeff_range: int = 10) -> IntGroupAlgebra:
    terms = {}
    for g in _group_elements(n, rho):
        if rng.random() < density:
            terms[g] = int(rng.integers(-coeff_range, coeff_range + 1))
    return IntGroupAlgebra.of(n, rho, terms)


# -- finite level sets ----------------------------------------------------------

def cyclotomic_level_count(fan: Fan, n: int) -> dict:
    """Points of level n: sum_k n^{d_k} (additive) and prod_k n^{d_k} (multiplicative)."""
    if n < 1:
        raise ValueError("level n must be positive")
    ranks = fan.quotient_ranks()
    return {"n": n, "additive": sum(n ** d for d in ranks.values()),
            "multiplicative": math.prod(n ** d for d in ranks.values()),
            "per_cone": {str(k): n ** d for k, d in sorted(ranks.items())}}


@dataclass
class TransitionReport:
    n: int
    t: int
    surjective: bool
    fiber_sizes_ok: bool
    characters_commute: bool
    maps_commute: bool
    checked_points: int
    counterexample: dict | None

    @property
    def ok(self) -> bool:
        return self.surjective and self.fiber_sizes_ok and self.characters_commute and self.maps_commute

    def to_json(self) -> dict:
        return {"n": self.n, "t": self.t, "ok": self.ok, "surjective": self.surjective,
                "fiber_sizes_ok": self.fiber_sizes_ok, "characters_commute": self.characters_commute,
                "maps_commute": self.maps_commute, "checked_points": self.checked_points,
                "counterexample": self.counterexample}


def transition_map_check(fan: Fan, n: int, t: int, maps: Sequence | None = None) -> TransitionReport:
    """Exhaustive check of the level transition X_{tn,k} -> X_{n,k}.

    Level-n points of cone k are Hom(Z^{d_k}, Z/n) ≅ (Z/n)^{d_k}, embedded in
    (Q/Z)^{d_k} as x/n.  The transition multiplies by t, i.e. x -> x mod n on
    numerators (x/(tn) times t).  Checked:

    * surjectivity, with every fiber of size t^{d_k};
    * e(r) characters: for integer xi, exp(2 pi i <xi, t y>) equals the
      character of the image, i.e. the pullback of characters of level n;
    * commutation with the induced quotient maps of the given lattice maps
      (default: the symmetry group and 2I), acting by transpose.
    """
    from .fan_symmetry import enumerate_G, induced_quotient_map, is_compatible, LatticeMap

    if n * t > 64:
        raise ValueError("exhaustive transition checks are limited to n*t <= 64")
    ranks = fan.quotient_ranks()
    if maps is None:
        sym = enumerate_G(fan)
        maps = list(sym.G)
        if fan.rank:
            maps.append(LatticeMap.of([[2 * int(i == j) for j in range(fan.rank)] for i in range(fan.rank)]))
    maps = [m if isinstance(m, LatticeMap) else LatticeMap.of(m) for m in maps]
    quot = []
    for m in maps:
        perm = is_compatible(m, fan).cone_perm
        quot.append((m, perm, {j: induced_quotient_map(fan, m, j, perm[j]) for j in perm}))
    surj = fibers = chars = commute = True
    counter = None
    checked = 0
    big, small = t * n, n
    for k, d in sorted(ranks.items()):
        images: dict[tuple[int, ...], int] = {}
        for y in product(range(big), repeat=d):
            checked += 1
            x = tuple(v % small for v in y)          # t * (y / tn) = y / n
            images[x] = images.get(x, 0) + 1
            for xi in product(range(-1, 2), repeat=d):
                lhs = Fraction(sum(a * b for a, b in zip(xi, y)) * t, big) % 1
                rhs = Fraction(sum(a * b for a, b in zip(xi, x)), small) % 1
                if lhs != rhs:
                    chars = False
                    counter = counter or {"cone": k, "point": list(y), "xi": list(xi)}
        if len(images) != small ** d:
            surj = False
            counter = counter or {"cone": k, "missing": small ** d - len(images)}
        if any(c != t ** d for c in images.values()):
            fibers = False
            counter = counter or {"cone": k, "fiber_sizes": sorted(set(images.values()))}
    # maps act on torsion by transpose: y (cone perm(j)) -> T_j^T y (cone j); reduction commutes
    for m, perm, tq in quot:
        for j, d in ranks.items():
            tm = tq[j]
            for y in product(range(big), repeat=d):
                up = [sum(tm[i][c] * y[i] for i in range(d)) % big for c in range(d)]
                down_then = [sum(tm[i][c] * (y[i] % small) for i in range(d)) % small for c in range(d)]
                if [v % small for v in up] != down_then:
                    commute = False
                    counter = counter or {"map": m.rows(), "cone": j, "point": list(y)}
    return TransitionReport(n, t, surj, fibers, chars, commute, checked, counter)


def projective_root_square(d: int, n: int, t: int) -> dict:
    """Commuting square for the coordinate model of P^d at roots of unity.

    Level-tn points of the open torus are tuples (1 : z_1 : ... : z_d) with
    z_i^{tn} = 1; raising coordinates to the t-th power lands on level n.  We
    compare that coordinate map with the lattice-side transition on exponent
    numerators, numerically over all points.
    """
    if (t * n) ** d > 20000:
        raise ValueError("root-of-unity square is limited to (tn)^d <= 20000 points")
    big = t * n
    worst = 0.0
    for y in product(range(big), repeat=d):
        z = [cmath.exp(2j * math.pi * v / big) for v in y]
        powered = [w ** t for w in z]
        lattice = [cmath.exp(2j * math.pi * (v % n) / n) for v in y]
        worst = max(worst, max((abs(a - b) for a, b in zip(powered, lattice)), default=0.0))
    return {"d": d, "n": n, "t": t, "points": big ** d, "max_deviation": worst}
