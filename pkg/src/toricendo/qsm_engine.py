"""Partition functions, Riemann zeta, Gibbs states and torified spectra.

Lattice sums run over sup-norm shells 1..R in fixed blocks (see lattice_shells).
Each block is summed with numpy and the block partials are merged with
``math.fsum``, so a result does not depend on the worker count.

Tail bounds: a cone energy with h(xi) >= kappa |xi|_inf^c satisfies

    sum_{|xi|_inf > R} h(xi)^-beta <= kappa^-beta * C_d * R^(d - c beta) / (c beta - d)

with C_d = 2d 3^(d-1) on Z^d (shell s has at most 2d (2s+1)^(d-1) points) and
C_d = d on the positive orthant.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from functools import lru_cache
from typing import Mapping, Sequence

import numpy as np

from .lattice_shells import block_map, fsum_columns, primitive_mask
from .spectral_model import BoundLaw, ConeEnergy, TableRangeError

ZETA_TERMS = 40


class DivergenceError(ValueError):
    """The requested lattice sum diverges (c*beta <= rank)."""


@lru_cache(maxsize=None)
def _borwein_coefficients(n: int) -> tuple[float, ...]:
    # d_k = n sum_{i<=k} (n+i-1)! 4^i / ((n-i)! (2i)!), exact then rounded
    acc = Fraction(0)
    out = []
    for i in range(n + 1):
        acc += Fraction(math.factorial(n + i - 1) * 4 ** i, math.factorial(n - i) * math.factorial(2 * i))
        out.append(n * acc)
    dn = out[-1]
    return tuple(float((dk - dn) / dn) for dk in out[:-1])


def riemann_zeta(beta: float) -> float:
    """zeta(beta) for beta >= 1.05 from the alternating eta series with Borwein acceleration."""
    if not beta >= 1.05:
        raise ValueError(f"riemann_zeta needs beta >= 1.05, got {beta}")
    coef = _borwein_coefficients(ZETA_TERMS)
    eta = -math.fsum((-1) ** k * coef[k] / (k + 1) ** beta for k in range(ZETA_TERMS))
    return eta / (1.0 - 2.0 ** (1.0 - beta))


def tail_constant(d: int, index: str = "Z") -> int:
    return d if index == "N" else 2 * d * 3 ** (d - 1)


def lattice_tail(d: int, c: float, beta: float, radius: int, kappa: float, index: str = "Z") -> float:
    if d == 0:
        return 0.0
    if c * beta <= d:
        raise DivergenceError(f"sum over Z^{d} diverges: c*beta = {c * beta} <= {d}")
    if kappa <= 0:
        return math.inf
    return kappa ** (-beta) * tail_constant(d, index) * float(radius) ** (d - c * beta) / (c * beta - d)


@dataclass
class ConeSum:
    cone: int
    rank: int
    value: float
    tail_bound: float

    def to_json(self) -> dict:
        return {"cone": self.cone, "rank": self.rank, "value": self.value, "tail_bound": self.tail_bound}


@dataclass
class PartitionResult:
    value: float
    tail_bound: float
    truncation_radius: int
    mode: str
    m: int
    m_prime: int
    beta: float
    per_cone: list[ConeSum] = field(default_factory=list)

    def to_json(self) -> dict:
        return {"beta": self.beta, "mode": self.mode, "value": self.value,
                "tail_bound": self.tail_bound, "radius": self.truncation_radius,
                "m": self.m, "m_prime": self.m_prime,
                "per_cone": [c.to_json() for c in self.per_cone]}


def _check_radius(energy: ConeEnergy, radius: int) -> None:
    limit = energy.max_radius
    if limit is not None and radius > limit:
        raise TableRangeError(f"radius {radius} exceeds the law's stored radius {limit}")


def energy_sum(energy: ConeEnergy, d: int, beta: float, radius: int, workers: int = 1,
               primitive: bool = False, index: str = "Z") -> tuple[float, float]:
    """(truncated sum of h^-beta over nonzero |xi|_inf <= R, tail bound)."""
    if d == 0:
        return 0.0, 0.0
    tail = lattice_tail(d, energy.c, beta, radius, energy.kappa, index)
    _check_radius(energy, radius)

    def block(x: np.ndarray) -> tuple[float]:
        if primitive:
            x = x[primitive_mask(x)]
        return (float(np.sum(energy.weights(x, beta))),)

    parts = block_map(d, radius, block, workers, index)
    total = fsum_columns(parts)
    return (total[0] if total else 0.0), tail


def _cone_sums(bound: BoundLaw, beta: float, radius: int, workers: int, primitive: bool) -> list[ConeSum]:
    out = []
    for k in sorted(bound.energies):
        d = bound.ranks[k]
        v, t = energy_sum(bound.energies[k], d, beta, radius, workers, primitive)
        out.append(ConeSum(k, d, v, t))
    return out


def _product_with_tail(values: Sequence[float], tails: Sequence[float]) -> tuple[float, float]:
    value = math.prod(values)
    upper = math.prod(v + t for v, t in zip(values, tails))
    return value, max(upper - value, 0.0)


def partition_additive(bound: BoundLaw, beta: float, radius: int, workers: int = 1) -> PartitionResult:
    sums = _cone_sums(bound, beta, radius, workers, primitive=False)
    value = math.fsum(s.value for s in sums)
    tail = math.fsum(s.tail_bound for s in sums)
    return PartitionResult(value, tail, radius, "additive", bound.m, bound.m_prime, beta, sums)


def partition_multiplicative(bound: BoundLaw, beta: float, radius: int, workers: int = 1) -> PartitionResult:
    sums = _cone_sums(bound, beta, radius, workers, primitive=False)
    value, tail = _product_with_tail([s.value for s in sums], [s.tail_bound for s in sums])
    return PartitionResult(value, tail, radius, "multiplicative", bound.m, bound.m_prime, beta, sums)


def partition_factored(bound: BoundLaw, beta: float, radius: int, workers: int = 1) -> PartitionResult:
    """zeta(c beta)^{m'} times the product of primitive-vector sums."""
    if not (bound.sym.splits or bound.sym.fallback):
        raise ValueError("factored partition function needs S = N x G; symmetry data does not split")
    sums = _cone_sums(bound, beta, radius, workers, primitive=True)
    mp = len(sums)
    z = riemann_zeta(bound.c * beta) if mp else 1.0
    prim, prim_tail = _product_with_tail([s.value for s in sums], [s.tail_bound for s in sums])
    zpow = z ** mp
    value = zpow * prim
    # zeta is accurate to 1e-12 absolute; propagate through the power
    zeta_err = ((z + 1e-12) ** mp - zpow) * (prim + prim_tail) if mp else 0.0
    tail = zpow * prim_tail + zeta_err
    return PartitionResult(value, tail, radius, "factored", bound.m, bound.m_prime, beta, sums)


PARTITION_MODES = {
    "additive": partition_additive,
    "multiplicative": partition_multiplicative,
    "factored": partition_factored,
}


def partition(bound: BoundLaw, beta: float, radius: int, mode: str = "additive",
              workers: int = 1) -> PartitionResult:
    try:
        fn = PARTITION_MODES[mode]
    except KeyError:
        raise ValueError(f"unknown partition mode {mode!r}") from None
    return fn(bound, beta, radius, workers)


# -- Gibbs states -------------------------------------------------------------

Torsion = Mapping[int, Sequence[Fraction]]


def parse_torsion(text: str | Sequence, ranks: Mapping[int, int]) -> dict[int, tuple[Fraction, ...]]:
    """Torsion labels from a scalar ("1/5"), a vector, or a {cone: vector} mapping.

    A scalar or a single vector applies to every cone of matching positive rank.
    """
    def vec(v, d):
        if isinstance(v, (str, int, float, Fraction)):
            return tuple(Fraction(v) % 1 for _ in range(d))
        if len(v) != d:
            raise ValueError(f"torsion vector {v} needs length {d}")
        return tuple(Fraction(x) % 1 for x in v)

    if isinstance(text, Mapping):
        return {int(k): vec(v, ranks[int(k)]) for k, v in text.items()}
    return {k: vec(text, d) for k, d in ranks.items() if d >= 1}


def _common_denominator(r: Sequence[Fraction]) -> int:
    n = 1
    for x in r:
        n = n * x.denominator // math.gcd(n, x.denominator)
    return n


def root_table(n: int) -> tuple[np.ndarray, np.ndarray]:
    """cos/sin of 2 pi k/n with exact conjugate symmetry table[n-k] = conj(table[k])."""
    cos = np.empty(n)
    sin = np.empty(n)
    for k in range(n // 2 + 1):
        if (4 * k) % n == 0:
            q = (4 * k) // n % 4
            c, s = [(1.0, 0.0), (0.0, 1.0), (-1.0, 0.0), (0.0, -1.0)][q]
        else:
            c, s = math.cos(2 * math.pi * k / n), math.sin(2 * math.pi * k / n)
        cos[k], sin[k] = c, s
        cos[(n - k) % n], sin[(n - k) % n] = c, -s
    sin[0] = 0.0
    return cos, sin


@dataclass
class GibbsValue:
    r: dict[int, tuple[Fraction, ...]]
    value: complex
    normalization: float
    tail_bound: float
    truncation_radius: int
    mode: str
    beta: float

    def to_json(self) -> dict:
        return {"beta": self.beta, "mode": self.mode, "radius": self.truncation_radius,
                "r": {str(k): [str(x) for x in v] for k, v in sorted(self.r.items())},
                "value": [self.value.real, self.value.imag],
                "normalization": self.normalization, "tail_bound": self.tail_bound}


def character_sum(energy: ConeEnergy, d: int, r: Sequence[Fraction], beta: float, radius: int,
                  workers: int = 1, index: str = "Z") -> tuple[float, complex, float]:
    """(Z_R, sum_xi exp(2 pi i <xi, r>) h^-beta, tail bound)."""
    if d == 0:
        return 0.0, 0j, 0.0
    tail = lattice_tail(d, energy.c, beta, radius, energy.kappa, index)
    _check_radius(energy, radius)
    n = _common_denominator(r)
    a = np.array([int(x * n) % n for x in r], dtype=np.int64)
    cos, sin = root_table(n)

    def block(x: np.ndarray) -> tuple[float, float, float]:
        w = energy.weights(x, beta)
        idx = (x @ a) % n
        return float(np.sum(w)), float(np.sum(w * cos[idx])), float(np.sum(w * sin[idx]))

    parts = block_map(d, radius, block, workers, index)
    z, re, im = fsum_columns(parts) if parts else (0.0, 0.0, 0.0)
    return z, complex(re, im), tail


def gibbs_state(bound: BoundLaw, r: Torsion, beta: float, radius: int, mode: str = "additive",
                workers: int = 1) -> GibbsValue:
    """Gibbs functional on e(r), numerator and normalization under one truncation."""
    r = {k: tuple(Fraction(x) % 1 for x in v) for k, v in r.items()}
    cones = sorted(bound.energies)
    pieces = []
    for k in cones:
        d = bound.ranks[k]
        rk = r.get(k, tuple(Fraction(0) for _ in range(d)))
        if len(rk) != d:
            raise ValueError(f"torsion label for cone {k} needs length {d}")
        pieces.append(character_sum(bound.energies[k], d, rk, beta, radius, workers))
    if mode == "additive":
        z = math.fsum(p[0] for p in pieces)
        re = math.fsum(p[1].real for p in pieces)
        im = math.fsum(p[1].imag for p in pieces)
        tail = math.fsum(p[2] for p in pieces)
        value = complex(re / z, im / z) if z else complex(1.0, 0.0)
        err = 2 * tail / z if z else 0.0
    elif mode == "multiplicative":
        z = math.prod(p[0] for p in pieces)
        value = complex(1.0, 0.0)
        bound_prod = 1.0
        for zk, num, tk in pieces:
            ratio = complex(num.real / zk, num.imag / zk)
            value *= ratio
            bound_prod *= 1 + 2 * tk / zk
        err = bound_prod - 1
    else:
        raise ValueError(f"Gibbs states support additive or multiplicative mode, not {mode!r}")
    full_r = {k: r.get(k, tuple(Fraction(0) for _ in range(bound.ranks[k]))) for k in cones}
    return GibbsValue(full_r, value, z, err, radius, mode, beta)


def apply_symmetry(r: Torsion, gamma: Mapping[int, int | Sequence[int]] | int) -> dict[int, tuple[Fraction, ...]]:
    """Multiply torsion coordinates by units (per cone, optionally per coordinate)."""
    out = {}
    for k, v in r.items():
        g = gamma if isinstance(gamma, int) else gamma.get(k, 1)
        gs = [g] * len(v) if isinstance(g, int) else list(g)
        if len(gs) != len(v):
            raise ValueError(f"unit tuple for cone {k} has the wrong length")
        new = []
        for x, u in zip(v, gs):
            x = Fraction(x) % 1
            if math.gcd(u, x.denominator) != 1:
                raise ValueError(f"{u} is not a unit modulo {x.denominator}")
            new.append((u * x) % 1)
        out[k] = tuple(new)
    return out


# -- torified spaces ----------------------------------------------------------

def torified_partition(dims: Sequence[int], energies: Sequence[ConeEnergy | None], beta: float,
                       mode: str, radius: int, index: str = "Z", workers: int = 1) -> PartitionResult:
    """Sums over free spectra Z^{d_j} (or the positive orthant with index="N") of each torus."""
    if len(dims) != len(energies):
        raise ValueError("one energy per torus is required")
    if index not in ("Z", "N"):
        raise ValueError("index must be 'Z' or 'N'")
    sums = []
    for j, (d, e) in enumerate(zip(dims, energies)):
        if d == 0:
            continue
        if e is None or e.d != d:
            raise ValueError(f"torus {j} needs an energy on Z^{d}")
        v, t = energy_sum(e, d, beta, radius, workers, index=index)
        sums.append(ConeSum(j, d, v, t))
    if mode == "additive":
        value, tail = math.fsum(s.value for s in sums), math.fsum(s.tail_bound for s in sums)
    elif mode == "multiplicative":
        value, tail = _product_with_tail([s.value for s in sums], [s.tail_bound for s in sums])
    else:
        raise ValueError(f"torified partition supports additive or multiplicative, not {mode!r}")
    return PartitionResult(value, tail, radius, mode, len(dims), len(sums), beta, sums)


def convergence_threshold(bound: BoundLaw) -> dict:
    """Abscissae: beta_g = 1/c for the scaling sum, d_k/c per cone, overall the max."""
    sym = bound.sym
    if not (sym.splits or sym.fallback):
        raise ValueError("convergence threshold assumes S = N x G")
    c = bound.c
    per_cone = {k: d / c for k, d in sorted(bound.ranks.items()) if d >= 1}
    beta_g = 1 / c
    return {"beta_g": beta_g, "per_cone": per_cone,
            "abscissa": max([beta_g] + list(per_cone.values()))}
