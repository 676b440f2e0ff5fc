"""Logarithmic heights of rational points of P^d and A^d, monomial families and height zeta sums.

For a point with coprime integer coordinates H(x) = max |x_i| and
h(x) = log H(x).  Monomial families are given by rational generator vectors
g_1..g_D on a fixed support of nonzero positions; the point at exponent e is
the coordinatewise product of g_j^{e_j}.  Over Q

    h(e) = sum_v max_i sum_j e_j log|g_{j,i}|_v

(v = infinity and the primes occurring in the generators), a convex piecewise
linear function of e.  The constant kappa = min_{|e|_inf = 1} h(e), found by
linear programming on each face of the unit cube, gives h(e) >= kappa |e|_inf
and hence tail bounds for height zeta sums.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from itertools import permutations, product
from typing import Iterator, Sequence

import numpy as np
from scipy.optimize import linprog
from sympy import factorint

from .fan_symmetry import LatticeMap, decompose_primitive


class TooManyPointsError(ValueError):
    def __init__(self, estimate: int, cap: int):
        super().__init__(f"about {estimate} points exceed the cap of {cap}")
        self.estimate = estimate
        self.cap = cap


def _clear(coords: Sequence) -> tuple[int, ...]:
    fr = [Fraction(c) for c in coords]
    if not any(fr):
        raise ValueError("projective point needs a nonzero coordinate")
    den = 1
    for x in fr:
        den = den * x.denominator // math.gcd(den, x.denominator)
    ints = [int(x * den) for x in fr]
    g = 0
    for v in ints:
        g = math.gcd(g, v)
    ints = [v // g for v in ints]
    lead = next(v for v in ints if v)
    return tuple(-v for v in ints) if lead < 0 else tuple(ints)


@dataclass(frozen=True)
class ProjRatPoint:
    coords: tuple[int, ...]

    @classmethod
    def of(cls, coords: Sequence) -> "ProjRatPoint":
        return cls(_clear(coords))

    @property
    def dim(self) -> int:
        return len(self.coords) - 1

    def __str__(self) -> str:
        return "(" + ":".join(str(c) for c in self.coords) + ")"


def height_proj(point: ProjRatPoint | Sequence) -> tuple[int, float]:
    """(H, h = log H) of the canonical representative."""
    if not isinstance(point, ProjRatPoint):
        point = ProjRatPoint.of(point)
    big = max(abs(c) for c in point.coords)
    return big, math.log(big)


def height_affine(coords: Sequence) -> tuple[int, float]:
    """Height of (1 : x_1 : ... : x_d)."""
    return height_proj(ProjRatPoint.of([1] + [Fraction(c) for c in coords]))


# -- the S-action on P^d ---------------------------------------------------------

def projective_rays(d: int) -> list[tuple[int, ...]]:
    """e_0 = -(e_1 + ... + e_d), e_1, ..., e_d."""
    return [tuple(-1 for _ in range(d))] + [tuple(int(i == j) for j in range(d)) for i in range(d)]


def ray_permutation(phi0: LatticeMap) -> list[int]:
    """sigma with phi0 e_i = e_sigma(i); raises unless phi0 permutes the P^d rays."""
    rays = projective_rays(phi0.dim)
    index = {r: i for i, r in enumerate(rays)}
    sigma = []
    for r in rays:
        img = tuple(phi0.apply(r))
        if img not in index:
            raise ValueError(f"{phi0.rows()} does not permute the rays of the P^{phi0.dim} fan")
        sigma.append(index[img])
    return sigma


def act(phi: LatticeMap | Sequence[Sequence[int]], point: ProjRatPoint) -> ProjRatPoint:
    """phi = n phi0: move coordinate i to position sigma(i), then raise to the n-th power."""
    if not isinstance(phi, LatticeMap):
        phi = LatticeMap.of(phi)
    if len(point.coords) != phi.dim + 1:
        raise ValueError(f"a {phi.dim}x{phi.dim} map acts on P^{phi.dim}, not on {point}")
    n, phi0 = decompose_primitive(phi)
    sigma = ray_permutation(phi0)
    out = [0] * len(point.coords)
    for i, x in enumerate(point.coords):
        out[sigma[i]] = x ** n
    return ProjRatPoint.of(out)


def scaling_check(phi: LatticeMap | Sequence[Sequence[int]], point: ProjRatPoint) -> dict:
    """H(phi x) == H(x)^n, compared as integers."""
    if not isinstance(phi, LatticeMap):
        phi = LatticeMap.of(phi)
    n, _ = decompose_primitive(phi)
    image = act(phi, point)
    h_img, _ = height_proj(image)
    h_pt, _ = height_proj(point)
    return {"ok": h_img == h_pt ** n, "n": n, "image": list(image.coords),
            "H": h_pt, "H_image": h_img}


# -- bounded height enumeration ----------------------------------------------------

def height_bound_from_log(a: float) -> int:
    """Largest integer B with log B <= a."""
    b = math.floor(math.exp(a))
    while math.log(b + 1) <= a:
        b += 1
    while b > 1 and math.log(b) > a:
        b -= 1
    return max(b, 1)


def enumerate_X0(d: int, max_height: int | None = None, log_bound: float | None = None,
                 cap: int = 2_000_000) -> list[ProjRatPoint]:
    """All points of P^d(Q) with H <= max_height (or h <= log_bound), sorted."""
    if (max_height is None) == (log_bound is None):
        raise ValueError("give exactly one of max_height and log_bound")
    b = max_height if max_height is not None else height_bound_from_log(log_bound)
    if b < 1:
        return []
    box = (2 * b + 1) ** (d + 1)
    estimate = int(box / 2 / 1.0 if d == 0 else box / 2 / _zeta_int(d + 1))
    if box > 4 * cap or estimate > cap:
        raise TooManyPointsError(estimate, cap)
    axes = [np.arange(-b, b + 1, dtype=np.int64)] * (d + 1)
    grid = np.stack([g.ravel() for g in np.meshgrid(*axes, indexing="ij")], axis=1)
    g = np.gcd.reduce(np.abs(grid), axis=1)
    keep = g == 1
    # canonical sign: first nonzero entry positive
    nz = grid != 0
    first = np.argmax(nz, axis=1)
    lead = grid[np.arange(len(grid)), first]
    keep &= lead > 0
    pts = grid[keep]
    return [ProjRatPoint(tuple(int(v) for v in row)) for row in pts]


def _zeta_int(s: int) -> float:
    return math.fsum(k ** -s for k in range(1, 2000)) + 2000.0 ** (1 - s) / (s - 1)


def is_permutation_closed(points: Sequence[ProjRatPoint]) -> bool:
    have = set(points)
    for p in points:
        for perm in permutations(range(len(p.coords))):
            if ProjRatPoint.of([p.coords[i] for i in perm]) not in have:
                return False
    return True


# -- monomial families -----------------------------------------------------------

@dataclass(frozen=True)
class MonomialFamily:
    """Points prod_j g_j^{e_j} (coordinatewise on ``support``, zeros elsewhere).

    ``box`` is "symmetric" (|e_j| <= R) or "positive" (1 <= e_j <= R).
    ``labels`` name the exponent slots for CSV output.
    """
    length: int
    support: tuple[int, ...]
    generators: tuple[tuple[Fraction, ...], ...]
    box: str = "symmetric"
    labels: tuple[str, ...] = ()

    def __post_init__(self):
        if self.box not in ("symmetric", "positive"):
            raise ValueError("box must be 'symmetric' or 'positive'")
        for g in self.generators:
            if len(g) != len(self.support) or any(x == 0 for x in g):
                raise ValueError("generators need one nonzero rational per support position")

    @property
    def rank(self) -> int:
        return len(self.generators)

    def exponents(self, radius: int) -> Iterator[tuple[int, ...]]:
        rng = range(-radius, radius + 1) if self.box == "symmetric" else range(1, radius + 1)
        return product(rng, repeat=self.rank)

    def point(self, e: Sequence[int]) -> ProjRatPoint:
        vals = [Fraction(1)] * len(self.support)
        for g, k in zip(self.generators, e):
            if k:
                vals = [v * x ** k for v, x in zip(vals, g)]
        coords = [Fraction(0)] * self.length
        for pos, v in zip(self.support, vals):
            coords[pos] = v
        return ProjRatPoint.of(coords)

    def places(self) -> list[int | None]:
        """None for the archimedean place, then the primes occurring in generators."""
        primes: set[int] = set()
        for g in self.generators:
            for x in g:
                for part in (abs(x.numerator), x.denominator):
                    if part > 1:
                        primes.update(factorint(part))
        return [None] + sorted(primes)

    def log_abs_matrix(self) -> list[np.ndarray]:
        """Per place v: matrix M_v[i, j] = log|g_{j,i}|_v, so h(e) = sum_v max_i (M_v e)_i."""
        out = []
        for v in self.places():
            m = np.zeros((len(self.support), self.rank))
            for j, g in enumerate(self.generators):
                for i, x in enumerate(g):
                    m[i, j] = _log_abs(x, v)
            out.append(m)
        return out

    def log_height_linear(self, e: Sequence[int]) -> float:
        return float(sum(np.max(m @ np.asarray(e, dtype=float)) for m in self.log_abs_matrix()))

    def kappa(self) -> float:
        """min of h(e) over |e|_inf = 1 (0 when h vanishes on some direction)."""
        mats = self.log_abs_matrix()
        dim = self.rank
        nv = len(mats)
        best = math.inf
        # variables: e (dim), t_v (nv); minimize sum t_v, t_v >= (M_v e)_i
        rows, rhs = [], []
        for v, m in enumerate(mats):
            for i in range(m.shape[0]):
                row = np.zeros(dim + nv)
                row[:dim] = m[i]
                row[dim + v] = -1
                rows.append(row)
                rhs.append(0.0)
        a_ub, b_ub = np.array(rows), np.array(rhs)
        cost = np.concatenate([np.zeros(dim), np.ones(nv)])
        faces = [(j, s) for j in range(dim) for s in (1, -1)] if self.box == "symmetric" \
            else [(j, 1) for j in range(dim)]
        for j, s in faces:
            bounds = [(-1, 1) if self.box == "symmetric" else (0, 1)] * dim + [(None, None)] * nv
            bounds[j] = (s, s)
            res = linprog(cost, A_ub=a_ub, b_ub=b_ub, bounds=bounds, method="highs")
            if res.status == 0:
                best = min(best, res.fun)
        return max(best, 0.0)


def _log_abs(x: Fraction, v: int | None) -> float:
    if v is None:
        return math.log(abs(x.numerator)) - math.log(x.denominator)
    val = 0
    num, den = abs(x.numerator), x.denominator
    while num % v == 0:
        num //= v
        val += 1
    while den % v == 0:
        den //= v
        val -= 1
    return -val * math.log(v)


def b_family(alpha, x: Sequence) -> MonomialFamily:
    """The family alpha^k x^{k'} with k gauged to 0 on the first nonzero coordinate."""
    alpha = Fraction(alpha)
    if alpha in (0, 1, -1):
        raise ValueError("alpha must be nontorsion in Q*, i.e. not 0 or +-1")
    xs = [Fraction(v) for v in x]
    support = tuple(i for i, v in enumerate(xs) if v != 0)
    if not support:
        raise ValueError("base point needs a nonzero coordinate")
    ell = len(support) - 1
    gens, labels = [], []
    for pos in range(1, ell + 1):
        gens.append(tuple(alpha if p == pos else Fraction(1) for p in range(ell + 1)))
        labels.append(f"k{support[pos]}")
    for pos in range(ell + 1):
        gens.append(tuple(xs[support[pos]] if p == pos else Fraction(1) for p in range(ell + 1)))
        labels.append(f"kp{support[pos]}")
    return MonomialFamily(len(xs), support, tuple(gens), "symmetric", tuple(labels))


def affine_family(alpha, x: Sequence) -> MonomialFamily:
    """(1 : alpha^{k_i} x_i^{k'_i}) for nonzero rational x_i."""
    alpha = Fraction(alpha)
    if alpha in (0, 1, -1):
        raise ValueError("alpha must be nontorsion in Q*, i.e. not 0 or +-1")
    xs = [Fraction(v) for v in x]
    if any(v == 0 for v in xs):
        raise ValueError("affine base point coordinates must be nonzero")
    d = len(xs)
    support = tuple(range(d + 1))
    gens, labels = [], []
    for i in range(d):
        gens.append(tuple(alpha if p == i + 1 else Fraction(1) for p in range(d + 1)))
        labels.append(f"k{i + 1}")
    for i in range(d):
        gens.append(tuple(xs[i] if p == i + 1 else Fraction(1) for p in range(d + 1)))
        labels.append(f"kp{i + 1}")
    return MonomialFamily(d + 1, support, tuple(gens), "symmetric", tuple(labels))


def power_family(length: int, generator: Sequence, box: str = "positive") -> MonomialFamily:
    """Single-generator family g^k, e.g. (1 : 2^k) from generator (1, 2)."""
    g = tuple(Fraction(v) for v in generator)
    support = tuple(i for i, v in enumerate(g) if v != 0)
    return MonomialFamily(length, support, (tuple(g[i] for i in support),), box, ("k",))


@dataclass(frozen=True)
class FamilyPoint:
    exponent: tuple[int, ...]
    point: ProjRatPoint
    H: int
    h: float

    @property
    def zero_height(self) -> bool:
        return self.H == 1


def b_family_iter(family: MonomialFamily, radius: int) -> Iterator[FamilyPoint]:
    """Every exponent tuple in the box with its exact point and height (multiset)."""
    for e in family.exponents(radius):
        p = family.point(e)
        big, h = height_proj(p)
        yield FamilyPoint(e, p, big, h)


@dataclass
class HeightZeta:
    value: float
    tail_bound: float
    radius: int
    beta: float
    terms: int
    excluded_zero_height: int
    kappa: float
    note: str

    def to_json(self) -> dict:
        return {"beta": self.beta, "value": self.value, "tail_bound": self.tail_bound,
                "radius": self.radius, "terms": self.terms,
                "excluded_zero_height": self.excluded_zero_height, "kappa": self.kappa,
                "note": self.note}


def height_zeta(family: MonomialFamily, beta: float, radius: int) -> HeightZeta:
    """sum of h^-beta over the family's exponent box, h = 0 points excluded and counted."""
    terms, zeros = [], 0
    for fp in b_family_iter(family, radius):
        if fp.zero_height:
            zeros += 1
            continue
        terms.append(fp.h ** -beta)
    kappa = family.kappa()
    dim = family.rank
    if kappa <= 1e-12:
        tail, note = math.inf, "h vanishes along a direction of the exponent lattice; no tail bound"
    elif beta <= dim:
        tail, note = math.inf, f"beta <= {dim}: the family sum diverges"
    else:
        const = dim if family.box == "positive" else 2 * dim * 3 ** (dim - 1)
        tail = kappa ** -beta * const * float(radius) ** (dim - beta) / (beta - dim)
        note = "tail from h(e) >= kappa |e|_inf"
    return HeightZeta(math.fsum(terms), tail, radius, beta, len(terms), zeros, kappa, note)


def family_rows(family: MonomialFamily, radius: int, digit_cap: int = 40) -> Iterator[dict]:
    """CSV-ready rows: exponents, H (digits elided above the cap), h."""
    labels = family.labels or tuple(f"e{i}" for i in range(family.rank))
    for fp in b_family_iter(family, radius):
        text = str(fp.H)
        if len(text) > digit_cap:
            text = f"{text[:8]}...[{len(text)} digits]"
        row = dict(zip(labels, fp.exponent))
        row.update({"H": text, "h": fp.h})
        yield row
