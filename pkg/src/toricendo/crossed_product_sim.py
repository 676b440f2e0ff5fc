"""Finite truncations of the Hilbert-space representations and relation checks.

Basis vectors are indexed by lattice points of the orbit quotients:

* additive mode: pairs (cone j, xi in Z^{d_j}); rank-0 cones contribute the
  single point ();
* multiplicative mode: tuples (xi_1, ..., xi_m), one point per cone in cone-id
  order.

Vectors are sparse dicts key -> complex.  For a compatible map A with cone
permutation perm and induced quotient maps T_j : N/N_j -> N/N_perm(j):

    mu_A   : eps_(j, xi) -> eps_(perm(j), T_j xi)
    mu*_A  : eps_(k, eta) -> eps_(j, xi) if T_j xi = eta has an integer solution, else 0
    e(r)   : eps_(j, xi) -> exp(2 pi i <xi, r_j>) eps_(j, xi)
    (A . r)_j = T_j^T r_perm(j)  (mod 1)

A representation has a *domain* radius R (the basis vectors that checks are
run on) and an *ambient* radius >= R (where images may land).  Every report
carries the fraction of domain vectors whose images stay in the ambient box
(``coverage``) and in the domain box itself (``strict_coverage``).
"""

from __future__ import annotations

import logging
import math
from collections import Counter
from dataclasses import dataclass, field
from fractions import Fraction
from itertools import product
from typing import Iterator, Mapping, Sequence

from . import intlin
from .fan_symmetry import LatticeMap, decompose_primitive, induced_quotient_map, is_compatible
from .lattice_fan import Fan
from .qsm_engine import root_table
from .spectral_model import BoundLaw, ScalingHom

log = logging.getLogger(__name__)

Key = tuple
Vector = dict


class OutOfBoxError(ValueError):
    def __init__(self, indices: list):
        super().__init__(f"{len(indices)} image(s) leave the truncation box, e.g. {indices[:3]}")
        self.indices = indices


class BasisTooLargeError(ValueError):
    """The multiplicative basis exceeds the configured size cap."""


def _sup(x: Sequence[int]) -> int:
    return max((abs(v) for v in x), default=0)


def _box(d: int, radius: int) -> Iterator[tuple[int, ...]]:
    return product(range(-radius, radius + 1), repeat=d)


@dataclass
class MapData:
    """A compatible map with its cone permutation and quotient maps."""
    phi: LatticeMap
    perm: dict[int, int]
    inverse_perm: dict[int, int]
    quotient: dict[int, list[list[int]]]
    growth: int
    adjugate: dict[int, tuple[list[list[int]], int]] = field(default_factory=dict)

    def preimage(self, j: int, eta: Sequence[int]) -> tuple[int, ...] | None:
        """Integer xi with T_j xi = eta, or None."""
        adj, det = self.adjugate[j]
        num = [sum(a * e for a, e in zip(row, eta)) for row in adj]
        if any(x % det for x in num):
            return None
        return tuple(x // det for x in num)

    @property
    def n(self) -> int:
        return decompose_primitive(self.phi)[0]


def map_data(fan: Fan, phi: LatticeMap | Sequence[Sequence[int]]) -> MapData:
    if not isinstance(phi, LatticeMap):
        phi = LatticeMap.of(phi)
    comp = is_compatible(phi, fan)
    if not comp.ok:
        raise ValueError(f"map {phi.rows()} is not compatible with the fan (cone {comp.failed_cone})")
    perm = comp.cone_perm
    quotient = {j: induced_quotient_map(fan, phi, j, perm[j]) for j in perm}
    growth = 1
    adjugate = {}
    for j, t in quotient.items():
        if not t:
            adjugate[j] = ([], 1)
            continue
        det = intlin.det(t)
        inv = intlin.inverse_rational(t)
        adjugate[j] = ([[int(x * det) for x in row] for row in inv], det)
        growth = max(growth, max(sum(abs(x) for x in row) for row in t))
        growth = max(growth, math.ceil(max(sum(abs(x) for x in row) for row in inv)))
    return MapData(phi, perm, {k: j for j, k in perm.items()}, quotient, growth, adjugate)


@dataclass
class TruncatedRep:
    fan: Fan
    radius: int
    mode: str = "additive"
    ambient: int | None = None
    cap: int = 2_000_000

    def __post_init__(self):
        if self.mode not in ("additive", "multiplicative"):
            raise ValueError(f"mode must be additive or multiplicative, not {self.mode!r}")
        if self.ambient is None:
            self.ambient = self.radius
        if self.ambient < self.radius:
            raise ValueError("ambient radius must be at least the domain radius")
        self.cones = list(self.fan.cone_ids)
        self.ranks = self.fan.quotient_ranks()
        self.position = {k: i for i, k in enumerate(self.cones)}
        if self.mode == "multiplicative":
            size = math.prod((2 * self.radius + 1) ** self.ranks[k] for k in self.cones)
            if size > self.cap:
                raise BasisTooLargeError(f"multiplicative basis has {size} vectors (cap {self.cap})")

    @property
    def lam(self) -> int:
        """1 in additive mode; the number of cones in multiplicative mode."""
        return 1 if self.mode == "additive" else len(self.cones)

    def with_ambient(self, ambient: int) -> "TruncatedRep":
        return TruncatedRep(self.fan, self.radius, self.mode, max(ambient, self.radius), self.cap)

    def domain(self) -> Iterator[Key]:
        """Basis keys with every component of sup norm <= radius."""
        if self.mode == "additive":
            for k in self.cones:
                for xi in _box(self.ranks[k], self.radius):
                    yield (k, xi)
        else:
            yield from product(*[list(_box(self.ranks[k], self.radius)) for k in self.cones])

    def domain_size(self) -> int:
        sizes = [(2 * self.radius + 1) ** self.ranks[k] for k in self.cones]
        return sum(sizes) if self.mode == "additive" else math.prod(sizes)

    def components(self, key: Key) -> list[tuple[int, tuple[int, ...]]]:
        if self.mode == "additive":
            return [key]
        return list(zip(self.cones, key))

    def norm(self, key: Key) -> int:
        return max((_sup(xi) for _, xi in self.components(key)), default=0)

    def in_ambient(self, key: Key) -> bool:
        return self.norm(key) <= self.ambient

    def in_domain(self, key: Key) -> bool:
        return self.norm(key) <= self.radius

    # -- key-level maps ----------------------------------------------------
    def mu_key(self, md: MapData, key: Key) -> Key:
        if self.mode == "additive":
            j, xi = key
            return (md.perm[j], tuple(intlin.matvec(md.quotient[j], xi)))
        out: list = [None] * len(self.cones)
        for j, xi in zip(self.cones, key):
            out[self.position[md.perm[j]]] = tuple(intlin.matvec(md.quotient[j], xi))
        return tuple(out)

    def mu_star_key(self, md: MapData, key: Key) -> Key | None:
        def pre(k, eta):
            j = md.inverse_perm[k]
            xi = md.preimage(j, eta)
            return (j, xi) if xi is not None else None

        if self.mode == "additive":
            return pre(*key)
        out: list = [None] * len(self.cones)
        for k, eta in zip(self.cones, key):
            p = pre(k, eta)
            if p is None:
                return None
            out[self.position[p[0]]] = p[1]
        return tuple(out)

    # -- operators on sparse vectors ---------------------------------------
    def apply_e(self, r: "TorsionLabel", v: Vector) -> Vector:
        cos, sin = root_table(r.n)
        out = {}
        for key, coef in v.items():
            idx = r.index(self.components(key))
            out[key] = coef * complex(cos[idx], sin[idx])
        return out

    def apply_mu(self, md: MapData, v: Vector, strict: bool = True) -> Vector:
        out: dict = {}
        bad = []
        for key, coef in v.items():
            img = self.mu_key(md, key)
            if not self.in_ambient(img):
                bad.append(key)
                continue
            out[img] = out.get(img, 0) + coef
        if bad and strict:
            raise OutOfBoxError(bad)
        return out

    def apply_mu_star(self, md: MapData, v: Vector, strict: bool = True) -> Vector:
        out: dict = {}
        bad = []
        for key, coef in v.items():
            pre = self.mu_star_key(md, key)
            if pre is None:
                continue
            if not self.in_ambient(pre):
                bad.append(key)
                continue
            out[pre] = out.get(pre, 0) + coef
        if bad and strict:
            raise OutOfBoxError(bad)
        return out


@dataclass(frozen=True)
class TorsionLabel:
    """Per-cone rational vectors mod 1 sharing the common denominator n."""
    values: tuple[tuple[int, tuple[Fraction, ...]], ...]
    n: int

    @classmethod
    def of(cls, r: Mapping[int, Sequence], ranks: Mapping[int, int]) -> "TorsionLabel":
        vals = []
        for k in sorted(ranks):
            v = tuple(Fraction(x) % 1 for x in r.get(k, [0] * ranks[k]))
            if len(v) != ranks[k]:
                raise ValueError(f"torsion vector for cone {k} needs length {ranks[k]}")
            vals.append((k, v))
        n = 1
        for _, v in vals:
            for x in v:
                n = n * x.denominator // math.gcd(n, x.denominator)
        return cls(tuple(vals), n)

    def as_dict(self) -> dict[int, tuple[Fraction, ...]]:
        return dict(self.values)

    def numerators(self) -> dict[int, list[int]]:
        return {k: [int(x * self.n) for x in v] for k, v in self.values}

    def index(self, comps: Sequence[tuple[int, tuple[int, ...]]]) -> int:
        nums = self.numerators()
        return sum(sum(a * x for a, x in zip(nums[k], xi)) for k, xi in comps) % self.n

    def to_json(self) -> dict:
        return {str(k): [str(x) for x in v] for k, v in self.values}


def act_on_torsion(md: MapData, r: TorsionLabel, ranks: Mapping[int, int]) -> TorsionLabel:
    """(A . r)_j = T_j^T r_perm(j) mod 1."""
    rd = r.as_dict()
    out = {}
    for j in ranks:
        t = md.quotient[j]
        src = rd[md.perm[j]]
        out[j] = [sum((Fraction(t[i][col]) * src[i] for i in range(len(t))), Fraction(0)) % 1
                  for col in range(ranks[j])]
    return TorsionLabel.of(out, ranks)


def torsion_preimages(b: Sequence[Sequence[int]], target: Sequence[Fraction]) -> list[tuple[Fraction, ...]]:
    """All s in (Q/Z)^d with B s = target mod Z^d, for nonsingular integer B (via Smith form)."""
    d = len(b)
    if d == 0:
        return [()]
    dmat, p, q = intlin.smith_normal_form(b)
    pr = [sum((Fraction(p[i][j]) * target[j] for j in range(d)), Fraction(0)) for i in range(d)]
    diag = [dmat[i][i] for i in range(d)]
    choices = [[(pr[i] + t) / diag[i] for t in range(diag[i])] for i in range(d)]
    out = []
    for u in product(*choices):
        s = tuple(sum((q[i][j] * u[j] for j in range(d)), Fraction(0)) % 1 for i in range(d))
        out.append(s)
    return sorted(out)


@dataclass
class RelationReport:
    relation: str
    coverage: float
    strict_coverage: float
    max_deviation: float
    counterexample: dict | None
    checked: int
    domain_size: int
    ambient_radius: int
    extras: dict = field(default_factory=dict)

    @property
    def ok(self) -> bool:
        return self.counterexample is None

    def to_json(self) -> dict:
        out = {"relation": self.relation, "coverage": self.coverage,
               "strict_coverage": self.strict_coverage, "max_deviation": self.max_deviation,
               "counterexample": self.counterexample, "checked": self.checked,
               "domain_size": self.domain_size, "ambient_radius": self.ambient_radius}
        out.update(self.extras)
        return out


def _key_json(key) -> list:
    return [list(x) if isinstance(x, tuple) else x for x in key]


def _deviation(a: Vector, b: Vector) -> float:
    keys = set(a) | set(b)
    return max((abs(a.get(k, 0) - b.get(k, 0)) for k in keys), default=0.0)


class _Tracker:
    def __init__(self, rel: str, rep: TruncatedRep, tol: float):
        self.rel, self.rep, self.tol = rel, rep, tol
        self.checked = self.strict = 0
        self.max_dev = 0.0
        self.counterexample = None

    def record(self, key, dev: float, strict: bool, lhs=None, rhs=None):
        self.checked += 1
        self.strict += int(strict)
        self.max_dev = max(self.max_dev, dev)
        if dev > self.tol and self.counterexample is None:
            self.counterexample = {"basis": _key_json(key), "deviation": dev,
                                   "lhs": _vec_json(lhs), "rhs": _vec_json(rhs)}

    def report(self, **extras) -> RelationReport:
        total = self.rep.domain_size()
        return RelationReport(self.rel, self.checked / total if total else 0.0,
                              self.strict / total if total else 0.0, self.max_dev,
                              self.counterexample, self.checked, total, self.rep.ambient, extras)


def _vec_json(v: Vector | None):
    if v is None:
        return None
    return [[_key_json(k), [c.real, c.imag] if isinstance(c, complex) else c] for k, c in sorted(v.items())]


def check_conjugation(phi, r: TorsionLabel, rep: TruncatedRep, tol: float = 1e-14) -> RelationReport:
    """e(A . r) = mu*_A e(r) mu_A on domain vectors whose mu-image is in the ambient box."""
    md = map_data(rep.fan, phi)
    acted = act_on_torsion(md, r, rep.ranks)
    tr = _Tracker("conjugation", rep, tol)
    for key in rep.domain():
        img = rep.mu_key(md, key)
        if not rep.in_ambient(img):
            continue
        e = {key: 1 + 0j}
        lhs = rep.apply_e(acted, e)
        rhs = rep.apply_mu_star(md, rep.apply_e(r, rep.apply_mu(md, e)))
        tr.record(key, _deviation(lhs, rhs), rep.in_domain(img), lhs, rhs)
    return tr.report(acted_r=acted.to_json())


def check_transfer(phi, r: TorsionLabel, rep: TruncatedRep, tol: float = 1e-12) -> RelationReport:
    """mu_A e(r) mu*_A = (1/#solutions) sum_{A . s = r} e(s) on domain vectors.

    The right side is summed over every solution tuple s; the report also
    gives |det A|^lambda for comparison with the solution count.  Vectors
    outside range(mu_A) must be annihilated by the character sum; the first
    such vector is logged as a witness.
    """
    md = map_data(rep.fan, phi)
    rd = r.as_dict()
    # per target cone k: the s_k with T_j^T s_k = r_j, j = perm^-1(k)
    sols: dict[int, list[tuple[Fraction, ...]]] = {}
    for k in rep.cones:
        j = md.inverse_perm[k]
        sols[k] = torsion_preimages(intlin.transpose(md.quotient[j]) if md.quotient[j] else [], rd[j])
    counts = {k: len(v) for k, v in sols.items()}
    solution_count = math.prod(counts.values())
    det_power = abs(md.phi.det) ** rep.lam
    # phases of each per-cone solution as rationals, grouped by value
    den = 1
    for v in sols.values():
        for s in v:
            for x in s:
                den = den * x.denominator // math.gcd(den, x.denominator)
    cos, sin = root_table(den)
    per_cone = {k: Counter(tuple(int(x * den) for x in s) for s in v) for k, v in sols.items()}
    tr = _Tracker("transfer", rep, tol)
    witness = None
    for key in rep.domain():
        pre = rep.mu_star_key(md, key)
        if pre is not None and not rep.in_ambient(pre):
            continue
        e = {key: 1 + 0j}
        lhs = rep.apply_mu(md, rep.apply_e(r, rep.apply_mu_star(md, e)))
        # RHS: (1/N) sum over solution tuples of prod_k phase(s_k, eta_k) = prod_k (sum_{s_k} phase)/|S_k|
        # in multiplicative mode; in additive mode only the tagged cone's s_k enters.
        comps = rep.components(key)
        total = complex(1.0, 0.0)
        raw_sums = []
        for k, eta in comps:
            acc_re, acc_im = [], []
            for s_num, mult in sorted(per_cone[k].items()):
                idx = sum(a * x for a, x in zip(s_num, eta)) % den
                acc_re.append(mult * cos[idx])
                acc_im.append(mult * sin[idx])
            raw = complex(math.fsum(acc_re), math.fsum(acc_im))
            raw_sums.append((k, eta, raw))
            total *= raw
        others = solution_count // math.prod(counts[k] for k, _ in comps)
        rhs_coef = total * others / solution_count
        rhs = {key: rhs_coef} if abs(rhs_coef) > 0 else {}
        dev = _deviation(lhs, rhs)
        tr.record(key, dev, pre is None or rep.in_domain(pre), lhs, rhs)
        if pre is None and witness is None:
            k, eta, raw = next(((k, eta, raw) for k, eta, raw in raw_sums if abs(raw) < 0.5), raw_sums[0])
            witness = {"basis": _key_json(key), "cone": k, "eta": list(eta), "terms": counts[k],
                       "raw_character_sum_abs": abs(raw), "lhs_is_zero": not lhs}
            log.info("off-range annihilation witness: %s", witness)
    return tr.report(solution_count=solution_count, det_power=det_power,
                     det_power_matches=solution_count == det_power,
                     kernel_orders={str(k): v for k, v in sorted(counts.items())},
                     annihilation_witness=witness)


def _log_h(bound: BoundLaw, comps) -> float | None:
    """log h of a basis vector, or None when the energy is undefined (zero vector)."""
    total = []
    for k, xi in comps:
        if bound.ranks[k] == 0:
            continue
        if not any(xi):
            return None
        total.append(math.log(bound.energies[k].h(xi)))
    if not total:
        return None
    return math.fsum(total)


def check_covariance(phi, t: float, rep: TruncatedRep, bound: BoundLaw, g: ScalingHom,
                     r: TorsionLabel | None = None, tol: float = 1e-12) -> RelationReport:
    """exp(itH) mu_A exp(-itH) = g(A)^{i lam t} mu_A and exp(itH) e(r) exp(-itH) = e(r).

    In multiplicative mode the scaling exponent is the number of cones of
    positive rank (every such factor contributes one power of g).
    """
    md = map_data(rep.fan, phi)
    lam = 1 if rep.mode == "additive" else bound.m_prime
    log_g = math.log(g(md.phi))
    target = complex(math.cos(lam * t * log_g), math.sin(lam * t * log_g))
    r = r if r is not None else TorsionLabel.of({}, rep.ranks)
    tr = _Tracker("covariance", rep, tol)
    skipped_zero_energy = 0
    for key in rep.domain():
        img = rep.mu_key(md, key)
        if not rep.in_ambient(img):
            continue
        h0 = _log_h(bound, rep.components(key))
        h1 = _log_h(bound, rep.components(img))
        if h0 is None or h1 is None:
            skipped_zero_energy += 1
            continue
        # exp(itH) mu exp(-itH) eps = exp(it(H(img) - H(key))) eps_img
        ph = complex(math.cos(t * (h1 - h0)), math.sin(t * (h1 - h0)))
        lhs = {img: ph}
        rhs = {img: target}
        dev = _deviation(lhs, rhs)
        # time invariance of e(r): diagonal phases commute with exp(itH)
        e = rep.apply_e(r, {key: complex(math.cos(-t * h0), math.sin(-t * h0))})
        e = {k: c * complex(math.cos(t * h0), math.sin(t * h0)) for k, c in e.items()}
        dev = max(dev, _deviation(e, rep.apply_e(r, {key: 1 + 0j})))
        tr.record(key, dev, rep.in_domain(img), lhs, rhs)
    return tr.report(t=t, lam=lam, g=g(md.phi), skipped_zero_energy=skipped_zero_energy)


def check_mu_isometry(phi, rep: TruncatedRep) -> RelationReport:
    """mu*_A mu_A = 1 on covered domain vectors."""
    md = map_data(rep.fan, phi)
    tr = _Tracker("mu_star_mu", rep, 0.0)
    for key in rep.domain():
        img = rep.mu_key(md, key)
        if not rep.in_ambient(img):
            continue
        e = {key: 1 + 0j}
        back = rep.apply_mu_star(md, rep.apply_mu(md, e))
        tr.record(key, _deviation(back, e), rep.in_domain(img), back, e)
    return tr.report()


def check_kms_diagonal(phi, r: TorsionLabel, rep: TruncatedRep, bound: BoundLaw, beta: float,
                       t: float = 1.0) -> dict:
    """Truncated Gibbs functional on a = e(r), b = mu mu*: w(ab) vs w(ba), w(sigma_t(a)) vs w(a)."""
    md = map_data(rep.fan, phi)
    num = {"ab": ([], []), "ba": ([], []), "a": ([], []), "sigma_a": ([], [])}
    weights = []
    for key in rep.domain():
        pre = rep.mu_star_key(md, key)
        if pre is not None and not rep.in_ambient(pre):
            continue
        lh = _log_h(bound, rep.components(key))
        if lh is None:
            continue
        w = math.exp(-beta * lh)
        weights.append(w)
        e = {key: 1 + 0j}
        proj = lambda v: rep.apply_mu(md, rep.apply_mu_star(md, v))  # noqa: E731
        ev = rep.apply_e(r, e)
        vals = {
            "ab": rep.apply_e(r, proj(e)).get(key, 0),
            "ba": proj(ev).get(key, 0),
            "a": ev.get(key, 0),
            "sigma_a": (rep.apply_e(r, {key: complex(math.cos(-t * lh), math.sin(-t * lh))}).get(key, 0)
                        * complex(math.cos(t * lh), math.sin(t * lh))),
        }
        for name, v in vals.items():
            num[name][0].append(w * complex(v).real)
            num[name][1].append(w * complex(v).imag)
    z = math.fsum(weights)
    val = {k: complex(math.fsum(re), math.fsum(im)) / z for k, (re, im) in num.items()}
    return {"omega_ab": [val["ab"].real, val["ab"].imag], "omega_ba": [val["ba"].real, val["ba"].imag],
            "commutator_deviation": abs(val["ab"] - val["ba"]),
            "time_invariance_deviation": abs(val["sigma_a"] - val["a"]), "states": len(weights)}


def standard_ambient(rep: TruncatedRep, maps: Sequence) -> TruncatedRep:
    """Enlarge the ambient box by the largest growth factor of the given maps."""
    growth = max((map_data(rep.fan, m).growth for m in maps), default=1)
    return rep.with_ambient(rep.radius * growth)
