"""Command-line entry point.

Exit codes: 0 success, 1 a check failed (the counterexample is printed),
2 malformed input or usage error.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import logging
import sys
from fractions import Fraction
from typing import Callable, Sequence

import numpy as np

from . import crossed_product_sim as cps
from . import heights, lambda_f1, qsm_engine
from .fan_symmetry import LatticeMap, enumerate_G
from .lattice_fan import FanFormatError, SingularMapError, load_fan, orbit_lattice, validate_fan
from .spectral_model import (LawFormatError, ScalingHom, TableRangeError, _make_energy, bind_law,
                             load_law, primitive_reps, stabilizer_action, symmetric_norm_law,
                             transport_h)

EXIT_OK, EXIT_FAIL, EXIT_INPUT = 0, 1, 2


class InputError(ValueError):
    """Bad command-line values (beyond what argparse checks)."""


def _emit(payload, fmt: str, out, csv_rows: list[dict] | None = None) -> None:
    if fmt == "csv":
        rows = csv_rows if csv_rows is not None else [payload]
        if not rows:
            return
        buf = io.StringIO()
        fields = list(dict.fromkeys(k for row in rows for k in row))
        writer = csv.DictWriter(buf, fieldnames=fields, lineterminator="\n")
        writer.writeheader()
        for row in rows:
            writer.writerow({k: (json.dumps(v, sort_keys=True) if isinstance(v, (dict, list)) else v)
                             for k, v in row.items()})
        out.write(buf.getvalue())
    else:
        out.write(json.dumps(payload, sort_keys=True, indent=2) + "\n")


def _matrix(text: str) -> list[list[int]]:
    try:
        m = json.loads(text)
        if isinstance(m, int):
            m = [[m]]
        return [[int(x) for x in row] for row in m]
    except (json.JSONDecodeError, TypeError, ValueError) as exc:
        raise InputError(f"matrix must be a JSON list of integer rows: {text!r}") from exc


def _rational_list(text: str) -> list[Fraction]:
    try:
        return [Fraction(x.strip()) for x in text.split(",") if x.strip()]
    except (ValueError, ZeroDivisionError) as exc:
        raise InputError(f"expected comma-separated rationals: {text!r}") from exc


def _int_list(text: str) -> list[int]:
    try:
        return [int(x) for x in text.split(",") if x.strip()]
    except ValueError as exc:
        raise InputError(f"expected comma-separated integers: {text!r}") from exc


def _torsion_arg(text: str, ranks) -> dict:
    text = text.strip()
    if text.startswith("{"):
        try:
            data = json.loads(text)
        except json.JSONDecodeError as exc:
            raise InputError(f"bad torsion JSON: {exc}") from exc
        return qsm_engine.parse_torsion({int(k): v for k, v in data.items()}, ranks)
    try:
        return qsm_engine.parse_torsion(str(Fraction(text)), ranks)
    except (ValueError, ZeroDivisionError) as exc:
        raise InputError(f"torsion label must be a rational or a cone->vector JSON map: {text!r}") from exc


def _betas(args) -> list[float]:
    if args.beta_sweep:
        start, stop, step = args.beta_sweep
        if step <= 0 or stop < start:
            raise InputError("beta sweep needs start <= stop and step > 0")
        count = int((stop - start) / step + 1e-9) + 1
        return [start + i * step for i in range(count)]
    if args.beta is None:
        raise InputError("give --beta or --beta-sweep")
    return [args.beta]


def _bound(args, sym=None):
    fan = load_fan(args.fan)
    sym = sym if sym is not None else enumerate_G(fan)
    law = load_law(args.law) if getattr(args, "law", None) else symmetric_norm_law(fan, sym, args.c)
    return fan, sym, bind_law(law, fan, sym)


# -- subcommands ------------------------------------------------------------

def cmd_validate(args, out) -> int:
    report = validate_fan(load_fan(args.fan))
    _emit(report.to_json(), args.format, out, report.violations or [{"valid": True}])
    return EXIT_OK if report.valid else EXIT_FAIL


def cmd_orbits(args, out) -> int:
    fan = load_fan(args.fan)
    report = validate_fan(fan)
    if not report.valid:
        _emit(report.to_json(), args.format, out)
        return EXIT_FAIL
    rows = [orbit_lattice(fan, k).to_json() for k in fan.cone_ids]
    _emit({"m": fan.m, "orbits": rows}, args.format, out, rows)
    return EXIT_OK


def cmd_symmetries(args, out) -> int:
    fan = load_fan(args.fan)
    sym = enumerate_G(fan)
    _emit(sym.to_json(), args.format, out)
    return EXIT_OK


def cmd_spectrum(args, out) -> int:
    fan, sym, bound = _bound(args)
    cones = []
    for k in sorted(bound.energies):
        reps = primitive_reps(bound.ranks[k], stabilizer_action(fan, sym, k), args.radius)
        cones.append({
            "cone": k, "rank": bound.ranks[k], "source": bound.provenance[k],
            "law": bound.energies[k].to_json(),
            "orbit_representatives": [{"rep": list(rep), "size": len(members),
                                       "h": bound.h_value(k, rep)} for rep, members in reps],
        })
    transport = transport_h(bound, radius=args.radius)
    payload = {"m": bound.m, "m_prime": bound.m_prime, "c": bound.c, "radius": args.radius,
               "cones": cones, "transport": transport.to_json()}
    if sym.splits or sym.fallback:
        payload["convergence"] = qsm_engine.convergence_threshold(bound)
    _emit(payload, args.format, out, [{"cone": c["cone"], "rank": c["rank"],
                                       "orbits": len(c["orbit_representatives"]),
                                       "radius": args.radius} for c in cones])
    return EXIT_OK if transport.consistent else EXIT_FAIL


def cmd_zeta(args, out) -> int:
    fan, sym, bound = _bound(args)
    results = []
    for beta in _betas(args):
        try:
            res = qsm_engine.partition(bound, beta, args.radius, args.mode, args.workers)
        except qsm_engine.DivergenceError as exc:
            _emit({"error": "divergence", "beta": beta, "detail": str(exc)}, "json", out)
            return EXIT_FAIL
        results.append(res.to_json())
    rows = [{"beta": r["beta"], "value": r["value"], "tail_bound": r["tail_bound"],
             "radius": r["radius"]} for r in results]
    _emit(results[0] if len(results) == 1 else {"results": results}, args.format, out, rows)
    return EXIT_OK


def cmd_gibbs(args, out) -> int:
    fan, sym, bound = _bound(args)
    r = _torsion_arg(args.r, {k: bound.ranks[k] for k in bound.energies})
    if args.gamma is not None:
        r = qsm_engine.apply_symmetry(r, args.gamma)
    rows, payloads = [], []
    for beta in _betas(args):
        try:
            g = qsm_engine.gibbs_state(bound, r, beta, args.radius, args.mode, args.workers)
        except qsm_engine.DivergenceError as exc:
            _emit({"error": "divergence", "beta": beta, "detail": str(exc)}, "json", out)
            return EXIT_FAIL
        payloads.append(g.to_json())
        rows.append({"beta": beta, "re": g.value.real, "im": g.value.imag,
                     "tail_bound": g.tail_bound, "radius": args.radius})
    _emit(payloads[0] if len(payloads) == 1 else {"results": payloads}, args.format, out, rows)
    return EXIT_OK


def _relation_maps(args, fan, sym) -> list[LatticeMap]:
    if args.phi:
        return [LatticeMap.of(_matrix(args.phi))]
    return [g.scaled(n) for n in (2, 3) for g in sym.G]


def cmd_relations(args, out) -> int:
    fan, sym, bound = _bound(args)
    ranks = fan.quotient_ranks()
    r = cps.TorsionLabel.of(_torsion_arg(args.r, ranks), ranks)
    base = cps.TruncatedRep(fan, args.radius, args.mode, cap=args.cap)
    g = ScalingHom(bound.c)
    reports = []
    failed = False
    for phi in _relation_maps(args, fan, sym):
        rep = base if args.no_enlarge else cps.standard_ambient(base, [phi])
        for report in (cps.check_conjugation(phi, r, rep), cps.check_transfer(phi, r, rep),
                       cps.check_covariance(phi, args.t, rep, bound, g, r),
                       cps.check_mu_isometry(phi, rep)):
            row = report.to_json()
            row["phi"] = phi.rows()
            row["radius"] = args.radius
            reports.append(row)
            failed |= not report.ok
    _emit({"radius": args.radius, "mode": args.mode, "r": r.to_json(), "reports": reports},
          args.format, out, reports)
    return EXIT_FAIL if failed else EXIT_OK


def cmd_frobenius(args, out) -> int:
    rows = []
    failed = None
    if args.element:
        try:
            a = lambda_f1.IntGroupAlgebra.from_json(json.loads(args.element))
        except (json.JSONDecodeError, KeyError, TypeError, ValueError) as exc:
            raise InputError(f"bad group algebra element: {exc}") from exc
        for p in args.p:
            ok = lambda_f1.check_frobenius_lift(p, a)
            rows.append({"p": p, "ok": ok, "element": a.to_json()})
            if not ok:
                failed = a.to_json()
    elif args.random:
        rng = np.random.default_rng(args.seed)
        for p in args.p:
            bad = 0
            for _ in range(args.random):
                a = lambda_f1.random_element(rng, args.n, args.rho)
                if not lambda_f1.check_frobenius_lift(p, a):
                    bad += 1
                    failed = failed or a.to_json()
            rows.append({"n": args.n, "rho": args.rho, "p": p, "checked": args.random, "failures": bad})
    else:
        for p in args.p:
            sweep = lambda_f1.frobenius_sweep(args.n, args.rho, p, tuple(args.coeffs),
                                              max_support=args.max_support)
            rows.append(sweep.to_json())
            if not sweep.ok:
                failed = sweep.witness.to_json()
    _emit({"results": rows, "witness": failed}, args.format, out, rows)
    return EXIT_FAIL if failed else EXIT_OK


def cmd_levels(args, out) -> int:
    fan = load_fan(args.fan)
    payload = lambda_f1.cyclotomic_level_count(fan, args.n)
    ok = True
    if args.t:
        rep = lambda_f1.transition_map_check(fan, args.n, args.t)
        payload["transition"] = rep.to_json()
        ok = rep.ok
    _emit(payload, args.format, out)
    return EXIT_OK if ok else EXIT_FAIL


def cmd_height(args, out) -> int:
    if args.affine:
        big, h = heights.height_affine(_rational_list(args.affine))
        _emit({"affine": args.affine, "H": big, "h": h}, args.format, out)
        return EXIT_OK
    if not args.point:
        raise InputError("give --point or --affine")
    pt = heights.ProjRatPoint.of(_rational_list(args.point))
    big, h = heights.height_proj(pt)
    payload = {"point": list(pt.coords), "H": big, "h": h}
    ok = True
    if args.phi:
        check = heights.scaling_check(_matrix(args.phi), pt)
        payload["scaling"] = check
        ok = check["ok"]
    _emit(payload, args.format, out)
    return EXIT_OK if ok else EXIT_FAIL


def _family(args) -> heights.MonomialFamily:
    if args.family == "power":
        gen = _rational_list(args.generator)
        return heights.power_family(len(gen), gen, args.box)
    if args.alpha is None or args.x is None:
        raise InputError("monomial families need --alpha and --x")
    xs = _rational_list(args.x)
    if args.family == "affine":
        return heights.affine_family(Fraction(args.alpha), xs)
    return heights.b_family(Fraction(args.alpha), xs)


def cmd_height_zeta(args, out) -> int:
    fam = _family(args)
    if args.rows:
        rows = list(heights.family_rows(fam, args.radius, args.digit_cap))
        _emit({"rows": rows, "radius": args.radius}, args.format, out, rows)
        return EXIT_OK
    results = [heights.height_zeta(fam, beta, args.radius).to_json() for beta in _betas(args)]
    rows = [{"beta": r["beta"], "value": r["value"], "tail_bound": r["tail_bound"],
             "radius": r["radius"], "excluded_zero_height": r["excluded_zero_height"]} for r in results]
    _emit(results[0] if len(results) == 1 else {"results": results}, args.format, out, rows)
    return EXIT_OK


def cmd_torified(args, out) -> int:
    dims = _int_list(args.dims)
    law = load_law(args.law)
    spec = law.default
    if spec is None:
        raise InputError("torified spectra use the law's 'default' entry")
    energies = [_make_energy(spec, law.kind, law.c, d) if d else None for d in dims]
    results = []
    for beta in _betas(args):
        try:
            res = qsm_engine.torified_partition(dims, energies, beta, args.mode, args.radius,
                                                args.index, args.workers)
        except qsm_engine.DivergenceError as exc:
            _emit({"error": "divergence", "beta": beta, "detail": str(exc)}, "json", out)
            return EXIT_FAIL
        row = res.to_json()
        row["index"] = args.index
        results.append(row)
    rows = [{"beta": r["beta"], "value": r["value"], "tail_bound": r["tail_bound"],
             "radius": r["radius"]} for r in results]
    _emit(results[0] if len(results) == 1 else {"results": results}, args.format, out, rows)
    return EXIT_OK


# -- parser ------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="toricendo", description=__doc__)
    parser.add_argument("-v", "--verbose", action="store_true", help="log diagnostics to stderr")
    sub = parser.add_subparsers(dest="command", required=True)

    def add(name: str, fn: Callable, help_text: str, fan=True, law=False, beta=False,
            radius=None, mode=None) -> argparse.ArgumentParser:
        p = sub.add_parser(name, help=help_text)
        p.set_defaults(fn=fn)
        p.add_argument("--format", choices=["json", "csv"], default="json")
        p.add_argument("--workers", type=int, default=1)
        p.add_argument("--seed", type=int, default=0)
        if fan:
            p.add_argument("--fan", required=True, help="fan JSON file")
        if law:
            p.add_argument("--law", help="energy law JSON file (default: symmetric Gram law)")
            p.add_argument("--c", type=float, default=1.0, help="scaling exponent of the default law")
        if beta:
            p.add_argument("--beta", type=float)
            p.add_argument("--beta-sweep", type=float, nargs=3, metavar=("START", "STOP", "STEP"))
        if radius is not None:
            p.add_argument("--radius", type=int, default=radius)
        if mode is not None:
            p.add_argument("--mode", choices=mode, default=mode[0])
        return p

    add("validate", cmd_validate, "validate a fan")
    add("orbits", cmd_orbits, "orbit lattices of every cone")
    add("symmetries", cmd_symmetries, "primitive symmetry group of a fan")
    add("spectrum", cmd_spectrum, "energy law, orbit representatives, transport check",
        law=True, radius=3)
    add("zeta", cmd_zeta, "partition function", law=True, beta=True, radius=1000,
        mode=["additive", "multiplicative", "factored"])
    p = add("gibbs", cmd_gibbs, "Gibbs state on e(r)", law=True, beta=True, radius=1000,
            mode=["additive", "multiplicative"])
    p.add_argument("--r", default="0", help='torsion label: rational ("1/5") or {"cone": [..]} JSON')
    p.add_argument("--gamma", type=int, help="unit applied to r before evaluation")
    p = add("relations", cmd_relations, "crossed-product relation checks", law=True, radius=30,
            mode=["additive", "multiplicative"])
    p.add_argument("--phi", help="lattice map as JSON rows (default: {2I, 3I} x G)")
    p.add_argument("--r", default="1/5")
    p.add_argument("--t", type=float, default=0.7)
    p.add_argument("--cap", type=int, default=2_000_000)
    p.add_argument("--no-enlarge", action="store_true", help="keep the ambient box at the radius")
    p = add("frobenius", cmd_frobenius, "Frobenius lift checks in Z[(Z/n)^rho]", fan=False)
    p.add_argument("--n", type=int, default=4)
    p.add_argument("--rho", type=int, default=1)
    p.add_argument("--p", type=int, nargs="+", default=[2, 3])
    p.add_argument("--coeffs", type=int, nargs="+", default=[-2, -1, 0, 1, 2])
    p.add_argument("--max-support", type=int, help="sweep only elements with at most this many nonzero terms")
    p.add_argument("--random", type=int, default=0, help="number of random elements instead of a sweep")
    p.add_argument("--element", help="single element as JSON {n, rho, terms}")
    p = add("levels", cmd_levels, "level-n point counts and transition maps")
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--t", type=int, default=0)
    p = add("height", cmd_height, "height of a rational point", fan=False)
    p.add_argument("--point", help="homogeneous coordinates, comma-separated rationals")
    p.add_argument("--affine", help="affine coordinates, comma-separated rationals")
    p.add_argument("--phi", help="P^d symmetry n*phi0 as JSON rows for a scaling check")
    p = add("height-zeta", cmd_height_zeta, "height zeta sum over a monomial family", fan=False,
            beta=True, radius=10)
    p.add_argument("--family", choices=["power", "b", "affine"], default="power")
    p.add_argument("--generator", default="1,2")
    p.add_argument("--box", choices=["positive", "symmetric"], default="positive")
    p.add_argument("--alpha")
    p.add_argument("--x")
    p.add_argument("--rows", action="store_true", help="emit (exponents, H, h) rows instead")
    p.add_argument("--digit-cap", type=int, default=40)
    p = add("torified", cmd_torified, "partition function of a disjoint union of tori", fan=False,
            beta=True, radius=1000, mode=["additive", "multiplicative"])
    p.add_argument("--dims", required=True, help="comma-separated torus dimensions")
    p.add_argument("--law", required=True)
    p.add_argument("--index", choices=["Z", "N"], default="Z")
    return parser


def main(argv: Sequence[str] | None = None, out=None) -> int:
    out = out if out is not None else sys.stdout
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code) if exc.code is not None else EXIT_INPUT
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, stream=sys.stderr,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.fn(args, out)
    except (FanFormatError, LawFormatError, InputError, SingularMapError, TableRangeError,
            FileNotFoundError, cps.BasisTooLargeError, heights.TooManyPointsError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT


if __name__ == "__main__":
    sys.exit(main())
