"""Command-line front end.

Subcommands: constants | kappa | fig1 | stokes | bs | eig | validate |
report. Outputs are deterministic JSON (17 significant digits) or CSV
(12 digits, comma delimiter, LF endings); every file output gets a
manifest written beside it. Exit codes: 0 all budgets met, 2 precision
ceiling, 3 solver failure, 4 geometry failure.
"""

from __future__ import annotations

import argparse
import hashlib
import json
import math
import sys
import time
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path

import numpy as np

from . import __version__
from .cache import ResultCache, cache_from_options, canonical_json
from .eigensolver import (EigensolverError, ShootingConfig, fd_oracle,
                          solve_eigenvalue, spectrum_sweep)
from .instability import (DenominatorBelowNoise, InstabilityError, kappa,
                          growth_fit, wkb_validate, airy_connection_check,
                          far_field_amplitude_variation)
from .model import CutProximityError, ModelError, ModelParams
from .numkit import QuadratureError
from .semiclassics import (GROWTH_RATE, bs_solve, cached_constants,
                           predict_norm_sq, DEFAULT_BS_OFFSET)
from .stokes import StokesError, build_diagram
from .svg import SvgPlot

EXIT_OK = 0
EXIT_PRECISION = 2
EXIT_SOLVER = 3
EXIT_GEOMETRY = 4


def _json_default(o):
    if isinstance(o, (np.floating, np.integer)):
        return o.item()
    if isinstance(o, complex):
        return [o.real, o.imag]
    raise TypeError(f"not serializable: {type(o)}")


def emit_json(payload) -> str:
    return json.dumps(payload, sort_keys=True, indent=1, default=_json_default) + "\n"


def emit_csv(rows, header) -> str:
    def cell(v):
        if isinstance(v, float):
            return f"{v:.12g}"
        if isinstance(v, complex):
            return f"{v.real:.12g}"
        return str(v)
    lines = [",".join(header)]
    for row in rows:
        lines.append(",".join(cell(row[k]) for k in header))
    return "\n".join(lines) + "\n"


def write_output(text: str, args, payload_params: dict):
    if args.output:
        path = Path(args.output)
        path.write_text(text)
        manifest = {
            "command_line": " ".join(sys.argv[1:]),
            "config_hash": hashlib.sha256(
                canonical_json(payload_params).encode()).hexdigest(),
            "version": __version__,
            "timestamp": time.strftime("%Y-%m-%dT%H:%M:%SZ", time.gmtime()),
            "tolerances": {"tol_ode": args.tol_ode, "tol_quad": args.tol_quad},
        }
        path.with_suffix(path.suffix + ".manifest.json").write_text(
            emit_json(manifest))
    else:
        sys.stdout.write(text)


def _shooting_config(args) -> ShootingConfig:
    return ShootingConfig(tol_ode=args.tol_ode, tol_match=1e-10)


def _load_seeds(args):
    if not args.seed_file:
        return {}
    with open(args.seed_file) as f:
        entries = json.load(f)
    return {(e["n"], float(e["alpha"])): complex(e["lambda"][0], e["lambda"][1])
            for e in entries}


def _solve_records(alpha, n_lo, n_hi, args, cache: ResultCache = None,
                   precision="double"):
    """Instability records over an index range, cached and possibly
    parallel over indices."""
    cfg = _shooting_config(args)
    seeds = _load_seeds(args)

    def one(n):
        key = None
        if cache is not None:
            key = cache.key("kappa_record", {
                "alpha": alpha, "n": n, "precision": precision,
                "tol_ode": args.tol_ode, "tol_quad": args.tol_quad,
                "x_max": cfg.x_max})
            hit = cache.get(key)
            if hit is not None:
                return hit
        rec = solve_eigenvalue(n, alpha, cfg,
                               seed=seeds.get((n, alpha)))
        irec = kappa(rec, precision=precision)
        payload = irec.to_dict()
        if cache is not None:
            cache.put(key, payload)
        return payload

    ns = list(range(n_lo, n_hi + 1))
    if args.jobs > 1:
        with ThreadPoolExecutor(max_workers=args.jobs) as pool:
            return list(pool.map(one, ns))
    return [one(n) for n in ns]


def cmd_constants(args) -> int:
    cst = cached_constants()
    payload = {
        "C": cst.C, "r": cst.r, "c": cst.c, "growth_rate": cst.growth_rate,
        "norm_prefactor": cst.norm_prefactor,
        "C_quadrature": cst.C_quadrature, "r_quadrature": cst.r_quadrature,
        "discrepancy_C": abs(cst.C - cst.C_quadrature),
        "discrepancy_r": abs(cst.r - cst.r_quadrature),
        "discrepancy_c": abs(cst.c - cst.c_log_route),
    }
    if args.out == "csv":
        header = ["C", "r", "c", "growth_rate", "norm_prefactor",
                  "discrepancy_C", "discrepancy_r", "discrepancy_c"]
        text = emit_csv([payload], header)
    else:
        text = emit_json(payload)
    write_output(text, args, payload_params={"op": "constants"})
    return EXIT_OK


_KAPPA_CSV = ["n", "alpha", "lambda_re", "lambda_im", "norm_sq",
              "self_pairing_re", "self_pairing_im", "kappa", "kappa_contour",
              "log_kappa", "quad_err"]


def _kappa_rows(records):
    rows = []
    for r in records:
        rows.append({
            "n": r["n"], "alpha": r["alpha"],
            "lambda_re": r["lambda"][0], "lambda_im": r["lambda"][1],
            "norm_sq": r["norm_sq"],
            "self_pairing_re": r["self_pairing"][0],
            "self_pairing_im": r["self_pairing"][1],
            "kappa": r["kappa"], "kappa_contour": r["kappa_contour"],
            "log_kappa": r["log_kappa"], "quad_err": r["quad_err"],
        })
    return rows


def cmd_kappa(args) -> int:
    ceiling = 12 if args.precision == "double" else 20
    if args.n_max > ceiling:
        sys.stderr.write(f"n-max {args.n_max} beyond the {args.precision} "
                         f"ceiling {ceiling}\n")
        return EXIT_PRECISION
    cache = cache_from_options(args.cache)
    records = _solve_records(args.alpha, args.n_min, args.n_max, args,
                             cache=cache, precision=args.precision)
    params = {"op": "kappa", "alpha": args.alpha,
              "n": [args.n_min, args.n_max], "precision": args.precision}
    if args.out == "csv":
        text = emit_csv(_kappa_rows(records), _KAPPA_CSV)
    else:
        text = emit_json(records)
    write_output(text, args, params)
    if args.svg:
        _kappa_svg(records, args.svg)
    return EXIT_OK


def _kappa_svg(records, path):
    ns = [r["n"] for r in records]
    logk = [r["log_kappa"] for r in records]
    offs = [lk - (GROWTH_RATE * n - 0.25 * math.log(n))
            for n, lk in zip(ns, logk)]
    offset = sum(offs) / len(offs)
    plot = SvgPlot(title="instability index growth", xlabel="n",
                   ylabel="log kappa_n")
    grid = np.linspace(min(ns), max(ns), 100)
    plot.polyline(grid, [GROWTH_RATE * n - 0.25 * math.log(n) + offset
                         for n in grid],
                  stroke="#909090", dash="6,4", width=1.2)
    plot.points(ns, logk)
    plot.label(ns[0] + 0.3, max(logk), "rate line pi/sqrt(3)", size=11)
    plot.write(path)


def cmd_bs(args) -> int:
    rows = []
    for n in range(args.n_min, args.n_max + 1):
        sol = bs_solve(n, args.alpha)
        rows.append({"n": n, "alpha": args.alpha, "h": sol.h,
                     "lambda_bs": sol.lambda_bs, "residual": sol.residual})
    params = {"op": "bs", "alpha": args.alpha, "n": [args.n_min, args.n_max]}
    if args.out == "csv":
        text = emit_csv(rows, ["n", "alpha", "h", "lambda_bs", "residual"])
    else:
        text = emit_json(rows)
    write_output(text, args, params)
    return EXIT_OK


def cmd_eig(args) -> int:
    cfg = _shooting_config(args)
    seeds = _load_seeds(args)
    rows = []
    for n in range(args.n_min, args.n_max + 1):
        rec = solve_eigenvalue(n, args.alpha, cfg, seed=seeds.get((n, args.alpha)),
                               assemble=False)
        lam = complex(rec.lam)
        rows.append({"n": n, "alpha": args.alpha, "lambda_re": lam.real,
                     "lambda_im": lam.imag, "h": rec.h,
                     "residual": rec.match_residual,
                     "iters": rec.newton_iters})
    params = {"op": "eig", "alpha": args.alpha, "n": [args.n_min, args.n_max]}
    if args.out == "csv":
        text = emit_csv(rows, ["n", "alpha", "lambda_re", "lambda_im", "h",
                               "residual", "iters"])
    else:
        text = emit_json(rows)
    write_output(text, args, params)
    return EXIT_OK


def cmd_stokes(args) -> int:
    p = ModelParams(args.alpha, args.h)
    diag = build_diagram(p, x_max=10.0)
    payload = diag.to_dict()
    write_output(emit_json(payload), args,
                 {"op": "stokes", "alpha": args.alpha, "h": args.h})
    if args.svg:
        _stokes_svg(diag, args.svg)
    return EXIT_OK


def _stokes_svg(diag, path):
    plot = SvgPlot(width=640, height=640, title="Stokes geometry",
                   xlabel="Re x", ylabel="Im x")
    plot.set_limits(-4, 4, -4, 4)
    # asymptotic direction rays
    for k in range(5):
        ang = math.pi / 10 + 2 * k * math.pi / 5
        plot.polyline([0, 6 * math.cos(ang)], [0, 6 * math.sin(ang)],
                      stroke="#c8c8c8", dash="2,5", width=1.0)
    for ln in diag.lines:
        v = np.asarray(ln.polyline.vertices)
        plot.polyline(v.real, v.imag, stroke="#1f4e9c", width=1.6)
    for arm in (diag.ell_tilde_plus, diag.ell_tilde_minus):
        v = np.asarray(arm.polyline.vertices)
        plot.polyline(v.real, v.imag, stroke="#b03030", dash="7,4", width=1.4)
    cv = np.asarray(diag.contour_L.vertices)
    plot.polyline(cv.real, cv.imag, stroke="#208040", width=2.2, opacity=0.7)
    tps = [diag.tps.x_plus, diag.tps.x_minus, diag.tps.x_i]
    plot.points([t.real for t in tps], [t.imag for t in tps], fill="#000000",
                r=4)
    plot.write(path)


def cmd_fig1(args) -> int:
    if args.steps < 16:
        sys.stderr.write("need at least 16 sweep steps\n")
        return EXIT_SOLVER
    grid = np.linspace(args.alpha_max, args.alpha_min, args.steps)
    cfg = ShootingConfig(tol_ode=args.tol_ode, coords="physical")
    records, events = spectrum_sweep(grid, args.n_max, cfg)
    curves = {}
    for r in records:
        lam = complex(r.lam)
        curves.setdefault(r.n, []).append([r.alpha, lam.real, lam.imag])
    payload = {
        "alpha_range": [args.alpha_min, args.alpha_max],
        "curves": [{"n": n, "points": pts} for n, pts in sorted(curves.items())],
        "branch_events": [e.to_dict() for e in events],
    }
    write_output(emit_json(payload), args, {"op": "fig1",
                                            "range": [args.alpha_min, args.alpha_max],
                                            "steps": args.steps,
                                            "n_max": args.n_max})
    if args.svg:
        _fig1_svg(payload, args.svg)
    return EXIT_OK


def _fig1_svg(payload, path):
    plot = SvgPlot(title="eigenvalue curves", xlabel="alpha",
                   ylabel="Re lambda_n")
    palette = ["#1f4e9c", "#b03030", "#208040", "#8040a0", "#c07820",
               "#107080"]
    for curve in payload["curves"]:
        pts = sorted(curve["points"])
        xs = [p[0] for p in pts]
        ys = [p[1] for p in pts]
        col = palette[(curve["n"] - 1) % len(palette)]
        plot.polyline(xs, ys, stroke=col, width=1.6)
        nonreal = [(p[0], p[1]) for p in pts if abs(p[2]) > 1e-3]
        if nonreal:
            plot.points([q[0] for q in nonreal], [q[1] for q in nonreal],
                        fill=col, r=2.0)
    for ev in payload["branch_events"]:
        mid = 0.5 * (ev["alpha_low"] + ev["alpha_high"])
        plot.points([mid], [0.0], fill="#000000", r=4.0)
    plot.write(path)


def _validate_checks(args):
    cfg = _shooting_config(args)
    n = args.n
    alpha = args.alpha
    checks = []

    def add(name, measured, threshold, ok):
        checks.append({"check": name, "measured": measured,
                       "threshold": threshold, "pass": bool(ok)})

    suites = ([args.suite] if args.suite != "all"
              else ["bs", "homotopy", "wkb", "airy", "norm"])
    rec = None

    def need_record():
        nonlocal rec
        if rec is None:
            rec = solve_eigenvalue(n, alpha, cfg)
        return rec

    for suite in suites:
        if suite == "bs":
            r = solve_eigenvalue(n, alpha, cfg, assemble=False)
            lam = complex(r.lam).real
            lam_bs = bs_solve(n + DEFAULT_BS_OFFSET, alpha).lambda_bs
            relerr = abs(lam - lam_bs) / lam
            thr = 0.05 if n < 5 else 0.01
            add("bs_proximity", relerr, thr, relerr <= thr)
        elif suite == "homotopy":
            r = need_record()
            irec = kappa(r)
            gap = abs(irec.kappa - irec.kappa_contour) / irec.kappa
            budget = 10.0 * irec.quadrature_error
            add("homotopy_denominator", gap, budget, gap <= budget)
        elif suite == "wkb":
            r = need_record()
            rep = wkb_validate(r, (2.5, 6.0))
            add("wkb_window_deviation", rep.sup_deviation, 0.05,
                rep.sup_deviation <= 0.05)
            var = far_field_amplitude_variation(r)
            add("far_field_amplitude", var, 0.02, var <= 0.02)
        elif suite == "airy":
            r = need_record()
            rep = airy_connection_check(r)
            add("airy_modulus_plus", rep.modulus_error_plus, 0.15,
                rep.modulus_error_plus <= 0.15)
            add("airy_modulus_minus", rep.modulus_error_minus, 0.15,
                rep.modulus_error_minus <= 0.15)
            target = ((n - 1) * math.pi + math.pi / 2) % (2 * math.pi)
            got = rep.phase_difference % (2 * math.pi)
            dphi = min(abs(got - target), 2 * math.pi - abs(got - target))
            add("airy_phase", dphi, 0.3, dphi <= 0.3)
        elif suite == "norm":
            r = need_record()
            pred = predict_norm_sq(n, alpha, r.h)
            ratio = math.exp(r.log_norm_sq_kernel() - pred.log_value)
            add("norm_asymptotic_ratio", ratio, [0.8, 1.25],
                0.8 <= ratio <= 1.25)
        else:
            raise ValueError(f"unknown suite {suite}")
    return checks


def cmd_validate(args) -> int:
    checks = _validate_checks(args)
    payload = {"alpha": args.alpha, "n": args.n, "checks": checks,
               "all_pass": all(c["pass"] for c in checks)}
    write_output(emit_json(payload), args,
                 {"op": "validate", "alpha": args.alpha, "n": args.n,
                  "suite": args.suite})
    return EXIT_OK if payload["all_pass"] else EXIT_SOLVER


def cmd_report(args) -> int:
    cst = cached_constants()
    cache = cache_from_options(args.cache)
    records = _solve_records(0.0, 4, args.n_max, args, cache=cache)
    from .instability import InstabilityRecord
    irecs = [InstabilityRecord(
        n=r["n"], alpha=r["alpha"], lam=complex(*r["lambda"]),
        norm_sq=r["norm_sq"], self_pairing=complex(*r["self_pairing"]),
        kappa=r["kappa"], kappa_contour=r["kappa_contour"],
        log_kappa=r["log_kappa"], quadrature_error=r["quad_err"])
        for r in records]
    fit = growth_fit(irecs)
    args_v = argparse.Namespace(**vars(args))
    args_v.suite = "all"
    args_v.n = min(10, args.n_max)
    args_v.alpha = 0.0
    checks = _validate_checks(args_v)
    payload = {
        "version": __version__,
        "constants": {"C": cst.C, "r": cst.r, "c": cst.c,
                      "growth_rate": cst.growth_rate},
        "growth_fit": fit.to_dict(),
        "slope_window": [1.75, 1.88],
        "slope_pass": 1.75 <= fit.slope <= 1.88,
        "records": records,
        "checks": checks,
        "all_pass": (1.75 <= fit.slope <= 1.88
                     and all(c["pass"] for c in checks)),
    }
    write_output(emit_json(payload), args, {"op": "report", "n_max": args.n_max})
    return EXIT_OK if payload["all_pass"] else EXIT_SOLVER


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--tol-ode", type=float, default=1e-12)
    common.add_argument("--tol-quad", type=float, default=1e-12)
    common.add_argument("--cache", type=str, default=None)
    common.add_argument("--jobs", type=int, default=1)
    common.add_argument("--out", choices=["json", "csv"], default="json")
    common.add_argument("--svg", type=str, default=None)
    common.add_argument("--seed-file", type=str, default=None)
    common.add_argument("--output", type=str, default=None,
                        help="write to file (with manifest) instead of stdout")

    ap = argparse.ArgumentParser(
        prog="cubicpt",
        description="complex cubic oscillator laboratory: spectra, Stokes "
                    "geometry, instability indices")
    sub = ap.add_subparsers(dest="command", required=True)

    def sub_parser(name):
        return sub.add_parser(name, parents=[common])

    sub_parser("constants")

    k = sub_parser("kappa")
    k.add_argument("--alpha", type=float, required=True)
    k.add_argument("--n-min", type=int, default=4)
    k.add_argument("--n-max", type=int, default=12)
    k.add_argument("--precision", choices=["double", "dd"], default="double")

    b = sub_parser("bs")
    b.add_argument("--alpha", type=float, required=True)
    b.add_argument("--n-min", type=int, default=0)
    b.add_argument("--n-max", type=int, default=12)

    e = sub_parser("eig")
    e.add_argument("--alpha", type=float, required=True)
    e.add_argument("--n-min", type=int, default=1)
    e.add_argument("--n-max", type=int, default=6)

    s = sub_parser("stokes")
    s.add_argument("--alpha", type=float, required=True)
    s.add_argument("--h", type=float, required=True)

    f = sub_parser("fig1")
    f.add_argument("--alpha-min", type=float, default=-5.0)
    f.add_argument("--alpha-max", type=float, default=1.0)
    f.add_argument("--steps", type=int, default=25)
    f.add_argument("--n-max", type=int, default=6)

    v = sub_parser("validate")
    v.add_argument("--alpha", type=float, required=True)
    v.add_argument("--n", type=int, required=True)
    v.add_argument("--suite", default="all",
                   choices=["wkb", "airy", "homotopy", "bs", "norm", "all"])

    r = sub_parser("report")
    r.add_argument("--n-max", type=int, default=10)

    return ap


_DISPATCH = {
    "constants": cmd_constants,
    "kappa": cmd_kappa,
    "bs": cmd_bs,
    "eig": cmd_eig,
    "stokes": cmd_stokes,
    "fig1": cmd_fig1,
    "validate": cmd_validate,
    "report": cmd_report,
}


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return _DISPATCH[args.command](args)
    except DenominatorBelowNoise as exc:
        sys.stderr.write(f"precision ceiling: {exc}\n")
        return EXIT_PRECISION
    except (EigensolverError, InstabilityError) as exc:
        sys.stderr.write(f"solver failure: {exc}\n")
        return EXIT_SOLVER
    except (StokesError, ModelError, CutProximityError, QuadratureError) as exc:
        sys.stderr.write(f"geometry failure: {exc}\n")
        return EXIT_GEOMETRY


if __name__ == "__main__":
    sys.exit(main())
