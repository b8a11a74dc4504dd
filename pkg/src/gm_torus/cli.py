"""Command-line entry point: ``gm-torus <command> --config run.cfg``.

Exit codes: 0 ok, 1 verification failure, 2 config error, 3 solver error.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import math
import sys
from pathlib import Path

import numpy as np

from . import colehopf_fields as chf
from . import effective_hamiltonian as eh
from . import variational as var
from .config import RunConfig, load_config
from .dual_eigensolver import SchrodingerParams, principal_eigenpair
from .errors import ConfigError, GMTorusError, SpecError
from .potential import realize
from .spectral_field import dump_field

EXIT_OK, EXIT_VERIFY, EXIT_CONFIG, EXIT_SOLVER = 0, 1, 2, 3


def _clean(obj):
    if isinstance(obj, dict):
        return {k: _clean(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_clean(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return _clean(obj.tolist())
    if isinstance(obj, (np.floating, float)):
        x = float(obj)
        return x if math.isfinite(x) else None
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, np.bool_):
        return bool(obj)
    return obj


def to_json(obj) -> str:
    return json.dumps(_clean(obj), indent=2, sort_keys=True, allow_nan=False) + "\n"


def _params(cfg: RunConfig, P=None) -> SchrodingerParams:
    W = realize(cfg.potential, cfg.grid, hbar=cfg.hbar)
    return SchrodingerParams(cfg.hbar, cfg.P if P is None else P, W)


def cmd_solve(cfg: RunConfig, out: Path | None = None) -> dict:
    sol = principal_eigenpair(_params(cfg), cfg.method)
    cf = chf.from_dual_solution(sol)
    report = {
        "config": cfg.describe(),
        "solution": sol.to_record(),
        "residuals": chf.residual_suite(cf),
        # reported only: P != 0 dual states need not be critical for the action
        "gm_criticality_residual": var.criticality_residual(cf.to_state())[1],
    }
    if cfg.dump_fields and out is not None:
        out.mkdir(parents=True, exist_ok=True)
        for name, f in (("w", cf.source.w), ("w_star", cf.source.w_star), ("sigma", cf.sigma),
                        ("v", cf.v), ("v_star", cf.v_star), ("z", cf.z)):
            dump_field(f, out / f"{name}.csv")
    return report


def scan_csv(result: eh.ScanResult, dim: int) -> str:
    def names(prefix):
        return [prefix] if dim == 1 else [f"{prefix}_{i}" for i in range(dim)]

    def mat_names(prefix):
        return [f"{prefix}_{i}{j}" for i in range(dim) for j in range(dim)]

    header = names("P") + ["E0", "Hbar"] + names("V") + names("grad_fd") + mat_names("hess_fd") + \
        mat_names("hess_formula") + ["gap"]
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(header)

    def fmt(x):
        return "" if x is None or not math.isfinite(x) else repr(float(x))

    for r in result.records:
        row = list(r.P) + [r.E0, r.Hbar] + list(r.V)
        row += list(r.grad_fd) if r.grad_fd is not None else [None] * dim
        for m in (r.hess_fd, r.hess_formula):
            row += list(np.asarray(m).ravel()) if m is not None else [None] * dim * dim
        row.append(r.gap)
        writer.writerow([fmt(x) for x in row])
    return buf.getvalue()


def cmd_scan(cfg: RunConfig):
    params = _params(cfg)
    points = cfg.scan_points()
    result = eh.scan(params, points, derivatives=cfg.scan_derivatives, delta=cfg.delta, method=cfg.method)
    worst, ok = eh.midpoint_convexity(params, points, cfg.tol["convexity"], cfg.method)
    verdict = {
        "convex": bool(result.convex and ok),
        "second_difference_convex": result.convex,
        "min_second_difference": result.min_second_difference,
        "midpoint_worst": worst,
        "midpoint_ok": ok,
        "points": len(points),
    }
    return scan_csv(result, cfg.grid.dim), verdict


def cmd_verify(cfg: RunConfig) -> dict:
    from .verification import run_verification

    report = run_verification(cfg)
    report["config"] = cfg.describe()
    return report


def cmd_second_variation(cfg: RunConfig, seed: int, n_seeds: int):
    W = realize(cfg.potential, cfg.grid, hbar=cfg.hbar)
    state = var.critical_state_p0(W, cfg.hbar, method=cfg.method)
    records = []
    for s in range(seed, seed + n_seeds):
        d = var.random_direction(state, s)
        jg = var.j_second_general(state, d)
        records.append({
            "seed": s,
            "j2_general": jg,
            "j2_gm": var.j_second_gm(state, d),
            "j2_fd": var.j_second_fd_oracle(state, d, cfg.delta),
            "sign": int(np.sign(jg)),
        })
    values = [r["j2_gm"] for r in records]
    summary = {
        "count": len(records),
        "min": min(values) if values else None,
        "max": max(values) if values else None,
        "positive": sum(r["sign"] > 0 for r in records),
        "negative": sum(r["sign"] < 0 for r in records),
        "E": state.E,
    }
    return records, summary


def cmd_invert_v(cfg: RunConfig) -> dict:
    params = _params(cfg)
    P = eh.invert_v(params, cfg.V_target, delta=cfg.delta, method=cfg.method)
    rec = eh.hbar_at(params.with_P(P), cfg.method)
    return {
        "config": cfg.describe(),
        "V_target": cfg.V_target,
        "P": P,
        "V_achieved": rec.V,
        "flux_residual": float(np.max(np.abs(rec.V - cfg.V_target))),
        "E0": rec.E0,
        "Hbar": rec.Hbar,
    }


def _write(out: Path | None, name: str, text: str) -> None:
    if out is None:
        sys.stdout.write(text)
        return
    out.mkdir(parents=True, exist_ok=True)
    (out / name).write_text(text)


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", type=Path, required=True, help="key = value run configuration")
    common.add_argument("--out", type=Path, default=None, help="output directory (default: stdout)")
    common.add_argument("--seed", type=int, default=None, help="overrides run.seed")
    common.add_argument("--quiet", action="store_true", help="suppress summary lines on stderr")

    parser = argparse.ArgumentParser(prog="gm-torus", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)
    sub.add_parser("solve", parents=[common], help="dual eigensolve + Cole-Hopf residual suite")
    sub.add_parser("scan", parents=[common], help="effective Hamiltonian scan over P")
    sub.add_parser("verify", parents=[common], help="run every invariant check; exit 1 on breach")
    sv = sub.add_parser("second-variation", parents=[common], help="second-variation census")
    sv.add_argument("--n-seeds", type=int, default=None, help="overrides run.n_seeds")
    sub.add_parser("invert-v", parents=[common], help="solve V(P) = V_target for P")
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)

    def say(msg):
        if not args.quiet:
            print(msg, file=sys.stderr)

    try:
        cfg = load_config(args.config)
        if args.seed is not None:
            cfg.seed = args.seed
        out = args.out or (Path(cfg.out_dir) if cfg.out_dir else None)
        if args.command == "solve":
            report = cmd_solve(cfg, out)
            _write(out, "solve.json", to_json(report))
            say(f"E0 = {report['solution']['E0']!r}, Hbar = {report['residuals']['Hbar']!r}")
        elif args.command == "scan":
            text, verdict = cmd_scan(cfg)
            _write(out, "scan.csv", text)
            if out is not None:
                _write(out, "scan.json", to_json(verdict))
            say(f"convex: {verdict['convex']} (min second difference {verdict['min_second_difference']:.6g}, "
                f"midpoint worst {verdict['midpoint_worst']:.3g})")
        elif args.command == "verify":
            report = cmd_verify(cfg)
            _write(out, "verify.json", to_json(report))
            n = len(report["checks"])
            say(f"{n - len(report['breaches'])}/{n} checks passed"
                + (f"; breaches: {', '.join(report['breaches'])}" if report["breaches"] else ""))
            return EXIT_OK if report["passed"] else EXIT_VERIFY
        elif args.command == "second-variation":
            n_seeds = args.n_seeds if args.n_seeds is not None else cfg.n_seeds
            records, summary = cmd_second_variation(cfg, cfg.seed, n_seeds)
            _write(out, "second_variation.json", to_json(records))
            say(f"j'' over {summary['count']} directions: min {summary['min']:.6g}, max {summary['max']:.6g} "
                f"({summary['positive']} positive, {summary['negative']} negative)")
        elif args.command == "invert-v":
            report = cmd_invert_v(cfg)
            _write(out, "invert_v.json", to_json(report))
            say(f"P = {report['P']}, |V - V_target| = {report['flux_residual']:.3g}")
    except (ConfigError, SpecError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except GMTorusError as exc:
        print(f"solver error ({type(exc).__name__}): {exc}", file=sys.stderr)
        return EXIT_SOLVER
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
