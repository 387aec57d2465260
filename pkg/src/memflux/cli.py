"""Command line entry point: ``memflux {simulate,classify,verify,sweep} <config> [--out DIR]``.

Exit codes: 0 success / reached horizon, 10 blow-up (simulate), 2 wrong regime
(verify), 1 any error or failed certificate.
"""
from __future__ import annotations

import argparse
import itertools
import json
import logging
import os
import sys
import tempfile
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path

from pydantic import ValidationError

from . import config as cfgmod
from .classifier import BLOW_UP_LARGE, classify, large_data_threshold
from .core import check_compatibility
from .errors import InvalidRegime, MemfluxError, WrongRegime
from .functionals import functional_series, kernel_condition_flags
from .geometry import principal_eigenpair
from .solver import simulate
from .supersolution import (
    build_boundary_layer,
    build_exponential,
    compare_trajectories,
    exponential_case,
    residual_field,
)

logger = logging.getLogger("memflux")

EXIT_OK = 0
EXIT_ERROR = 1
EXIT_WRONG_REGIME = 2
EXIT_BLOWUP = 10

SERIES_COLUMNS = ("t", "dt", "J1", "J2", "J3", "u_max", "mass_residual")
SWEEP_COLUMNS = ("q", "m", "l", "tag", "outcome", "t_blowup_estimate", "u_max", "error")


def fmt(x) -> str:
    if x is None:
        return ""
    if isinstance(x, str):
        return x
    return format(float(x), ".17g")


def write_atomic(path: Path, text: str):
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.")
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def csv_text(columns, rows) -> str:
    lines = [",".join(columns)]
    lines += [",".join(fmt(v) for v in row) for row in rows]
    return "\n".join(lines) + "\n"


def _out_dir(cfg, out) -> Path:
    return Path(out if out is not None else cfg.output.dir)


def _kernel_bounds(cfg, d, k):
    kc = cfg.kernel_checks
    return kernel_condition_flags(k, d, kc.t1, cfg.time.horizon, n_times=kc.samples)


def _verdict(cfg, prob, kb):
    verdict = classify(prob.params, kb)
    out = verdict.to_dict()
    if verdict.tag == BLOW_UP_LARGE:
        try:
            th = large_data_threshold(prob.params, kb, prob.domain)
            out["thresholds"] = dict(out["thresholds"] or {}, J1_required=th.J1_required, T0_bound=th.T0_bound)
        except InvalidRegime as exc:
            out["thresholds"] = dict(out["thresholds"] or {}, error=str(exc))
    return out


def run_simulate(config_path, out=None) -> int:
    cfg = cfgmod.load_config(config_path)
    prob = cfgmod.make_problem(cfg)
    d, p, k = prob.domain, prob.params, prob.kernel
    compat = check_compatibility(prob.initial, k, d, p.l, cfg.tolerances.compatibility_tol)
    traj = simulate(prob, cfg.time.horizon, cfg.time.snapshot_stride, cfgmod.make_options(cfg))
    series = functional_series(traj, p, k, d)
    o = traj.outcome
    summary = {
        "outcome": o.tag,
        "t_final": o.t,
        "u_max": o.u_max,
        "t_blowup_estimate": o.t_estimate,
        "blowup_exponent": o.alpha,
        "fit_residual": o.fit_residual,
        "steps": traj.steps,
        "rejected_steps": traj.rejected,
        "clip_count": traj.clip_count,
        "clipped": traj.clip_count > 0,
        "mass_residual_max": float(series.mass_residual.max()),
        "compatibility": compat.to_dict(),
        "verdict": _verdict(cfg, prob, _kernel_bounds(cfg, d, k)),
    }
    od = _out_dir(cfg, out)
    write_atomic(od / cfg.output.series, csv_text(SERIES_COLUMNS, series.rows()))
    write_atomic(od / cfg.output.summary, json.dumps(summary, indent=2) + "\n")
    print(json.dumps({"outcome": o.tag, "t_final": o.t, "t_blowup_estimate": o.t_estimate}))
    if o.tag == "reached_horizon":
        return EXIT_OK
    if o.tag == "blow_up":
        return EXIT_BLOWUP
    logger.error("integration stopped by step underflow at t=%g", o.t)
    return EXIT_ERROR


def run_classify(config_path, out=None) -> int:
    cfg = cfgmod.load_config(config_path)
    prob = cfgmod.make_problem(cfg)
    verdict = _verdict(cfg, prob, _kernel_bounds(cfg, prob.domain, prob.kernel))
    text = json.dumps(verdict)
    print(text)
    if out is not None:
        write_atomic(Path(out) / "verdict.json", text + "\n")
    return EXIT_OK


def build_certificate(prob, horizon):
    p, d, k, u0 = prob.params, prob.domain, prob.kernel, prob.initial
    try:
        exponential_case(p)
    except WrongRegime:
        return build_boundary_layer(p, d, u0, k, horizon)
    return build_exponential(p, principal_eigenpair(d), k, u0, d, horizon)


def run_verify(config_path, out=None) -> int:
    cfg = cfgmod.load_config(config_path)
    prob = cfgmod.make_problem(cfg)
    T = cfg.time.horizon
    try:
        spec = build_certificate(prob, T)
    except WrongRegime as exc:
        print(f"verify: {exc}", file=sys.stderr)
        return EXIT_WRONG_REGIME
    rep = residual_field(spec, prob.params, prob.kernel, prob.domain, prob.initial,
                         tolerance=cfg.tolerances.residual_tol)
    traj = simulate(prob, T, cfg.time.snapshot_stride, cfgmod.make_options(cfg))
    order = compare_trajectories(traj, spec, prob.domain, tol=cfg.tolerances.ordering_tol)
    report = rep.to_dict()
    report["ordering"] = order.to_dict()
    report["simulation_outcome"] = traj.outcome.tag
    passed = rep.passed and order.passed
    report["passed"] = passed
    write_atomic(_out_dir(cfg, out) / cfg.output.report, json.dumps(report, indent=2) + "\n")
    print(json.dumps({"passed": passed, "family": report["constants"]["family"]}))
    return EXIT_OK if passed else EXIT_ERROR


def _sweep_row(args):
    cfg_text, q, m, l, do_sim = args
    cfg = cfgmod.parse_config(cfg_text)
    row = {"q": q, "m": m, "l": l, "tag": None, "outcome": None, "t_blowup_estimate": None,
           "u_max": None, "error": None}
    try:
        prob = cfgmod.make_problem(cfg)
        prob = type(prob)(prob.params.replace(q=q, m=m, l=l), prob.domain, prob.kernel, prob.initial)
        kb = _kernel_bounds(cfg, prob.domain, prob.kernel)
        row["tag"] = classify(prob.params, kb).tag
        if do_sim:
            traj = simulate(prob, cfg.time.horizon, max(cfg.time.snapshot_stride, 1 << 30),
                            cfgmod.make_options(cfg))
            row["outcome"] = traj.outcome.tag
            row["t_blowup_estimate"] = traj.outcome.t_estimate
            row["u_max"] = traj.outcome.u_max
    except (MemfluxError, ValueError, ArithmeticError) as exc:
        row["error"] = f"{type(exc).__name__}: {exc}".replace(",", ";").replace("\n", " ")
    return tuple(row[c] for c in SWEEP_COLUMNS)


def sweep_rows(cfg, workers=None) -> list:
    sw = cfg.sweep or cfgmod.SweepConfig()
    ms = sw.m if sw.m is not None else [cfg.params.m]
    text = cfgmod.dump_config(cfg)
    tasks = [(text, q, m, l, sw.simulate) for q, m, l in itertools.product(sw.q, ms, sw.l)]
    n = sw.workers if workers is None else workers
    if n > 1 and len(tasks) > 1:
        with ProcessPoolExecutor(max_workers=n) as pool:
            return list(pool.map(_sweep_row, tasks))
    return [_sweep_row(t) for t in tasks]


def run_sweep(config_path, out=None, workers=None) -> int:
    cfg = cfgmod.load_config(config_path)
    rows = sweep_rows(cfg, workers)
    write_atomic(_out_dir(cfg, out) / cfg.output.sweep, csv_text(SWEEP_COLUMNS, rows))
    print(json.dumps({"rows": len(rows), "errors": sum(1 for r in rows if r[-1])}))
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="memflux", description=__doc__.splitlines()[0])
    ap.add_argument("-v", "--verbose", action="store_true")
    sub = ap.add_subparsers(dest="command", required=True)
    for name, helptext in (("simulate", "integrate and write series CSV + summary JSON"),
                           ("classify", "print the regime verdict as JSON"),
                           ("verify", "certify the regime's supersolution and compare with a simulation"),
                           ("sweep", "classify (and simulate) a grid of exponents")):
        sp = sub.add_parser(name, help=helptext)
        sp.add_argument("config")
        sp.add_argument("--out", default=None, help="output directory (default: config output.dir)")
        if name == "sweep":
            sp.add_argument("--workers", type=int, default=None)
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        if args.command == "simulate":
            return run_simulate(args.config, args.out)
        if args.command == "classify":
            return run_classify(args.config, args.out)
        if args.command == "verify":
            return run_verify(args.config, args.out)
        return run_sweep(args.config, args.out, args.workers)
    except (OSError, ValidationError, MemfluxError, ValueError) as exc:
        print(f"memflux {args.command}: {exc}", file=sys.stderr)
        return EXIT_ERROR


if __name__ == "__main__":
    sys.exit(main())
