"""Command-line front end: fit, simulate, elicit, partition, compare.

Configuration is a small JSON document; datasets and all outputs are CSV.
Floats are printed with 12 significant digits so every emitted file
re-parses to the in-memory values. Exit codes: 0 success, 1 numeric or
internal failure, 2 malformed input.

Config schema::

    {
      "grid":   {"nu": 500.0, "kappa": 0.1, "r": 10}      # log-spaced form
                or {"boundaries": [0.0, 52.7, ...]},       # explicit form
      "prior":  {"mean": [-6.0, 0.02], "variances": [1.0, 0.0004],
                 "rho": 0.92, "c0": 0.0},
      "method": "log-mode",                                # optional
      "seed": 0,                                           # optional
      "censor_rate": 0.15,                                 # simulate only
      "covariate_ranges": [[-20, 20]],                     # simulate only
      "mcmc": {"chains": 2, "iterations": 10000, "burn_in": 2000}  # compare
    }

Dataset CSV: header ``id,time,status,x1..xq`` with status 1 = death and
0 = censored. Truth CSV for simulate: header ``interval,b0..bq``.
"""
from __future__ import annotations

import argparse
import csv
import json
import math
import sys
import warnings
from dataclasses import dataclass

import numpy as np

from . import engine, elicit as elicit_mod, oracle
from .dynprior import StationarySpec
from .errors import BlkSurvError, DomainError, InputError
from .guide import GuideMethod
from .hazards import (EventStatus, IntervalGrid, SurvivalRecord, log_grid,
                      log_grid_midpoints)

__all__ = ["main", "entrypoint", "RunConfig", "load_config", "read_dataset"]


def _fmt(x: float) -> str:
    return "%.12g" % float(x)


@dataclass(frozen=True)
class RunConfig:
    grid: IntervalGrid
    log_form: tuple | None          # (nu, kappa, r) when the grid is log-spaced
    prior: StationarySpec
    method: GuideMethod
    seed: int
    censor_rate: float
    covariate_ranges: tuple
    mcmc: dict


def load_config(path: str) -> RunConfig:
    """Parse and validate a JSON run configuration."""
    with open(path) as fh:
        try:
            raw = json.load(fh)
        except json.JSONDecodeError as exc:
            raise InputError(f"{path}: invalid JSON ({exc})") from exc
    if not isinstance(raw, dict):
        raise InputError(f"{path}: config must be a JSON object")

    gspec = raw.get("grid")
    if not isinstance(gspec, dict):
        raise InputError("config needs a 'grid' object")
    has_log = {"nu", "kappa", "r"} <= set(gspec)
    has_explicit = "boundaries" in gspec
    if has_log == has_explicit:
        raise InputError("grid must carry exactly one of {nu,kappa,r} or boundaries")
    try:
        if has_log:
            log_form = (float(gspec["nu"]), float(gspec["kappa"]), int(gspec["r"]))
            grid = log_grid(*log_form)
        else:
            log_form = None
            grid = IntervalGrid(tuple(float(b) for b in gspec["boundaries"]))
    except (TypeError, ValueError, DomainError) as exc:
        raise InputError(f"invalid grid: {exc}") from exc

    pspec = raw.get("prior")
    if not isinstance(pspec, dict):
        raise InputError("config needs a 'prior' object")
    try:
        mean = np.asarray(pspec["mean"], dtype=np.float64)
        variances = np.asarray(pspec["variances"], dtype=np.float64)
        if mean.ndim != 1 or variances.shape != mean.shape:
            raise InputError("prior mean and variances must be equal-length lists")
        if np.any(variances <= 0.0) or not np.all(np.isfinite(variances)):
            raise InputError("prior variances must be finite and > 0")
        prior = StationarySpec(mean, np.diag(variances),
                               float(pspec["rho"]), float(pspec["c0"]))
    except KeyError as exc:
        raise InputError(f"prior is missing {exc}") from exc
    except (TypeError, ValueError, DomainError) as exc:
        raise InputError(f"invalid prior: {exc}") from exc

    method = GuideMethod.parse(raw.get("method", GuideMethod.LOG_MODE.value))
    seed = int(raw.get("seed", 0))
    censor_rate = float(raw.get("censor_rate", 0.0))
    ranges = tuple(tuple(float(v) for v in pair)
                   for pair in raw.get("covariate_ranges", []))
    mcmc = dict(raw.get("mcmc", {}))
    return RunConfig(grid, log_form, prior, method, seed, censor_rate,
                     ranges, mcmc)


def read_dataset(path: str):
    """Read survival records from CSV, rejecting malformed rows by line."""
    records = []
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise InputError(f"{path}: empty file") from None
        if len(header) < 3 or [h.strip() for h in header[:3]] != ["id", "time", "status"]:
            raise InputError(f"{path}: header must start with id,time,status")
        ncov = len(header) - 3
        for lineno, row in enumerate(reader, start=2):
            if not row:
                continue
            if len(row) != 3 + ncov or any(cell.strip() == "" for cell in row):
                raise InputError(f"{path}: line {lineno}: expected {3 + ncov} "
                                 "non-empty fields")
            try:
                time = float(row[1])
                status = int(row[2])
                covs = tuple(float(c) for c in row[3:])
            except ValueError as exc:
                raise InputError(f"{path}: line {lineno}: {exc}") from exc
            if status not in (0, 1):
                raise InputError(f"{path}: line {lineno}: status must be 0 or 1")
            try:
                records.append(SurvivalRecord(row[0], time,
                                              EventStatus(status), covs))
            except InputError as exc:
                raise InputError(f"{path}: line {lineno}: {exc}") from exc
    return records


def _write_csv(path, header, rows):
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(header)
        writer.writerows(rows)


def _plot_positions(config: RunConfig) -> np.ndarray:
    grid = config.grid
    if config.log_form is not None:
        return log_grid_midpoints(*config.log_form)
    b = np.asarray(grid.boundaries)
    mids = list(0.5 * (b[:-1] + b[1:]))
    if len(b) >= 2:
        mids.append(b[-1] + 0.5 * (b[-1] - b[-2]))
    else:
        mids.append(0.0)
    return np.asarray(mids)


# ----------------------------------------------------------------------
# subcommands
# ----------------------------------------------------------------------

def cmd_fit(args) -> int:
    config = load_config(args.config)
    method = GuideMethod.parse(args.method) if args.method else config.method
    records = read_dataset(args.data)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        summary = engine.fit(records, config.grid, config.prior, method,
                             naive=args.naive)
    for note in summary.notes:
        print(f"warning: {note}", file=sys.stderr)

    grid = config.grid
    rows = [(j, _fmt(grid.upper(j)), f"b{c}",
             _fmt(summary.coef_means[j - 1, c]), _fmt(summary.coef_sds[j - 1, c]))
            for j in range(1, summary.r + 1) for c in range(summary.d)]
    _write_csv(f"{args.out}/posterior.csv",
               ["interval", "tau_upper", "coef_name", "mean", "sd"], rows)

    rows = [(summary.record_ids[int(i)], int(j), _fmt(f), _fmt(q),
             _fmt(a), _fmt(t))
            for i, j, f, q, a, t in zip(
                summary.eta_individual, summary.eta_interval, summary.eta_f,
                summary.eta_q, summary.eta_alpha, summary.eta_theta)]
    _write_csv(f"{args.out}/eta.csv",
               ["i", "j", "f_post", "q_post", "alpha_post", "theta_post"], rows)

    mids = _plot_positions(config)
    rows = [(j, _fmt(mids[j - 1]), f"b{c}",
             _fmt(summary.coef_means[j - 1, c]),
             _fmt(summary.coef_means[j - 1, c] - 2 * summary.coef_sds[j - 1, c]),
             _fmt(summary.coef_means[j - 1, c] + 2 * summary.coef_sds[j - 1, c]))
            for j in range(1, summary.r + 1) for c in range(summary.d)]
    _write_csv(f"{args.out}/plotdata.csv",
               ["interval", "tau_mid", "coef_name", "mean", "lo", "hi"], rows)
    return 0


def _read_truth(path: str, r: int, d: int) -> np.ndarray:
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is None or header[0].strip() != "interval":
            raise InputError(f"{path}: truth header must start with 'interval'")
        if len(header) != d + 1:
            raise InputError(f"{path}: expected {d} coefficient columns")
        beta = np.full((r, d), np.nan)
        for lineno, row in enumerate(reader, start=2):
            if not row:
                continue
            try:
                j = int(row[0])
                vals = [float(v) for v in row[1:]]
            except ValueError as exc:
                raise InputError(f"{path}: line {lineno}: {exc}") from exc
            if not (1 <= j <= r) or len(vals) != d:
                raise InputError(f"{path}: line {lineno}: bad interval or width")
            beta[j - 1] = vals
    if np.any(np.isnan(beta)):
        raise InputError(f"{path}: missing rows for some intervals")
    return beta


def cmd_simulate(args) -> int:
    config = load_config(args.config)
    seed = args.seed if args.seed is not None else config.seed
    d = config.prior.dim
    r = config.grid.r
    beta = _read_truth(args.truth, r, d)
    n = args.n
    if n < 0:
        raise InputError("simulate needs n >= 0")
    ranges = config.covariate_ranges or tuple((-1.0, 1.0) for _ in range(d - 1))
    if len(ranges) != d - 1:
        raise InputError(f"need {d - 1} covariate ranges, got {len(ranges)}")
    cov_seq, sim_seq = np.random.SeedSequence(seed).spawn(2)
    rng = np.random.default_rng(cov_seq)
    raw = np.empty((n, d - 1))
    for k, (lo, hi) in enumerate(ranges):
        raw[:, k] = rng.uniform(lo, hi, size=n)
    design = np.hstack([np.ones((n, 1)), raw])
    records = engine.simulate(config.grid, beta, design, config.censor_rate,
                              sim_seq)
    header = ["id", "time", "status"] + [f"x{k}" for k in range(1, d)]
    rows = [(rec.id, _fmt(rec.time), int(rec.status),
             *[_fmt(c) for c in rec.covariates]) for rec in records]
    _write_csv(f"{args.out}/dataset.csv", header, rows)
    return 0


def cmd_elicit(args) -> int:
    with open(args.data) as fh:
        try:
            raw = json.load(fh)
        except json.JSONDecodeError as exc:
            raise InputError(f"{args.data}: invalid JSON ({exc})") from exc
    rows = []
    try:
        if "baseline" in raw:
            base = raw["baseline"]
            mean, sd = elicit_mod.baseline_range(float(base["low"]),
                                                 float(base["high"]))
            rows.append(("baseline", _fmt(mean), _fmt(sd), _fmt(sd * sd)))
        for eff in raw.get("effects", []):
            judgement = elicit_mod.RatioJudgement(
                float(eff["gap"]), float(eff["low"]), float(eff["high"]))
            mean, var = elicit_mod.moments_from_ratios(judgement)
            rows.append((str(eff["name"]), _fmt(mean), _fmt(math.sqrt(var)),
                         _fmt(var)))
    except (KeyError, TypeError, ValueError) as exc:
        raise InputError(f"{args.data}: malformed judgement ({exc})") from exc
    if not rows:
        raise InputError(f"{args.data}: no judgements found")
    _write_csv(f"{args.out}/prior.csv", ["effect", "mean", "sd", "variance"], rows)
    return 0


def cmd_partition(args) -> int:
    if args.nu is not None and args.kappa is not None and args.r is not None:
        nu, kappa, r = args.nu, args.kappa, args.r
    elif args.config:
        config = load_config(args.config)
        if config.log_form is None:
            raise InputError("config grid is explicit; pass --nu/--kappa/--r")
        nu, kappa, r = config.log_form
    else:
        raise InputError("partition needs --nu, --kappa and --r (or --config)")
    try:
        grid = log_grid(nu, kappa, r)
    except DomainError as exc:
        raise InputError(str(exc)) from exc
    rows = [(j, _fmt(grid.upper(j))) for j in range(1, grid.r + 1)]
    _write_csv(f"{args.out}/grid.csv", ["j", "tau_upper"], rows)
    return 0


def cmd_compare(args) -> int:
    config = load_config(args.config)
    method = GuideMethod.parse(args.method) if args.method else config.method
    seed = args.seed if args.seed is not None else config.seed
    records = read_dataset(args.data)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        summary = engine.fit(records, config.grid, config.prior, method)
    mcmc_args = {"chains": 2, "iterations": 10000, "burn_in": 2000}
    mcmc_args.update(config.mcmc)
    ref = oracle.mcmc_reference(records, config.grid, config.prior,
                                seed=seed, **mcmc_args)
    for note in ref.warnings:
        print(f"warning: {note}", file=sys.stderr)
    rows = []
    for j in range(1, summary.r + 1):
        for c in range(summary.d):
            blk_m = summary.coef_means[j - 1, c]
            fb_m = ref.coef_means[j - 1, c]
            fb_s = ref.coef_sds[j - 1, c]
            rows.append((j, f"b{c}", _fmt(blk_m), _fmt(summary.coef_sds[j - 1, c]),
                         _fmt(fb_m), _fmt(fb_s), _fmt(ref.coef_mcse[j - 1, c]),
                         _fmt((fb_m - blk_m) / fb_s)))
    _write_csv(f"{args.out}/comparison.csv",
               ["interval", "coef_name", "blk_mean", "blk_sd", "fb_mean",
                "fb_sd", "fb_mcse", "std_diff"], rows)
    return 0


# ----------------------------------------------------------------------
# argument parsing
# ----------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="blksurv",
        description="Commutative kinematic inference for dynamic "
                    "piecewise-hazard survival models")
    sub = parser.add_subparsers(dest="command", required=True)
    methods = [m.value for m in GuideMethod]

    def common(p, data=False, config=False):
        p.add_argument("--out", required=True, help="output directory")
        p.add_argument("--seed", type=int, default=None)
        p.add_argument("--method", choices=methods, default=None)
        if config:
            p.add_argument("--config", required=True, help="JSON config path")
        if data:
            p.add_argument("--data", required=True, help="input CSV path")

    p = sub.add_parser("fit", help="fit a dataset and write posterior tables")
    common(p, data=True, config=True)
    p.add_argument("--naive", action="store_true",
                   help="use the joint-state reference pooling (small inputs)")
    p.set_defaults(func=cmd_fit)

    p = sub.add_parser("simulate", help="draw a synthetic dataset")
    common(p, config=True)
    p.add_argument("--truth", required=True, help="true coefficient CSV")
    p.add_argument("--n", type=int, required=True, help="number of individuals")
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("elicit", help="convert ratio judgements to prior moments")
    common(p, data=True)
    p.set_defaults(func=cmd_elicit)

    p = sub.add_parser("partition", help="write the log-spaced interval grid")
    common(p)
    p.add_argument("--config", default=None, help="JSON config path")
    p.add_argument("--nu", type=float, default=None)
    p.add_argument("--kappa", type=float, default=None)
    p.add_argument("--r", type=int, default=None)
    p.set_defaults(func=cmd_partition)

    p = sub.add_parser("compare", help="fit and compare against the sampler")
    common(p, data=True, config=True)
    p.set_defaults(func=cmd_compare)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except InputError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except BlkSurvError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


def entrypoint() -> None:
    sys.exit(main())


if __name__ == "__main__":
    entrypoint()
