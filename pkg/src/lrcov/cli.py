"""
Command-line entry point.

Subcommands: ``estimate``, ``simulate``, ``benchmark``, ``backtest`` and
``rank``.  Exit status is 0 on success, 1 on I/O or parse errors, 2 on invalid
configuration and 3 on numerical failures.
"""

from __future__ import annotations

import argparse
import csv
import json
import logging
import math
import os
import sys
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path
from typing import Optional, Sequence

import numpy as np

from lrcov.benchmark import BenchmarkConfig, design_for, run_benchmark
from lrcov.errors import ConfigError, LrcovError
from lrcov.lrv import KernelSpec
from lrcov.metrics import format_cell, write_heatmap_pgm, write_int_csv
from lrcov.panel import load_csv, write_csv
from lrcov.portfolio import ESTIMATOR_NAMES, BacktestConfig, abs_corr_score, backtest, f_statistic_ranking
from lrcov.simulate import SimModelSpec, build_instance, config_hash, sample_var1
from lrcov.threshold import METHODS, EstimatorSpec, ThresholdRule, fit_variances, threshold_matrix
from lrcov.tuning import BlockCvConfig, block_partition, cv_curve, fit_folds, random_partition

__all__ = ["main", "build_parser", "parse_windows", "load_report", "SCHEMA"]

SCHEMA = "lrcov/1"

logger = logging.getLogger("lrcov")


# ---------------------------------------------------------------- helpers


def _jsonable(obj):
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return _jsonable(obj.tolist())
    if isinstance(obj, (np.bool_,)):
        return bool(obj)
    if isinstance(obj, np.integer):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        v = float(obj)
        return v if math.isfinite(v) else None
    return obj


def write_report(path: Path, payload: dict) -> None:
    """Write a JSON report; non-finite numbers become ``null``."""
    body = {"schema": SCHEMA, **payload}
    path.write_text(json.dumps(_jsonable(body), indent=2, allow_nan=False) + "\n")


def load_report(path) -> dict:
    """Read a JSON report written by this tool and check its schema tag."""
    try:
        d = json.loads(Path(path).read_text())
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path}: not valid JSON ({exc})") from None
    if d.get("schema") != SCHEMA:
        raise ConfigError(f"{path}: expected schema {SCHEMA!r}, found {d.get('schema')!r}")
    return d


def _write_rows(path: Path, header: Sequence[str], rows) -> None:
    with path.open("w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        w.writerows(rows)


def _num(v) -> str:
    if v is None or (isinstance(v, float) and not math.isfinite(v)):
        return "NA" if v is None or math.isnan(v) else ("inf" if v > 0 else "-inf")
    return format(float(v), ".17g")


def _int_list(text: str, flag: str) -> list[int]:
    try:
        vals = [int(v) for v in text.split(",") if v.strip()]
    except ValueError:
        raise ConfigError(f"{flag}: expected comma-separated integers, got {text!r}") from None
    if not vals:
        raise ConfigError(f"{flag}: empty list")
    return vals


def _name_list(text: str) -> list[str]:
    return [v.strip() for v in text.split(",") if v.strip()]


def parse_windows(text: str) -> list[int]:
    """``"50:120:5"`` -> ``[50, 55, ..., 120]``; ``"50,60"`` -> ``[50, 60]``."""
    if ":" in text:
        parts = text.split(":")
        if len(parts) not in (2, 3):
            raise ConfigError(f"--windows: expected start:stop[:step], got {text!r}")
        try:
            start, stop = int(parts[0]), int(parts[1])
            step = int(parts[2]) if len(parts) == 3 else 1
        except ValueError:
            raise ConfigError(f"--windows: expected integers in {text!r}") from None
        if step < 1 or stop < start:
            raise ConfigError(f"--windows: empty range {text!r}")
        return list(range(start, stop + 1, step))
    return _int_list(text, "--windows")


def _threads(n: int) -> int:
    if n < 0:
        raise ConfigError(f"--threads must be >= 0, got {n}")
    return n or (os.cpu_count() or 1)


def _out_dir(path: str) -> Path:
    out = Path(path)
    out.mkdir(parents=True, exist_ok=True)
    if not os.access(out, os.W_OK):
        raise OSError(f"output directory {out} is not writable")
    return out


def _kernel(args) -> KernelSpec:
    bw = None if args.bandwidth in (None, "auto") else _float(args.bandwidth, "--bandwidth")
    return KernelSpec(args.kernel or "quadratic-spectral", bw)


def _float(text: str, flag: str) -> float:
    try:
        return float(text)
    except ValueError:
        raise ConfigError(f"{flag}: expected a number or 'auto', got {text!r}") from None


def _rules(names: Sequence[str], eta: float) -> tuple:
    return tuple(ThresholdRule(r, eta) for r in names)


# ---------------------------------------------------------------- estimate


def _pairs(iu, flags) -> list:
    """1-based ``[i, j]`` coordinates of flagged upper-triangle entries."""
    return [[int(i) + 1, int(j) + 1] for i, j in zip(*iu) if flags[i, j]]


def cmd_estimate(args) -> int:
    rule = ThresholdRule(args.rule, args.eta)
    method = EstimatorSpec(args.method).method
    if method == "universal" and (args.kernel is not None or args.bandwidth is not None):
        logger.warning("kernel options are ignored by the universal method")
    kernel = _kernel(args)
    spec = EstimatorSpec(method, rule, kernel=kernel, threshold_diagonal=args.threshold_diagonal)
    delta = None if args.delta == "auto" else _float(args.delta, "--delta")
    cv_cfg = BlockCvConfig(args.k_blocks, args.buffer, args.grid_m, args.seed)
    out = _out_dir(args.out)

    panel = load_csv(args.input, has_header=args.header)
    x = panel.data
    n, p = x.shape
    if p < 2:
        raise ConfigError(f"{args.input}: need at least 2 columns, found {p}")

    cv = None
    if delta is None:
        if method == "proposed" or args.cv_split == "contiguous":
            splits = block_partition(n, cv_cfg.k_blocks, cv_cfg.buffer if method == "proposed" else 0)
        else:
            splits = random_partition(n, cv_cfg.k_blocks, args.seed)
        cv = cv_curve(fit_folds(x, splits, spec), spec, cv_cfg.grid, p)
        delta = cv.best_delta
    spec = spec.with_delta(delta)
    cov, theta, theta_c = fit_variances(x, spec)
    t = threshold_matrix(cov, spec, theta, theta_c)

    labels = panel.column_labels
    write_csv(t.estimate, out / "estimate.csv", labels)
    write_csv(t.thresholds, out / "thresholds.csv", labels)
    write_int_csv(t.support.astype(int), out / "support.csv")

    iu = np.triu_indices(p, 1)
    report = {
        "command": "estimate",
        "input": str(args.input),
        "n": n,
        "p": p,
        "estimator": spec.to_dict(),
        "delta": delta,
        "delta_selection": "cross-validation" if cv is not None else "fixed",
        "cv": cv.to_dict() if cv is not None else None,
        "nonzero_offdiagonal_pairs": int(t.support[iu].sum()),
    }
    if theta is not None:
        bw = theta.bandwidths[iu]
        report["bandwidth"] = {"min": bw.min(), "median": float(np.median(bw)), "max": bw.max()}
        report["degenerate_pairs"] = _pairs(iu, theta.degenerate)
        report["clamped_pairs"] = _pairs(iu, theta.clamped)
    elif theta_c is not None:
        report["degenerate_pairs"] = _pairs(iu, theta_c <= 0)
    write_report(out / "report.json", report)
    logger.info("delta = %g, %d off-diagonal pairs kept", delta, report["nonzero_offdiagonal_pairs"])
    return 0


# ---------------------------------------------------------------- simulate


def _model_spec(args, p: int, n: int) -> SimModelSpec:
    return SimModelSpec(
        kind=args.model,
        p=p,
        n=n,
        bernoulli_p=args.bernoulli_p,
        band=args.band,
        rho=args.rho,
        c_a=args.c_a,
        s1=args.s1,
    )


def cmd_simulate(args) -> int:
    spec = _model_spec(args, args.p, args.n)
    out = _out_dir(args.out)
    h = config_hash(*spec.key())
    design_seed, data_seed = np.random.SeedSequence([args.seed, h]).spawn(2)
    inst = build_instance(spec, design_seed)
    panel = sample_var1(inst, args.n, data_seed)
    write_csv(panel, out / "panel.csv")
    write_report(
        out / "design.json",
        {
            "command": "simulate",
            "model": spec.kind,
            "p": spec.p,
            "n": args.n,
            "seed": args.seed,
            "params": {k: getattr(spec, k) for k in spec.__dataclass_fields__},
            "meta": inst.meta,
            "sigma_y": inst.sigma_true,
            "c": inst.phi,
            "sigma_eps": inst.sigma_eps,
            "support": inst.support_true.astype(int),
        },
    )
    return 0


# ---------------------------------------------------------------- benchmark

_TABLE_HEADER = ["model", "p", "n", "rule", "method", "loss", "tpr", "fpr", "exact_recovery", "mean_delta", "reps"]


def cmd_benchmark(args) -> int:
    rules = _rules(_name_list(args.rules), args.eta)
    methods = tuple(EstimatorSpec(m).method for m in _name_list(args.methods))
    ps = _int_list(args.p, "--p")
    ns = _int_list(args.n, "--n")
    if args.reps < 1:
        raise ConfigError(f"--reps must be >= 1, got {args.reps}")
    threads = _threads(args.threads)
    cv_cfg = BlockCvConfig(args.k_blocks, args.buffer, args.grid_m, args.seed)
    kernel = _kernel(args)
    configs = [
        BenchmarkConfig(
            _model_spec(args, p, n),
            reps=args.reps,
            rules=rules,
            methods=methods,
            seed=args.seed,
            cv=cv_cfg,
            competitor_split=args.cv_split,
            kernel=kernel,
        )
        for p in ps
        for n in ns
    ]
    # designs are drawn before any replication so bad parameters fail fast
    designs = [design_for(c) for c in configs]
    out = _out_dir(args.out)

    rows = []
    for cfg, (inst, rejected) in zip(configs, designs):
        m = cfg.model
        tag = f"{m.kind}_p{m.p}_n{m.n}"
        logger.info("running %s (%d reps, %d threads)", tag, cfg.reps, threads)
        res = run_benchmark(cfg, threads=threads, instance=inst)
        summaries = {}
        for (method, rule), s in res.summaries.items():
            key = f"{method}/{rule}"
            d = s.to_dict()
            d["exact_recovery_failures"] = int(round(s.reps * (1 - s.exact_recovery_rate)))
            summaries[key] = d
            stem = f"heatmap_{tag}_{method}_{rule}"
            write_heatmap_pgm(s.freq, s.reps, out / f"{stem}.pgm")
            write_int_csv(s.freq, out / f"{stem}.csv")
            rows.append(
                [
                    m.kind,
                    m.p,
                    m.n,
                    rule,
                    method,
                    format_cell(s.mean_loss, s.se_loss),
                    format_cell(s.mean_tpr, s.sd_tpr),
                    format_cell(s.mean_fpr, s.sd_fpr),
                    f"{s.exact_recovery_rate:.2f}",
                    format_cell(s.mean_delta, None),
                    s.reps,
                ]
            )
        write_report(
            out / f"summary_{tag}.json",
            {
                "command": "benchmark",
                "model": {k: getattr(m, k) for k in m.__dataclass_fields__},
                "reps": cfg.reps,
                "seed": cfg.seed,
                "competitor_split": cfg.competitor_split,
                "kernel": cfg.kernel.to_dict(),
                "rejected_designs": rejected,
                "design_meta": res.instance.meta,
                "summaries": summaries,
            },
        )
    _write_rows(out / "table.csv", _TABLE_HEADER, rows)
    return 0


# ---------------------------------------------------------------- backtest


def cmd_backtest(args) -> int:
    windows = parse_windows(args.windows)
    names = _name_list(args.estimators)
    bad = [e for e in names if e not in ESTIMATOR_NAMES]
    if bad or not names:
        raise ConfigError(f"unknown estimator(s) {', '.join(bad) or '(none)'}; valid names: {', '.join(ESTIMATOR_NAMES)}")
    threads = _threads(args.threads)
    cv_cfg = BlockCvConfig(args.k_blocks, args.buffer, args.grid_m, args.seed)
    cfgs = [
        BacktestConfig(
            window=w,
            hold=args.hold,
            target_annual_return=args.target,
            trading_days=args.trading_days,
            eigen_floor=args.eigen_floor,
            estimators=tuple(names),
            cv=cv_cfg,
            competitor_split=args.cv_split,
            kernel=_kernel(args),
            eta=args.eta,
        )
        for w in windows
    ]
    out = _out_dir(args.out)
    panel = load_csv(args.input, has_header=args.header)
    for c in cfgs:
        if panel.n < c.window + c.hold:
            raise ConfigError(f"--windows: window {c.window} + hold {c.hold} exceeds the {panel.n} rows of {args.input}")

    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            results = list(pool.map(lambda c: backtest(panel, c), cfgs))
    else:
        results = [backtest(panel, c) for c in cfgs]

    per_est = {e: {} for e in names}
    rows = []
    for w, res in zip(windows, results):
        for e in names:
            per_est[e][str(w)] = {
                kind: {"annualized_risk": r.annualized_risk, "sharpe": r.sharpe, "fallbacks": sum(x["fallback"] for x in r.rebalance_log)}
                for kind, r in res[e].items()
            }
            for kind, r in res[e].items():
                rows.append([w, e, kind, _num(r.annualized_risk), _num(r.sharpe), r.daily_returns.size])
    write_report(
        out / "backtest.json",
        {
            "command": "backtest",
            "input": str(args.input),
            "hold": args.hold,
            "target_annual_return": args.target,
            "trading_days": args.trading_days,
            "eigen_floor": args.eigen_floor,
            "results": per_est,
        },
    )
    _write_rows(out / "backtest.csv", ["window", "estimator", "portfolio", "annualized_risk", "sharpe", "n_returns"], rows)
    return 0


# ---------------------------------------------------------------- rank


def _read_labels(path: str) -> list[str]:
    labels = []
    with open(path, newline="") as fh:
        for row in csv.reader(fh):
            if row and any(f.strip() for f in row):
                labels.append(row[0].strip())
    return labels


def cmd_rank(args) -> int:
    if args.method == "fstat" and not args.labels:
        raise ConfigError("--method fstat requires --labels")
    if args.top < 0 or args.bottom < 0:
        raise ConfigError("--top and --bottom must be >= 0")
    out = _out_dir(args.out)
    panel = load_csv(args.input, has_header=args.header)
    p = panel.p
    if args.top + args.bottom > p:
        raise ConfigError(f"--top {args.top} + --bottom {args.bottom} exceeds the {p} columns")
    if args.method == "fstat":
        labels = _read_labels(args.labels)
        if len(labels) != panel.n:
            raise ConfigError(f"--labels has {len(labels)} entries but the panel has {panel.n} rows")
        score = f_statistic_ranking(panel, labels)
    else:
        score = abs_corr_score(panel)
    nan = np.isnan(score)
    if nan.any():
        logger.warning("%d column(s) have undefined scores and are ranked last", int(nan.sum()))
    # descending score, stable in column index, undefined scores last
    order = np.lexsort((np.arange(p), -np.where(nan, -np.inf, score), nan))
    chosen = np.r_[order[: args.top], order[p - args.bottom :]].astype(int)
    names = list(panel.column_labels) if panel.column_labels else [f"V{j + 1}" for j in range(p)]
    _write_rows(
        out / "ranking.csv",
        ["rank", "column", "label", "score"],
        [[r + 1, int(j) + 1, names[j], _num(score[j])] for r, j in enumerate(order)],
    )
    reduced = panel.select_columns(chosen) if chosen.size else None
    if reduced is not None:
        write_csv(reduced, out / "reduced.csv", [names[j] for j in chosen])
    else:
        logger.warning("no columns selected; reduced.csv not written")
    return 0


# ---------------------------------------------------------------- parser


def _add_common(sp) -> None:
    sp.add_argument("--seed", type=int, default=0, help="global seed (default 0)")
    sp.add_argument("--threads", type=int, default=1, help="worker threads, 0 = all cores (default 1)")
    sp.add_argument("--out", default=".", help="output directory")


def _add_threshold(sp, multi: bool) -> None:
    if multi:
        sp.add_argument("--methods", default=",".join(METHODS), help="comma-separated threshold methods")
        sp.add_argument("--rules", default="hard,adaptive-lasso", help="comma-separated threshold rules")
    sp.add_argument("--eta", type=float, default=4.0, help="adaptive-lasso exponent (default 4)")
    sp.add_argument("--kernel", default=None, help="HAC kernel (default quadratic-spectral)")
    sp.add_argument("--bandwidth", default=None, help="fixed bandwidth or 'auto' (Andrews, default)")
    sp.add_argument("--k-blocks", type=int, default=5, help="cross-validation folds (default 5)")
    sp.add_argument("--buffer", type=int, default=0, help="gap between validation block and training rows")
    sp.add_argument("--grid-m", type=int, default=10, help="delta grid resolution: {0, 1/M, ..., 4}")
    sp.add_argument(
        "--cv-split",
        choices=("contiguous", "random"),
        default="contiguous",
        help="fold layout for the universal and cai-liu methods (default contiguous)",
    )


def _add_model(sp) -> None:
    sp.add_argument("--model", choices=("model1", "model2", "adversarial"), default="model2")
    sp.add_argument("--bernoulli-p", type=float, default=0.2, help="model1 sparsity")
    sp.add_argument("--band", type=int, default=10, help="model2 band width")
    sp.add_argument("--rho", type=float, default=0.9, help="adversarial AR coefficient")
    sp.add_argument("--c-a", type=float, default=6.0, help="adversarial signal constant")
    sp.add_argument("--s1", type=int, default=8, help="adversarial sparsity")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="lrcov", description="Long-run-variance thresholded covariance estimation.")
    parser.add_argument("-v", "--verbose", action="count", default=0)
    sub = parser.add_subparsers(dest="command", required=True)

    sp = sub.add_parser("estimate", help="threshold the covariance of a CSV panel")
    sp.add_argument("input")
    sp.add_argument("--header", action="store_true", help="first line holds column labels")
    sp.add_argument("--method", default="proposed", help=f"one of {', '.join(METHODS)}")
    sp.add_argument("--rule", default="hard", help="hard, soft or adaptive-lasso")
    sp.add_argument("--delta", default="auto", help="threshold level or 'auto' (cross-validation)")
    sp.add_argument("--threshold-diagonal", action="store_true")
    _add_threshold(sp, multi=False)
    _add_common(sp)
    sp.set_defaults(func=cmd_estimate)

    sp = sub.add_parser("simulate", help="draw a panel from a simulation design")
    _add_model(sp)
    sp.add_argument("--p", type=int, default=100)
    sp.add_argument("--n", type=int, default=500)
    _add_common(sp)
    sp.set_defaults(func=cmd_simulate)

    sp = sub.add_parser("benchmark", help="Monte-Carlo comparison of the estimators")
    _add_model(sp)
    sp.add_argument("--p", default="100", help="comma-separated dimensions")
    sp.add_argument("--n", default="500", help="comma-separated sample sizes")
    sp.add_argument("--reps", type=int, default=100)
    _add_threshold(sp, multi=True)
    _add_common(sp)
    sp.set_defaults(func=cmd_benchmark)

    sp = sub.add_parser("backtest", help="rolling out-of-sample portfolio backtest")
    sp.add_argument("input")
    sp.add_argument("--header", action="store_true")
    sp.add_argument("--windows", default="50:120:5", help="start:stop:step or comma list")
    sp.add_argument("--hold", type=int, default=20)
    sp.add_argument("--target", type=float, default=0.10, help="annual target return")
    sp.add_argument("--trading-days", type=int, default=250)
    sp.add_argument("--eigen-floor", type=float, default=1e-6)
    sp.add_argument(
        "--estimators",
        default="sample,linear-shrinkage,proposed-hard,proposed-lasso",
        help=f"comma-separated; valid: {', '.join(ESTIMATOR_NAMES)}",
    )
    _add_threshold(sp, multi=False)
    _add_common(sp)
    sp.set_defaults(func=cmd_backtest)

    sp = sub.add_parser("rank", help="screen variables by F statistic or mean absolute correlation")
    sp.add_argument("input")
    sp.add_argument("--header", action="store_true")
    sp.add_argument("--method", choices=("fstat", "abscorr"), default="abscorr")
    sp.add_argument("--labels", default=None, help="CSV with one class label per row (fstat)")
    sp.add_argument("--top", type=int, default=20)
    sp.add_argument("--bottom", type=int, default=0)
    _add_common(sp)
    sp.set_defaults(func=cmd_rank)
    return parser


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(
        level=logging.WARNING - 10 * min(args.verbose, 2),
        format="%(levelname)s: %(message)s",
    )
    try:
        return args.func(args)
    except LrcovError as exc:
        logger.error("%s", exc)
        return exc.exit_code
    except OSError as exc:
        logger.error("%s", exc)
        return 1


if __name__ == "__main__":
    sys.exit(main())
