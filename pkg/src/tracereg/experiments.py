"""Experiment runner: simulation-study and recovery experiments with
deterministic seeding, calibration caching, CSV persistence, and SVG
chart emission.

Every run is fully determined by its configuration and seed: replicate
streams are derived from the master seed with stable keys, records are
sorted before writing, and floating-point values are written in
shortest round-trip form.
"""

from __future__ import annotations

import json
import math
import os
from dataclasses import asdict, dataclass, replace

import numpy as np

from .crossval import cv_select, default_solver, lambda_grid, make_folds
from .rng import stream
from .sampling import (
    Dataset,
    EnsembleSpec,
    FactoredMeasurement,
    GaussianEnsemble,
    MatrixCompletion,
    MultiTask,
    generate_dataset,
    generate_ground_truth,
)
from .solvers import SolverConfig, lambda_max, solve_convex, solve_noiseless
from .theory import calibrate_lambda0, rsc_probe

__all__ = [
    "ConfigError",
    "ExperimentConfig",
    "ExperimentRecord",
    "SummaryRow",
    "child_seed",
    "relative_error",
    "make_ensemble",
    "run_figure1",
    "run_exact_recovery",
    "run_rsc_probe",
    "run_calibration",
    "summarize",
    "emit_outputs",
]

ALL_ESTIMATORS = ("theory1", "theory2", "theory3", "oracle", "cv")

_ENSEMBLES = {
    "matrix_completion": MatrixCompletion,
    "multi_task": MultiTask,
    "gaussian_ensemble": GaussianEnsemble,
    "factored_measurement": FactoredMeasurement,
}


class ConfigError(ValueError):
    """Invalid experiment configuration."""


@dataclass(frozen=True)
class ExperimentConfig:
    experiment: str = "figure1"
    ensemble: str = "matrix_completion"
    d: int = 50
    r: int = 2
    sigma: float = 1.0
    n_grid: tuple[int, ...] = (1250, 2500, 5000)
    replicates: int = 20
    k_folds: int = 5
    seed: int = 0
    estimators: tuple[str, ...] = ALL_ESTIMATORS
    out_dir: str = "out"
    calib_reps: int = 250
    calib_quantile: float = 0.9
    trials: int = 1000
    multiplier: float = 3.0
    paper_scale: bool = False

    def validate(self) -> "ExperimentConfig":
        cfg = self
        if cfg.paper_scale:
            cfg = replace(cfg, replicates=100, calib_reps=1000)
        if cfg.experiment not in ("figure1", "exact_recovery", "rsc_probe", "calibration"):
            raise ConfigError(f"unknown experiment {cfg.experiment!r}")
        if cfg.ensemble not in _ENSEMBLES:
            raise ConfigError(f"unknown ensemble {cfg.ensemble!r}")
        if cfg.replicates < 1:
            raise ConfigError("replicates must be at least 1")
        if len(cfg.n_grid) == 0 or any(b <= a for a, b in zip(cfg.n_grid, cfg.n_grid[1:])):
            raise ConfigError("n_grid must be non-empty and strictly increasing")
        if cfg.d < 1 or not 1 <= cfg.r <= cfg.d:
            raise ConfigError("need d >= 1 and 1 <= r <= d")
        if cfg.k_folds < 2:
            raise ConfigError("k_folds must be at least 2")
        if cfg.sigma < 0:
            raise ConfigError("sigma must be non-negative")
        unknown = set(cfg.estimators) - set(ALL_ESTIMATORS)
        if unknown:
            raise ConfigError(f"unknown estimators: {sorted(unknown)}")
        if cfg.experiment == "exact_recovery" and cfg.sigma != 0.0:
            raise ConfigError("exact_recovery requires sigma = 0")
        return cfg


@dataclass(frozen=True)
class ExperimentRecord:
    estimator: str
    n: int
    replicate: int
    relative_error: float
    lambda_used: float
    converged: bool
    seed: int
    wall_ms: int = 0
    success: bool | None = None


@dataclass(frozen=True)
class SummaryRow:
    estimator: str
    n: int
    mean: float
    two_se: float
    count: int


def child_seed(*keys) -> int:
    """Stable 64-bit seed derived from a tuple of integer/string keys."""
    ints = []
    for k in keys:
        if isinstance(k, str):
            ints.extend(k.encode())
        else:
            ints.append(int(k))
    return int(np.random.SeedSequence(ints).generate_state(1, np.uint64)[0])


def relative_error(b_hat, b_star) -> float:
    """Squared Frobenius error relative to the squared target norm."""
    b_hat = np.asarray(b_hat, dtype=float)
    b_star = np.asarray(b_star, dtype=float)
    return float(np.sum((b_hat - b_star) ** 2) / np.sum(b_star**2))


def make_ensemble(cfg: ExperimentConfig) -> EnsembleSpec:
    cls = _ENSEMBLES[cfg.ensemble]
    if cls is MatrixCompletion and cfg.experiment == "figure1":
        # the simulation protocol observes raw entries: y_i = B*[r_i, c_i] + eps_i
        return MatrixCompletion(cfg.d, cfg.d, plain_entries=True)
    return cls(cfg.d, cfg.d)


# ---------------------------------------------------------------------------
# Calibration with on-disk caching
# ---------------------------------------------------------------------------


def _calibration_quantile(cfg: ExperimentConfig, spec: EnsembleSpec, n: int) -> float:
    """Upper-quantile of ||(1/n) sum eps_i X_i||_op (multiplier 1), cached
    per (ensemble, d, n, sigma, reps, quantile, seed) in out_dir."""
    key = (
        f"calib_{cfg.ensemble}_{'plain_' if getattr(spec, 'plain_entries', False) else ''}"
        f"d{cfg.d}_n{n}_sigma{cfg.sigma!r}_reps{cfg.calib_reps}_q{cfg.calib_quantile!r}_seed{cfg.seed}.json"
    )
    path = os.path.join(cfg.out_dir, key)
    if os.path.exists(path):
        with open(path, "r", encoding="utf-8") as fh:
            return float(json.load(fh)["quantile_value"])
    rng = stream(child_seed(cfg.seed, "calibration", n))
    report = calibrate_lambda0(spec, n, cfg.sigma, 1.0, cfg.calib_reps, cfg.calib_quantile, rng)
    os.makedirs(cfg.out_dir, exist_ok=True)
    with open(path, "w", encoding="utf-8") as fh:
        json.dump({"quantile_value": report.lambda0, "reps": cfg.calib_reps, "quantile": cfg.calib_quantile}, fh)
    return report.lambda0


# ---------------------------------------------------------------------------
# Experiments
# ---------------------------------------------------------------------------

_FIG1_SOLVER = SolverConfig(max_iters=2000, rel_obj_tol=1e-7)


def _oracle_path(ds: Dataset, b_star: np.ndarray, lam_floor: float) -> tuple[float, float, bool]:
    """Best relative error over the halving grid from the zero-solution
    threshold down to lam_floor, with warm starts; the winning lam is
    chosen with knowledge of the target."""
    grid = [lambda_max(ds)]
    while grid[-1] > lam_floor:
        grid.append(grid[-1] / 2.0)
    warm = None
    best = (math.inf, grid[0], True)
    for lam in grid:
        est = solve_convex(ds, lam, _FIG1_SOLVER, x0=warm)
        warm = est.b_hat
        err = relative_error(est.b_hat, b_star)
        if err < best[0]:
            best = (err, lam, est.converged)
    return best


def run_figure1(cfg: ExperimentConfig) -> list[ExperimentRecord]:
    """Relative-error comparison of theory-calibrated, oracle, and
    cross-validated estimators over a grid of sample sizes."""
    cfg = cfg.validate()
    if cfg.experiment != "figure1":
        raise ConfigError("config does not request the figure1 experiment")
    spec = make_ensemble(cfg)
    records: list[ExperimentRecord] = []
    for n in cfg.n_grid:
        base_quantile = _calibration_quantile(cfg, spec, n)
        for rep in range(cfg.replicates):
            data_seed = child_seed(cfg.seed, "data", n, rep)
            b_star = generate_ground_truth(cfg.d, cfg.d, cfg.r, stream(child_seed(cfg.seed, "target", n, rep)))
            ds = generate_dataset(spec, b_star, n, cfg.sigma, seed=data_seed)
            for name in cfg.estimators:
                if name.startswith("theory"):
                    mult = float(name[len("theory") :])
                    lam0 = mult * base_quantile
                    est = solve_convex(ds, lam0, _FIG1_SOLVER)
                    err, lam_used, conv = relative_error(est.b_hat, b_star), lam0, est.converged
                elif name == "oracle":
                    lam_floor = max(3.0 * base_quantile / 2.0, 1e-12)
                    err, lam_used, conv = _oracle_path(ds, b_star, lam_floor)
                elif name == "cv":
                    plan = make_folds(n, cfg.k_folds, stream(child_seed(cfg.seed, "folds", n, rep)))
                    grid = lambda_grid(ds, 0.01 * lambda_max(ds))
                    result = cv_select(ds, plan, grid, default_solver(_FIG1_SOLVER))
                    err, lam_used, conv = relative_error(result.b_cv, b_star), result.lambda_cv, result.converged
                else:  # pragma: no cover - validate() rejects unknown names
                    raise ConfigError(f"unknown estimator {name!r}")
                records.append(
                    ExperimentRecord(
                        estimator=name,
                        n=n,
                        replicate=rep,
                        relative_error=err,
                        lambda_used=lam_used,
                        converged=conv,
                        seed=data_seed,
                    )
                )
    records.sort(key=lambda rec: (rec.estimator, rec.n, rec.replicate))
    return records


def run_exact_recovery(cfg: ExperimentConfig) -> list[ExperimentRecord]:
    """Noiseless minimum-nuclear-norm recovery over a grid of sample
    sizes; each record carries a success flag (relative error < 1e-3)."""
    cfg = cfg.validate()
    if cfg.experiment != "exact_recovery":
        raise ConfigError("config does not request the exact_recovery experiment")
    spec = make_ensemble(cfg)
    records: list[ExperimentRecord] = []
    for n in cfg.n_grid:
        for rep in range(cfg.replicates):
            data_seed = child_seed(cfg.seed, "data", n, rep)
            b_star = generate_ground_truth(cfg.d, cfg.d, cfg.r, stream(child_seed(cfg.seed, "target", n, rep)))
            ds = generate_dataset(spec, b_star, n, 0.0, seed=data_seed)
            est = solve_noiseless(ds)
            err = relative_error(est.b_hat, b_star)
            records.append(
                ExperimentRecord(
                    estimator="noiseless",
                    n=n,
                    replicate=rep,
                    relative_error=err,
                    lambda_used=est.lam,
                    converged=est.converged,
                    seed=data_seed,
                    success=bool(err < 1e-3),
                )
            )
    records.sort(key=lambda rec: (rec.estimator, rec.n, rec.replicate))
    return records


def run_rsc_probe(cfg: ExperimentConfig) -> dict:
    """Probe restricted strong convexity on one dataset drawn at the
    first grid size, with the constraint-set floor nu taken from the
    calibrated regularization recipe nu = lam0^2 r / (gamma_min^2 b*^2)."""
    cfg = cfg.validate()
    spec = make_ensemble(cfg)
    n = cfg.n_grid[0]
    consts = spec.constants()
    base_quantile = _calibration_quantile(cfg, spec, n)
    lam0 = cfg.multiplier * base_quantile
    b_star = generate_ground_truth(cfg.d, cfg.d, cfg.r, stream(child_seed(cfg.seed, "target", n, 0)))
    b_star_bound = spec.spikiness_norm(b_star)
    nu = lam0**2 * cfg.r / (consts.gamma_min**2 * b_star_bound**2)
    ds = generate_dataset(spec, b_star, n, cfg.sigma, seed=child_seed(cfg.seed, "data", n, 0))
    report = rsc_probe(ds, nu, 72.0 * cfg.r, cfg.trials, stream(child_seed(cfg.seed, "probe", n)))
    return {
        "experiment": "rsc_probe",
        "ensemble": cfg.ensemble,
        "d": cfg.d,
        "n": n,
        "nu": report.nu,
        "eta": report.eta,
        "trials": report.trials,
        "min_margin": report.min_margin,
        "violation_count": report.violation_count,
        "beta_emp": report.beta_emp,
    }


def run_calibration(cfg: ExperimentConfig) -> dict:
    """Stand-alone calibration run at the first grid size."""
    cfg = cfg.validate()
    spec = make_ensemble(cfg)
    n = cfg.n_grid[0]
    rng = stream(child_seed(cfg.seed, "calibration", n))
    report = calibrate_lambda0(spec, n, cfg.sigma, cfg.multiplier, cfg.calib_reps, cfg.calib_quantile, rng)
    return {
        "experiment": "calibration",
        "ensemble": cfg.ensemble,
        "d": cfg.d,
        "n": n,
        "sigma": cfg.sigma,
        "multiplier": report.multiplier,
        "reps": report.reps,
        "quantile": report.quantile,
        "lambda0": report.lambda0,
        "samples": [float(v) for v in report.samples],
    }


# ---------------------------------------------------------------------------
# Summaries and output files
# ---------------------------------------------------------------------------


def summarize(records: list[ExperimentRecord]) -> list[SummaryRow]:
    """Mean relative error with twice its standard error per
    (estimator, n) group."""
    if not records:
        raise ValueError("no records to summarize")
    groups: dict[tuple[str, int], list[float]] = {}
    for rec in records:
        groups.setdefault((rec.estimator, rec.n), []).append(rec.relative_error)
    rows = []
    for (est, n), vals in sorted(groups.items()):
        arr = np.asarray(vals)
        two_se = 0.0 if len(arr) < 2 else 2.0 * float(np.std(arr, ddof=1)) / math.sqrt(len(arr))
        rows.append(SummaryRow(estimator=est, n=n, mean=float(np.mean(arr)), two_se=two_se, count=len(arr)))
    return rows


def _fmt(value) -> str:
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, float):
        return repr(value)
    return str(value)


def write_records_csv(records: list[ExperimentRecord], path: str) -> None:
    with_success = any(rec.success is not None for rec in records)
    header = "estimator,n,replicate,relative_error,lambda_used,converged,seed,wall_ms"
    if with_success:
        header += ",success"
    lines = [header]
    for rec in records:
        row = [
            rec.estimator,
            str(rec.n),
            str(rec.replicate),
            _fmt(rec.relative_error),
            _fmt(rec.lambda_used),
            _fmt(rec.converged),
            str(rec.seed),
            str(rec.wall_ms),
        ]
        if with_success:
            row.append(_fmt(bool(rec.success)))
        lines.append(",".join(row))
    _write_text(path, "\n".join(lines) + "\n")


def read_records_csv(path: str) -> list[ExperimentRecord]:
    with open(path, "r", encoding="utf-8", newline="") as fh:
        lines = fh.read().splitlines()
    header = lines[0].split(",")
    out = []
    for line in lines[1:]:
        vals = dict(zip(header, line.split(",")))
        out.append(
            ExperimentRecord(
                estimator=vals["estimator"],
                n=int(vals["n"]),
                replicate=int(vals["replicate"]),
                relative_error=float(vals["relative_error"]),
                lambda_used=float(vals["lambda_used"]),
                converged=vals["converged"] == "true",
                seed=int(vals["seed"]),
                wall_ms=int(vals["wall_ms"]),
                success=(vals["success"] == "true") if "success" in vals else None,
            )
        )
    return out


def _write_text(path: str, text: str) -> None:
    try:
        with open(path, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(text)
    except OSError as exc:
        raise OSError(f"failed writing {path}: {exc}") from exc


_PALETTE = ["#1b6ca8", "#d1495b", "#3a7d44", "#8d6a9f", "#c77b1f"]


def render_figure_svg(summary: list[SummaryRow]) -> str:
    """Line chart of mean relative error against sample size on log-log
    axes, one polyline per estimator with 2SE error bars."""
    width, height = 640.0, 480.0
    left, right, top, bottom = 70.0, 20.0, 20.0, 50.0
    xs = sorted({row.n for row in summary})
    estimators = sorted({row.estimator for row in summary})
    ymin = min(max(row.mean - row.two_se, 1e-12) for row in summary)
    ymax = max(row.mean + row.two_se for row in summary)
    lx0, lx1 = math.log10(xs[0]), math.log10(xs[-1])
    if lx1 <= lx0:
        lx1 = lx0 + 1.0
    ly0, ly1 = math.log10(ymin), math.log10(max(ymax, 1e-12))
    if ly1 <= ly0:
        ly1 = ly0 + 1.0

    def sx(n):
        return left + (math.log10(n) - lx0) / (lx1 - lx0) * (width - left - right)

    def sy(v):
        v = max(v, 1e-12)
        return height - bottom - (math.log10(v) - ly0) / (ly1 - ly0) * (height - top - bottom)

    parts = [
        '<?xml version="1.0" encoding="UTF-8"?>',
        f'<svg xmlns="http://www.w3.org/2000/svg" version="1.1" width="{width:.0f}" height="{height:.0f}" '
        f'viewBox="0 0 {width:.0f} {height:.0f}">',
        f'<rect x="0" y="0" width="{width:.0f}" height="{height:.0f}" fill="white"/>',
        f'<line x1="{left:.1f}" y1="{height - bottom:.1f}" x2="{width - right:.1f}" y2="{height - bottom:.1f}" '
        'stroke="black" stroke-width="1"/>',
        f'<line x1="{left:.1f}" y1="{top:.1f}" x2="{left:.1f}" y2="{height - bottom:.1f}" '
        'stroke="black" stroke-width="1"/>',
        f'<text x="{(left + width - right) / 2:.1f}" y="{height - 12:.1f}" text-anchor="middle" '
        'font-family="sans-serif" font-size="14">n</text>',
        f'<text x="16" y="{(top + height - bottom) / 2:.1f}" text-anchor="middle" font-family="sans-serif" '
        f'font-size="14" transform="rotate(-90 16 {(top + height - bottom) / 2:.1f})">relative error</text>',
    ]
    for n in xs:
        parts.append(
            f'<text x="{sx(n):.2f}" y="{height - bottom + 18:.1f}" text-anchor="middle" '
            f'font-family="sans-serif" font-size="12">{n}</text>'
        )
    for i, name in enumerate(estimators):
        color = _PALETTE[i % len(_PALETTE)]
        rows = sorted((row for row in summary if row.estimator == name), key=lambda row: row.n)
        pts = " ".join(f"{sx(row.n):.2f},{sy(row.mean):.2f}" for row in rows)
        for row in rows:
            x = sx(row.n)
            parts.append(
                f'<line x1="{x:.2f}" y1="{sy(row.mean - row.two_se):.2f}" x2="{x:.2f}" '
                f'y2="{sy(row.mean + row.two_se):.2f}" stroke="{color}" stroke-width="1"/>'
            )
        parts.append(f'<polyline points="{pts}" fill="none" stroke="{color}" stroke-width="2"/>')
        parts.append(
            f'<text x="{width - right - 120:.1f}" y="{top + 16 * (i + 1):.1f}" font-family="sans-serif" '
            f'font-size="12" fill="{color}">{name}</text>'
        )
    parts.append("</svg>")
    return "\n".join(parts) + "\n"


def emit_outputs(records: list[ExperimentRecord], summary: list[SummaryRow], cfg: ExperimentConfig) -> dict[str, str]:
    """Write records.csv, summary.csv, config.echo, and figure1.svg into
    cfg.out_dir; returns the written paths."""
    try:
        os.makedirs(cfg.out_dir, exist_ok=True)
    except OSError as exc:
        raise OSError(f"cannot create output directory {cfg.out_dir}: {exc}") from exc
    paths = {
        "records": os.path.join(cfg.out_dir, "records.csv"),
        "summary": os.path.join(cfg.out_dir, "summary.csv"),
        "config": os.path.join(cfg.out_dir, "config.echo"),
        "figure": os.path.join(cfg.out_dir, "figure1.svg"),
    }
    write_records_csv(records, paths["records"])
    lines = ["estimator,n,mean,two_se,count"]
    lines += [f"{row.estimator},{row.n},{_fmt(row.mean)},{_fmt(row.two_se)},{row.count}" for row in summary]
    _write_text(paths["summary"], "\n".join(lines) + "\n")
    echo = [f"{key}={_config_value(val)}" for key, val in sorted(asdict(cfg).items())]
    _write_text(paths["config"], "\n".join(echo) + "\n")
    _write_text(paths["figure"], render_figure_svg(summary))
    return paths


def _config_value(val) -> str:
    if isinstance(val, tuple):
        return ",".join(str(v) for v in val)
    return _fmt(val)
