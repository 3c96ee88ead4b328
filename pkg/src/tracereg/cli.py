"""Command line front end for the experiment runner.

One subcommand per experiment (figure1, exact-recovery, rsc-probe,
calibration).  Options may also come from a flat key=value config file;
precedence is command line > file > defaults.  Exit codes: 0 success,
2 configuration error, 3 I/O error.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from dataclasses import fields

from .experiments import (
    ConfigError,
    ExperimentConfig,
    emit_outputs,
    run_calibration,
    run_exact_recovery,
    run_figure1,
    run_rsc_probe,
    summarize,
)

_TUPLE_INT_KEYS = {"n_grid"}
_TUPLE_STR_KEYS = {"estimators"}
_BOOL_KEYS = {"paper_scale"}


def _parse_value(key: str, raw: str):
    raw = raw.strip()
    if key in _TUPLE_INT_KEYS:
        return tuple(int(v) for v in raw.split(",") if v)
    if key in _TUPLE_STR_KEYS:
        return tuple(v.strip() for v in raw.split(",") if v.strip())
    if key in _BOOL_KEYS:
        if raw.lower() in ("true", "1", "yes"):
            return True
        if raw.lower() in ("false", "0", "no"):
            return False
        raise ConfigError(f"cannot parse boolean {key}={raw!r}")
    kind = {f.name: f.type for f in fields(ExperimentConfig)}.get(key)
    if kind == "int":
        return int(raw)
    if kind == "float":
        return float(raw)
    return raw


def load_config_file(path: str) -> dict:
    """Read a flat key=value config file; blank lines and #-comments are
    ignored."""
    known = {f.name for f in fields(ExperimentConfig)}
    out = {}
    with open(path, "r", encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, 1):
            line = line.strip()
            if not line or line.startswith("#"):
                continue
            if "=" not in line:
                raise ConfigError(f"{path}:{lineno}: expected key=value, got {line!r}")
            key, _, raw = line.partition("=")
            key = key.strip()
            if key not in known:
                raise ConfigError(f"{path}:{lineno}: unknown key {key!r}")
            out[key] = _parse_value(key, raw)
    return out


def _add_common(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--config", help="flat key=value config file")
    parser.add_argument("--ensemble", choices=["matrix_completion", "multi_task", "gaussian_ensemble", "factored_measurement"])
    parser.add_argument("--d", type=int)
    parser.add_argument("--r", type=int)
    parser.add_argument("--sigma", type=float)
    parser.add_argument("--n", dest="n_grid", help="comma-separated sample sizes, strictly increasing")
    parser.add_argument("--replicates", type=int)
    parser.add_argument("--k-folds", dest="k_folds", type=int)
    parser.add_argument("--seed", type=int)
    parser.add_argument("--estimators", help="comma-separated subset of theory1,theory2,theory3,oracle,cv")
    parser.add_argument("--out-dir", dest="out_dir")
    parser.add_argument("--calib-reps", dest="calib_reps", type=int)
    parser.add_argument("--trials", type=int)
    parser.add_argument("--multiplier", type=float)
    parser.add_argument("--reps", dest="calib_reps_alias", type=int, help=argparse.SUPPRESS)
    parser.add_argument("--quantile", dest="calib_quantile", type=float)
    parser.add_argument("--paper-scale", dest="paper_scale", action="store_true", default=None)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="tracereg", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)
    for name in ("figure1", "exact-recovery", "rsc-probe", "calibration"):
        _add_common(sub.add_parser(name))
    return parser


def resolve_config(args: argparse.Namespace) -> ExperimentConfig:
    values = {"experiment": args.command.replace("-", "_")}
    if args.config:
        file_values = load_config_file(args.config)
        file_values.pop("experiment", None)
        values.update(file_values)
    for key in (
        "ensemble",
        "d",
        "r",
        "sigma",
        "replicates",
        "k_folds",
        "seed",
        "out_dir",
        "calib_reps",
        "trials",
        "multiplier",
        "calib_quantile",
        "paper_scale",
    ):
        val = getattr(args, key, None)
        if val is not None:
            values[key] = val
    if getattr(args, "calib_reps_alias", None) is not None:
        values["calib_reps"] = args.calib_reps_alias
    if getattr(args, "n_grid", None) is not None:
        values["n_grid"] = _parse_value("n_grid", args.n_grid)
    if getattr(args, "estimators", None) is not None:
        values["estimators"] = _parse_value("estimators", args.estimators)
    if values["experiment"] == "exact_recovery":
        values.setdefault("sigma", 0.0)
        values.setdefault("ensemble", "gaussian_ensemble")
    try:
        return ExperimentConfig(**values).validate()
    except TypeError as exc:
        raise ConfigError(str(exc)) from exc


def _write_json(path: str, payload: dict) -> None:
    os.makedirs(os.path.dirname(path) or ".", exist_ok=True)
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        json.dump(payload, fh, indent=None, separators=(",", ":"), sort_keys=True)
        fh.write("\n")


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        cfg = resolve_config(args)
    except (ConfigError, OSError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    try:
        if cfg.experiment == "figure1":
            records = run_figure1(cfg)
            emit_outputs(records, summarize(records), cfg)
        elif cfg.experiment == "exact_recovery":
            records = run_exact_recovery(cfg)
            emit_outputs(records, summarize(records), cfg)
        elif cfg.experiment == "rsc_probe":
            _write_json(os.path.join(cfg.out_dir, "rsc_probe.json"), run_rsc_probe(cfg))
        else:
            _write_json(os.path.join(cfg.out_dir, "calibration.json"), run_calibration(cfg))
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    except OSError as exc:
        print(f"io error: {exc}", file=sys.stderr)
        return 3
    return 0


if __name__ == "__main__":
    sys.exit(main())
