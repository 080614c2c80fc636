"""Command-line entry point: ``muskat simulate | verify | op | sweep``.

Exit codes: 0 on success, 2 when a run halts on an event (or a verify
suite has failing checks), 1 on configuration, I/O or name errors.
"""
from __future__ import annotations

import argparse
import csv
import itertools
import json
import logging
import math
import multiprocessing
import os
import sys
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path
from typing import Any, Mapping, Sequence

import numpy as np

from .config import SUITES, RunConfig, config_from_dict, expand_dotted, parse_config
from .evolve import RunResult, run
from .grid import ConfigurationError, GridFunction, hilbert, lambda_op, read_csv, write_csv
from .operators import (
    GridMismatchError,
    apply_Df,
    apply_Dp,
    apply_Lf,
    muskat_rhs,
    t_terms,
    velocity,
)
from .quadrature import QuadratureConfig

log = logging.getLogger("muskat")

EXIT_OK = 0
EXIT_ERROR = 1
EXIT_HALT = 2

OPERATORS = ("lambda", "hilbert", "velocity", "rhs", "Lf", "Df", "Dp", "tterms")
TWO_ARGUMENT = ("Lf", "Df", "Dp")
COMPONENTS = ("T1", "T2", "T3", "T4", "T5", "sum")

DEFAULT_VERIFY_CONFIG: dict[str, Any] = {
    "grid": {"N": 256, "L": math.pi},
    "init": {"family": "sine", "a": 0.01, "k": 1},
    "t_end": 1.0,
}

SWEEP_HEADER = ("run", "params", "final_B", "final_M_inf", "max_envelope_slack", "event", "status")


def _json_safe(obj: Any) -> Any:
    """Replace non-finite floats by None so the output is strict JSON."""
    if isinstance(obj, float) and not math.isfinite(obj):
        return None
    if isinstance(obj, Mapping):
        return {str(k): _json_safe(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_json_safe(v) for v in obj]
    if isinstance(obj, np.generic):
        return _json_safe(obj.item())
    return obj


def _write_json(path: Path, obj: Any) -> None:
    path.write_text(json.dumps(_json_safe(obj), indent=2, sort_keys=True, allow_nan=False) + "\n")


# ---------------------------------------------------------------------------
# simulate


def write_run(cfg: RunConfig, res: RunResult, out: Path) -> None:
    out.mkdir(parents=True, exist_ok=True)
    with open(out / "series.csv", "w", newline="") as fh:
        fh.write(",".join(res.series[0].CSV_HEADER) + "\n")
        for row in res.series:
            fh.write(",".join(f"{v:.17g}" for v in row.csv_values()) + "\n")
    _write_json(out / "events.json", res.events.to_json())
    write_csv(res.final.f, out / "final.csv")
    (out / "config.json").write_text(cfg.dumps() + "\n")


def simulate(cfg: RunConfig, out: Path) -> tuple[int, RunResult]:
    res = run(cfg.sim)
    write_run(cfg, res, out)
    if res.halted:
        log.warning("run halted at t=%.6g: %s", res.final.t, res.halting_event)
        return EXIT_HALT, res
    return EXIT_OK, res


def cmd_simulate(args: argparse.Namespace) -> int:
    cfg = parse_config(args.config)
    out = Path(args.out or cfg.output_dir)
    code, _ = simulate(cfg, out)
    return code


# ---------------------------------------------------------------------------
# verify


def cmd_verify(args: argparse.Namespace) -> int:
    from .suites import run_suite

    if args.config:
        cfg = parse_config(args.config)
    else:
        cfg = config_from_dict(DEFAULT_VERIFY_CONFIG)
    suite = args.suite or cfg.suite
    if suite not in SUITES:
        raise ConfigurationError(f"unknown suite {suite!r}; choose from {', '.join(SUITES)}")
    reports = run_suite(cfg, suite)
    failed = [r for r in reports if not r.skipped and not r.passed]
    out = Path(args.out or cfg.output_dir)
    out.mkdir(parents=True, exist_ok=True)
    _write_json(
        out / "report.json",
        {"suite": suite, "pass": not failed, "checks": [r.to_dict() for r in reports]},
    )
    for r in reports:
        status = "skip" if r.skipped else ("pass" if r.passed else "FAIL")
        log.info("%-4s %s (worst margin %.3g)", status, r.name, r.worst_margin)
    return EXIT_OK if not failed else EXIT_HALT


# ---------------------------------------------------------------------------
# op


def _quadrature_from_args(args: argparse.Namespace) -> QuadratureConfig:
    return QuadratureConfig(
        alpha_spacing=args.alpha_spacing,
        truncation_radius=args.truncation_radius,
        tail_correction=not args.no_tail_correction,
    )


def evaluate_operator(
    name: str,
    f: GridFunction,
    g: GridFunction | None = None,
    q: QuadratureConfig = QuadratureConfig(),
    p: float | None = None,
    component: str | None = None,
) -> GridFunction:
    if name not in OPERATORS:
        raise ConfigurationError(f"unknown operator {name!r}; choose from {', '.join(OPERATORS)}")
    if name in TWO_ARGUMENT and g is None:
        raise ConfigurationError(f"operator {name} needs a second input (--in2)")
    if name == "lambda":
        return lambda_op(f)
    if name == "hilbert":
        return hilbert(f)
    if name == "velocity":
        return velocity(f, q)
    if name == "rhs":
        return muskat_rhs(f, q)
    if name == "Lf":
        return apply_Lf(f, g, q)
    if name == "Df":
        return apply_Df(f, g, q)
    if name == "Dp":
        if p is None:
            raise ConfigurationError("operator Dp needs --p")
        return apply_Dp(f, g, p, q)
    comp = component or "sum"
    if comp not in COMPONENTS:
        raise ConfigurationError(f"unknown component {comp!r}; choose from {', '.join(COMPONENTS)}")
    tt = t_terms(f, q)
    return f.with_values(tt.sum_t1_to_t4()) if comp == "sum" else getattr(tt, comp)


def cmd_op(args: argparse.Namespace) -> int:
    if args.name not in OPERATORS:
        raise ConfigurationError(f"unknown operator {args.name!r}; choose from {', '.join(OPERATORS)}")
    f = read_csv(args.input)
    g = read_csv(args.in2) if args.in2 else None
    out = evaluate_operator(args.name, f, g, _quadrature_from_args(args), args.p, args.component)
    write_csv(out, args.out)
    return EXIT_OK


# ---------------------------------------------------------------------------
# sweep


def load_parameter_grid(spec: str) -> dict[str, list[Any]]:
    """Inline JSON or a path to a JSON file mapping dotted keys to value lists."""
    path = Path(spec)
    text = path.read_text() if path.is_file() else spec
    try:
        raw = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigurationError(f"parameter grid is neither a file nor valid JSON: {exc}") from exc
    if not isinstance(raw, dict) or not raw:
        raise ConfigurationError("parameter grid must be a non-empty object of value lists")
    grid: dict[str, list[Any]] = {}
    for key, values in raw.items():
        if not isinstance(values, list) or not values:
            raise ConfigurationError(f"parameter {key!r} needs a non-empty list of values")
        grid[key] = values
    return grid


def _merge(base: Mapping[str, Any], override: Mapping[str, Any]) -> dict[str, Any]:
    out = {k: (dict(v) if isinstance(v, Mapping) else v) for k, v in base.items()}
    for k, v in override.items():
        if isinstance(v, Mapping) and isinstance(out.get(k), Mapping):
            out[k] = _merge(out[k], v)
        else:
            out[k] = v
    return out


def _sweep_worker(index: int, raw: Mapping[str, Any], params: Mapping[str, Any], out: str) -> dict[str, Any]:
    row: dict[str, Any] = {"run": index, "params": json.dumps(params, sort_keys=True)}
    try:
        cfg = config_from_dict(_merge(expand_dotted(raw), expand_dotted(params)))
        code, res = simulate(cfg, Path(out))
    except Exception as exc:  # recorded per run; the sweep carries on
        row.update(final_B=math.nan, final_M_inf=math.nan, max_envelope_slack=math.nan, event="")
        row["status"] = f"error: {type(exc).__name__}: {exc}"
        return row
    minf = np.array([r.metrics.curvature_Mp[math.inf] for r in res.series])
    env = np.array([r.envelope for r in res.series])
    last = res.series[-1].metrics
    row.update(
        final_B=last.slope_B,
        final_M_inf=last.curvature_Mp[math.inf],
        max_envelope_slack=float(np.max(minf - env)),
        event=res.events[-1].kind if res.events else "",
        status="halted" if code == EXIT_HALT else "ok",
    )
    return row


def _init_worker() -> None:
    import numba

    numba.set_num_threads(1)  # parallelism comes from the pool


def worker_count(n_runs: int) -> int:
    cap = os.environ.get("MUSKAT_THREADS")
    limit = int(cap) if cap else (os.cpu_count() or 1)
    return max(1, min(n_runs, limit))


def sweep(raw: Mapping[str, Any], grid: Mapping[str, Sequence[Any]], out: Path) -> list[dict[str, Any]]:
    keys = list(grid)
    if not keys or any(len(grid[k]) == 0 for k in keys):
        raise ConfigurationError("parameter grid is empty")
    combos = [dict(zip(keys, vals)) for vals in itertools.product(*(grid[k] for k in keys))]
    if not combos:
        raise ConfigurationError("parameter grid is empty")
    out.mkdir(parents=True, exist_ok=True)
    jobs = [(i, raw, c, str(out / f"run_{i:03d}")) for i, c in enumerate(combos)]
    workers = worker_count(len(jobs))
    if workers == 1:
        rows = [_sweep_worker(*job) for job in jobs]
    else:
        # spawn: forking after the OpenMP runtime has started is unsafe
        ctx = multiprocessing.get_context("spawn")
        with ProcessPoolExecutor(max_workers=workers, mp_context=ctx, initializer=_init_worker) as pool:
            rows = list(pool.map(_sweep_worker, *zip(*jobs)))
    with open(out / "sweep.csv", "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(SWEEP_HEADER)
        for r in rows:
            w.writerow([
                r["run"], r["params"],
                *(f"{r[k]:.17g}" for k in ("final_B", "final_M_inf", "max_envelope_slack")),
                r["event"], r["status"],
            ])
    return rows


def cmd_sweep(args: argparse.Namespace) -> int:
    path = Path(args.config)
    if not path.is_file():
        raise FileNotFoundError(f"config file not found: {path}")
    raw = json.loads(path.read_text())
    base = config_from_dict(raw)  # validate the base before fanning out
    rows = sweep(raw, load_parameter_grid(args.grid), Path(args.out or base.output_dir))
    if any(r["status"].startswith("error") for r in rows):
        return EXIT_ERROR
    return EXIT_HALT if any(r["status"] == "halted" for r in rows) else EXIT_OK


# ---------------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="muskat", description=__doc__.splitlines()[0])
    ap.add_argument("-v", "--verbose", action="store_true")
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("simulate", help="integrate one configuration")
    p.add_argument("--config", required=True)
    p.add_argument("--out", help="output directory (overrides output_dir)")
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("verify", help="run a verification suite")
    p.add_argument("--suite", help=f"one of {', '.join(SUITES)}")
    p.add_argument("--config")
    p.add_argument("--out")
    p.set_defaults(func=cmd_verify)

    p = sub.add_parser("op", help="apply one operator to a CSV grid function")
    p.add_argument("--name", required=True, help=f"one of {', '.join(OPERATORS)}")
    p.add_argument("--in", dest="input", required=True)
    p.add_argument("--in2", help="second function for Lf, Df, Dp")
    p.add_argument("--out", required=True)
    p.add_argument("--p", type=float)
    p.add_argument("--component", help=f"for tterms: one of {', '.join(COMPONENTS)}")
    p.add_argument("--alpha-spacing", type=float)
    p.add_argument("--truncation-radius", type=float)
    p.add_argument("--no-tail-correction", action="store_true")
    p.set_defaults(func=cmd_op)

    p = sub.add_parser("sweep", help="run a cartesian parameter sweep")
    p.add_argument("--config", required=True)
    p.add_argument("--grid", required=True, help="inline JSON or path: dotted keys to value lists")
    p.add_argument("--out")
    p.set_defaults(func=cmd_sweep)
    return ap


def main(argv: Sequence[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(
        level=logging.INFO if args.verbose else logging.WARNING,
        format="%(levelname)s %(name)s: %(message)s",
    )
    try:
        return args.func(args)
    except (ConfigurationError, GridMismatchError, FileNotFoundError) as exc:
        print(f"muskat: {exc}", file=sys.stderr)
        return EXIT_ERROR
    except (OSError, json.JSONDecodeError) as exc:
        print(f"muskat: I/O error: {exc}", file=sys.stderr)
        return EXIT_ERROR
    except ValueError as exc:
        print(f"muskat: {exc}", file=sys.stderr)
        return EXIT_ERROR


if __name__ == "__main__":
    sys.exit(main())
