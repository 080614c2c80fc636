"""Verification suites bundling the diagnostic checks."""
from __future__ import annotations

import math

import numpy as np

from . import bounds
from .config import RunConfig
from .diagnostics import (
    CheckReport,
    check_identities,
    check_pointwise_bounds,
    estimate_modulus,
)
from .evolve import run, twin_divergence
from .grid import GridFunction, derivative_values, hilbert, lambda_op, random_bandlimited, spectral_derivative
from .operators import apply_Df, apply_Lf

__all__ = ["operators_suite", "bounds_suite", "theorems_suite", "run_suite", "SMALL_SLOPE"]

SMALL_SLOPE = 0.05


def _rel_max(a: np.ndarray, b: np.ndarray) -> tuple[float, int]:
    err = np.abs(a - b)
    scale = max(float(np.max(np.abs(b))), np.finfo(float).tiny)
    i = int(np.argmax(err))
    return float(err[i]) / scale, i


def _max_check(name: str, rel: float, where: float, tol: float) -> CheckReport:
    return CheckReport(name, rel <= tol, -rel, where, tol)


def _profiles(cfg: RunConfig, count: int) -> list[GridFunction]:
    rng = np.random.default_rng(cfg.seed)
    grid = cfg.sim.grid
    kmax = min(cfg.profile_kmax, grid.node_count // 4 - 1)
    return [random_bandlimited(grid, kmax, cfg.profile_amplitude, rng) for _ in range(count)]


def operators_suite(cfg: RunConfig) -> list[CheckReport]:
    grid = cfg.sim.grid
    q = cfg.sim.quadrature
    x = grid.nodes
    L = grid.half_length
    n = grid.node_count
    rng = np.random.default_rng(cfg.seed)
    out: list[CheckReport] = []

    g = random_bandlimited(grid, max(1, n // 8), 1.0, rng, decay=0.0)
    flat = GridFunction(grid, np.zeros(n))
    rel, i = _rel_max(apply_Lf(flat, g, q).values, lambda_op(g).values)
    out.append(_max_check("flat_limit_matches_lambda", rel, x[i], 1e-6))

    k0 = math.pi / L
    c = GridFunction(grid, np.cos(k0 * x))
    err = np.abs(lambda_op(c).values - math.pi * k0 * c.values)
    i = int(np.argmax(err))
    out.append(_max_check("lambda_on_cosine", float(err[i]), x[i], 1e-10))

    rel, i = _rel_max(lambda_op(g).values, hilbert(spectral_derivative(g, 1)).values)
    out.append(_max_check("lambda_equals_hilbert_of_derivative", rel, x[i], 1e-12))

    for f, gg in zip(_profiles(cfg, 2), _profiles(cfg, 3)[1:]):
        out.extend(check_identities(f, gg, q))
        B = float(np.max(np.abs(spectral_derivative(f, 1).values)))
        margin = apply_Df(f, gg, q).values - apply_Df(flat, gg, q).values / (1 + B * B)
        tol = 1e-6 * float(np.max(np.abs(apply_Df(f, gg, q).values)))
        i = int(np.argmin(margin))
        out.append(CheckReport("dissipation_comparison", margin[i] >= -tol, float(margin[i]), float(x[i]), tol))
    return out


def bounds_suite(cfg: RunConfig) -> list[CheckReport]:
    q = cfg.sim.quadrature
    grid = cfg.sim.grid
    profiles = [cfg.sim.initial()] + _profiles(cfg, cfg.random_profiles)
    out: list[CheckReport] = []
    dists = grid.spacing * np.arange(1, grid.node_count // 2 + 1)
    for f in profiles:
        fp = derivative_values(f.values, grid.half_length, 1)
        B = float(np.max(np.abs(fp)))
        modulus = None
        if B > 0:
            rho = cfg.modulus.with_default_cap(B)
            est = estimate_modulus(GridFunction(grid, fp), dists)
            if np.all(est.values <= rho(dists) * (1 + 1e-12)):
                modulus = rho
        reports = check_pointwise_bounds(f, q, modulus=modulus, bound_scale=cfg.bound_scale)
        if modulus is None and B > 0:
            reports.append(CheckReport("modulus_lower_bound", False, float("nan"), float("nan"), float("nan"),
                                       True, "profile slope does not obey the configured modulus"))
        out.extend(reports)

    rho = cfg.modulus.with_default_cap(1.0)
    worst = 0.0
    for y in (0.5, 6.0, 60.0):
        r = bounds.solve_r(y, rho, 1.0)
        worst = max(worst, abs(r * bounds.tail_integral(rho, r) - y / 6) / (y / 6))
    out.append(CheckReport("radius_equation_residual", worst <= 1e-10, -worst, float("nan"), 1e-10))
    return out


def _monotone(name: str, t: np.ndarray, v: np.ndarray, rate: float) -> CheckReport:
    """v[j] <= v[i] + rate * (t[j] - t[i]) for all i < j.

    Equivalently ``w = v - rate * t`` is non-increasing; the margin is the
    smallest gap between a value of w and its running minimum before it.
    """
    w = v - rate * t
    if w.size < 2:
        return CheckReport(name, True, 0.0, float("nan"), rate)
    prior = np.minimum.accumulate(w)[:-1]
    gap = prior - w[1:]
    i = int(np.argmin(gap))
    return CheckReport(name, gap[i] >= 0, float(gap[i]), float(t[i + 1]), rate)


def theorems_suite(cfg: RunConfig) -> list[CheckReport]:
    res = run(cfg.sim)
    hist = res.sup_history
    t = hist[:, 0]
    out = [
        _monotone("sup_norm_nonincreasing", t, hist[:, 1], 1e-8),
        _monotone("l2_norm_nonincreasing", t, hist[:, 2], 1e-8),
        _monotone("slope_nonincreasing", t, hist[:, 3], 1e-8),
    ]
    rows = res.series
    B0 = rows[0].metrics.slope_B
    small = 0 < B0 <= SMALL_SLOPE
    ts = np.array([r.t for r in rows])
    if small:
        minf = np.array([r.metrics.curvature_Mp[math.inf] for r in rows])
        env = np.array([r.envelope for r in rows])
        margin = env + cfg.sim.envelope_tol - minf
        i = int(np.argmin(margin))
        out.append(CheckReport("curvature_envelope", margin[i] >= 0, float(margin[i]), float(ts[i]), cfg.sim.envelope_tol))
        for p in (1.5, 2.0, 3.0, math.inf):
            v = np.array([r.metrics.curvature_Mp[p] for r in rows])
            out.append(_below_initial(f"curvature_L{p:g}_below_initial", ts, v, 1e-8))
        for p, e in res.ledger.entries.items():
            slacks = np.array([r.ledger_slack[p] for r in rows])
            i = int(np.argmin(slacks))
            out.append(CheckReport(f"ledger_slack_p{p:g}", slacks[i] >= -1e-8, float(slacks[i]), float(ts[i]), 1e-8))
    else:
        for name in ("curvature_envelope", "ledger_slack"):
            out.append(CheckReport(name, False, float("nan"), float("nan"), float("nan"), True,
                                   f"initial slope {B0:g} outside the small-slope regime (0, {SMALL_SLOPE}]"))
    if cfg.twin_eps0 > 0:
        rep = twin_divergence(cfg.sim, cfg.twin_eps0, cfg.twin_bump)
        i = int(np.argmin(rep.envelope - rep.divergence))
        out.append(CheckReport("twin_divergence_envelope", rep.passed, rep.worst_margin, float(rep.times[i]), 1e-9))
    return out


def _below_initial(name: str, t: np.ndarray, v: np.ndarray, tol: float) -> CheckReport:
    margin = v[0] + tol - v
    i = int(np.argmin(margin))
    return CheckReport(name, margin[i] >= 0, float(margin[i] - tol), float(t[i]), tol)


def run_suite(cfg: RunConfig, suite: str) -> list[CheckReport]:
    table = {"operators": operators_suite, "bounds": bounds_suite, "theorems": theorems_suite}
    if suite not in table:
        raise ValueError(f"unknown suite {suite!r}")
    return table[suite](cfg)
