"""Acceptance checks at the stated tolerances, one summary line per check."""
import math
import time

import numpy as np
import pytest

from muskat import bounds
from muskat.bounds import Modulus
from muskat.diagnostics import check_pointwise_bounds, estimate_modulus
from muskat.evolve import SimConfig, run, twin_divergence
from muskat.grid import (
    GridFunction,
    derivative_values,
    hilbert,
    lambda_op,
    lp_norm_values,
    make_grid,
    random_bandlimited,
    spectral_derivative,
)
from muskat.operators import apply_Df, apply_Lf, fprime_rhs, muskat_rhs, t_terms, velocity
from muskat.quadrature import QuadratureConfig
from conftest import acceptance_line


def _rel(a, b):
    return float(np.max(np.abs(a - b)) / np.max(np.abs(b)))


def test_flat_operator_identities():
    t0 = time.perf_counter()
    grid = make_grid(math.pi, 1024)
    x = grid.nodes
    flat = GridFunction(grid, np.zeros(1024))
    rng = np.random.default_rng(0)
    worst_flat = 0.0
    for k in (1, 2, 17, 64, 128):
        c = GridFunction(grid, np.cos(k * x + 0.3))
        worst_flat = max(worst_flat, _rel(apply_Lf(flat, c).values, lambda_op(c).values))
    g = random_bandlimited(grid, 128, 1.0, rng, decay=0.0)
    worst_flat = max(worst_flat, _rel(apply_Lf(flat, g).values, lambda_op(g).values))
    cos_err = float(np.max(np.abs(lambda_op(GridFunction(grid, np.cos(x))).values - math.pi * np.cos(x))))
    hil_err = _rel(hilbert(spectral_derivative(g, 1)).values, lambda_op(g).values)
    elapsed = time.perf_counter() - t0
    ok = worst_flat <= 1e-6 and cos_err <= 1e-10 and hil_err <= 1e-12 and elapsed <= 60
    acceptance_line(
        "flat-interface operator equals the half-Laplacian",
        ok,
        f"L_0 vs Lambda rel {worst_flat:.2e} (<=1e-6), Lambda cos {cos_err:.2e} (<=1e-10), "
        f"Lambda vs H d/dx rel {hil_err:.2e} (<=1e-12), {elapsed:.1f}s (<=60s)",
    )
    assert ok


def test_hhalf_of_cosine_and_truncation_convergence():
    grid = make_grid(math.pi, 512)
    h = grid.spacing
    c = GridFunction(grid, np.cos(grid.nodes))
    flat = GridFunction(grid, np.zeros(512))
    exact = 2 * math.pi**2
    total = h * float(np.sum(apply_Df(flat, c, QuadratureConfig(truncation_radius=8 * math.pi)).values))
    err = abs(total - exact) / exact
    radii = [math.pi * 2**j for j in range(1, 6)]
    errs = []
    for A in radii:
        q = QuadratureConfig(truncation_radius=A, tail_correction=False)
        errs.append(abs(h * float(np.sum(apply_Df(flat, c, q).values)) - exact))
    ratios = np.array(errs[:-1]) / np.array(errs[1:])
    ok = err <= 1e-2 and bool(np.all(np.abs(ratios - 2.0) <= 0.1))
    acceptance_line(
        "grid sum of the flat dissipation of cos is 2 pi^2",
        ok,
        f"rel err {err:.2e} (<=1e-2); untruncated-tail error ratios under A doubling {np.round(ratios, 3).tolist()} (~2)",
    )
    assert ok


def test_weighted_operator_has_zero_mean():
    grid = make_grid(math.pi, 256)
    h = grid.spacing
    rng = np.random.default_rng(1)
    worst = 0.0
    for i in range(10):
        f = random_bandlimited(grid, 16, [0.1, 0.5, 1.0][i % 3], rng)
        fpp = np.abs(derivative_values(f.values, math.pi, 2))
        for p in (1.5, 2.0):
            u = GridFunction(grid, fpp**p)
            mean = h * float(np.sum(apply_Lf(f, u).values))
            worst = max(worst, abs(mean) / lp_norm_values(fpp, h, p) ** p)
    ok = worst <= 1e-6
    acceptance_line("L_f of |f''|^p integrates to zero", ok, f"worst |mean|/|f''|_p^p {worst:.2e} (<=1e-6)")
    assert ok


def test_pointwise_lower_bounds_on_random_profiles():
    t0 = time.perf_counter()
    grid = make_grid(math.pi, 512)
    rng = np.random.default_rng(2)
    names = ("cubic_lower_bound", "lp_lower_bound_D", "fppp_lower_bound")
    worst = {n: math.inf for n in names}
    fails = []
    for i in range(20):
        f = random_bandlimited(grid, [4, 8, 16, 32][i % 4], [0.05, 0.3, 1.0, 2.0][i % 4], rng)
        for r in check_pointwise_bounds(f):
            if r.name in worst:
                assert not r.skipped
                worst[r.name] = min(worst[r.name], r.worst_margin / max(r.tolerance, 1e-300))
                if not r.passed:
                    fails.append((i, r.name, r.worst_margin))
    elapsed = time.perf_counter() - t0
    ok = not fails and elapsed <= 300
    acceptance_line(
        "pointwise dissipation lower bounds (cubic, L^2 variant, third derivative)",
        ok,
        f"{len(fails)} violations over 20 profiles; worst margin/tol "
        + ", ".join(f"{n} {v:.3g}" for n, v in worst.items())
        + f"; {elapsed:.1f}s (<=300s)",
    )
    assert ok


def test_modulus_lower_bound_and_radius_equation():
    grid = make_grid(math.pi, 512)
    rng = np.random.default_rng(3)
    dists = grid.spacing * np.arange(1, 257)
    violations, worst = 0, math.inf
    for i in range(5):
        f = random_bandlimited(grid, [3, 6, 10, 4, 8][i], 1.0, rng)
        fp = derivative_values(f.values, math.pi, 1)
        fpp = derivative_values(f.values, math.pi, 2)
        # scale so that 2 B M_inf <= 1; then |f'(x) - f'(x-a)| <= min(M_inf a, 2B) <= min(sqrt(a), 2B)
        s = 1.0 / math.sqrt(2 * np.max(np.abs(fp)) * np.max(np.abs(fpp)))
        f = f.with_values(s * f.values)
        B = s * float(np.max(np.abs(fp)))
        rho = Modulus(family="capped_power", K=1.0, beta=0.5).with_default_cap(B)
        est = estimate_modulus(spectral_derivative(f, 1), dists)
        assert np.all(est.values <= rho(dists))
        rep = [r for r in check_pointwise_bounds(f, modulus=rho) if r.name == "modulus_lower_bound"][0]
        violations += not rep.passed
        worst = min(worst, rep.worst_margin)
    rho = Modulus().with_default_cap(1.0)
    resid = max(
        abs(r * bounds.tail_integral(rho, r) - y / 6) / (y / 6)
        for y in (0.01, 0.5, 6.0, 60.0, 1e4)
        for r in [bounds.solve_r(y, rho, 1.0)]
    )
    sqrt_rho = Modulus(family="power", K=1.0, beta=0.5)
    closed = max(abs(bounds.solve_r(y, sqrt_rho, 1.0) - 128 / y**2) / (128 / y**2) for y in (0.5, 6.0, 12.0, 100.0))
    ok = violations == 0 and resid <= 1e-10 and closed <= 1e-10
    acceptance_line(
        "modulus-of-continuity lower bound and implicit radius",
        ok,
        f"{violations} violating profiles (worst margin {worst:.3g}); radius equation residual {resid:.1e} (<=1e-10); "
        f"closed form 128/y^2 rel {closed:.1e} (<=1e-10)",
    )
    assert ok


@pytest.fixture(scope="module")
def long_run():
    cfg = SimConfig(N=512, init={"family": "sine", "a": 0.01, "k": 1}, t_end=20.0, cfl_safety=0.5, output_stride=20)
    t0 = time.perf_counter()
    res = run(cfg)
    return res, time.perf_counter() - t0


def _max_increase_rate(t, v):
    # largest (v[j] - v[i]) - 1e-8 (t[j] - t[i]) over i < j, via the running minimum of v - 1e-8 t
    w = v - 1e-8 * t
    return float(np.max(w[1:] - np.minimum.accumulate(w)[:-1]))


@pytest.mark.slow
def test_maximum_principles(long_run):
    res, elapsed = long_run
    hist = res.sup_history
    t = hist[:, 0]
    excess = {name: _max_increase_rate(t, hist[:, k]) for name, k in (("sup", 1), ("L2", 2), ("slope", 3))}
    ok = not res.halted and all(v <= 0 for v in excess.values()) and elapsed <= 300
    acceptance_line(
        "maximum principles for |f|_inf, |f|_2, |f'|_inf",
        ok,
        f"{len(t) - 1} steps to t={t[-1]:g}; worst excess over 1e-8/unit time "
        + ", ".join(f"{k} {v:.2e}" for k, v in excess.items())
        + f" (<=0); {elapsed:.0f}s (<=300s)",
    )
    assert ok


@pytest.mark.slow
def test_curvature_decay_envelope(long_run):
    res, _ = long_run
    margin = min(r.envelope + 1e-6 - r.metrics.curvature_Mp[math.inf] for r in res.series)
    ok = margin >= 0 and "envelope_violation" not in res.events.kinds()
    acceptance_line(
        "curvature stays below M0/(1+M0 t/(100B))",
        ok,
        f"min(envelope + 1e-6 - M_inf) {margin:.3e} over {len(res.series)} output times (>=0)",
    )
    assert ok


@pytest.mark.slow
def test_curvature_energy_ledger(long_run):
    res, _ = long_run
    s2 = min(r.ledger_slack[2.0] for r in res.series)
    s15 = min(r.ledger_slack[1.5] for r in res.series)
    ok = s2 >= -1e-8 and s15 >= -1e-8
    acceptance_line("L^p curvature energy ledger", ok, f"min slack p=2 {s2:.3e}, p=1.5 {s15:.3e} (>=-1e-8)")
    assert ok


def test_derivative_structure_of_the_equation():
    grid = make_grid(math.pi, 1024)
    f = GridFunction(grid, 0.3 * np.sin(grid.nodes))
    rhs = muskat_rhs(f).values
    d1 = derivative_values(rhs, math.pi, 1)
    d2 = derivative_values(rhs, math.pi, 2)
    e1 = _rel(d1, fprime_rhs(f).values)
    f3 = spectral_derivative(f, 3)
    f2 = spectral_derivative(f, 2)
    tt = t_terms(f)
    assembled = -velocity(f).values * f3.values - apply_Lf(f, f2).values + tt.sum_t1_to_t4()
    e2 = _rel(d2, assembled)
    ok = e1 <= 1e-4 and e2 <= 1e-3
    acceptance_line(
        "slope and curvature equations are derivatives of the height equation",
        ok,
        f"d/dx rel {e1:.2e} (<=1e-4), d2/dx2 rel {e2:.2e} (<=1e-3)",
    )
    assert ok


def test_scaling_covariance():
    n = 256
    grid = make_grid(math.pi, n)
    rng = np.random.default_rng(4)
    worst = 0.0
    for _ in range(3):
        f = random_bandlimited(grid, 8, 0.1, rng)
        # g(x) = f(2x)/2 on the same grid; 2 x_j is node (2j - N/2) mod N
        idx = (2 * np.arange(n) - n // 2) % n
        g = GridFunction(grid, 0.5 * f.values[idx])
        worst = max(worst, _rel(muskat_rhs(g).values, muskat_rhs(f).values[idx]))
    ok = worst <= 1e-6
    acceptance_line("scaling covariance for lambda = 2", ok, f"rel {worst:.2e} (<=1e-6)")
    assert ok


def test_twin_trajectories_stay_below_the_exponential_envelope():
    cfg = SimConfig(N=128, init={"family": "sine", "a": 0.05, "k": 1}, t_end=10.0, cfl_safety=0.5, output_stride=10)
    rep = twin_divergence(cfg, 1e-6)
    ok = rep.passed
    acceptance_line(
        "twin trajectories stay below the exponential envelope",
        ok,
        f"eps={rep.eps:.3g}, B={rep.B:.3g}, worst margin {rep.worst_margin:.3e}, "
        f"|g(10)|/|g(0)| {rep.divergence[-1] / rep.divergence[0]:.3g}",
    )
    assert ok
