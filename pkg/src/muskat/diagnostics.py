"""Measurements and inequality checks on interface profiles and runs."""
from __future__ import annotations

import math
from dataclasses import asdict, dataclass, field
from typing import Iterable, Sequence

import numpy as np

from . import bounds
from .grid import (
    GridFunction,
    Metrics,
    derivative_values,
    hhalf_squared_values,
    lp_norm_values,
)
from .operators import df_values, dp_values, lf_values, t_terms
from .quadrature import QuadratureConfig

__all__ = [
    "CheckReport",
    "ModulusEstimate",
    "Ledger",
    "LedgerEntry",
    "RatioReport",
    "UnresolvedDataError",
    "snapshot_metrics",
    "estimate_modulus",
    "spectral_tail_ratio",
    "check_pointwise_bounds",
    "ledger_start",
    "ledger_update",
    "envelope_curvature",
    "check_identities",
    "empirical_constants",
    "EXCLUSION_LEVEL",
    "BOUND_RTOL",
]

EXCLUSION_LEVEL = 1e-10  # nodes with |g| below this fraction of max|g| are skipped
BOUND_RTOL = 1e-6  # quadrature tolerance for pointwise bound checks, relative to max LHS
SPECTRAL_TAIL_LIMIT = 1e-10

_DEFAULT = QuadratureConfig()


class UnresolvedDataError(ValueError):
    """The profile has too much energy near the Nyquist scale for derivative checks."""


@dataclass
class CheckReport:
    name: str
    passed: bool
    worst_margin: float
    worst_location: float
    tolerance: float
    skipped: bool = False
    detail: str = ""

    def to_dict(self) -> dict:
        d = {
            "name": self.name,
            "pass": bool(self.passed),
            "worst_margin": float(self.worst_margin),
            "worst_location": float(self.worst_location),
            "tolerance": float(self.tolerance),
        }
        if self.skipped:
            d["skipped"] = True
        if self.detail:
            d["detail"] = self.detail
        return d


def _report(name: str, margin: np.ndarray, where: np.ndarray, tol: float, mask=None) -> CheckReport:
    if mask is not None:
        margin, where = margin[mask], where[mask]
    if margin.size == 0:
        return CheckReport(name, True, 0.0, float("nan"), tol)
    i = int(np.argmin(margin))
    worst = float(margin[i])
    return CheckReport(name, worst >= -tol, worst, float(where[i]), tol)


# ---------------------------------------------------------------------------
# norms and moduli


def snapshot_metrics(f: GridFunction, ps: Sequence[float] = (1.5, 2.0, 3.0)) -> Metrics:
    L, h = f.grid.half_length, f.grid.spacing
    fp = derivative_values(f.values, L, 1)
    fpp = derivative_values(f.values, L, 2)
    mp = {float(p): lp_norm_values(fpp, h, p) for p in ps}
    mp[math.inf] = lp_norm_values(fpp, h, math.inf)
    return Metrics(
        sup_f=float(np.max(np.abs(f.values))),
        slope_B=float(np.max(np.abs(fp))),
        curvature_Mp=mp,
        hhalf=math.sqrt(hhalf_squared_values(fpp, L)),
    )


@dataclass(frozen=True)
class ModulusEstimate:
    distances: np.ndarray
    values: np.ndarray

    def __call__(self, d):
        return np.interp(d, np.concatenate([[0.0], self.distances]), np.concatenate([[0.0], self.values]))

    def as_modulus(self) -> bounds.Modulus:
        d, v = self.distances, np.maximum.accumulate(self.values)
        keep = np.concatenate([[True], np.diff(d) > 0])
        return bounds.Modulus.table(d[keep], v[keep])

    def largest_distance_below(self, level: float) -> float:
        """Largest sampled distance d with rho_hat(d) <= level (0 if none)."""
        ok = np.nonzero(self.values <= level)[0]
        return float(self.distances[ok[-1]]) if ok.size else 0.0


def estimate_modulus(fp: GridFunction, distances: Iterable[float], max_nodes: int = 2048) -> ModulusEstimate:
    """rho_hat(d) = max over nodes and grid shifts |s h| <= d of |fp(x) - fp(x - s h)|.

    Distances are periodic, so shifts beyond half a period are not needed.
    For N above ``max_nodes`` the base points are subsampled.
    """
    d = np.asarray(list(distances), dtype=float)
    if np.any(d <= 0) or np.any(np.diff(d) < 0):
        raise ValueError("distances must be positive and sorted")
    v = fp.values
    n, h = fp.grid.node_count, fp.grid.spacing
    stride = max(1, n // max_nodes)
    base = np.arange(0, n, stride)
    shifts = np.arange(1, n // 2 + 1)
    per_shift = np.array([np.max(np.abs(v[base] - v[(base - s) % n])) for s in shifts])
    running = np.maximum.accumulate(per_shift)
    count = np.minimum(np.floor(d / h + 1e-9).astype(int), n // 2)
    vals = np.where(count > 0, running[np.maximum(count, 1) - 1], 0.0)
    return ModulusEstimate(d, vals)


def spectral_tail_ratio(g: np.ndarray) -> float:
    """max |g_hat| over |k| > N/4 relative to max |g_hat|."""
    spec = np.abs(np.fft.rfft(g - np.mean(g)))
    top = np.max(spec)
    if top == 0:
        return 0.0
    return float(np.max(spec[g.shape[0] // 4 + 1 :]) / top)


# ---------------------------------------------------------------------------
# pointwise lower bounds


def check_pointwise_bounds(
    f: GridFunction,
    q: QuadratureConfig = _DEFAULT,
    modulus: bounds.Modulus | None = None,
    p_low: float = 1.5,
    rtol: float = BOUND_RTOL,
    bound_scale: float = 1.0,
) -> list[CheckReport]:
    """Compare weighted dissipations of f'' and f''' with their lower bounds at every node.

    ``bound_scale`` multiplies every bound and exists to exercise the
    failure path.
    """
    names = [
        "dissipation_comparison",
        "cubic_lower_bound",
        "dp_lower_bound",
        "lp_lower_bound_D",
        "lp_lower_bound_Dp",
        "fppp_lower_bound",
    ]
    if modulus is not None:
        names.append("modulus_lower_bound")
    ratio = spectral_tail_ratio(f.values)
    if ratio > SPECTRAL_TAIL_LIMIT:
        msg = f"spectral tail ratio {ratio:.3g} exceeds {SPECTRAL_TAIL_LIMIT:g}"
        return [CheckReport(n, False, float("nan"), float("nan"), float("nan"), True, msg) for n in names]

    grid = f.grid
    L, h, x = grid.half_length, grid.spacing, grid.nodes
    nodes = q.resolve(grid)
    fv = f.values
    fp = derivative_values(fv, L, 1)
    f2 = derivative_values(fv, L, 2)
    f3 = derivative_values(fv, L, 3)
    B = float(np.max(np.abs(fp)))
    m2 = np.abs(f2)
    Minf = float(np.max(m2))
    mask2 = m2 >= EXCLUSION_LEVEL * Minf if Minf > 0 else np.zeros_like(m2, bool)
    m3 = np.abs(f3)
    M3 = float(np.max(m3))
    mask3 = m3 >= EXCLUSION_LEVEL * M3 if M3 > 0 else np.zeros_like(m3, bool)
    zero = np.zeros_like(fv)
    s = bound_scale

    if B == 0 or Minf == 0:
        return [CheckReport(n, True, 0.0, float("nan"), 0.0) for n in names]

    D = df_values(fv, f2, nodes)
    Dflat = df_values(zero, f2, nodes)
    Dp = dp_values(fv, f2, p_low, nodes)
    D3 = df_values(fv, f3, nodes)
    tol = rtol * float(np.max(np.abs(D)))
    tolp = rtol * float(np.max(np.abs(Dp)))
    tol3 = rtol * float(np.max(np.abs(D3)))
    M2 = lp_norm_values(f2, h, 2.0)
    Mp = lp_norm_values(f2, h, p_low)

    out = [
        _report(names[0], D - s * Dflat / (1.0 + B * B), x, tol, mask2),
        _report(names[1], D - s * bounds.cubic_lower_bound(m2, B), x, tol, mask2),
        _report(names[2], Dp - s * bounds.dp_lower_bound(m2, B, p_low), x, tolp, mask2),
        _report(names[3], D - s * bounds.lp_lower_bound(m2, B, 2.0, M2, "D"), x, tol, mask2),
        _report(names[4], Dp - s * bounds.lp_lower_bound(m2, B, p_low, Mp, "Dp"), x, tolp, mask2),
        _report(names[5], D3 - s * bounds.fppp_lower_bound(m3, Minf, B), x, tol3, mask3),
    ]
    if modulus is not None:
        rho = modulus.with_default_cap(B)
        lb = np.array([bounds.L_B(float(y), rho, B) if ok else 0.0 for y, ok in zip(m2, mask2)])
        out.append(_report(names[6], D - s * lb, x, tol, mask2))
    return out


# ---------------------------------------------------------------------------
# energy ledger


@dataclass
class LedgerEntry:
    p: float
    c_hhalf: float
    c_power: float
    start: float
    current: float
    int_hhalf: float = 0.0
    int_power: float = 0.0
    last_hhalf: float = 0.0
    last_power: float = 0.0

    @property
    def slack(self) -> float:
        return self.start - (self.current + self.c_hhalf * self.int_hhalf + self.c_power * self.int_power)


@dataclass
class Ledger:
    """Running L^p energy inequality for the curvature.

    For p >= 2 the dissipation coefficients are 1/(p^2 (1+B^2)) on the
    H^{1/2} term and 1/(200 B (1+B^2)) on the L^{p+1} term.  For 1 < p < 2
    only the L^{p+1} term is kept, with coefficient 1/(400 B (1+B^2)).
    """

    B: float
    t: float = 0.0
    entries: dict[float, LedgerEntry] = field(default_factory=dict)

    def slack(self, p: float) -> float:
        return self.entries[float(p)].slack

    def as_dict(self) -> dict:
        return {"B": self.B, "t": self.t, "entries": {str(k): asdict(v) for k, v in self.entries.items()}}


LOW_P_CONSTANT = 400.0


def _coefficients(p: float, B: float) -> tuple[float, float]:
    w = 1.0 / (1.0 + B * B)
    if p >= 2:
        return w / (p * p), (w / (200.0 * B) if B > 0 else 0.0)
    return 0.0, (w / (LOW_P_CONSTANT * B) if B > 0 else 0.0)


def _ledger_integrands(fpp: np.ndarray, L: float, h: float, p: float) -> tuple[float, float, float]:
    a = np.abs(fpp)
    mpp = float(h * np.sum(a**p))
    hh = hhalf_squared_values(a ** (0.5 * p), L) if p >= 2 else 0.0
    power = float(h * np.sum(a ** (p + 1.0)))
    return mpp, hh, power


def ledger_start(f: GridFunction, ps: Sequence[float] = (2.0, 1.5), B: float | None = None) -> Ledger:
    L, h = f.grid.half_length, f.grid.spacing
    if B is None:
        B = float(np.max(np.abs(derivative_values(f.values, L, 1))))
    fpp = derivative_values(f.values, L, 2)
    led = Ledger(B=B)
    for p in ps:
        if not p > 1:
            raise ValueError(f"ledger exponents must exceed 1, got {p}")
        c1, c2 = _coefficients(float(p), B)
        mpp, hh, pw = _ledger_integrands(fpp, L, h, float(p))
        led.entries[float(p)] = LedgerEntry(float(p), c1, c2, mpp, mpp, last_hhalf=hh, last_power=pw)
    return led


def ledger_update(ledger: Ledger, f: GridFunction, dt: float) -> Ledger:
    """Advance the time integrals by one trapezoid step of length ``dt``."""
    if not dt > 0:
        raise ValueError("dt must be positive")
    L, h = f.grid.half_length, f.grid.spacing
    fpp = derivative_values(f.values, L, 2)
    for p, e in ledger.entries.items():
        mpp, hh, pw = _ledger_integrands(fpp, L, h, p)
        e.int_hhalf += 0.5 * dt * (e.last_hhalf + hh)
        e.int_power += 0.5 * dt * (e.last_power + pw)
        e.last_hhalf, e.last_power, e.current = hh, pw, mpp
    ledger.t += dt
    return ledger


def envelope_curvature(t, M0: float, B: float):
    """M0 / (1 + M0 t / (100 B))."""
    if not B > 0:
        raise ValueError(f"slope bound must be positive, got {B}")
    if M0 < 0:
        raise ValueError("initial curvature must be non-negative")
    return M0 / (1.0 + M0 * np.asarray(t, dtype=float) / (100.0 * B))


# ---------------------------------------------------------------------------
# identities


def check_identities(
    f: GridFunction,
    g: GridFunction,
    q: QuadratureConfig = _DEFAULT,
    p: float = 2.0,
    hhalf_rtol: float = 1e-2,
    mean_rtol: float = 1e-6,
    square_rtol: float = 1e-8,
) -> list[CheckReport]:
    """Three structural identities.

    * the grid sum of D[g] equals the squared H^{1/2} seminorm
    * L_f[|g|^p] has zero grid mean
    * L_f[g^2] = 2 g L_f[g] - D_f[g] pointwise
    """
    grid = g.grid
    nodes = q.resolve(grid)
    L, h, x = grid.half_length, grid.spacing, grid.nodes
    gv, fv = g.values, f.values

    total = h * float(np.sum(df_values(np.zeros_like(gv), gv, nodes)))
    hh = hhalf_squared_values(gv, L)
    scale = max(abs(hh), np.finfo(float).tiny)
    r1 = CheckReport("hhalf_identity", abs(total - hh) <= hhalf_rtol * scale,
                     -abs(total - hh) / scale, float("nan"), hhalf_rtol)
    if hh == 0:
        r1 = CheckReport("hhalf_identity", abs(total) == 0.0, -abs(total), float("nan"), hhalf_rtol)

    u = np.abs(gv) ** p
    mean = h * float(np.sum(lf_values(fv, u, nodes)))
    norm = h * float(np.sum(u))
    rel = abs(mean) / norm if norm > 0 else abs(mean)
    r2 = CheckReport("zero_mean_identity", rel <= mean_rtol, -rel, float("nan"), mean_rtol)

    lhs = lf_values(fv, gv * gv, nodes)
    rhs = 2.0 * gv * lf_values(fv, gv, nodes) - df_values(fv, gv, nodes)
    err = np.abs(lhs - rhs)
    sc = max(float(np.max(np.abs(lhs))), float(np.max(np.abs(rhs))))
    rel3 = err / sc if sc > 0 else err
    i = int(np.argmax(rel3))
    r3 = CheckReport("square_identity", float(rel3[i]) <= square_rtol, -float(rel3[i]), float(x[i]), square_rtol)
    return [r1, r2, r3]


@dataclass(frozen=True)
class RatioReport:
    ratios: np.ndarray
    locations: np.ndarray
    max: float
    median: float
    count: int


def empirical_constants(f: GridFunction, eps: float, q: QuadratureConfig = _DEFAULT) -> RatioReport:
    """(|T1|+|T2|+|T3|+|T4|) / (B f''^2 / eps^2 + eps B^2 D[f''] / |f''|) at resolved nodes.

    Purely a report; no constant is asserted.
    """
    if not 0 < eps <= 1:
        raise ValueError("eps must lie in (0, 1]")
    grid = f.grid
    L = grid.half_length
    fv = f.values
    fp = derivative_values(fv, L, 1)
    f2 = derivative_values(fv, L, 2)
    B = float(np.max(np.abs(fp)))
    m = np.abs(f2)
    Minf = float(np.max(m))
    mask = m >= EXCLUSION_LEVEL * Minf if Minf > 0 else np.zeros_like(m, bool)
    if B == 0 or not np.any(mask):
        raise ValueError("no node has a resolvable curvature")
    tt = t_terms(f, q)
    num = np.abs(tt.T1.values) + np.abs(tt.T2.values) + np.abs(tt.T3.values) + np.abs(tt.T4.values)
    Dflat = df_values(np.zeros_like(fv), f2, q.resolve(grid))
    den = B * m[mask] ** 2 / eps**2 + eps * B * B * Dflat[mask] / m[mask]
    r = num[mask] / den
    return RatioReport(r, grid.nodes[mask], float(np.max(r)), float(np.median(r)), int(r.size))
