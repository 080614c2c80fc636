"""Explicit time stepping, run monitoring and the twin-trajectory probe."""
from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from typing import Any, Callable, Mapping

import numpy as np

from .diagnostics import (
    Ledger,
    envelope_curvature,
    estimate_modulus,
    ledger_start,
    ledger_update,
    snapshot_metrics,
)
from .grid import ConfigurationError, Grid, GridFunction, Metrics, derivative_values, make_grid, sample
from .operators import rhs_values
from .quadrature import AlphaNodes, QuadratureConfig

__all__ = [
    "SimConfig",
    "SimState",
    "Event",
    "EventLog",
    "SeriesRow",
    "RunResult",
    "TwinReport",
    "NonFiniteStateError",
    "cfl_dt",
    "step",
    "run",
    "twin_divergence",
    "MEAN_DRIFT_RTOL",
]

log = logging.getLogger(__name__)

MEAN_DRIFT_RTOL = 1e-12


class NonFiniteStateError(FloatingPointError):
    pass


@dataclass(frozen=True)
class SimConfig:
    N: int = 256
    L: float = math.pi
    init: Mapping[str, Any] = field(default_factory=lambda: {"family": "sine", "a": 0.01, "k": 1})
    t_end: float = 1.0
    cfl_safety: float = 0.1
    output_stride: int = 10
    ledger_ps: tuple[float, ...] = (2.0, 1.5)
    quadrature: QuadratureConfig = QuadratureConfig()
    slope_threshold: float = 10.0
    envelope_tol: float = 1e-6
    inject_nan_step: int | None = None  # test hook: poison the state after this step

    def __post_init__(self) -> None:
        if not 0 < self.cfl_safety <= 0.5:
            raise ConfigurationError(f"cfl_safety must lie in (0, 0.5], got {self.cfl_safety}")
        if not self.t_end > 0:
            raise ConfigurationError(f"t_end must be positive, got {self.t_end}")
        if int(self.output_stride) != self.output_stride or self.output_stride < 1:
            raise ConfigurationError("output_stride must be a positive integer")
        for p in self.ledger_ps:
            if not p > 1:
                raise ConfigurationError(f"ledger exponents must exceed 1, got {p}")
        object.__setattr__(self, "ledger_ps", tuple(float(p) for p in self.ledger_ps))

    @property
    def grid(self) -> Grid:
        return make_grid(self.L, self.N)

    def initial(self) -> GridFunction:
        return sample(self.init, self.grid)


@dataclass(frozen=True)
class SimState:
    t: float
    f: GridFunction
    step_index: int = 0


@dataclass(frozen=True)
class Event:
    t: float
    kind: str
    payload: Mapping[str, Any] = field(default_factory=dict)


class EventLog(list):
    """Chronological list of :class:`Event`."""

    KINDS = ("slope_threshold", "nan_detected", "envelope_violation")

    def record(self, t: float, kind: str, **payload: Any) -> None:
        if kind not in self.KINDS:
            raise ValueError(f"unknown event kind {kind!r}")
        if self and t < self[-1].t:
            raise ValueError("event times must be non-decreasing")
        self.append(Event(float(t), kind, payload))

    def kinds(self) -> list[str]:
        return [e.kind for e in self]

    def to_json(self) -> list[dict]:
        return [{"t": e.t, "kind": e.kind, "payload": dict(e.payload)} for e in self]


def cfl_dt(f: GridFunction, cfg: SimConfig) -> float:
    """cfl_safety * h * min(1, 1 + B^2) / pi with B the current max slope."""
    B = float(np.max(np.abs(derivative_values(f.values, f.grid.half_length, 1))))
    return cfg.cfl_safety * f.grid.spacing * min(1.0, 1.0 + B * B) / math.pi


def _ssp_rk3(u: np.ndarray, dt: float, L: float, nodes: AlphaNodes) -> np.ndarray:
    u1 = u + dt * rhs_values(u, L, nodes)
    u2 = 0.75 * u + 0.25 * (u1 + dt * rhs_values(u1, L, nodes))
    return u / 3.0 + 2.0 / 3.0 * (u2 + dt * rhs_values(u2, L, nodes))


def mean_drift(old: np.ndarray, new: np.ndarray) -> float:
    """Change of the grid mean relative to max(|old|_inf, tiny)."""
    scale = max(float(np.max(np.abs(old))), np.finfo(float).tiny)
    return abs(float(np.mean(new)) - float(np.mean(old))) / scale


def step(s: SimState, dt: float, q: QuadratureConfig = QuadratureConfig()) -> SimState:
    """One strong-stability-preserving third-order Runge-Kutta step."""
    if not dt > 0:
        raise ValueError("dt must be positive")
    grid = s.f.grid
    u = s.f.values
    if np.all(u == u[0]):
        new = u.copy()  # constants are exact steady states
    else:
        new = _ssp_rk3(u, dt, grid.half_length, q.resolve(grid))
    if not np.all(np.isfinite(new)):
        raise NonFiniteStateError(f"non-finite state after step {s.step_index + 1}")
    drift = mean_drift(u, new)
    if drift > MEAN_DRIFT_RTOL:
        log.warning("mean drifted by %.3g (relative) at step %d", drift, s.step_index + 1)
    return SimState(s.t + dt, GridFunction(grid, new), s.step_index + 1)


@dataclass(frozen=True)
class SeriesRow:
    t: float
    step: int
    metrics: Metrics
    envelope: float
    ledger_slack: Mapping[float, float]

    CSV_HEADER = ("t", "sup_f", "B", "M_2", "M_inf", "hhalf", "envelope", "ledger_slack_p2")

    def csv_values(self) -> tuple[float, ...]:
        m = self.metrics
        return (
            self.t,
            m.sup_f,
            m.slope_B,
            m.curvature_Mp.get(2.0, math.nan),
            m.curvature_Mp[math.inf],
            m.hhalf,
            self.envelope,
            self.ledger_slack.get(2.0, math.nan),
        )


@dataclass
class RunResult:
    series: list[SeriesRow]
    events: EventLog
    ledger: Ledger
    final: SimState
    halted: bool
    sup_history: np.ndarray  # (t, |f|_inf, |f|_2, |f'|_inf) after every step

    @property
    def halting_event(self) -> str | None:
        return self.events[-1].kind if self.halted and self.events else None


def _row(state: SimState, ledger: Ledger, M0: float, B0: float) -> SeriesRow:
    m = snapshot_metrics(state.f)
    env = float(envelope_curvature(state.t, M0, B0)) if B0 > 0 else M0
    return SeriesRow(state.t, state.step_index, m, env, {p: e.slack for p, e in ledger.entries.items()})


def run(cfg: SimConfig, f0: GridFunction | None = None, on_row: Callable[[SeriesRow], None] | None = None) -> RunResult:
    """Integrate to ``cfg.t_end`` or until a halting event.

    Metrics rows are produced at step 0, every ``output_stride`` steps and at
    the final time.  The ledger advances every step.
    """
    f = cfg.initial() if f0 is None else f0
    grid = f.grid
    nodes_q = cfg.quadrature
    nodes_q.resolve(grid)  # validate early
    state = SimState(0.0, f, 0)
    ledger = ledger_start(f, cfg.ledger_ps)
    events = EventLog()
    first = snapshot_metrics(f)
    M0, B0 = first.curvature_Mp[math.inf], first.slope_B
    series: list[SeriesRow] = []
    h = grid.spacing
    hist = [(0.0, first.sup_f, _l2(f.values, h), first.slope_B)]
    envelope_flagged = False

    def emit(st: SimState) -> SeriesRow:
        row = _row(st, ledger, M0, B0)
        series.append(row)
        if on_row is not None:
            on_row(row)
        return row

    emit(state)
    halted = False
    while state.t < cfg.t_end * (1 - 1e-14):
        dt = min(cfl_dt(state.f, cfg), cfg.t_end - state.t)
        try:
            new = step(state, dt, nodes_q)
            if cfg.inject_nan_step is not None and new.step_index == cfg.inject_nan_step:
                raise NonFiniteStateError("injected NaN")
        except NonFiniteStateError as exc:
            events.record(state.t + dt, "nan_detected", step=state.step_index + 1, message=str(exc))
            halted = True
            break
        state = new
        ledger_update(ledger, state.f, dt)
        fp = derivative_values(state.f.values, grid.half_length, 1)
        B = float(np.max(np.abs(fp)))
        hist.append((state.t, float(np.max(np.abs(state.f.values))), _l2(state.f.values, h), B))
        done = state.t >= cfg.t_end * (1 - 1e-14)
        halt = B > cfg.slope_threshold
        if state.step_index % cfg.output_stride == 0 or done or halt:
            row = emit(state)
            minf = row.metrics.curvature_Mp[math.inf]
            if not envelope_flagged and minf > row.envelope + cfg.envelope_tol:
                events.record(state.t, "envelope_violation", M_inf=minf, envelope=row.envelope)
                envelope_flagged = True
        if halt:
            events.record(state.t, "slope_threshold", B=B, threshold=cfg.slope_threshold)
            halted = True
            break
    return RunResult(series, events, ledger, state, halted, np.array(hist))


def _l2(v: np.ndarray, h: float) -> float:
    return math.sqrt(h * float(np.sum(v * v)))


# ---------------------------------------------------------------------------
# twin trajectories


@dataclass
class TwinReport:
    times: np.ndarray
    divergence: np.ndarray
    envelope: np.ndarray
    B: float
    eps: float
    initial_divergence: float

    @property
    def passed(self) -> bool:
        return bool(np.all(self.divergence <= self.envelope * (1 + 1e-9)))

    @property
    def worst_margin(self) -> float:
        return float(np.min(self.envelope - self.divergence))


DEFAULT_BUMP = {"family": "gaussian", "a": 1.0, "sigma": 0.5, "center": 0.0}


def twin_divergence(
    cfg: SimConfig, eps0: float, bump: Mapping[str, Any] | None = None, level: float = 0.5
) -> TwinReport:
    """Run f0 and f0 + eps0 * bump side by side and compare with the exponential envelope.

    The envelope is |g(0)|_inf * exp(2 B^2 t / eps) where B is the largest
    slope seen in either run and eps is the smallest, over output times, of
    the largest distance at which the measured modulus of the perturbed
    slope stays below ``level``.
    """
    if eps0 < 0:
        raise ValueError("perturbation amplitude must be non-negative")
    grid = cfg.grid
    f0 = cfg.initial()
    b = sample(bump or DEFAULT_BUMP, grid)
    s1 = SimState(0.0, f0, 0)
    s2 = SimState(0.0, GridFunction(grid, f0.values + eps0 * b.values), 0)
    L, h, n = grid.half_length, grid.spacing, grid.node_count
    dists = h * np.arange(1, n // 2 + 1)

    times, div, Bs, eps_seen = [], [], [], []

    def observe(a: SimState, c: SimState, measure: bool) -> None:
        times.append(a.t)
        div.append(float(np.max(np.abs(c.f.values - a.f.values))))
        fp1 = derivative_values(a.f.values, L, 1)
        fp2 = derivative_values(c.f.values, L, 1)
        Bs.append(max(float(np.max(np.abs(fp1))), float(np.max(np.abs(fp2)))))
        if measure:
            est = estimate_modulus(GridFunction(grid, fp2), dists)
            eps_seen.append(est.largest_distance_below(level))

    observe(s1, s2, True)
    while s1.t < cfg.t_end * (1 - 1e-14):
        dt = min(cfl_dt(s1.f, cfg), cfl_dt(s2.f, cfg), cfg.t_end - s1.t)
        s1 = step(s1, dt, cfg.quadrature)
        s2 = step(s2, dt, cfg.quadrature)
        out = s1.step_index % cfg.output_stride == 0 or s1.t >= cfg.t_end * (1 - 1e-14)
        observe(s1, s2, out)
    t = np.array(times)
    B = max(Bs)
    eps = min(eps_seen)
    if eps <= 0:
        raise ValueError("measured modulus exceeds the level at every sampled distance")
    d = np.array(div)
    env = d[0] * np.exp(2.0 * B * B * t / eps)
    return TwinReport(t, d, env, B, eps, d[0])
