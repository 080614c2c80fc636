"""Singular-integral operators of the interface equation.

All evaluators take a :class:`GridFunction` and a :class:`QuadratureConfig`
and return grid functions.  The truncated alpha-sums run in compiled
kernels; far-field corrections come from :mod:`muskat.quadrature`.

Notation: ``d_a g(x) = g(x) - g(x - a)`` and the common kernel is
``1 / ((d_a f)^2 + a^2)``.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import _kernels as K
from .grid import GridFunction, derivative_values, interpolate
from .quadrature import AlphaNodes, QuadratureConfig

__all__ = [
    "GridMismatchError",
    "TTerms",
    "Remainders",
    "muskat_rhs",
    "velocity",
    "apply_Lf",
    "apply_Df",
    "apply_Dp",
    "fprime_rhs",
    "t_terms",
    "remainders",
    "remainders_analytic",
    "rhs_at_point",
    "smallest_node_integrand",
]

_DEFAULT = QuadratureConfig()


class GridMismatchError(ValueError):
    pass


@dataclass(frozen=True)
class TTerms:
    T1: GridFunction
    T2: GridFunction
    T3: GridFunction
    T4: GridFunction
    T5: GridFunction

    def sum_t1_to_t4(self) -> np.ndarray:
        return self.T1.values + self.T2.values + self.T3.values + self.T4.values


@dataclass(frozen=True)
class Remainders:
    R1: float
    R2: float


def _layout(nodes: AlphaNodes):
    return (nodes.base_m, nodes.base_p, nodes.blk_m, nodes.blk_p, nodes.stride, nodes.cycle, nodes.alpha)


def _same_grid(f: GridFunction, g: GridFunction) -> None:
    if f.grid != g.grid:
        raise GridMismatchError(f"grids differ: {f.grid} vs {g.grid}")


def _is_constant(v: np.ndarray) -> bool:
    return bool(np.all(v == v[0]))


# ---------------------------------------------------------------------------
# array-level evaluators, shared with the time stepper


def rhs_values(f: np.ndarray, L: float, nodes: AlphaNodes) -> np.ndarray:
    if _is_constant(f):
        return np.zeros_like(f)
    fp = derivative_values(f, L, 1)
    out = np.empty_like(f)
    K.rhs_sum(f, fp, nodes.table(f), *_layout(nodes), out)
    out *= nodes.spacing
    if nodes.far is not None:
        # far field: transport by the second-order velocity tail plus the linear dissipation tail
        out -= fp * nodes.far.cross(f, f) + nodes.far.difference(f)
    return out


def velocity_values(f: np.ndarray, L: float, nodes: AlphaNodes) -> np.ndarray:
    if _is_constant(f):
        return np.zeros_like(f)
    out = np.empty_like(f)
    K.velocity_sum(f, nodes.table(f), *_layout(nodes), out)
    out *= nodes.spacing
    if nodes.far is not None:
        out += nodes.far.cross(f, f)
    return out


def _weighted(f: np.ndarray, g: np.ndarray, power: float, nodes: AlphaNodes) -> np.ndarray:
    out = np.empty_like(f)
    tf = nodes.table(f)
    tg = tf if g is f else nodes.table(g)
    K.weighted_sum(f, g, tf, tg, float(power), *_layout(nodes), out)
    out *= nodes.spacing
    return out


def lf_values(f: np.ndarray, g: np.ndarray, nodes: AlphaNodes) -> np.ndarray:
    if _is_constant(g):
        return np.zeros_like(g)
    out = _weighted(f, g, 1.0, nodes)
    if nodes.far is not None:
        out += nodes.far.difference(g)
    return out


def df_values(f: np.ndarray, g: np.ndarray, nodes: AlphaNodes) -> np.ndarray:
    if _is_constant(g):
        return np.zeros_like(g)
    out = _weighted(f, g, 2.0, nodes)
    if nodes.far is not None:
        out += nodes.far.squared_difference(g)
    return out


def dp_values(f: np.ndarray, g: np.ndarray, p: float, nodes: AlphaNodes) -> np.ndarray:
    if _is_constant(g):
        return np.zeros_like(g)
    out = _weighted(f, g, p, nodes)
    if nodes.far is not None:
        out += nodes.far.power_difference(g, p)
    return out


# ---------------------------------------------------------------------------
# public API


def muskat_rhs(f: GridFunction, q: QuadratureConfig = _DEFAULT) -> GridFunction:
    """Time derivative of the interface height.

    PV int (f'(x) a - d_a f) / ((d_a f)^2 + a^2) da, summed over symmetric
    node pairs.
    """
    nodes = q.resolve(f.grid)
    return f.with_values(rhs_values(f.values, f.grid.half_length, nodes))


def velocity(f: GridFunction, q: QuadratureConfig = _DEFAULT) -> GridFunction:
    """Transport velocity -PV int a / ((d_a f)^2 + a^2) da."""
    nodes = q.resolve(f.grid)
    return f.with_values(velocity_values(f.values, f.grid.half_length, nodes))


def apply_Lf(f: GridFunction, g: GridFunction, q: QuadratureConfig = _DEFAULT) -> GridFunction:
    """PV int d_a g / ((d_a f)^2 + a^2) da."""
    _same_grid(f, g)
    return g.with_values(lf_values(f.values, g.values, q.resolve(f.grid)))


def apply_Df(f: GridFunction, g: GridFunction, q: QuadratureConfig = _DEFAULT) -> GridFunction:
    """int (d_a g)^2 / ((d_a f)^2 + a^2) da."""
    _same_grid(f, g)
    return g.with_values(df_values(f.values, g.values, q.resolve(f.grid)))


def apply_Dp(f: GridFunction, g: GridFunction, p: float, q: QuadratureConfig = _DEFAULT) -> GridFunction:
    """int |d_a g|^p / ((d_a f)^2 + a^2) da for 1 < p < 2."""
    if not 1.0 < p < 2.0:
        raise ValueError(f"exponent must lie in (1, 2), got {p}")
    _same_grid(f, g)
    return g.with_values(dp_values(f.values, g.values, p, q.resolve(f.grid)))


def fprime_rhs(f: GridFunction, q: QuadratureConfig = _DEFAULT) -> GridFunction:
    """Time derivative of the slope: -v f'' - L_f[f'] + quadratic term."""
    L = f.grid.half_length
    fv = f.values
    if _is_constant(fv):
        return f.with_values(np.zeros_like(fv))
    nodes = q.resolve(f.grid)
    fp = derivative_values(fv, L, 1)
    fpp = derivative_values(fv, L, 2)
    quad = np.empty_like(fv)
    K.slope_quadratic_sum(fv, fp, nodes.table(fv), nodes.table(fp), *_layout(nodes), quad)
    quad *= nodes.spacing
    if nodes.far is not None:
        quad -= 2.0 * fp * nodes.far.cross(fv, fp)
    v = velocity_values(fv, L, nodes)
    return f.with_values(-v * fpp - lf_values(fv, fp, nodes) + quad)


def t_terms(f: GridFunction, q: QuadratureConfig = _DEFAULT) -> TTerms:
    """The four nonlinear terms of the curvature equation and T5 = d/dx velocity."""
    L = f.grid.half_length
    fv = f.values
    n = fv.shape[0]
    out = np.zeros((5, n))
    if not _is_constant(fv):
        nodes = q.resolve(f.grid)
        fp = derivative_values(fv, L, 1)
        fpp = derivative_values(fv, L, 2)
        K.t_terms_sum(
            fv, fp, fpp, nodes.table(fv), nodes.table(fp), nodes.table(fpp), *_layout(nodes), out
        )
        out *= nodes.spacing
        far = nodes.far
        if far is not None:
            out[0] -= 4.0 * fpp * far.cross(fv, fp)
            out[1] -= 2.0 * fp * far.cross(fp, fp)
            out[2] -= 2.0 * fp * far.cross(fv, fpp)
            out[4] += 2.0 * far.cross(fp, fv)
    gf = [f.with_values(row) for row in out]
    return TTerms(*gf)


# ---------------------------------------------------------------------------
# remainders and pointwise diagnostics


def remainders(f: GridFunction, x_index: int, alpha: float) -> Remainders:
    """Taylor remainders of the difference quotients at node ``x_index``.

    R1 = (f'(x) - f'(x-a))/a - f''(x)
    R2 = (f(x) - f(x-a))/a - f'(x) + (a/2) f''(x)
    Off-grid values come from the trigonometric interpolant.
    """
    if alpha == 0:
        raise ValueError("alpha must be nonzero")
    L = f.grid.half_length
    fp = f.with_values(derivative_values(f.values, L, 1))
    fpp = derivative_values(f.values, L, 2)[x_index]
    x = f.grid.nodes[x_index]
    f_shift = interpolate(f, x - alpha)[0]
    fp_shift = interpolate(fp, x - alpha)[0]
    r1 = (fp.values[x_index] - fp_shift) / alpha - fpp
    r2 = (f.values[x_index] - f_shift) / alpha - fp.values[x_index] + 0.5 * alpha * fpp
    return Remainders(float(r1), float(r2))


def remainders_analytic(f, fp, fpp, x: float, alpha: float) -> Remainders:
    """Same remainders for callables on the line (no periodization)."""
    if alpha == 0:
        raise ValueError("alpha must be nonzero")
    r1 = (fp(x) - fp(x - alpha)) / alpha - fpp(x)
    r2 = (f(x) - f(x - alpha)) / alpha - fp(x) + 0.5 * alpha * fpp(x)
    return Remainders(float(r1), float(r2))


def rhs_at_point(f, fp, x: float, spacing: float, radius: float) -> float:
    """Truncated right-hand side at ``x`` for a callable profile on the line."""
    m = np.arange(int(np.ceil(radius / spacing - 1e-9)))
    total = 0.0
    for a in ((m + 0.5) * spacing, -(m + 0.5) * spacing):
        d = f(x) - f(x - a)
        total += float(np.sum((fp(x) * a - d) / (d * d + a * a)))
    return total * spacing


def smallest_node_integrand(f: GridFunction, q: QuadratureConfig = _DEFAULT) -> tuple[np.ndarray, np.ndarray]:
    """Pair-averaged right-hand-side integrand at the smallest node, and its a -> 0 limit.

    The limit is f''/(2 (1 + f'^2)); the two agree to O(h_alpha^2).
    """
    nodes = q.resolve(f.grid)
    L = f.grid.half_length
    fv = f.values
    fp = derivative_values(fv, L, 1)
    fpp = derivative_values(fv, L, 2)
    tf = nodes.table(fv)
    a = nodes.alpha[0]
    d1 = fv - nodes.gather(tf, 0, +1)
    d2 = fv - nodes.gather(tf, 0, -1)
    sample = 0.5 * ((fp * a - d1) / (d1 * d1 + a * a) + (-fp * a - d2) / (d2 * d2 + a * a))
    return sample, fpp / (2.0 * (1.0 + fp * fp))
