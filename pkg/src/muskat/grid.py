"""Periodic grids, grid functions and Fourier-side operators.

The interface is sampled on the torus ``[-L, L)`` at ``N`` equispaced
nodes.  Every integral over the line is replaced by an integral over one
period, so norms such as ``lp_norm`` are one-period quantities.

All Fourier work uses the real FFT.  Angular wavenumbers are
``xi_k = pi * k / L`` for ``k = 0 .. N/2``.
"""
from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Mapping

import numpy as np

__all__ = [
    "ConfigurationError",
    "Grid",
    "GridFunction",
    "Metrics",
    "make_grid",
    "sample",
    "random_bandlimited",
    "spectral_derivative",
    "lp_norm",
    "hhalf_seminorm",
    "lambda_op",
    "hilbert",
    "interpolate",
    "read_csv",
    "write_csv",
    "HHALF_FOURIER_CONSTANT",
]

# Weight of |xi| |c_k|^2 in the Fourier form of int D[g] dx.  Fixed by
# matching the double integral on cos(x) (value 2 pi^2); see the
# calibration test in tests/test_grid.py.
HHALF_FOURIER_CONSTANT = 2.0 * math.pi


class ConfigurationError(ValueError):
    """Raised for invalid grids, initial data or run parameters."""


@dataclass(frozen=True)
class Grid:
    half_length: float
    node_count: int

    def __post_init__(self) -> None:
        n = self.node_count
        if isinstance(n, bool) or int(n) != n or n < 8 or (int(n) & (int(n) - 1)):
            raise ConfigurationError(f"node count must be a power of two >= 8, got {n!r}")
        if not (math.isfinite(self.half_length) and self.half_length > 0):
            raise ConfigurationError(f"half length must be positive, got {self.half_length!r}")
        object.__setattr__(self, "node_count", int(n))
        object.__setattr__(self, "half_length", float(self.half_length))

    @property
    def spacing(self) -> float:
        return 2.0 * self.half_length / self.node_count

    @property
    def period(self) -> float:
        return 2.0 * self.half_length

    @property
    def nodes(self) -> np.ndarray:
        return -self.half_length + self.spacing * np.arange(self.node_count)

    @property
    def wavenumbers(self) -> np.ndarray:
        """Angular wavenumbers of the real-FFT bins."""
        return math.pi / self.half_length * np.arange(self.node_count // 2 + 1)


@dataclass(frozen=True, eq=False)
class GridFunction:
    grid: Grid
    values: np.ndarray

    def __post_init__(self) -> None:
        v = np.array(self.values, dtype=float, copy=True)
        if v.shape != (self.grid.node_count,):
            raise ConfigurationError(
                f"expected {self.grid.node_count} values, got shape {v.shape}"
            )
        if not np.all(np.isfinite(v)):
            raise ValueError("grid function has non-finite values")
        v.setflags(write=False)
        object.__setattr__(self, "values", v)

    def with_values(self, values: np.ndarray) -> "GridFunction":
        return GridFunction(self.grid, values)

    def shift(self, s: int) -> "GridFunction":
        """Circular shift by ``s`` nodes: the result at x_j is the input at x_{j-s}."""
        return GridFunction(self.grid, np.roll(self.values, s))

    def __len__(self) -> int:
        return self.grid.node_count


@dataclass(frozen=True)
class Metrics:
    sup_f: float
    slope_B: float
    curvature_Mp: Mapping[float, float] = field(default_factory=dict)
    hhalf: float = 0.0


def make_grid(L: float, N: int) -> Grid:
    return Grid(float(L), N)


# ---------------------------------------------------------------------------
# Fourier helpers on raw arrays.  Inputs are mean-subtracted before the FFT
# so that constants map to exact zeros.


def _rfft_centered(values: np.ndarray) -> tuple[float, np.ndarray]:
    mean = float(np.mean(values))
    return mean, np.fft.rfft(values - mean)


def apply_multiplier(values: np.ndarray, mult: np.ndarray, keep_mean: bool = False) -> np.ndarray:
    """Apply a Fourier multiplier given on the real-FFT bins.

    The zero mode is handled separately: the output mean is ``mult[0]``
    times the input mean when ``keep_mean`` is set, and zero otherwise.
    """
    mean, spec = _rfft_centered(values)
    out = np.fft.irfft(spec * mult, n=values.shape[0])
    if keep_mean and mean != 0.0:
        out = out + mult[0].real * mean
    return out


def derivative_values(values: np.ndarray, L: float, order: int) -> np.ndarray:
    n = values.shape[0]
    xi = math.pi / L * np.arange(n // 2 + 1)
    mult = (1j * xi) ** order
    if order % 2:
        mult[-1] = 0.0
    return apply_multiplier(values, mult)


def upsample_values(values: np.ndarray, factor: int) -> np.ndarray:
    """Trigonometric interpolant of ``values`` on a grid ``factor`` times finer."""
    n = values.shape[0]
    mean, spec = _rfft_centered(values)
    fine = np.zeros(n * factor // 2 + 1, dtype=complex)
    fine[: n // 2 + 1] = spec
    if factor > 1:
        # the Nyquist cosine is shared between +N/2 and -N/2 on the fine grid
        fine[n // 2] *= 0.5
    return mean + factor * np.fft.irfft(fine, n=n * factor)


# ---------------------------------------------------------------------------
# Initial data


def _check_periodic_wavenumber(k: float, L: float) -> None:
    turns = k * L / math.pi
    if abs(turns - round(turns)) > 1e-9:
        raise ConfigurationError(f"sin({k} x) is not periodic on [-{L}, {L})")


def _periodized_gaussian(x: np.ndarray, L: float, amplitude: float, sigma: float, center: float) -> np.ndarray:
    # Poisson summation: the wrapped Gaussian as a rapidly convergent cosine series.
    kmax = int(math.ceil(10.0 * L / (math.pi * sigma))) + 1
    xi = math.pi / L * np.arange(kmax + 1)
    coef = amplitude * sigma * math.sqrt(2.0 * math.pi) / (2.0 * L) * np.exp(-0.5 * (sigma * xi) ** 2)
    coef[1:] *= 2.0
    return np.cos(np.outer(x - center, xi)) @ coef


def random_bandlimited(
    grid: Grid, kmax: int, amplitude: float, rng: np.random.Generator, decay: float = 2.0
) -> GridFunction:
    """Random trigonometric polynomial with modes 1..kmax, scaled to sup norm ``amplitude``.

    Mode k has Gaussian cosine and sine coefficients of size k**-decay.
    """
    if not 1 <= kmax < grid.node_count // 2:
        raise ConfigurationError(f"kmax must lie in [1, N/2), got {kmax}")
    x = grid.nodes
    k = np.arange(1, kmax + 1)
    scale = k ** (-float(decay))
    a = rng.standard_normal(kmax) * scale
    b = rng.standard_normal(kmax) * scale
    xi = math.pi / grid.half_length * k
    phase = np.outer(x, xi)
    v = np.cos(phase) @ a + np.sin(phase) @ b
    v *= amplitude / np.max(np.abs(v))
    return GridFunction(grid, v)


def sample(spec: Mapping[str, Any], grid: Grid) -> GridFunction:
    """Sample a built-in initial-data family at the grid nodes.

    Families
    --------
    ``constant``  c
    ``sine``      a * sin(k x + phase)
    ``sines``     sum over ``terms`` of [a, k] or [a, k, phase]
    ``gaussian``  a * sum_n exp(-(x - center + 2nL)^2 / (2 sigma^2))
    ``table``     explicit ``values`` of length N
    ``random``    random trigonometric polynomial (``seed``, ``kmax``, ``a``)
    """
    family = spec.get("family")
    x = grid.nodes
    L = grid.half_length
    if family == "constant":
        v = np.full(grid.node_count, float(spec.get("c", 0.0)))
    elif family == "sine":
        k = float(spec.get("k", 1.0))
        _check_periodic_wavenumber(k, L)
        v = float(spec.get("a", 1.0)) * np.sin(k * x + float(spec.get("phase", 0.0)))
    elif family == "sines":
        v = np.zeros(grid.node_count)
        for term in spec.get("terms", []):
            a, k = float(term[0]), float(term[1])
            phase = float(term[2]) if len(term) > 2 else 0.0
            _check_periodic_wavenumber(k, L)
            v = v + a * np.sin(k * x + phase)
    elif family == "gaussian":
        sigma = float(spec.get("sigma", 0.5))
        if sigma <= 0:
            raise ConfigurationError("gaussian width must be positive")
        v = _periodized_gaussian(x, L, float(spec.get("a", 1.0)), sigma, float(spec.get("center", 0.0)))
    elif family == "table":
        v = np.asarray(spec.get("values", []), dtype=float)
        if v.shape != (grid.node_count,):
            raise ConfigurationError(
                f"table has {v.size} values but the grid has {grid.node_count} nodes"
            )
    elif family == "random":
        rng = np.random.default_rng(int(spec.get("seed", 0)))
        return random_bandlimited(
            grid, int(spec.get("kmax", 8)), float(spec.get("a", 0.1)), rng, float(spec.get("decay", 2.0))
        )
    else:
        raise ConfigurationError(f"unknown initial-data family {family!r}")
    return GridFunction(grid, v)


# ---------------------------------------------------------------------------
# Derivatives, norms and multipliers


def spectral_derivative(g: GridFunction, order: int) -> GridFunction:
    if order not in (1, 2, 3, 4):
        raise ValueError(f"derivative order must be 1..4, got {order}")
    return g.with_values(derivative_values(g.values, g.grid.half_length, order))


def lp_norm_values(values: np.ndarray, h: float, p: float) -> float:
    if p == math.inf:
        return float(np.max(np.abs(values)))
    if not p > 1:
        raise ValueError(f"L^p norms need p > 1, got {p}")
    return float((h * np.sum(np.abs(values) ** p)) ** (1.0 / p))


def lp_norm(g: GridFunction, p: float) -> float:
    """One-period L^p norm; ``p = math.inf`` gives the max norm."""
    return lp_norm_values(g.values, g.grid.spacing, p)


def hhalf_squared_values(values: np.ndarray, L: float) -> float:
    n = values.shape[0]
    _, spec = _rfft_centered(values)
    c2 = np.abs(spec / n) ** 2
    c2[1 : (n + 1) // 2] *= 2.0  # bins with a conjugate partner
    if n % 2 == 0:
        c2[-1] *= 0.5  # Nyquist cosine splits evenly between +-N/2
    xi = math.pi / L * np.arange(n // 2 + 1)
    return float(HHALF_FOURIER_CONSTANT * 2.0 * L * np.sum(xi * c2))


def hhalf_seminorm(g: GridFunction) -> float:
    """Homogeneous H^{1/2} seminorm, normalized so its square is int D[g] dx."""
    return math.sqrt(hhalf_squared_values(g.values, g.grid.half_length))


def lambda_op(g: GridFunction) -> GridFunction:
    """Fourier multiplier pi |xi|: the flat-interface limit of the dissipation operator."""
    xi = g.grid.wavenumbers
    return g.with_values(apply_multiplier(g.values, math.pi * xi))


def hilbert(g: GridFunction) -> GridFunction:
    """Fourier multiplier -i pi sign(xi), so that lambda_op = hilbert after d/dx."""
    mult = np.full(g.grid.node_count // 2 + 1, -1j * math.pi)
    mult[0] = 0.0
    mult[-1] = 0.0
    return g.with_values(apply_multiplier(g.values, mult))


def interpolate(g: GridFunction, points: np.ndarray | float) -> np.ndarray:
    """Evaluate the trigonometric interpolant of ``g`` at arbitrary points."""
    n = g.grid.node_count
    pts = np.atleast_1d(np.asarray(points, dtype=float))
    spec = np.fft.rfft(g.values) / n
    spec[1 : (n + 1) // 2] *= 2.0
    xi = g.grid.wavenumbers
    phase = np.exp(1j * np.outer(pts + g.grid.half_length, xi))
    return (phase @ spec).real


# ---------------------------------------------------------------------------
# CSV


def write_csv(g: GridFunction, path: str | Path) -> None:
    with open(path, "w", newline="") as fh:
        fh.write("x,value\n")
        for x, v in zip(g.grid.nodes, g.values):
            fh.write(f"{x:.17g},{v:.17g}\n")


def read_csv(path: str | Path) -> GridFunction:
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is None or [h.strip() for h in header] != ["x", "value"]:
            raise ConfigurationError(f"{path}: expected header 'x,value'")
        rows = [(float(a), float(b)) for a, b in reader]
    if not rows:
        raise ConfigurationError(f"{path}: no data rows")
    x = np.array([r[0] for r in rows])
    v = np.array([r[1] for r in rows])
    n = len(rows)
    L = -x[0]
    grid = make_grid(L, n)
    if not np.allclose(x, grid.nodes, rtol=0, atol=1e-12 * max(1.0, L)):
        raise ConfigurationError(f"{path}: x column is not a uniform periodic grid on [-L, L)")
    return GridFunction(grid, v)
