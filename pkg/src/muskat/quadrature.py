"""Staggered symmetric-pair quadrature for the alpha-integrals.

Nodes sit at ``+-(m + 1/2) h_alpha`` for ``0 <= m < M``; each node and its
mirror image are summed together, which realizes the principal value.
Samples of a grid function at ``x_j -+ alpha_m`` come from its
trigonometric interpolant.  When ``h_alpha / h`` is a small rational
number, every shifted sample lands on a refined grid and one upsampling
FFT serves all nodes.  Otherwise each node gets its own FFT shift.

Beyond the truncation radius the kernels are expanded in powers of
``1/alpha``.  The ``1/alpha^2`` and ``1/alpha^3`` far-field pieces are
integrated exactly as Fourier multipliers on the torus; the remainder is
``O(A^-3)``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache

import numpy as np
from scipy.special import sici

from .grid import ConfigurationError, Grid, _rfft_centered, upsample_values

__all__ = ["QuadratureConfig", "AlphaNodes", "FarField", "MAX_REFINEMENT"]

MAX_REFINEMENT = 64


@dataclass(frozen=True)
class QuadratureConfig:
    """Quadrature parameters.

    ``alpha_spacing`` defaults to the grid spacing and
    ``truncation_radius`` to ``8 L``.  ``tail_correction`` adds the exact
    far-field multipliers beyond the truncation radius.
    """

    alpha_spacing: float | None = None
    truncation_radius: float | None = None
    tail_correction: bool = True

    def resolve(self, grid: Grid) -> "AlphaNodes":
        h = grid.spacing
        ha = h if self.alpha_spacing is None else float(self.alpha_spacing)
        A = 8.0 * grid.half_length if self.truncation_radius is None else float(self.truncation_radius)
        if not (math.isfinite(ha) and ha > 0):
            raise ConfigurationError(f"alpha_spacing must be positive, got {ha}")
        if not math.isfinite(A) or A < grid.half_length * (1 - 1e-12):
            raise ConfigurationError(
                f"truncation_radius {A} is below the half length {grid.half_length}"
            )
        return _resolve(grid.half_length, grid.node_count, ha, A, bool(self.tail_correction))


@dataclass(frozen=True, eq=False)
class AlphaNodes:
    """Resolved node set plus the gather layout used by the kernels.

    A shifted sample ``g(x_j - alpha_m)`` is ``table[blk_m[m] + i]`` with
    ``i = base_m[m] + j * stride`` reduced once modulo ``cycle``.  The
    ``+alpha_m`` samples use ``base_p`` and ``blk_p``.
    """

    half_length: float
    node_count: int
    spacing: float
    count: int
    radius: float
    alpha: np.ndarray
    refinement: int  # 0 means per-node FFT shifts
    base_m: np.ndarray
    base_p: np.ndarray
    blk_m: np.ndarray
    blk_p: np.ndarray
    stride: int
    cycle: int
    far: "FarField | None"

    def table(self, values: np.ndarray) -> np.ndarray:
        """Flat sample table of ``values`` for the kernels."""
        values = np.ascontiguousarray(values, dtype=float)
        if self.refinement:
            return upsample_values(values, self.refinement)
        return _shift_table(values, self.half_length, self.alpha)

    def gather(self, table: np.ndarray, m: int, sign: int) -> np.ndarray:
        """Samples at ``x_j - sign * alpha_m`` for all nodes (slow, for diagnostics)."""
        j = np.arange(self.node_count)
        base, blk = (self.base_m, self.blk_m) if sign > 0 else (self.base_p, self.blk_p)
        i = (base[m] + j * self.stride) % self.cycle
        return table[blk[m] + i]


def _shift_table(values: np.ndarray, L: float, alpha: np.ndarray) -> np.ndarray:
    n = values.shape[0]
    mean, spec = _rfft_centered(values)
    xi = math.pi / L * np.arange(n // 2 + 1)
    out = np.empty((2 * alpha.size, n))
    for m, a in enumerate(alpha):
        ph = np.exp(-1j * xi * a)
        ph[-1] = math.cos(xi[-1] * a)  # keep the Nyquist term real
        out[2 * m] = np.fft.irfft(spec * ph, n=n)
        out[2 * m + 1] = np.fft.irfft(spec * np.conj(ph), n=n)
    return (out + mean).ravel()


@lru_cache(maxsize=64)
def _resolve(L: float, n: int, ha: float, A: float, tail: bool) -> AlphaNodes:
    h = 2.0 * L / n
    ratio = Fraction(ha / h).limit_denominator(MAX_REFINEMENT // 2)
    commensurate = abs(float(ratio) - ha / h) <= 1e-12 * (ha / h)
    if commensurate:
        ha = float(ratio) * h
    count = max(1, int(math.ceil(A / ha - 1e-9)))
    mm = np.arange(count)
    alpha = (mm + 0.5) * ha
    if commensurate:
        refinement = 2 * ratio.denominator
        offsets = (2 * mm + 1) * ratio.numerator
        cycle = n * refinement
        base_m = (-offsets) % cycle
        base_p = offsets % cycle
        blk_m = np.zeros(count, dtype=np.int64)
        blk_p = np.zeros(count, dtype=np.int64)
        stride = refinement
    else:
        refinement = 0
        cycle = n
        stride = 1
        base_m = np.zeros(count, dtype=np.int64)
        base_p = np.zeros(count, dtype=np.int64)
        blk_m = 2 * mm * n
        blk_p = (2 * mm + 1) * n
    radius = count * ha
    far = FarField.build(L, n, radius) if tail else None
    return AlphaNodes(
        half_length=L,
        node_count=n,
        spacing=ha,
        count=count,
        radius=radius,
        alpha=alpha,
        refinement=refinement,
        base_m=np.ascontiguousarray(base_m, dtype=np.int64),
        base_p=np.ascontiguousarray(base_p, dtype=np.int64),
        blk_m=np.ascontiguousarray(blk_m, dtype=np.int64),
        blk_p=np.ascontiguousarray(blk_p, dtype=np.int64),
        stride=int(stride),
        cycle=int(cycle),
        far=far,
    )


def tail_cos2(xi: np.ndarray, A: float) -> np.ndarray:
    """``int_A^inf cos(xi a) / a^2 da`` for ``xi >= 0``."""
    xi = np.asarray(xi, dtype=float)
    si, _ = sici(xi * A)
    return np.cos(xi * A) / A - xi * (0.5 * math.pi - si)


def tail_sin3(xi: np.ndarray, A: float) -> np.ndarray:
    """``int_A^inf sin(xi a) / a^3 da`` for ``xi >= 0``."""
    xi = np.asarray(xi, dtype=float)
    return np.sin(xi * A) / (2.0 * A * A) + 0.5 * xi * tail_cos2(xi, A)


@dataclass(frozen=True, eq=False)
class FarField:
    """Exact periodic far-field pieces for ``|alpha| > A``.

    ``even`` is the multiplier of ``u -> int_{|a|>A} u(x-a)/a^2 da`` and
    ``odd`` the multiplier of ``u -> int_{|a|>A} u(x-a)/a^3 da``.
    """

    radius: float
    even: np.ndarray
    odd: np.ndarray
    kernel: np.ndarray  # grid-space circulant of ``even``

    @classmethod
    def build(cls, L: float, n: int, A: float) -> "FarField":
        xi = math.pi / L * np.arange(n // 2 + 1)
        even = 2.0 * tail_cos2(xi, A)
        odd = -2j * tail_sin3(xi, A)
        odd[-1] = 0.0
        # circulant weights K with sum_j K_j u(x_i - x_j) = even-multiplier applied to u
        kernel = np.fft.irfft(even, n=n)
        return cls(A, even, odd, kernel)

    def _apply(self, mult: np.ndarray, u: np.ndarray) -> np.ndarray:
        _, spec = _rfft_centered(u)
        return np.fft.irfft(spec * mult, n=u.shape[0])

    def even_op(self, u: np.ndarray) -> np.ndarray:
        """int_{|a|>A} (u(x-a) - mean u) / a^2 da.  The mean part is added by callers."""
        return self._apply(self.even, u)

    def odd_op(self, u: np.ndarray) -> np.ndarray:
        return self._apply(self.odd, u)

    def difference(self, g: np.ndarray) -> np.ndarray:
        """int_{|a|>A} (g(x) - g(x-a)) / a^2 da."""
        return 2.0 / self.radius * (g - np.mean(g)) - self.even_op(g)

    def squared_difference(self, g: np.ndarray) -> np.ndarray:
        """int_{|a|>A} (g(x) - g(x-a))^2 / a^2 da."""
        g = g - np.mean(g)
        g2 = g * g
        c = 2.0 / self.radius
        return c * g2 - 2.0 * g * self.even_op(g) + self.even_op(g2) + c * np.mean(g2)

    def power_difference(self, g: np.ndarray, p: float) -> np.ndarray:
        """int_{|a|>A} |g(x) - g(x-a)|^p / a^2 da, as a circulant sum over the grid."""
        n = g.shape[0]
        idx = np.subtract.outer(np.arange(n), np.arange(n)) % n
        diff = np.abs(g[:, None] - g[None, :]) ** p
        return np.sum(diff * self.kernel[idx], axis=1)

    def cross(self, a: np.ndarray, b: np.ndarray) -> np.ndarray:
        """int_{|al|>A} (a(x) - a(x-al)) (b(x) - b(x-al)) / al^3 dal."""
        o = self.odd_op
        return -a * o(b) - b * o(a) + o(a * b)

