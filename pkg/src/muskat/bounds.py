"""Pointwise lower bounds for the weighted dissipation and remainder envelopes.

All evaluators are plain functions of scalars (or numpy arrays of ``m``).
The modulus-of-continuity bound is defined implicitly through the radius
``r(y)`` solving ``r * int_{r/2}^inf rho(a)/a^3 da = y/6``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from typing import Sequence

import numpy as np
from scipy import optimize

__all__ = [
    "Modulus",
    "BoundParams",
    "DegenerateModulusError",
    "cubic_lower_bound",
    "dp_lower_bound",
    "lp_lower_bound",
    "fppp_lower_bound",
    "tail_integral",
    "solve_r",
    "L_B",
    "remainder_envelope",
    "envelope_constants",
]


class DegenerateModulusError(ValueError):
    """The defining equation of r(y) has no sign change for this modulus."""


@dataclass(frozen=True)
class Modulus:
    """Modulus of continuity rho with rho(0) = 0.

    ``power``         K * a**beta (unbounded; analytic test family)
    ``capped_power``  min(K * a**beta, cap); ``cap=None`` means 2B at use
    ``table``         piecewise linear through (0, 0) and the given points,
                      constant after the last point
    """

    family: str = "capped_power"
    K: float = 1.0
    beta: float = 0.5
    cap: float | None = None
    distances: tuple[float, ...] = field(default=())
    values: tuple[float, ...] = field(default=())

    def __post_init__(self) -> None:
        if self.family not in ("power", "capped_power", "table"):
            raise ValueError(f"unknown modulus family {self.family!r}")
        if self.family in ("power", "capped_power"):
            if self.K < 0 or not 0 < self.beta:
                raise ValueError("power modulus needs K >= 0 and beta > 0")
            if self.cap is not None and self.cap < 0:
                raise ValueError("modulus cap must be non-negative")
        else:
            d = np.asarray(self.distances, float)
            v = np.asarray(self.values, float)
            if d.size == 0 or d.shape != v.shape:
                raise ValueError("table modulus needs matching non-empty distances and values")
            if np.any(d <= 0) or np.any(np.diff(d) <= 0):
                raise ValueError("table distances must be positive and increasing")
            if np.any(v < 0) or np.any(np.diff(v) < 0):
                raise ValueError("table values must be non-negative and non-decreasing")

    @classmethod
    def table(cls, distances: Sequence[float], values: Sequence[float]) -> "Modulus":
        return cls(family="table", distances=tuple(map(float, distances)), values=tuple(map(float, values)))

    def with_default_cap(self, B: float) -> "Modulus":
        if self.family == "capped_power" and self.cap is None:
            return replace(self, cap=2.0 * B)
        return self

    def __call__(self, a):
        a = np.asarray(a, dtype=float)
        if self.family == "table":
            d = np.concatenate([[0.0], self.distances])
            v = np.concatenate([[0.0], self.values])
            return np.interp(a, d, v)
        out = self.K * a**self.beta
        if self.family == "capped_power":
            if self.cap is None:
                raise ValueError("capped modulus has no cap; call with_default_cap(B) first")
            out = np.minimum(out, self.cap)
        return out

    def describe(self) -> str:
        if self.family == "table":
            return f"table modulus with {len(self.distances)} points"
        cap = "" if self.family == "power" else f", cap={self.cap}"
        return f"{self.family} modulus K={self.K}, beta={self.beta}{cap}"


@dataclass(frozen=True)
class BoundParams:
    B: float
    p: float
    Mp: float
    Minf: float

    def __post_init__(self) -> None:
        if not self.B > 0:
            raise ValueError("slope bound must be positive")
        if not self.p > 1:
            raise ValueError("exponent must exceed 1")
        if self.Mp < 0 or self.Minf < 0:
            raise ValueError("norms must be non-negative")


def _positive_B(B: float) -> None:
    if not B > 0:
        raise ValueError(f"slope bound must be positive, got {B}")


def cubic_lower_bound(m, B: float):
    _positive_B(B)
    return np.abs(m) ** 3 / (24.0 * B * (1.0 + B * B))


def dp_lower_bound(m, B: float, p: float):
    _positive_B(B)
    if not 1.0 < p < 2.0:
        raise ValueError(f"exponent must lie in (1, 2), got {p}")
    return np.abs(m) ** (p + 1.0) / (96.0 * B * (1.0 + B * B))


def lp_lower_bound(m, B: float, p: float, Mp: float, variant: str = "D"):
    if not Mp > 0:
        raise ValueError("L^p norm of the curvature must be positive")
    m = np.abs(m)
    if variant == "D":
        return m ** (2.0 + p) / (8.0**p * Mp**p * (1.0 + B * B))
    if variant == "Dp":
        if not 1.0 < p < 2.0:
            raise ValueError(f"the Dp variant needs p in (1, 2), got {p}")
        return m ** (2.0 * p) / (128.0 * Mp**p * (1.0 + B * B))
    raise ValueError(f"unknown variant {variant!r}")


def fppp_lower_bound(m3, Minf: float, B: float):
    if not Minf > 0:
        raise ValueError("sup norm of the curvature must be positive")
    return np.abs(m3) ** 3 / (24.0 * Minf * (1.0 + B * B))


# ---------------------------------------------------------------------------
# implicit radius


def _power_tail(K: float, beta: float, lo: float, hi: float) -> float:
    """int_lo^hi K a^(beta-3) da, hi may be inf."""
    e = beta - 2.0
    if hi == math.inf:
        if e >= 0:
            raise ValueError("power modulus with beta >= 2 has a divergent tail")
        return K * lo**e / (-e)
    if e == 0:
        return K * math.log(hi / lo)
    return K * (hi**e - lo**e) / e


def tail_integral(rho: Modulus, r: float) -> float:
    """int_{r/2}^inf rho(a) / a^3 da."""
    if not r > 0:
        raise ValueError(f"radius must be positive, got {r}")
    s = 0.5 * r
    if rho.family == "power":
        return _power_tail(rho.K, rho.beta, s, math.inf) if rho.K else 0.0
    if rho.family == "capped_power":
        M = rho.cap
        if M is None:
            raise ValueError("capped modulus has no cap")
        if rho.K == 0 or M == 0:
            return 0.0
        ac = (M / rho.K) ** (1.0 / rho.beta)
        if s >= ac:
            return M / (2.0 * s * s)
        return _power_tail(rho.K, rho.beta, s, ac) + M / (2.0 * ac * ac)
    # piecewise linear rho = c0 + c1 a integrates exactly against a^-3
    d = np.concatenate([[0.0], rho.distances])
    v = np.concatenate([[0.0], rho.values])
    last_d, last_v = d[-1], v[-1]
    if s >= last_d:
        return last_v / (2.0 * s * s)
    k = int(np.searchsorted(d, s, side="right"))
    lo = np.concatenate([[s], d[k:-1]])
    hi = d[k:]
    c1 = (v[k:] - v[k - 1 : -1]) / (d[k:] - d[k - 1 : -1])
    c0 = v[k - 1 : -1] - c1 * d[k - 1 : -1]
    pieces = 0.5 * c0 * (1.0 / lo**2 - 1.0 / hi**2) + c1 * (1.0 / lo - 1.0 / hi)
    return float(math.fsum(pieces)) + last_v / (2.0 * last_d * last_d)


def solve_r(y: float, rho: Modulus, B: float, r_min: float = 1e-12, max_doublings: int = 2000) -> float:
    """Smallest positive root of r * tail_integral(rho, r) = y / 6.

    The bracket starts at ``r_min`` and doubles until the left side drops
    below ``y/6``; bisection then refines to relative tolerance 1e-13.
    """
    if not y > 0:
        raise ValueError(f"y must be positive, got {y}")
    rho = rho.with_default_cap(B)
    target = y / 6.0

    def F(r: float) -> float:
        return r * tail_integral(rho, r) - target

    lo = r_min
    if F(lo) <= 0:
        raise DegenerateModulusError(
            f"no sign change for {rho.describe()}: r*tail <= y/6 already at r={r_min:g}"
        )
    hi = lo
    for _ in range(max_doublings):
        hi = 2.0 * lo
        if F(hi) <= 0:
            break
        lo = hi
    else:
        raise DegenerateModulusError(f"no sign change for {rho.describe()} up to r={hi:g}")
    return optimize.bisect(F, lo, hi, xtol=1e-300, rtol=1e-13, maxiter=2000)


def L_B(y: float, rho: Modulus, B: float) -> float:
    """y^2 / ((1 + B^2) r(y)); zero at y = 0 by continuity."""
    if y == 0:
        return 0.0
    return y * y / ((1.0 + B * B) * solve_r(y, rho, B))


# ---------------------------------------------------------------------------
# remainder envelopes


def envelope_constants(p: float) -> tuple[float, float]:
    """Constants (C_p, C'_p) multiplying |a|^{1/p} D^{1/p} and |a|^{1+1/p} D^{1/p}.

    For 1 < p < 2 they follow from Hoelder on the integral forms of the two
    remainders.  At p = 2 the second constant is the rounder 2/5, which is
    larger than the Hoelder value 2/(5 sqrt 3) and hence still an upper bound.
    """
    if p == 2:
        return 1.0 / math.sqrt(3.0), 0.4
    if not 1.0 < p < 2.0:
        raise ValueError(f"exponent must be 2 or lie in (1, 2), got {p}")
    c = ((p - 1.0) / (p + 1.0)) ** ((p - 1.0) / p)
    return c, c * p / (2.0 * p + 1.0)


def remainder_envelope(alpha: float, Dval: float, p: float = 2.0) -> tuple[float, float]:
    if alpha == 0:
        raise ValueError("alpha must be nonzero")
    if Dval < 0:
        raise ValueError("dissipation value must be non-negative")
    c1, c2 = envelope_constants(p)
    a = abs(alpha)
    root = Dval ** (1.0 / p)
    return c1 * a ** (1.0 / p) * root, c2 * a ** (1.0 + 1.0 / p) * root
