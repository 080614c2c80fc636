"""Compiled pair-sum loops.

Every kernel walks the alpha-nodes in a fixed order for each grid node and
accumulates with TwoSum error-free transformations, so results do not
depend on how nodes are distributed over threads.
"""
from __future__ import annotations

import os

import numba
from numba import njit, prange

if "NUMBA_THREADING_LAYER" not in os.environ:
    # the bundled TBB is often too old; OpenMP avoids a noisy fallback warning
    numba.config.THREADING_LAYER = "omp"

_threads = os.environ.get("MUSKAT_THREADS")
if _threads:
    numba.set_num_threads(max(1, min(int(_threads), numba.config.NUMBA_NUM_THREADS)))


@njit(inline="always")
def _two_sum(a, b):
    s = a + b
    bb = s - a
    return s, (a - (s - bb)) + (b - bb)


@njit(inline="always")
def _at(table, base, blk, m, j, stride, cycle):
    i = base[m] + j * stride
    if i >= cycle:
        i -= cycle
    return table[blk[m] + i]


@njit(parallel=True, cache=True)
def rhs_sum(f, fp, tf, bm, bp, km, kp, stride, cycle, alpha, out):
    n = f.shape[0]
    for j in prange(n):
        s = 0.0
        c = 0.0
        fj = f[j]
        fpj = fp[j]
        for m in range(alpha.shape[0]):
            a = alpha[m]
            d1 = fj - _at(tf, bm, km, m, j, stride, cycle)
            d2 = fj - _at(tf, bp, kp, m, j, stride, cycle)
            t = (fpj * a - d1) / (d1 * d1 + a * a) + (-fpj * a - d2) / (d2 * d2 + a * a)
            s, e = _two_sum(s, t)
            c += e
        out[j] = s + c


@njit(parallel=True, cache=True)
def velocity_sum(f, tf, bm, bp, km, kp, stride, cycle, alpha, out):
    n = f.shape[0]
    for j in prange(n):
        s = 0.0
        c = 0.0
        fj = f[j]
        for m in range(alpha.shape[0]):
            a = alpha[m]
            d1 = fj - _at(tf, bm, km, m, j, stride, cycle)
            d2 = fj - _at(tf, bp, kp, m, j, stride, cycle)
            t = a / (d2 * d2 + a * a) - a / (d1 * d1 + a * a)
            s, e = _two_sum(s, t)
            c += e
        out[j] = s + c


@njit(parallel=True, cache=True)
def weighted_sum(f, g, tf, tg, power, bm, bp, km, kp, stride, cycle, alpha, out):
    """Pairs of |dg|^power / (df^2 + a^2); power 1 keeps the sign of dg."""
    n = f.shape[0]
    for j in prange(n):
        s = 0.0
        c = 0.0
        fj = f[j]
        gj = g[j]
        for m in range(alpha.shape[0]):
            a = alpha[m]
            d1 = fj - _at(tf, bm, km, m, j, stride, cycle)
            d2 = fj - _at(tf, bp, kp, m, j, stride, cycle)
            e1 = gj - _at(tg, bm, km, m, j, stride, cycle)
            e2 = gj - _at(tg, bp, kp, m, j, stride, cycle)
            if power == 1.0:
                n1 = e1
                n2 = e2
            elif power == 2.0:
                n1 = e1 * e1
                n2 = e2 * e2
            else:
                n1 = abs(e1) ** power
                n2 = abs(e2) ** power
            t = n1 / (d1 * d1 + a * a) + n2 / (d2 * d2 + a * a)
            s, e = _two_sum(s, t)
            c += e
        out[j] = s + c


@njit(inline="always")
def _quad_term(a, d, d1, f1):
    den = d * d + a * a
    return 2.0 * (d - a * f1) * d * d1 / (den * den)


@njit(parallel=True, cache=True)
def slope_quadratic_sum(f, fp, tf, tfp, bm, bp, km, kp, stride, cycle, alpha, out):
    n = f.shape[0]
    for j in prange(n):
        s = 0.0
        c = 0.0
        for m in range(alpha.shape[0]):
            a = alpha[m]
            d = f[j] - _at(tf, bm, km, m, j, stride, cycle)
            d1 = fp[j] - _at(tfp, bm, km, m, j, stride, cycle)
            t = _quad_term(a, d, d1, fp[j])
            d = f[j] - _at(tf, bp, kp, m, j, stride, cycle)
            d1 = fp[j] - _at(tfp, bp, kp, m, j, stride, cycle)
            t += _quad_term(-a, d, d1, fp[j])
            s, e = _two_sum(s, t)
            c += e
        out[j] = s + c


@njit(inline="always")
def _t_terms(a, d, d1, d2, f1, f2):
    den = d * d + a * a
    den2 = den * den
    w = d - a * f1
    t1 = 4.0 * (d1 - a * f2) * d * d1 / den2
    t2 = 2.0 * w * d1 * d1 / den2
    t3 = 2.0 * w * d * d2 / den2
    t4 = -8.0 * w * d * d * d1 * d1 / (den2 * den)
    t5 = 2.0 * d1 * d * a / den2
    return t1, t2, t3, t4, t5


@njit(parallel=True, cache=True)
def t_terms_sum(f, fp, fpp, tf, tfp, tfpp, bm, bp, km, kp, stride, cycle, alpha, out):
    """out has shape (5, n): T1..T5."""
    n = f.shape[0]
    for j in prange(n):
        s1 = 0.0
        s2 = 0.0
        s3 = 0.0
        s4 = 0.0
        s5 = 0.0
        c1 = 0.0
        c2 = 0.0
        c3 = 0.0
        c4 = 0.0
        c5 = 0.0
        f1 = fp[j]
        f2 = fpp[j]
        for m in range(alpha.shape[0]):
            a = alpha[m]
            d = f[j] - _at(tf, bm, km, m, j, stride, cycle)
            d1 = fp[j] - _at(tfp, bm, km, m, j, stride, cycle)
            d2 = fpp[j] - _at(tfpp, bm, km, m, j, stride, cycle)
            u1, u2, u3, u4, u5 = _t_terms(a, d, d1, d2, f1, f2)
            d = f[j] - _at(tf, bp, kp, m, j, stride, cycle)
            d1 = fp[j] - _at(tfp, bp, kp, m, j, stride, cycle)
            d2 = fpp[j] - _at(tfpp, bp, kp, m, j, stride, cycle)
            v1, v2, v3, v4, v5 = _t_terms(-a, d, d1, d2, f1, f2)
            s1, e = _two_sum(s1, u1 + v1)
            c1 += e
            s2, e = _two_sum(s2, u2 + v2)
            c2 += e
            s3, e = _two_sum(s3, u3 + v3)
            c3 += e
            s4, e = _two_sum(s4, u4 + v4)
            c4 += e
            s5, e = _two_sum(s5, u5 + v5)
            c5 += e
        out[0, j] = s1 + c1
        out[1, j] = s2 + c2
        out[2, j] = s3 + c3
        out[3, j] = s4 + c4
        out[4, j] = s5 + c5
