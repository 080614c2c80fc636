"""Observed size of the nonlinear curvature terms relative to their scales.

For random profiles, reports the largest and median ratio of
|T1|+|T2|+|T3|+|T4| to B f''^2/eps^2 + eps B^2 D[f'']/|f''| at each eps.
Also measures the remainder constants as the largest observed
|R1|/(|a|^{1/2} D^{1/2}) and |R2|/(|a|^{3/2} D^{1/2}).
"""
import argparse
import math

import numpy as np

from muskat.bounds import envelope_constants
from muskat.diagnostics import empirical_constants
from muskat.grid import GridFunction, make_grid, random_bandlimited, spectral_derivative
from muskat.operators import apply_Df, remainders


def main() -> None:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--N", type=int, default=256)
    ap.add_argument("--profiles", type=int, default=5)
    ap.add_argument("--seed", type=int, default=0)
    args = ap.parse_args()
    grid = make_grid(math.pi, args.N)
    rng = np.random.default_rng(args.seed)
    profiles = [random_bandlimited(grid, 12, a, rng) for a in np.linspace(0.1, 1.0, args.profiles)]

    print(f"{'eps':>6} {'max ratio':>10} {'median':>10}")
    for eps in (1.0, 0.5, 0.1, 0.02):
        reps = [empirical_constants(f, eps) for f in profiles]
        r = np.concatenate([rep.ratios for rep in reps])
        print(f"{eps:6.2f} {np.max(r):10.3g} {np.median(r):10.3g}")

    flat = GridFunction(grid, np.zeros(args.N))
    c1 = c2 = 0.0
    for f in profiles:
        D = apply_Df(flat, spectral_derivative(f, 2)).values
        for j in range(0, args.N, args.N // 16):
            for a in np.geomspace(1e-2, 3.0, 12):
                r = remainders(f, j, a)
                c1 = max(c1, abs(r.R1) / (a**0.5 * D[j] ** 0.5))
                c2 = max(c2, abs(r.R2) / (a**1.5 * D[j] ** 0.5))
    k1, k2 = envelope_constants(2.0)
    print(f"remainder constants observed {c1:.4f}, {c2:.4f}; used {k1:.4f}, {k2:.4f}")


if __name__ == "__main__":
    main()
