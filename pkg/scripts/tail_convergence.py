"""Truncation study: h * sum D[cos] against 2 pi^2 as the radius doubles.

Without the far-field correction the error is about 2/A and halves with
each doubling; with it the error sits at round-off.
"""
import argparse
import math

import numpy as np

from muskat.grid import GridFunction, make_grid
from muskat.operators import apply_Df
from muskat.quadrature import QuadratureConfig


def main() -> None:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--N", type=int, default=512)
    ap.add_argument("--doublings", type=int, default=6)
    args = ap.parse_args()

    grid = make_grid(math.pi, args.N)
    c = GridFunction(grid, np.cos(grid.nodes))
    flat = GridFunction(grid, np.zeros(args.N))
    exact = 2 * math.pi**2
    print(f"{'A/L':>6} {'err (no tail)':>14} {'ratio':>7} {'err (tail)':>12}")
    prev = None
    for j in range(args.doublings):
        A = math.pi * 2**j
        row = []
        for tail in (False, True):
            q = QuadratureConfig(truncation_radius=A, tail_correction=tail)
            row.append(abs(grid.spacing * float(np.sum(apply_Df(flat, c, q).values)) - exact) / exact)
        ratio = f"{prev / row[0]:7.3f}" if prev else " " * 7
        print(f"{2**j:6d} {row[0]:14.3e} {ratio} {row[1]:12.3e}")
        prev = row[0]


if __name__ == "__main__":
    main()
