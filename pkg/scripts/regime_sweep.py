"""Regime table: does the maximal slope decay or grow over a short run?

Sweeps amplitude and wavenumber of a sine profile and prints the ratio
B(t_end)/B(0) together with any halting event.
"""
import argparse
import csv
import math
import sys

from muskat.evolve import SimConfig, run


def main() -> None:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--N", type=int, default=128)
    ap.add_argument("--t-end", type=float, default=0.5)
    ap.add_argument("--amplitudes", type=float, nargs="+", default=[0.01, 0.1, 0.5, 1.0, 2.0])
    ap.add_argument("--wavenumbers", type=int, nargs="+", default=[1, 2, 4])
    args = ap.parse_args()

    w = csv.writer(sys.stdout)
    w.writerow(["a", "k", "B0", "B_end", "ratio", "event"])
    for k in args.wavenumbers:
        for a in args.amplitudes:
            cfg = SimConfig(N=args.N, init={"family": "sine", "a": a, "k": k}, t_end=args.t_end,
                            cfl_safety=0.5, slope_threshold=20.0)
            res = run(cfg)
            B0, B1 = res.series[0].metrics.slope_B, res.series[-1].metrics.slope_B
            event = res.events[-1].kind if res.events else ""
            w.writerow([a, k, f"{B0:.6g}", f"{B1:.6g}", f"{B1 / B0:.6g}", event])


if __name__ == "__main__":
    main()
