"""Largest stable CFL safety factor for a few profiles.

Each run integrates for a fixed number of steps and reports whether the
sup norm stayed non-increasing.  Values above the default 0.1 give the
margin of the time step rule.
"""
import argparse
import math

import numpy as np

from muskat.evolve import SimConfig, run


def stable(init: dict, n: int, safety: float, steps: int) -> bool:
    h = 2 * math.pi / n
    cfg = SimConfig(N=n, init=init, t_end=steps * safety * h / math.pi, cfl_safety=safety, output_stride=steps)
    try:
        res = run(cfg)
    except Exception:
        return False
    sup = res.sup_history[:, 1]
    return not res.halted and bool(np.all(np.diff(sup) <= 1e-12))


def main() -> None:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--N", type=int, default=64)
    ap.add_argument("--steps", type=int, default=400)
    args = ap.parse_args()
    profiles = {
        "sine a=0.01": {"family": "sine", "a": 0.01},
        "sine a=0.5": {"family": "sine", "a": 0.5},
        "sines": {"family": "sines", "terms": [[0.3, 1], [0.1, 5]]},
        "random": {"family": "random", "seed": 1, "kmax": 12, "a": 0.2},
    }
    safeties = (0.1, 0.25, 0.5)
    print(f"{'profile':>14} " + " ".join(f"{s:>6}" for s in safeties))
    for name, init in profiles.items():
        flags = ["ok" if stable(init, args.N, s, args.steps) else "FAIL" for s in safeties]
        print(f"{name:>14} " + " ".join(f"{f:>6}" for f in flags))


if __name__ == "__main__":
    main()
