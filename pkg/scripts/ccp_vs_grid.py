"""Compare CCP against exhaustive grid search on small toy instances.

For each instance the exact objective is enumerated on a 0.1 flight grid
and CCP is started from several linearization points. Prints the share of
instances below 98% of the grid optimum for each start.

Usage: python scripts/ccp_vs_grid.py [--count 200] [--seed 100]
"""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

import numpy as np

sys.path.insert(0, str(Path(__file__).resolve().parents[1]))
from tests.helpers import grid_optimum, unimodal_toy_specs  # noqa: E402
from uamflow.optimizer import ccp_solve  # noqa: E402


def starts(spec):
    cap = (1 - spec.epsilon) * spec.c_l
    return {"default": None, "unit": np.ones(spec.n_l), "half_cap": 0.5 * cap, "full_cap": cap}


def main() -> None:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--count", type=int, default=200)
    ap.add_argument("--seed", type=int, default=100)
    args = ap.parse_args()
    ratios: dict[str, list[float]] = {}
    for spec in unimodal_toy_specs(args.count, seed=args.seed):
        best, _ = grid_optimum(spec)
        for name, y0 in starts(spec).items():
            sol = ccp_solve(spec, y0=y0)
            r = 0.0 if sol.objective is None else (sol.objective / best if best > 0 else 1.0)
            ratios.setdefault(name, []).append(r)
    for name, rs in ratios.items():
        rs = np.array(rs)
        print(f"{name:9s} worst {rs.min():.4f}  below 98%: {np.mean(rs < 0.98):.3f}")
    best_of = np.max(np.array(list(ratios.values())), axis=0)
    print(f"best of all starts: worst {best_of.min():.4f}")


if __name__ == "__main__":
    main()
