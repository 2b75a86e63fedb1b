"""Demand-fairness and noise-energy contrasts on the Austin-like scenario.

Solves four configurations and reports demand-fulfillment histograms and
layer shares; noise maps for each run go to the output directory.

Usage: python scripts/qualitative_runs.py [--scenario ...] [--out qualitative_out]
"""

from __future__ import annotations

import argparse
import json
from pathlib import Path

import numpy as np

from uamflow.harness import export_noise_map
from uamflow.optimizer import ccp_solve
from uamflow.scenario import compile_scenario, load_scenario

ROOT = Path(__file__).resolve().parents[1]

RUNS = {
    "utilitarian": dict(omega=1.0, delta1=1.0),
    "egalitarian": dict(omega=1.0, delta1=0.0),
    "energy_saving": dict(p_u=1e-3),
    "noise_control": dict(omega=0.1, delta2=0.0),
}


def main() -> None:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--scenario", default=str(ROOT / "scenarios" / "austin_like.toml"))
    ap.add_argument("--out", default="qualitative_out")
    args = ap.parse_args()
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    compiled = compile_scenario(load_scenario(args.scenario))

    summary = {}
    for name, params in RUNS.items():
        sol = ccp_solve(compiled.problem(**params))
        hist, _ = np.histogram(sol.d, bins=10, range=(0.0, 1.0))
        summary[name] = {
            "params": params,
            "status": sol.status.value,
            "objective": sol.objective,
            "d_histogram": hist.tolist(),
            "d_saturated": int(np.sum(sol.d >= 1 - 1e-6)),
            "d_zero": int(np.sum(sol.d <= 1e-6)),
            "d_spread": float(np.ptp(sol.d)),
            "layer_shares": compiled.layer_flow_shares(sol.z).tolist(),
            "mean_noise_increase_db": float(sol.n_inc.mean()),
            "p_a": sol.p_a,
        }
        export_noise_map(compiled, sol, out / f"noise_map_{name}.geojson")
        s = summary[name]
        shares = " ".join(f"{x:.3f}" for x in s["layer_shares"])
        print(f"{name:14s} {s['status']:10s} d=1: {s['d_saturated']:3d}  d=0: {s['d_zero']:3d}  "
              f"spread {s['d_spread']:.3f}  layers [{shares}]")
    (out / "summary.json").write_text(json.dumps(summary, indent=2) + "\n")


if __name__ == "__main__":
    main()
