"""Run the default Austin-like design sweep and write points, Pareto and curve CSVs.

Usage: python scripts/run_sweep.py [--workers N] [--out sweep_out]
"""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

from uamflow.cli import main as cli_main

ROOT = Path(__file__).resolve().parents[1]


def main() -> int:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--plan", default=str(ROOT / "plans" / "austin_default.toml"))
    ap.add_argument("--workers", default="1")
    ap.add_argument("--out", default="sweep_out")
    args = ap.parse_args()
    return cli_main(["sweep", "--plan", args.plan, "--workers", args.workers, "--out", args.out])


if __name__ == "__main__":
    sys.exit(main())
