"""Segment powers and extra-energy tables for the default vehicle.

Usage: python scripts/energy_tables.py [--out energy_out]
"""

from __future__ import annotations

import argparse
import csv
from pathlib import Path

import numpy as np

from uamflow.energy import (
    MissionProfile,
    VehicleParams,
    climb_descent_distance,
    extra_energy_fraction,
    hover_power,
    mission_energy,
    segment_powers,
)

MILE_FT = 5280.0
ALTITUDES = (1000.0, 2000.0, 3000.0)


def main() -> None:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--out", default="energy_out")
    ap.add_argument("--min-miles", type=float, default=3.0)
    ap.add_argument("--max-miles", type=float, default=30.0)
    args = ap.parse_args()
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    v = VehicleParams()

    print(f"hover power {hover_power(v):.2f} kW")
    with open(out / "segment_powers.csv", "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["altitude_ft", "climb_kw", "cruise_kw", "descent_kw", "min_route_miles"])
        for h in ALTITUDES:
            row = [h, *segment_powers(v, h), climb_descent_distance(v, h) / MILE_FT]
            w.writerow(row)
            print("{:6.0f} ft  climb {:7.2f}  cruise {:6.2f}  descent {:6.2f} kW  min route {:.2f} mi".format(*row))

    miles = np.linspace(args.min_miles, args.max_miles, 55)
    with open(out / "mission_energy.csv", "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["miles", "altitude_ft", "hover_mj", "climb_mj", "cruise_mj", "descent_mj", "total_mj", "extra_pct"])
        for m in miles:
            for h in ALTITUDES:
                e = mission_energy(v, MissionProfile(h, m * MILE_FT), allow_short=True)
                extra = 100 * extra_energy_fraction(v, m * MILE_FT, h, allow_short=True)
                w.writerow([repr(float(m)), h, *e.as_tuple(), extra])

    for h in ALTITUDES[1:]:
        pct = [100 * extra_energy_fraction(v, m * MILE_FT, h, allow_short=True) for m in miles]
        print(f"extra energy at {h:.0f} ft over {args.min_miles:g}-{args.max_miles:g} mi: "
              f"{min(pct):.2f}% to {max(pct):.2f}%")


if __name__ == "__main__":
    main()
