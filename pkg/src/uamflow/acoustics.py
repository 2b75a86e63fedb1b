"""Single-event eVTOL noise from NPD regressions and cumulative noise metrics.

Distances are in feet and levels in dBA throughout, matching how NPD data
is published.
"""

from __future__ import annotations

import csv
import enum
import math
from dataclasses import dataclass
from importlib import resources
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

NPD_MIN_FT = 200.0
NPD_MAX_FT = 20000.0
SATURATED_ATTENUATION = 10.86
GROUND_BRANCH_LIMIT_FT = 3000.0
SILENCE = None
"""Aggregate level of an empty event set (energy zero, i.e. -inf dB)."""

# Fixed normalizations printed for the 1 h and 24 h windows; generic
# windows use the exact 10 log10(T / T0).
LEQ1H_OFFSET = 35.56
LEQ24H_OFFSET = 49.37
EVENING_PENALTY = 4.77
NIGHT_PENALTY = 10.0


class Mode(str, enum.Enum):
    LevelFlyover = "LevelFlyover"
    Departure = "Departure"
    Approach = "Approach"


class Position(str, enum.Enum):
    Centerline = "Centerline"
    Side45 = "Side45"


class Period(str, enum.Enum):
    Day = "Day"
    Evening = "Evening"
    Night = "Night"


class Metric(str, enum.Enum):
    Leq = "Leq"
    Leq1h = "Leq1h"
    Leq24h = "Leq24h"
    DNL = "DNL"
    CNEL = "CNEL"


@dataclass(frozen=True)
class NpdCurve:
    """Quadratic-in-log-distance SEL regression for one mode and position."""

    mode: Mode
    position: Position
    a0: float
    a1: float
    a2: float
    valid_range: tuple[float, float] = (NPD_MIN_FT, NPD_MAX_FT)

    def __call__(self, d):
        return npd_level(self, d)


@dataclass(frozen=True)
class ReceiverGeometry:
    """Slant distance ``d`` and sideline distance ``l`` in ft, elevation ``beta`` in degrees."""

    d: float
    l: float
    beta: float

    def __post_init__(self):
        if self.l < 0:
            raise ValueError(f"lateral distance must be >= 0, got {self.l}")
        if self.d < self.l * (1 - 1e-12):
            raise ValueError(f"slant distance {self.d} shorter than lateral {self.l}")
        if not -90.0 <= self.beta <= 90.0:
            raise ValueError(f"elevation angle must be in [-90, 90], got {self.beta}")

    @classmethod
    def from_offsets(cls, lateral_ft: float, height_ft: float) -> "ReceiverGeometry":
        d = math.hypot(lateral_ft, height_ft)
        beta = math.degrees(math.atan2(height_ft, lateral_ft))
        return cls(d=d, l=lateral_ft, beta=beta)


@dataclass(frozen=True)
class NoiseEvent:
    sel: float
    period: Period = Period.Day


@dataclass(frozen=True)
class NpdTable:
    """Centerline and 45-degree sideline curves for each operational mode."""

    curves: dict

    def pair(self, mode: Mode | str) -> tuple[NpdCurve, NpdCurve]:
        mode = Mode(mode)
        if (mode, Position.Centerline) not in self.curves:
            raise KeyError(f"no {mode.value} curves in this NPD table")
        return self.curves[(mode, Position.Centerline)], self.curves[(mode, Position.Side45)]

    def __iter__(self):
        return iter(self.curves.values())

    def max_level(self) -> float:
        return max(npd_level(c, NPD_MIN_FT) for c in self)


def load_npd_table(path: str | Path | None = None) -> NpdTable:
    """Read ``mode,position,a0,a1,a2`` rows; ``None`` loads the bundled RVLT quadrotor table."""
    if path is None:
        text = resources.files("uamflow.data").joinpath("npd_rvlt.csv").read_text()
    else:
        text = Path(path).read_text()
    curves = {}
    for row in csv.DictReader(text.splitlines()):
        curve = NpdCurve(
            mode=Mode(row["mode"].strip()),
            position=Position(row["position"].strip()),
            a0=float(row["a0"]),
            a1=float(row["a1"]),
            a2=float(row["a2"]),
        )
        curves[(curve.mode, curve.position)] = curve
    modes = {m for m, _ in curves} | {Mode.LevelFlyover}
    missing = [f"{m.value}/{p.value}" for m in Mode for p in Position if m in modes and (m, p) not in curves]
    if missing:
        raise ValueError(f"NPD table missing curves: {missing}")
    return NpdTable(curves)


def npd_level(curve: NpdCurve, d):
    """SEL at slant distance ``d`` (ft), clamped to the curve's valid range."""
    d_arr = np.asarray(d, dtype=float)
    if np.any(d_arr <= 0):
        raise ValueError("slant distance must be positive")
    lo, hi = curve.valid_range
    x = np.log10(np.clip(d_arr, lo, hi))
    out = curve.a0 + curve.a1 * x + curve.a2 * x * x
    return float(out) if out.ndim == 0 else out


def ground_attenuation(l: float) -> float:
    if l < 0:
        raise ValueError(f"lateral distance must be >= 0, got {l}")
    if l <= GROUND_BRANCH_LIMIT_FT:
        return 11.83 * (1.0 - math.exp(-0.0009 * l))
    return SATURATED_ATTENUATION


def refraction(beta: float) -> float:
    if not -90.0 <= beta <= 90.0:
        raise ValueError(f"elevation angle must be in [-90, 90], got {beta}")
    if beta <= 0.0:
        return SATURATED_ATTENUATION
    if beta <= 50.0:
        return 1.137 - 0.0229 * beta + 9.72 * math.exp(-0.142 * beta)
    return 0.0


def lateral_attenuation_adj(l: float, beta: float) -> float:
    return ground_attenuation(l) * refraction(beta) / SATURATED_ATTENUATION


def lateral_directivity_adj(
    centerline: NpdCurve, side: NpdCurve, d: float, beta: float, clamp_weight: bool = False
) -> float:
    """Interpolated centerline-minus-sideline difference.

    The weight ``(90 - |beta|) / 45`` exceeds 1 below 45 degrees; it is used
    as is unless ``clamp_weight`` limits it to [0, 1].
    """
    if centerline.mode != side.mode:
        raise ValueError(f"curve modes differ: {centerline.mode} vs {side.mode}")
    weight = (90.0 - abs(beta)) / 45.0
    if clamp_weight:
        weight = min(max(weight, 0.0), 1.0)
    return (npd_level(centerline, d) - npd_level(side, d)) * weight


def receiver_sel(
    mode_curves: tuple[NpdCurve, NpdCurve], g: ReceiverGeometry, clamp_weight: bool = False
) -> float:
    centerline, side = mode_curves
    return (
        npd_level(centerline, g.d)
        - lateral_directivity_adj(centerline, side, g.d, g.beta, clamp_weight)
        - lateral_attenuation_adj(g.l, g.beta)
    )


def energy_sum(levels: Iterable[float]) -> float:
    return float(sum(10.0 ** (x / 10.0) for x in levels))


def to_db(energy: float) -> float | None:
    """``10 log10(energy)``, or the silence sentinel for zero energy."""
    if energy <= 0.0:
        return SILENCE
    return 10.0 * math.log10(energy)


def _as_events(events: Iterable) -> list[NoiseEvent]:
    out = []
    for ev in events:
        if isinstance(ev, NoiseEvent):
            out.append(ev)
        elif isinstance(ev, (tuple, list)):
            out.append(NoiseEvent(float(ev[0]), Period(ev[1]) if len(ev) > 1 else Period.Day))
        else:
            out.append(NoiseEvent(float(ev)))
    for ev in out:
        if not math.isfinite(ev.sel):
            raise ValueError(f"non-finite SEL {ev.sel}")
    return out


def aggregate(events: Sequence, metric: Metric | str = Metric.Leq1h, T: float = 3600.0) -> float | None:
    """Cumulative level of a set of single events.

    ``metric="Leq"`` uses the window ``T`` (seconds) with the exact
    ``10 log10(T)`` normalization. ``Leq1h``/``Leq24h``/``DNL``/``CNEL`` use
    the fixed 35.56 and 49.37 dB offsets. DNL penalizes night events by
    10 dB; CNEL additionally penalizes evening events by 4.77 dB. Period
    tags are ignored by the plain Leq metrics.
    """
    metric = Metric(metric)
    evs = _as_events(events)
    if metric is Metric.Leq:
        if T <= 0:
            raise ValueError(f"averaging window must be positive, got {T}")
        offset = 10.0 * math.log10(T)
    elif metric is Metric.Leq1h:
        offset = LEQ1H_OFFSET
    else:
        offset = LEQ24H_OFFSET

    def penalty(period: Period) -> float:
        if metric is Metric.DNL:
            return NIGHT_PENALTY if period is Period.Night else 0.0
        if metric is Metric.CNEL:
            return {Period.Day: 0.0, Period.Evening: EVENING_PENALTY, Period.Night: NIGHT_PENALTY}[period]
        return 0.0

    level = to_db(energy_sum(ev.sel + penalty(ev.period) for ev in evs))
    if level is SILENCE:
        return SILENCE
    return level - offset


def period_of_hour(hour: float) -> Period:
    """Day 07-19, evening 19-22, night 22-07."""
    h = hour % 24.0
    if 7.0 <= h < 19.0:
        return Period.Day
    if 19.0 <= h < 22.0:
        return Period.Evening
    return Period.Night
