"""eVTOL mission energy: hover, climb, cruise, descent.

Inputs are in the aviation units the vehicle data is quoted in (ft, ft/s,
ft/min, degrees). Speeds are converted to SI by the ``VehicleParams``
properties before any force or power is formed; energies come back in MJ
and powers in kW.
"""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass, fields, replace
from typing import Mapping, Sequence

import numpy as np

FT = 0.3048
G = 9.81
RHO_SEA_LEVEL = 1.225


class InfeasibleProfileError(ValueError):
    pass


@dataclass(frozen=True)
class VehicleParams:
    mass: float = 1800.0  # kg
    disk_loading: float = 580.0  # N/m^2
    hover_efficiency: float = 0.75
    climb_efficiency: float = 0.75
    cruise_efficiency: float = 0.8
    zero_lift_drag: float = 0.03
    reference_area: float = 30.0  # m^2
    max_lift_drag: float = 20.0
    flight_path_angle: float = 10.0  # deg
    rate_of_climb: float = 1000.0  # ft/min
    cruise_speed: float = 135.0  # ft/s
    hover_time_per_end: float = 30.0  # s
    hover_height: float = 250.0  # ft AGL reached by the vertical segment
    descent_power_fraction: float = 0.4

    def __post_init__(self):
        for f in fields(self):
            val = getattr(self, f.name)
            if not val > 0 or not math.isfinite(val):
                raise ValueError(f"vehicle parameter {f.name} must be positive, got {val}")
        for name in ("hover_efficiency", "climb_efficiency", "cruise_efficiency"):
            if getattr(self, name) > 1:
                raise ValueError(f"{name} must be in (0, 1]")
        if not self.flight_path_angle < 90:
            raise ValueError("flight path angle must be below 90 degrees")

    @classmethod
    def from_mapping(cls, data: Mapping) -> "VehicleParams":
        known = {f.name for f in fields(cls)}
        unknown = set(data) - known
        if unknown:
            raise ValueError(f"unknown vehicle parameters: {sorted(unknown)}")
        return replace(cls(), **{k: float(v) for k, v in data.items()})

    def to_mapping(self) -> dict:
        return asdict(self)

    @property
    def weight(self) -> float:
        return self.mass * G

    @property
    def gamma(self) -> float:
        return math.radians(self.flight_path_angle)

    @property
    def climb_speed(self) -> float:
        """Along-path climb speed in m/s."""
        return self.rate_of_climb / 60.0 / math.sin(self.gamma) * FT

    @property
    def cruise_speed_si(self) -> float:
        return self.cruise_speed * FT

    @property
    def climb_time_per_ft(self) -> float:
        return 60.0 / self.rate_of_climb

    @property
    def horizontal_per_climb_ft(self) -> float:
        """Ground distance (ft) covered per ft of altitude change."""
        return 1.0 / math.tan(self.gamma)


@dataclass(frozen=True)
class MissionProfile:
    cruise_altitude: float  # ft AGL
    total_distance: float  # ft
    msl_offset: float = 500.0  # ft


@dataclass(frozen=True)
class MissionEnergy:
    hover: float
    climb: float
    cruise: float
    descent: float

    @property
    def total(self) -> float:
        return self.hover + self.climb + self.cruise + self.descent

    def as_tuple(self) -> tuple[float, float, float, float, float]:
        return (self.hover, self.climb, self.cruise, self.descent, self.total)


def air_density(altitude_msl_ft: float) -> float:
    """ISA troposphere density (kg/m^3) at a pressure altitude in ft."""
    h = altitude_msl_ft * FT
    return RHO_SEA_LEVEL * (1.0 - 2.256e-5 * h) ** 4.2561


def _drag(v: VehicleParams, rho: float, speed: float) -> float:
    q_s = 0.5 * rho * speed**2 * v.reference_area
    induced = v.weight**2 / (4.0 * v.zero_lift_drag * v.max_lift_drag**2 * q_s)
    return q_s * v.zero_lift_drag + induced


def hover_power(v: VehicleParams, rho: float = RHO_SEA_LEVEL) -> float:
    if not rho > 0:
        raise ValueError("air density must be positive")
    return v.weight / v.hover_efficiency * math.sqrt(v.disk_loading / (2.0 * rho)) / 1e3


def climb_density_altitude(v: VehicleParams, h: float, msl_offset: float = 500.0) -> float:
    """MSL altitude (ft) halfway between the end of hover and cruise."""
    return msl_offset + v.hover_height + (h - v.hover_height) / 2.0


def segment_powers(v: VehicleParams, h: float, msl_offset: float = 500.0) -> tuple[float, float, float]:
    """Climb, cruise and descent power in kW for cruise altitude ``h`` ft AGL."""
    if not h > v.hover_height:
        raise InfeasibleProfileError(f"cruise altitude {h} ft must exceed hover height {v.hover_height} ft")
    rho_climb = air_density(climb_density_altitude(v, h, msl_offset))
    rho_cruise = air_density(msl_offset + h)
    vc = v.climb_speed
    p_climb = vc / v.climb_efficiency * (v.weight * math.sin(v.gamma) + _drag(v, rho_climb, vc))
    vr = v.cruise_speed_si
    p_cruise = vr / v.cruise_efficiency * _drag(v, rho_cruise, vr) / 1e3
    return p_climb / 1e3, p_cruise, v.descent_power_fraction * p_cruise


def climb_descent_distance(v: VehicleParams, h: float) -> float:
    """Ground distance (ft) flown during climb plus descent."""
    return 2.0 * (h - v.hover_height) * v.horizontal_per_climb_ft


def mission_energy(v: VehicleParams, profile: MissionProfile, allow_short: bool = False) -> MissionEnergy:
    """Segment energies in MJ.

    With ``allow_short`` a route shorter than the climb/descent footprint is
    still evaluated and its cruise term goes negative; otherwise it raises
    ``InfeasibleProfileError``.
    """
    h = profile.cruise_altitude
    p_climb, p_cruise, p_descent = segment_powers(v, h, profile.msl_offset)
    d_cruise = profile.total_distance - climb_descent_distance(v, h)
    if d_cruise < 0 and not allow_short:
        raise InfeasibleProfileError(
            f"distance {profile.total_distance:.0f} ft shorter than climb+descent "
            f"{climb_descent_distance(v, h):.0f} ft at {h} ft AGL"
        )
    t_climb = (h - v.hover_height) * v.climb_time_per_ft
    e_hover = hover_power(v) * 2.0 * v.hover_time_per_end
    e_climb = p_climb * t_climb
    e_cruise = p_cruise * d_cruise / v.cruise_speed
    e_descent = p_descent * t_climb
    return MissionEnergy(e_hover / 1e3, e_climb / 1e3, e_cruise / 1e3, e_descent / 1e3)


def extra_energy_fraction(
    v: VehicleParams,
    distance: float,
    altitude: float,
    base_altitude: float = 1000.0,
    msl_offset: float = 500.0,
    allow_short: bool = False,
) -> float:
    """Relative extra mission energy at ``altitude`` versus ``base_altitude``."""
    if altitude == base_altitude:
        return 0.0
    high = mission_energy(v, MissionProfile(altitude, distance, msl_offset), allow_short).total
    low = mission_energy(v, MissionProfile(base_altitude, distance, msl_offset), allow_short).total
    return high / low - 1.0


def route_extra_energy(
    lengths: Sequence[float],
    layers: Sequence[int],
    altitudes: Sequence[float],
    v: VehicleParams | None = None,
    msl_offset: float = 500.0,
    allow_short: bool = True,
) -> np.ndarray:
    """Per-route extra energy relative to flying the same distance on layer 0.

    Short routes are extrapolated by default (negative cruise leg) so that a
    city-scale network with short hops still gets a finite entry.
    """
    v = VehicleParams() if v is None else v
    base = altitudes[0]
    return np.array([
        0.0 if layer == 0 else extra_energy_fraction(v, d, altitudes[layer], base, msl_offset, allow_short)
        for d, layer in zip(lengths, layers)
    ])


def average_extra_energy(p: np.ndarray, z: np.ndarray) -> float:
    """Flow-weighted mean of ``p``; zero when there is no flow."""
    z = np.asarray(z, dtype=float)
    total = float(z.sum())
    if total <= 0:
        return 0.0
    return float(np.dot(p, z) / total)
