"""Link-to-community noise impact matrices and cumulative community noise."""

from __future__ import annotations

import csv
import enum
import json
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Sequence

import numpy as np

from .acoustics import Mode, NpdTable, ReceiverGeometry, load_npd_table, receiver_sel


class CommunityClass(str, enum.Enum):
    QuietSuburban = "QuietSuburban"
    NormalSuburban = "NormalSuburban"
    Urban = "Urban"
    NoisyUrban = "NoisyUrban"
    VeryNoisyUrban = "VeryNoisyUrban"


# Upper bounds of the EPA typical daytime ranges.
CLASS_AMBIENT = {
    CommunityClass.QuietSuburban: 45.0,
    CommunityClass.NormalSuburban: 50.0,
    CommunityClass.Urban: 55.0,
    CommunityClass.NoisyUrban: 60.0,
    CommunityClass.VeryNoisyUrban: 65.0,
}


def class_for_ambient(level: float) -> CommunityClass | None:
    for cls, amb in CLASS_AMBIENT.items():
        if math.isclose(level, amb):
            return cls
    return None


@dataclass(frozen=True)
class Community:
    id: str
    x: float
    y: float
    ambient: float
    population: float = 0.0
    cls: CommunityClass | None = None

    def __post_init__(self):
        if self.population < 0:
            raise ValueError(f"community {self.id}: population must be >= 0")
        if self.cls is not None and not math.isclose(self.ambient, CLASS_AMBIENT[self.cls]):
            raise ValueError(
                f"community {self.id}: ambient {self.ambient} inconsistent with class {self.cls.value}"
            )
        if not self.ambient > 0:
            raise ValueError(f"community {self.id}: ambient level must be positive")


@dataclass(frozen=True)
class LinkGeometry:
    link_id: int
    start: tuple[float, float]
    end: tuple[float, float]
    altitude_agl: float

    def __post_init__(self):
        if not self.altitude_agl > 0:
            raise ValueError(f"link {self.link_id}: altitude must be positive")
        if tuple(self.start) == tuple(self.end):
            raise ValueError(f"link {self.link_id}: degenerate segment")


@dataclass
class NoiseImpactMatrix:
    """Single-event SEL per (link, community) and its energy counterpart.

    Masked pairs, whose single-event level does not exceed the community's
    ambient level, carry ``N = 0`` and ``M = 0``.
    """

    N: np.ndarray
    M: np.ndarray
    masked: np.ndarray
    raw: np.ndarray = field(repr=False)

    @property
    def shape(self) -> tuple[int, int]:
        return self.N.shape

    def to_csv(self, path: str | Path, link_ids=None, community_ids=None) -> None:
        n_l, n_c = self.N.shape
        link_ids = list(range(n_l)) if link_ids is None else list(link_ids)
        community_ids = list(range(n_c)) if community_ids is None else list(community_ids)
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["link", "community", "sel_dba", "masked", "energy"])
            for i in range(n_l):
                for j in range(n_c):
                    w.writerow([link_ids[i], community_ids[j], repr(float(self.N[i, j])),
                                int(self.masked[i, j]), repr(float(self.M[i, j]))])


def link_community_geometry(link: LinkGeometry, c: Community) -> ReceiverGeometry:
    """Nearest point of the link's ground track to the receiver, then slant geometry."""
    p = np.array([c.x, c.y], dtype=float)
    a = np.asarray(link.start, dtype=float)
    b = np.asarray(link.end, dtype=float)
    ab = b - a
    t = float(np.clip(np.dot(p - a, ab) / np.dot(ab, ab), 0.0, 1.0))
    lateral = float(np.linalg.norm(p - (a + t * ab)))
    return ReceiverGeometry.from_offsets(lateral, link.altitude_agl)


def build_impact_matrix(
    links: Sequence[LinkGeometry],
    communities: Sequence[Community],
    curves: NpdTable | None = None,
    mode: Mode | str = Mode.LevelFlyover,
    clamp_weight: bool = False,
) -> NoiseImpactMatrix:
    if not links or not communities:
        raise ValueError("need at least one link and one community")
    curves = load_npd_table() if curves is None else curves
    pair = curves.pair(mode)
    raw = np.empty((len(links), len(communities)))
    for i, link in enumerate(links):
        for j, c in enumerate(communities):
            raw[i, j] = receiver_sel(pair, link_community_geometry(link, c), clamp_weight)
    ambient = np.array([c.ambient for c in communities])
    masked = raw <= ambient[None, :]
    N = np.where(masked, 0.0, raw)
    M = np.where(masked, 0.0, 10.0 ** (N / 10.0))
    return NoiseImpactMatrix(N=N, M=M, masked=masked, raw=raw)


def community_energy(M: np.ndarray, y: np.ndarray) -> np.ndarray:
    y = np.asarray(y, dtype=float)
    if np.any(y < 0):
        raise ValueError("link flows must be nonnegative")
    return np.asarray(M).T @ y


def cumulative_noise(M: np.ndarray, y: np.ndarray, T: float = 3600.0) -> np.ndarray:
    """Hourly-style equivalent level per community; ``nan`` marks silence."""
    if T <= 0:
        raise ValueError(f"averaging window must be positive, got {T}")
    energy = community_energy(M, y)
    out = np.full(energy.shape, np.nan)
    pos = energy > 0
    out[pos] = 10.0 * np.log10(energy[pos]) - 10.0 * math.log10(T)
    return out


def noise_increase(n: np.ndarray, ambient: np.ndarray) -> np.ndarray:
    """``max(n - a, 0)`` with silent communities contributing zero."""
    n = np.asarray(n, dtype=float)
    inc = np.where(np.isnan(n), 0.0, n - np.asarray(ambient, dtype=float))
    return np.maximum(inc, 0.0)


def load_communities(path: str | Path) -> list[Community]:
    """Read a GeoJSON FeatureCollection of Point features.

    Each feature needs ``properties.id`` and either ``ambient`` or
    ``class``; ``population`` is optional.
    """
    data = json.loads(Path(path).read_text())
    out = []
    for k, feat in enumerate(data["features"]):
        props = feat.get("properties", {})
        geom = feat.get("geometry") or {}
        if geom.get("type") != "Point":
            raise ValueError(f"features[{k}].geometry: expected Point")
        x, y = geom["coordinates"][:2]
        cls = CommunityClass(props["class"]) if props.get("class") else None
        if "ambient" in props:
            ambient = float(props["ambient"])
        elif cls is not None:
            ambient = CLASS_AMBIENT[cls]
        else:
            raise ValueError(f"features[{k}].properties: need ambient or class")
        out.append(Community(
            id=str(props["id"]),
            x=float(x),
            y=float(y),
            ambient=ambient,
            population=float(props.get("population", 0.0)),
            cls=cls,
        ))
    return out
