"""Spatio-temporal cell discretization and Von Neumann neighborhoods."""
from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache
from typing import NamedTuple

from .errors import InputError


class CellKey(NamedTuple):
    t_idx: int
    e_idx: int
    n_idx: int

    def to_str(self) -> str:
        return f"{self.t_idx},{self.e_idx},{self.n_idx}"

    @classmethod
    def from_str(cls, s: str) -> "CellKey":
        t, e, n = (int(p) for p in s.split(","))
        return cls(t, e, n)


@dataclass(frozen=True)
class GridConfig:
    """Cell geometry.

    ``cell_size_s == 0`` collapses time into a single temporal cell, so
    neighborhoods are purely spatial.
    """

    cell_size_m: float = 5000.0
    cell_size_s: float = 0.0
    neighborhood_depth: int = 1

    def __post_init__(self):
        if not (math.isfinite(self.cell_size_m) and self.cell_size_m > 0):
            raise InputError(f"cell_size_m must be > 0, got {self.cell_size_m}")
        if not (math.isfinite(self.cell_size_s) and self.cell_size_s >= 0):
            raise InputError(f"cell_size_s must be >= 0, got {self.cell_size_s}")
        if int(self.neighborhood_depth) != self.neighborhood_depth or self.neighborhood_depth < 0:
            raise InputError(f"neighborhood_depth must be a non-negative integer, got {self.neighborhood_depth}")

    @property
    def temporal(self) -> bool:
        return self.cell_size_s > 0

    def to_dict(self) -> dict:
        return {
            "cell_size_m": self.cell_size_m,
            "cell_size_s": self.cell_size_s,
            "neighborhood_depth": int(self.neighborhood_depth),
        }


def cell_of(loc, cfg: GridConfig) -> CellKey:
    """Map a ``(time, easting, northing)`` location to its containing cell."""
    t, e, n = loc
    if not (math.isfinite(t) and math.isfinite(e) and math.isfinite(n)):
        raise InputError(f"non-finite location {loc!r}")
    t_idx = math.floor(t / cfg.cell_size_s) if cfg.temporal else 0
    return CellKey(t_idx, math.floor(e / cfg.cell_size_m), math.floor(n / cfg.cell_size_m))


@lru_cache(maxsize=64)
def _offsets(depth: int, temporal: bool) -> tuple:
    out = []
    t_range = range(-depth, depth + 1) if temporal else (0,)
    for dt in t_range:
        for de in range(-depth, depth + 1):
            for dn in range(-depth, depth + 1):
                if abs(dt) + abs(de) + abs(dn) <= depth:
                    out.append((dt, de, dn))
    # center first
    out.sort(key=lambda o: (abs(o[0]) + abs(o[1]) + abs(o[2]), o))
    return tuple(out)


def neighborhood(c, cfg: GridConfig) -> set:
    """Cells within Manhattan distance ``neighborhood_depth`` of ``c``, including ``c``."""
    return set(neighborhood_list(c, cfg))


def neighborhood_list(c, cfg: GridConfig) -> list:
    t, e, n = c
    return [CellKey(t + dt, e + de, n + dn)
            for dt, de, dn in _offsets(int(cfg.neighborhood_depth), cfg.temporal)]


def cell_center(c, cfg: GridConfig) -> tuple:
    """Spatial center (easting, northing) of a cell in meters."""
    return ((c[1] + 0.5) * cfg.cell_size_m, (c[2] + 0.5) * cfg.cell_size_m)
