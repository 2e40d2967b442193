"""Arena geometry, target bookkeeping and spatial queries.

Positions are plain ``(x, y)`` pairs in metres with the origin at the arena
centre, so the nest sits at ``(0, 0)`` unless configured otherwise.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

ROBOT_RADIUS = 0.2
CONTACT_DISTANCE = 0.3
NEST_RADIUS = 2.0

# Target status codes, ordered along the only legal progression.
ON_GROUND = 0
BEING_PROCESSED = 1
CARRIED = 2
DEPOSITED = 3

TARGET_STATUS_NAMES = ("OnGround", "BeingProcessed", "Carried", "Deposited")


@dataclass(frozen=True)
class Vec2:
    x: float
    y: float

    def __post_init__(self):
        if not (math.isfinite(self.x) and math.isfinite(self.y)):
            raise ValueError(f"non-finite coordinates ({self.x}, {self.y})")

    def __iter__(self):
        yield self.x
        yield self.y

    def __getitem__(self, i):
        return (self.x, self.y)[i]


def normalize_angle(theta: float) -> float:
    """Wrap an angle into ``[0, 2*pi)``."""
    two_pi = 2.0 * math.pi
    wrapped = theta - two_pi * math.floor(theta / two_pi)
    # tiny negative inputs can round up to exactly 2*pi
    if wrapped >= two_pi or wrapped < 0.0:
        wrapped = 0.0
    return wrapped


@dataclass(frozen=True)
class Pose:
    position: Vec2
    heading: float

    def __post_init__(self):
        object.__setattr__(self, "heading", normalize_angle(self.heading))


@dataclass(frozen=True)
class Arena:
    """Rectangular arena centred on the origin with a disc-shaped nest."""

    width: float
    height: float
    nest_center: Vec2 = Vec2(0.0, 0.0)
    nest_radius: float = NEST_RADIUS

    def __post_init__(self):
        if self.width <= 0 or self.height <= 0:
            raise ValueError("arena width and height must be positive")
        if self.nest_radius <= 0:
            raise ValueError("nest radius must be positive")
        cx, cy = self.nest_center
        r = self.nest_radius
        if (abs(cx) + r > self.width / 2) or (abs(cy) + r > self.height / 2):
            raise ValueError("nest must lie fully inside the arena")

    @property
    def half_width(self) -> float:
        return self.width / 2.0

    @property
    def half_height(self) -> float:
        return self.height / 2.0

    def contains(self, position, margin: float = 0.0) -> bool:
        x, y = position
        return (abs(x) <= self.half_width - margin) and (abs(y) <= self.half_height - margin)


def distance(a, b) -> float:
    """Euclidean distance between two points."""
    return math.hypot(a[0] - b[0], a[1] - b[1])


def in_nest(position, arena: Arena) -> bool:
    """True when ``position`` lies on or inside the nest disc."""
    return distance(position, arena.nest_center) <= arena.nest_radius


def visible_targets(
    position,
    target_xy: np.ndarray,
    target_status: np.ndarray,
    v_r: float,
) -> list[int]:
    """Ids of on-ground targets within ``v_r`` of ``position``.

    Sorted nearest first; equal distances are ordered by target id. ``v_r``
    may be ``math.inf`` for an unlimited detection range.
    """
    target_xy = np.asarray(target_xy, dtype=float).reshape(-1, 2)
    if target_xy.shape[0] == 0:
        return []
    d = np.hypot(target_xy[:, 0] - position[0], target_xy[:, 1] - position[1])
    ids = np.flatnonzero((np.asarray(target_status) == ON_GROUND) & (d <= v_r))
    # lexsort keys: last one is primary
    order = np.lexsort((ids, d[ids]))
    return [int(i) for i in ids[order]]


def pairwise_distances(points: Sequence) -> np.ndarray:
    p = np.asarray(points, dtype=float).reshape(-1, 2)
    diff = p[:, None, :] - p[None, :, :]
    return np.hypot(diff[..., 0], diff[..., 1])
