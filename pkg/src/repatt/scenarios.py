"""Target distributions and initial world construction.

All layouts are drawn inside a square core region of side
``min(arena_size, 50)`` centred on the nest, so a 100 m arena keeps the
50 m layout with empty space towards the walls.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from repatt.engine import WorldState
from repatt.geometry import NEST_RADIUS, ROBOT_RADIUS, Arena

CLUSTER_RADIUS = 4.0
MIN_SPACING = 0.05
NEST_CLEARANCE = 0.5
EDGE_MARGIN = 0.5
CORE_SIZE = 50.0


class ConfigError(ValueError):
    pass


class Distribution(str, enum.Enum):
    ONE_CLUSTER = "OneCluster"
    TWO_CLUSTERS = "TwoClusters"
    FOUR_CLUSTERS = "FourClusters"
    UNIFORM = "Uniform"
    HALF_CLUSTER = "HalfCluster"


DISTRIBUTION_NAMES = tuple(d.value for d in Distribution)


@dataclass(frozen=True)
class ScenarioSpec:
    distribution: str = Distribution.ONE_CLUSTER.value
    arena_size: float = 50.0
    n_targets: int = 200
    n_robots: int = 36
    seed: int = 0

    def __post_init__(self):
        Distribution(self.distribution)
        if self.n_targets <= 0 or self.n_robots <= 0:
            raise ConfigError("n_targets and n_robots must be positive")
        if not self.arena_size > 0:
            raise ConfigError("arena_size must be positive")

    @property
    def core_size(self) -> float:
        return min(self.arena_size, CORE_SIZE)


def cluster_centers(distribution: str, core_size: float) -> list[tuple[float, float]]:
    q = core_size / 4.0
    d = Distribution(distribution)
    if d in (Distribution.ONE_CLUSTER, Distribution.HALF_CLUSTER):
        return [(q, q)]
    if d is Distribution.TWO_CLUSTERS:
        return [(q, q), (-q, q)]
    if d is Distribution.FOUR_CLUSTERS:
        return [(q, q), (-q, q), (-q, -q), (q, -q)]
    return []


class _Sampler:
    """Rejection sampler enforcing nest clearance, core bounds and spacing."""

    def __init__(self, rng, half_core, nest_radius, max_tries):
        self.rng = rng
        self.half = half_core - EDGE_MARGIN
        self.keep_out = nest_radius + NEST_CLEARANCE
        self.max_tries = max_tries
        self.points: list[tuple[float, float]] = []

    def _ok(self, x, y):
        if abs(x) > self.half or abs(y) > self.half:
            return False
        if math.hypot(x, y) <= self.keep_out:
            return False
        for px, py in self.points:
            if (px - x) ** 2 + (py - y) ** 2 < MIN_SPACING**2:
                return False
        return True

    def add(self, draw):
        for _ in range(self.max_tries):
            x, y = draw()
            if self._ok(x, y):
                self.points.append((x, y))
                return
        raise ConfigError("could not place targets: layout too dense for the available area")

    def uniform(self):
        return tuple(self.rng.uniform(-self.half, self.half, size=2))

    def disc(self, cx, cy, radius):
        def draw():
            r = radius * math.sqrt(self.rng.random())
            phi = self.rng.uniform(0.0, 2.0 * math.pi)
            return cx + r * math.cos(phi), cy + r * math.sin(phi)

        return draw


def target_layout(spec: ScenarioSpec, nest_radius: float = NEST_RADIUS) -> np.ndarray:
    """``(n_targets, 2)`` target positions for ``spec``."""
    rng = np.random.default_rng(np.random.SeedSequence([int(spec.seed), 0]))
    sampler = _Sampler(rng, spec.core_size / 2.0, nest_radius, max_tries=10_000)
    n = spec.n_targets
    d = Distribution(spec.distribution)
    centers = cluster_centers(d.value, spec.core_size)
    if d is Distribution.UNIFORM:
        for _ in range(n):
            sampler.add(sampler.uniform)
    elif d is Distribution.HALF_CLUSTER:
        n_uniform = n // 2
        for _ in range(n_uniform):
            sampler.add(sampler.uniform)
        cx, cy = centers[0]
        for _ in range(n - n_uniform):
            sampler.add(sampler.disc(cx, cy, CLUSTER_RADIUS))
    else:
        per, extra = divmod(n, len(centers))
        for c, (cx, cy) in enumerate(centers):
            for _ in range(per + (c < extra)):
                sampler.add(sampler.disc(cx, cy, CLUSTER_RADIUS))
    return np.array(sampler.points, dtype=float).reshape(-1, 2)


def robot_ring(n_robots: int, arena: Arena, rng: np.random.Generator) -> tuple[np.ndarray, np.ndarray]:
    """Robots evenly spaced on a ring just outside the nest, random headings."""
    spacing = 2 * ROBOT_RADIUS + 0.1
    radius = max(arena.nest_radius + ROBOT_RADIUS + 0.3, n_robots * spacing / (2 * math.pi))
    if radius + ROBOT_RADIUS > min(arena.half_width, arena.half_height):
        raise ConfigError("arena too small for the requested number of robots")
    phi = 2 * math.pi * np.arange(n_robots) / n_robots
    cx, cy = arena.nest_center
    xy = np.column_stack([cx + radius * np.cos(phi), cy + radius * np.sin(phi)])
    headings = rng.uniform(0.0, 2 * math.pi, size=n_robots)
    return xy, headings


def generate(spec: ScenarioSpec) -> WorldState:
    """Initial world for ``spec``; a pure function of the spec."""
    arena = Arena(spec.arena_size, spec.arena_size)
    targets = target_layout(spec, arena.nest_radius)
    rng = np.random.default_rng(np.random.SeedSequence([int(spec.seed), 1]))
    xy, headings = robot_ring(spec.n_robots, arena, rng)
    return WorldState(arena, targets, xy, headings)


def world_from_targets(target_xy, arena_size: float, n_robots: int, seed: int = 0) -> WorldState:
    """Initial world around an explicit target layout."""
    arena = Arena(arena_size, arena_size)
    rng = np.random.default_rng(np.random.SeedSequence([int(seed), 1]))
    xy, headings = robot_ring(n_robots, arena, rng)
    return WorldState(arena, target_xy, xy, headings)


def save_targets(path, target_xy) -> None:
    """Write one ``id x y`` line per target."""
    xy = np.asarray(target_xy, dtype=float).reshape(-1, 2).tolist()
    lines = [f"{i} {x!r} {y!r}" for i, (x, y) in enumerate(xy)]
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")


def load_targets(path) -> np.ndarray:
    """Read an ``id x y`` target list; blank lines and ``#`` comments are skipped."""
    rows = {}
    for lineno, raw in enumerate(Path(path).read_text(encoding="utf-8").splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        parts = line.split()
        if len(parts) != 3:
            raise ConfigError(f"{path}:{lineno}: expected 'id x y', got {raw!r}")
        try:
            tid, x, y = int(parts[0]), float(parts[1]), float(parts[2])
        except ValueError as exc:
            raise ConfigError(f"{path}:{lineno}: {exc}") from None
        if not (math.isfinite(x) and math.isfinite(y)):
            raise ConfigError(f"{path}:{lineno}: non-finite coordinate")
        if tid in rows:
            raise ConfigError(f"{path}:{lineno}: duplicate target id {tid}")
        rows[tid] = (x, y)
    if sorted(rows) != list(range(len(rows))):
        raise ConfigError(f"{path}: target ids must be 0..n-1")
    return np.array([rows[i] for i in range(len(rows))], dtype=float).reshape(-1, 2)
