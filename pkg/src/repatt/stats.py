"""Benchmark oracles and the statistics used to compare foraging runs."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np
from scipy import special

from repatt.engine import SimConfig, WorldState
from repatt.scenarios import ConfigError


@dataclass(frozen=True)
class IdealizedInputs:
    n_robots: int
    robot_speed: float
    n_targets: int
    capacity: int
    mean_dist_to_nest: float
    mean_neighbor_dist: float
    processing_time: float

    def __post_init__(self):
        if self.n_robots <= 0 or self.n_targets <= 0 or self.capacity < 1:
            raise ValueError("n_robots, n_targets must be positive and capacity >= 1")
        if self.robot_speed <= 0:
            raise ValueError("robot_speed must be positive")
        if self.mean_dist_to_nest < 0 or self.mean_neighbor_dist < 0 or self.processing_time < 0:
            raise ValueError("distances and processing time must be non-negative")


def idealized_time(inp: IdealizedInputs) -> float:
    """Lower-bound collection time assuming perfect task allocation.

    Each robot makes ``N_T / R_C`` round trips to the nest, walks between the
    ``R_C`` targets of a load, and processes every target.
    """
    motion = (inp.n_targets / inp.capacity) * 2.0 * inp.mean_dist_to_nest + (inp.capacity - 1) * inp.mean_neighbor_dist
    return (motion / inp.robot_speed + inp.n_targets * inp.processing_time) / inp.n_robots


def mean_neighbor_distance(target_xy: np.ndarray, k: int) -> float:
    """Mean over targets of the average distance to their ``k`` nearest neighbours."""
    xy = np.asarray(target_xy, dtype=float).reshape(-1, 2)
    if k == 0:
        return 0.0
    d = np.hypot(xy[:, None, 0] - xy[None, :, 0], xy[:, None, 1] - xy[None, :, 1])
    np.fill_diagonal(d, np.inf)
    nearest = np.sort(d, axis=1)[:, :k]
    return float(nearest.mean(axis=1).mean())


def derive_idealized_inputs(
    world: WorldState,
    cfg: SimConfig,
    capacity: int = 5,
) -> IdealizedInputs:
    n_t = world.n_targets
    if n_t < capacity:
        raise ConfigError(f"need at least {capacity} targets, world has {n_t}")
    nest = world.arena.nest_center
    d_tb = float(np.hypot(world.tx - nest.x, world.ty - nest.y).mean())
    d_tn = mean_neighbor_distance(world.target_xy, capacity - 1)
    return IdealizedInputs(
        n_robots=world.n_robots,
        robot_speed=cfg.robot_speed,
        n_targets=n_t,
        capacity=capacity,
        mean_dist_to_nest=d_tb,
        mean_neighbor_dist=d_tn,
        processing_time=cfg.processing_time,
    )


@dataclass(frozen=True)
class SampleSummary:
    n: int
    mean: float
    std: float
    ci95_low: float
    ci95_high: float

    def scaled(self, factor: float) -> "SampleSummary":
        return SampleSummary(self.n, self.mean * factor, self.std * abs(factor), *sorted((self.ci95_low * factor, self.ci95_high * factor)))


def t_cdf(t: float, df: float) -> float:
    """Student-t cumulative distribution via the regularized incomplete beta."""
    if math.isinf(t):
        return 1.0 if t > 0 else 0.0
    t2 = t * t
    if t2 < df:
        # near zero the complementary form keeps full precision
        half = 0.5 * special.betainc(0.5, df / 2.0, t2 / (df + t2))
        return float(0.5 + half if t > 0 else 0.5 - half)
    tail = 0.5 * special.betainc(df / 2.0, 0.5, df / (df + t2))
    return float(1.0 - tail if t > 0 else tail)


def t_critical(confidence: float, df: float) -> float:
    """Two-sided critical value: ``P(|T| <= t) == confidence``."""
    x = special.betaincinv(df / 2.0, 0.5, 1.0 - confidence)
    return float(math.sqrt(df * (1.0 - x) / x))


def summarize(samples: Sequence[float], confidence: float = 0.95) -> SampleSummary:
    x = np.asarray(samples, dtype=float)
    if x.size < 2:
        raise ValueError("at least two samples are needed for a confidence interval")
    mean = float(x.mean())
    std = float(x.std(ddof=1))
    half = t_critical(confidence, x.size - 1) * std / math.sqrt(x.size)
    return SampleSummary(int(x.size), mean, std, mean - half, mean + half)


def welch_t_test(a: Sequence[float], b: Sequence[float]) -> float:
    """Two-sided Welch t-test p-value."""
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    if a.size < 2 or b.size < 2:
        raise ValueError("each sample needs at least two values")
    va = a.var(ddof=1) / a.size
    vb = b.var(ddof=1) / b.size
    diff = a.mean() - b.mean()
    se2 = va + vb
    if se2 == 0.0:
        return 1.0 if diff == 0.0 else 0.0
    t = diff / math.sqrt(se2)
    # Welch-Satterthwaite, written in ratios to avoid underflow
    df = 1.0 / ((va / se2) ** 2 / (a.size - 1) + (vb / se2) ** 2 / (b.size - 1))
    return float(min(1.0, 2.0 * t_cdf(-abs(t), df)))


def normalize(samples: Sequence[float], baseline_mean: float) -> np.ndarray:
    return np.asarray(samples, dtype=float) / baseline_mean
