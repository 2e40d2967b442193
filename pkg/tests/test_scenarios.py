import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from repatt.scenarios import (
    CLUSTER_RADIUS,
    ConfigError,
    ScenarioSpec,
    cluster_centers,
    generate,
    load_targets,
    save_targets,
)

DISTRIBUTIONS = ["OneCluster", "TwoClusters", "FourClusters", "Uniform", "HalfCluster"]


def _in_disc(xy, center, r=CLUSTER_RADIUS):
    return np.hypot(xy[:, 0] - center[0], xy[:, 1] - center[1]) <= r + 1e-12


def test_uniform_count_and_nest_exclusion():
    w = generate(ScenarioSpec("Uniform", 50, 200, 36, seed=0))
    xy = w.target_xy
    assert xy.shape == (200, 2)
    assert (np.hypot(xy[:, 0], xy[:, 1]) > w.arena.nest_radius).all()
    assert (np.abs(xy) <= 25.0).all()


def test_uniform_covers_all_quadrants():
    xy = generate(ScenarioSpec("Uniform", 50, 200, 36, seed=1)).target_xy
    counts = [np.sum((np.sign(xy[:, 0]) == sx) & (np.sign(xy[:, 1]) == sy)) for sx in (1, -1) for sy in (1, -1)]
    # binomial(200, 1/4): mean 50, sd 6.1
    assert all(25 < c < 75 for c in counts)


def test_four_clusters_one_per_quadrant():
    spec = ScenarioSpec("FourClusters", 50, 200, 36, seed=3)
    xy = generate(spec).target_xy
    centers = cluster_centers("FourClusters", spec.core_size)
    assert len({(np.sign(x), np.sign(y)) for x, y in centers}) == 4
    for c in centers:
        assert _in_disc(xy, c).sum() == 50


def test_half_cluster_split():
    spec = ScenarioSpec("HalfCluster", 50, 200, 36, seed=5)
    xy = generate(spec).target_xy
    (c,) = cluster_centers("HalfCluster", spec.core_size)
    # first half is uniform, second half all inside the cluster
    assert _in_disc(xy[100:], c).all()
    assert _in_disc(xy[:100], c).sum() < 20


def test_two_clusters_split():
    spec = ScenarioSpec("TwoClusters", 50, 201, 36, seed=5)
    xy = generate(spec).target_xy
    a, b = cluster_centers("TwoClusters", spec.core_size)
    assert (_in_disc(xy, a).sum(), _in_disc(xy, b).sum()) == (101, 100)


def test_large_arena_keeps_core_layout():
    small = generate(ScenarioSpec("TwoClusters", 50, 200, 36, seed=7))
    big = generate(ScenarioSpec("TwoClusters", 100, 200, 36, seed=7))
    np.testing.assert_array_equal(small.target_xy, big.target_xy)
    assert big.arena.width == 100
    assert (np.abs(big.target_xy) <= 25.0).all()


@settings(max_examples=25, deadline=None)
@given(st.sampled_from(DISTRIBUTIONS), st.integers(0, 2**31), st.integers(1, 120))
def test_generate_pure_and_valid(dist, seed, n):
    spec = ScenarioSpec(dist, 25.0, n, 10, seed)
    a, b = generate(spec), generate(spec)
    np.testing.assert_array_equal(a.target_xy, b.target_xy)
    np.testing.assert_array_equal(a.robot_xy, b.robot_xy)
    xy = a.target_xy
    assert xy.shape == (n, 2)
    assert (np.hypot(xy[:, 0], xy[:, 1]) > a.arena.nest_radius).all()
    if n > 1:
        d = np.hypot(xy[:, None, 0] - xy[None, :, 0], xy[:, None, 1] - xy[None, :, 1])
        np.fill_diagonal(d, np.inf)
        assert d.min() >= 0.05
    # robots start outside the nest, inside the arena, not overlapping
    r = a.robot_xy
    assert (np.hypot(r[:, 0], r[:, 1]) > a.arena.nest_radius).all()
    dr = np.hypot(r[:, None, 0] - r[None, :, 0], r[:, None, 1] - r[None, :, 1])
    np.fill_diagonal(dr, np.inf)
    assert dr.min() >= 0.4


def test_seed_changes_layout():
    a = generate(ScenarioSpec("Uniform", 50, 50, 5, seed=1)).target_xy
    b = generate(ScenarioSpec("Uniform", 50, 50, 5, seed=2)).target_xy
    assert not np.array_equal(a, b)


def test_infeasible_layout():
    with pytest.raises(ConfigError):
        # the nest keep-out covers the whole core
        generate(ScenarioSpec("Uniform", 5.0, 10, 1, seed=0))


@pytest.mark.parametrize("kw", [{"n_targets": 0}, {"n_robots": 0}, {"arena_size": -1.0}, {"distribution": "Spiral"}])
def test_invalid_spec(kw):
    with pytest.raises(ValueError):
        ScenarioSpec(**kw)


def test_target_file_round_trip(tmp_path):
    xy = generate(ScenarioSpec("FourClusters", 50, 40, 5, seed=2)).target_xy
    path = tmp_path / "world.txt"
    save_targets(path, xy)
    np.testing.assert_array_equal(load_targets(path), xy)


def test_target_file_errors(tmp_path):
    p = tmp_path / "bad.txt"
    p.write_text("# header\n0 1.0 2.0\n2 3.0 4.0\n")
    with pytest.raises(ConfigError, match="0..n-1"):
        load_targets(p)
    p.write_text("0 1.0\n")
    with pytest.raises(ConfigError, match=":1:"):
        load_targets(p)
