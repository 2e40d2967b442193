"""Acceptance criteria, one test each.

Every test records a PASS/FAIL line (shown in the terminal summary) and then
asserts the criterion at its stated tolerance and runtime bound.
"""

import dataclasses
import io
import math
import time

import numpy as np
import pytest
from scipy import stats as sps

from conftest import ACCEPTANCE_RESULTS
from repatt.controller import make_variant
from repatt.engine import SimConfig, WorldState, advance, check_invariants, run_to_completion
from repatt.experiment import read_csv, replay, run_plan, validate_config
from repatt.geometry import Arena
from repatt.scenarios import ScenarioSpec, generate
from repatt.signals import (
    IdealSignal,
    SoundSignal,
    gradient_sign_accuracy,
    pairwise_intensity_ideal,
    pairwise_intensity_sound,
    total_intensity,
)
from repatt.stats import derive_idealized_inputs, idealized_time, welch_t_test

A0, ALPHA, AE = 140.5193, 0.1193, 48.1824
DESK = dict(distribution="OneCluster", arena_size=25.0, n_targets=60, n_robots=10)


def report(name, ok, detail):
    ACCEPTANCE_RESULTS.append((name, bool(ok), detail))
    print(f"{'PASS' if ok else 'FAIL'}  {name}: {detail}")
    assert ok, detail


@pytest.fixture(scope="module", autouse=True)
def warm_jit():
    # compile (or load cached) kernels outside the timed sections
    w = generate(ScenarioSpec(**DESK, seed=0))
    w.seed_streams(0)
    advance(w, 2, SimConfig(), make_variant("RepAtt"), IdealSignal())
    advance(w, 2, SimConfig(), make_variant("RepAtt"), SoundSignal())


@pytest.fixture(scope="module")
def desk_results(tmp_path_factory, configs_dir_module):
    plan = validate_config(configs_dir_module / "desk.ini")
    plan.output_dir = tmp_path_factory.mktemp("desk")
    t0 = time.perf_counter()
    code = run_plan(plan)
    return plan, read_csv(plan.output_dir / "runs.csv"), code, time.perf_counter() - t0


@pytest.fixture(scope="module")
def configs_dir_module():
    from conftest import CONFIGS

    return CONFIGS


def _times(rows, variant, queue=None, max_time=3600.0):
    out = []
    for r in rows:
        if r["variant"] == variant and (queue is None or int(r["queue_size"]) == queue):
            out.append(float(r["completion_time"]) if r["completed"] == "1" else max_time)
    return np.array(out)


def test_1_equation_exactness():
    t0 = time.perf_counter()
    c = 15.0
    model = IdealSignal(c)
    grid = np.concatenate([np.linspace(0.0, 30.0, 997), [0.0, c, c + 1e-9]])
    worst = max(abs(pairwise_intensity_ideal(model, d) - (max(c - d, 0.0) / c)) for d in grid)
    rng = np.random.default_rng(2024)
    worst_total = 0.0
    for _ in range(500):
        n = int(rng.integers(2, 51))
        pos = rng.uniform(-25, 25, size=(n, 2))
        mask = rng.random(n) < 0.5
        recv = int(rng.integers(n))
        oracle = 0.0
        for j in range(n):
            if j != recv and mask[j]:
                d = math.hypot(pos[j, 0] - pos[recv, 0], pos[j, 1] - pos[recv, 1])
                oracle += (c - d) / c if d < c else 0.0
        worst_total = max(worst_total, abs(total_intensity(pos, mask, recv, model) - oracle))
    dt = time.perf_counter() - t0
    ok = worst <= 1e-12 and worst_total <= 1e-12 and dt < 1.0
    report("1 equation exactness", ok, f"max pairwise err {worst:.1e}, max total err {worst_total:.1e}, {dt:.2f} s")


def test_2_sound_noise_statistics():
    t0 = time.perf_counter()
    quiet = SoundSignal(A0, ALPHA, AE, 0.0)
    grid = np.linspace(0.0, 100.0, 1000)
    worst = max(abs(pairwise_intensity_sound(quiet, d) - (A0 * math.exp(-ALPHA * d) + AE)) for d in grid)
    noisy = SoundSignal(A0, ALPHA, AE, 0.06)
    rng = np.random.default_rng(7)
    samples = np.array([pairwise_intensity_sound(noisy, 5.0, rng) for _ in range(100_000)])
    ratio = samples.std() / samples.mean()
    dt = time.perf_counter() - t0
    ok = worst <= 1e-9 and abs(ratio - 0.06) <= 0.005 and dt < 5.0
    report("2 sound/noise statistics", ok, f"noise-off max err {worst:.1e}, std/mean {ratio:.4f}, {dt:.2f} s")


def _brute_tmin(xy, n_r, v, r_c, t_p):
    n = len(xy)
    d_tb = sum(math.hypot(x, y) for x, y in xy) / n
    acc = 0.0
    for i in range(n):
        ds = sorted(math.hypot(xy[i][0] - xy[j][0], xy[i][1] - xy[j][1]) for j in range(n) if j != i)
        acc += sum(ds[: r_c - 1]) / (r_c - 1) if r_c > 1 else 0.0
    d_tn = acc / n
    return (1.0 / n_r) * ((1.0 / v) * ((n / r_c) * 2.0 * d_tb + (r_c - 1) * d_tn) + n * t_p), d_tb, d_tn


def test_3_idealized_oracle():
    t0 = time.perf_counter()
    from repatt.stats import IdealizedInputs

    closed = [
        idealized_time(IdealizedInputs(1, 1.0, 1, 1, 1.0, 7.0, 0.0)) - 2.0,
        idealized_time(IdealizedInputs(1, 1.0, 10, 1, 5.0, 0.0, 5.0)) - 150.0,
    ]
    rng = np.random.default_rng(99)
    worst = 0.0
    for _ in range(100):
        n = int(rng.integers(5, 201))
        xy = rng.uniform(-24, 24, size=(n, 2))
        n_r = int(rng.integers(1, 50))
        r_c = int(rng.integers(1, 6))
        world = WorldState(Arena(50, 50), xy, np.zeros((n_r, 2)) + [10.0, 10.0])
        cfg = SimConfig(robot_speed=float(rng.uniform(0.2, 2)), processing_time=float(rng.uniform(0, 10)))
        inp = derive_idealized_inputs(world, cfg, capacity=r_c)
        ref, d_tb, d_tn = _brute_tmin(xy.tolist(), n_r, cfg.robot_speed, r_c, cfg.processing_time)
        worst = max(worst, abs(inp.mean_dist_to_nest - d_tb), abs(inp.mean_neighbor_dist - d_tn), abs(idealized_time(inp) - ref))
    dt = time.perf_counter() - t0
    ok = worst <= 1e-9 and max(map(abs, closed)) <= 1e-12 and dt < 5.0
    report("3 idealized-time oracle", ok, f"max err {worst:.1e} over 100 worlds, closed forms exact, {dt:.2f} s")


def test_4_variant_degeneration():
    t0 = time.perf_counter()
    rw = make_variant("RandomWalk")
    degenerate = dataclasses.replace(make_variant("RepAtt"), repel=False, attract=False)
    world = generate(ScenarioSpec(**DESK, seed=0))
    same = 0
    for seed in range(10):
        traces = []
        for alg in (rw, degenerate):
            buf = io.StringIO()
            run_to_completion(world, SimConfig(seed=seed, max_sim_time=60.0), alg, IdealSignal(), trace=buf)
            full = run_to_completion(world, SimConfig(seed=seed), alg, IdealSignal())
            traces.append((buf.getvalue(), full.trace_digest, full.completion_time))
        same += traces[0] == traces[1]
    dt = time.perf_counter() - t0
    report("4 variant degeneration", same == 10 and dt < 60.0, f"{same}/10 seeds bit-identical, {dt:.1f} s")


def test_5_fsm_conservation_invariants():
    t0 = time.perf_counter()
    rng = np.random.default_rng(5)
    variants = ["RandomWalk", "Repeller", "SelectiveRepulsion", "SelectiveAttraction", "RepAtt"]
    dists = ["OneCluster", "TwoClusters", "FourClusters", "Uniform", "HalfCluster"]
    checked = 0
    for k in range(20):
        spec = ScenarioSpec(dists[k % 5], 25.0, 60, 10, seed=int(rng.integers(1 << 30)))
        alg = make_variant(variants[int(rng.integers(5))])
        w = generate(spec)
        w.seed_streams(int(rng.integers(1 << 30)))
        cfg = SimConfig()
        need = math.ceil(0.9 * 60 - 1e-9)
        last = 0
        half = w.arena.half_width - 0.2 + 1e-9
        while w.deposited < need and w.time < cfg.max_sim_time:
            advance(w, 1, cfg, alg, IdealSignal())
            check_invariants(w, alg, last)  # raises on any violation
            assert sum(w.status_counts().values()) == 60
            assert w.rcargo.max() <= alg.c_m
            assert w.deposited >= last
            assert np.abs(w.rx).max() <= half and np.abs(w.ry).max() <= half
            last = w.deposited
            checked += 1
    dt = time.perf_counter() - t0
    report("5 FSM/conservation invariants", dt < 120.0, f"20 runs, {checked} steps checked, {dt:.1f} s")


def test_6_filter_efficacy():
    t0 = time.perf_counter()
    model = SoundSignal(A0, ALPHA, AE, 0.06)
    rng = np.random.default_rng(6)
    q1 = gradient_sign_accuracy(model, 1, 10_000, rng)
    q40 = gradient_sign_accuracy(model, 40, 10_000, rng)
    dt = time.perf_counter() - t0
    ok = q40 - q1 >= 0.20 and dt < 10.0
    report("6 filter efficacy", ok, f"sign accuracy Q=1 {q1:.3f}, Q=40 {q40:.3f}, {dt:.2f} s")


def test_7_comparative_result(desk_results):
    plan, rows, code, dt = desk_results
    rw, ra = _times(rows, "RandomWalk"), _times(rows, "RepAtt")
    p = welch_t_test(ra, rw)
    ok = code == 0 and len(rw) == len(ra) == 20 and ra.mean() < rw.mean() and p < 0.05 and dt < 600
    report("7 comparative foraging", ok, f"RepAtt {ra.mean():.1f} s vs RandomWalk {rw.mean():.1f} s, p={p:.2g}, {dt:.1f} s")


def test_8_noisy_model_robustness(tmp_path, configs_dir_module):
    plan = validate_config(configs_dir_module / "desk.ini")
    plan.signal_model = SoundSignal(A0, ALPHA, AE, 0.06)
    plan.queue_sizes = [1, 40]
    plan.output_dir = tmp_path / "noisy"
    t0 = time.perf_counter()
    code = run_plan(plan)
    dt = time.perf_counter() - t0
    rows = read_csv(plan.output_dir / "runs.csv")
    rw = _times(rows, "RandomWalk", 1)
    q1, q40 = _times(rows, "RepAtt", 1), _times(rows, "RepAtt", 40)
    p = welch_t_test(q40, rw)
    ok = code == 0 and q40.mean() < rw.mean() and p < 0.05 and q1.mean() > q40.mean() and dt < 900
    report(
        "8 noisy-model robustness",
        ok,
        f"RandomWalk {rw.mean():.1f} s, RepAtt Q=40 {q40.mean():.1f} s (p={p:.2g}), Q=1 {q1.mean():.1f} s, {dt:.1f} s",
    )


def test_9_statistics_correctness():
    a, b = [1, 2, 3, 4, 5], [3, 4, 5, 6, 7]
    p = welch_t_test(a, b)
    symmetric = p == welch_t_test(b, a)
    identical = welch_t_test(a, a) == 1.0
    reference = sps.ttest_ind(a, b, equal_var=False).pvalue
    ok = abs(p - 0.0325) <= 1e-3 and symmetric and identical
    report(
        "9 statistics correctness",
        ok,
        f"p={p:.6f} (expected 0.0325 +/- 1e-3; scipy gives {reference:.6f}), symmetric={symmetric}, identical p=1: {identical}",
    )


def test_10_replay_determinism(desk_results):
    plan, rows, code, _ = desk_results
    rng = np.random.default_rng(10)
    picks = sorted(rng.choice(len(rows), size=10, replace=False).tolist())
    csv_path = plan.output_dir / "runs.csv"
    t0 = time.perf_counter()
    matched = sum(replay(f"{csv_path}#{rid}")[0] for rid in picks)
    dt = time.perf_counter() - t0
    report("10 determinism/replay", matched == 10, f"{matched}/10 sampled rows replayed to identical digests, {dt:.1f} s")
