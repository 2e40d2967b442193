import csv
import dataclasses
import json
import math
import textwrap

import numpy as np
import pytest

from repatt.cli import main
from repatt.controller import make_variant
from repatt.experiment import (
    RUN_COLUMNS,
    SUMMARY_COLUMNS,
    PlanError,
    read_csv,
    replay,
    run_plan,
    summary_rows,
    validate_config,
)
from repatt.scenarios import ScenarioSpec, load_targets

SMALL_PLAN = """
[plan]
repetitions = {reps}
base_seed = 3
output_dir = {out}
variants = {variants}
queue_sizes = {queues}

[signal]
model = {model}

[sim]
max_sim_time = {max_time}

[scenario Small]
distribution = OneCluster
arena_size = 16
n_targets = 15
n_robots = 4
seed = 1
"""


def write_plan(tmp_path, name="plan.ini", reps=1, variants="RepAtt", queues="1", model="ideal", max_time=60, out=None):
    out = out or tmp_path / "out"
    path = tmp_path / name
    path.write_text(SMALL_PLAN.format(reps=reps, out=out, variants=variants, queues=queues, model=model, max_time=max_time))
    return path


def test_full_scale_config(configs_dir):
    plan = validate_config(configs_dir / "full_scale.ini")
    alg = plan.algorithm_config("RepAtt", 1)
    assert (alg.p_b, alg.g_r, alg.g_a, alg.c_m, alg.v_r) == (0.0025, 10.0, 10.0, 5, 3.0)
    assert plan.signal_model.c_max == 15.0
    assert plan.sim.dt == 0.025 and plan.sim.completion_fraction == 0.9
    assert len(plan.scenarios) == 5
    assert len(plan.runs()) == 5 * 6 * 30


@pytest.mark.parametrize("name", ["desk.ini", "queue_sweep.ini", "large_world.ini"])
def test_shipped_configs_validate(configs_dir, name):
    assert validate_config(configs_dir / name).runs()


def test_repetitions_zero(tmp_path):
    path = write_plan(tmp_path, reps=0)
    with pytest.raises(PlanError) as exc:
        validate_config(path)
    (err,) = exc.value.errors
    assert "repetitions must be ≥ 1" in err
    assert f"{path}:3:" in err


def test_unknown_variant_lists_names(tmp_path):
    with pytest.raises(PlanError) as exc:
        validate_config(write_plan(tmp_path, variants="RandomWalk, RepelAll"))
    msg = exc.value.errors[0]
    assert "RepelAll" in msg
    for v in ["RandomWalk", "Repeller", "SelectiveRepulsion", "SelectiveAttraction", "RepAtt"]:
        assert v in msg


def test_all_errors_reported(tmp_path):
    path = tmp_path / "bad.ini"
    path.write_text(
        textwrap.dedent(
            """\
            [plan]
            repetitions = 0
            variants = Nope
            queue_sizes = 0

            [algorithm]
            p_b = lots
            wobble = 3

            [scenario A]
            distribution = Spiral
            n_targets = -4
            """
        )
    )
    with pytest.raises(PlanError) as exc:
        validate_config(path)
    errs = exc.value.errors
    assert len(errs) == 7
    joined = "\n".join(errs)
    for needle in (":2:", ":3:", ":4:", ":7:", ":8:", ":11:", ":12:"):
        assert needle in joined


def test_missing_fields(tmp_path):
    path = tmp_path / "empty.ini"
    path.write_text("[plan]\n")
    with pytest.raises(PlanError) as exc:
        validate_config(path)
    joined = "\n".join(exc.value.errors)
    assert "repetitions" in joined and "variants" in joined and "scenario" in joined


def test_seeds_follow_repetition(tmp_path):
    plan = validate_config(write_plan(tmp_path, reps=4, variants="RandomWalk, RepAtt"))
    runs = plan.runs()
    assert [r.sim.seed for r in runs] == [3, 4, 5, 6] * 2
    assert [r.run_id for r in runs] == list(range(8))


def test_single_run_plan(tmp_path):
    plan = validate_config(write_plan(tmp_path))
    assert run_plan(plan) == 0
    rows = read_csv(tmp_path / "out" / "runs.csv")
    summary = read_csv(tmp_path / "out" / "summary.csv")
    assert len(rows) == 1 and len(summary) == 1
    assert list(rows[0]) == RUN_COLUMNS
    assert list(summary[0]) == SUMMARY_COLUMNS
    assert rows[0]["format_version"] == "1"
    assert (tmp_path / "out" / "summary.svg").read_text().lstrip().startswith("<?xml")
    full = [json.loads(s) for s in (tmp_path / "out" / "runs.jsonl").read_text().splitlines()]
    assert full[0]["record"]["trace_digest"] == rows[0]["run_digest"]


def test_rerun_byte_identical_and_parallel(tmp_path):
    a = write_plan(tmp_path, "a.ini", reps=3, variants="RandomWalk, RepAtt", out=tmp_path / "a")
    b = write_plan(tmp_path, "b.ini", reps=3, variants="RandomWalk, RepAtt", out=tmp_path / "b")
    c = write_plan(tmp_path, "c.ini", reps=3, variants="RandomWalk, RepAtt", out=tmp_path / "c")
    run_plan(validate_config(a))
    run_plan(validate_config(b))
    run_plan(validate_config(c), jobs=2)
    first = (tmp_path / "a" / "runs.csv").read_bytes()
    assert first == (tmp_path / "b" / "runs.csv").read_bytes()
    assert first == (tmp_path / "c" / "runs.csv").read_bytes()


def test_queue_sweep_one_cell_per_queue(configs_dir, tmp_path):
    plan = validate_config(configs_dir / "queue_sweep.ini")
    assert plan.queue_sizes == [1, 5, 10, 20, 40, 80]
    # shrink the world and the clock, keep the grid shape
    plan.scenarios = [("TwoClusters", ScenarioSpec("TwoClusters", 16, 15, 4, 0))]
    plan.repetitions = 2
    plan.sim = dataclasses.replace(plan.sim, max_sim_time=20)
    plan.output_dir = tmp_path / "sweep"
    assert run_plan(plan) == 0
    summary = read_csv(tmp_path / "sweep" / "summary.csv")
    assert sorted(int(r["queue"]) for r in summary) == [1, 5, 10, 20, 40, 80]
    assert {r["model"] for r in summary} == {"sound"}


def test_fault_recorded_and_others_continue(tmp_path):
    path = write_plan(tmp_path)
    text = path.read_text() + "\n[scenario Cramped]\ndistribution = Uniform\narena_size = 5\nn_targets = 10\nn_robots = 1\n"
    path.write_text(text)
    assert run_plan(validate_config(path)) == 1
    rows = read_csv(tmp_path / "out" / "runs.csv")
    assert [bool(r["fault"]) for r in rows] == [False, True]
    assert rows[0]["run_digest"]
    assert len(read_csv(tmp_path / "out" / "summary.csv")) == 1


def test_summary_statistics():
    rows = [
        {"scenario": "s", "variant": v, "model": "ideal", "queue_size": "1", "completed": "1", "completion_time": str(t), "fault": ""}
        for v, ts in (("RandomWalk", [10, 12, 14]), ("RepAtt", [5, 6, 7]))
        for t in ts
    ]
    rows.append({"scenario": "s", "variant": "RepAtt", "model": "ideal", "queue_size": "1", "completed": "0", "completion_time": "", "fault": ""})
    out = {r["variant"]: r for r in summary_rows(rows, max_sim_time=100.0)}
    assert out["RandomWalk"]["normalized_mean"] == "1"
    # the timeout counts at max_sim_time
    assert float(out["RepAtt"]["mean"]) == pytest.approx((5 + 6 + 7 + 100) / 4)
    assert float(out["RandomWalk"]["p_vs_randomwalk"]) == pytest.approx(1.0)


def test_replay_match_and_mismatch(tmp_path):
    plan = validate_config(write_plan(tmp_path, reps=2, variants="RandomWalk, RepAtt"))
    run_plan(plan)
    csv_path = tmp_path / "out" / "runs.csv"
    for rid in range(4):
        ok, record, row = replay(f"{csv_path}#{rid}")
        assert ok, rid
    rows = read_csv(csv_path)
    rows[2]["run_digest"] = "0" * 64
    with open(csv_path, "w", newline="") as fh:
        w = csv.DictWriter(fh, fieldnames=RUN_COLUMNS, lineterminator="\n")
        w.writeheader()
        w.writerows(rows)
    assert not replay(f"{csv_path}#2")[0]
    assert main(["replay", f"{csv_path}#2"]) == 1
    assert main(["replay", f"{csv_path}#1"]) == 0


def test_replay_bad_reference(tmp_path):
    with pytest.raises(ValueError):
        replay(str(tmp_path / "runs.csv"))


def test_cli_validate(tmp_path, capsys):
    assert main(["validate", str(write_plan(tmp_path, reps=2))]) == 0
    assert "ok: 2 runs" in capsys.readouterr().out
    assert main(["validate", str(write_plan(tmp_path, "bad.ini", reps=0))]) == 2
    assert "repetitions must be" in capsys.readouterr().err


def test_cli_run_env_overrides(tmp_path, monkeypatch):
    path = write_plan(tmp_path, out=tmp_path / "ignored", max_time=5)
    monkeypatch.setenv("REPATT_OUTPUT", str(tmp_path / "env_out"))
    monkeypatch.setenv("REPATT_SEED", "40")
    monkeypatch.setenv("REPATT_TRACE", "1")
    assert main(["run", str(path)]) == 0
    rows = read_csv(tmp_path / "env_out" / "runs.csv")
    assert rows[0]["seed"] == "40"
    trace = (tmp_path / "env_out" / "traces" / "run_00000.jsonl").read_text().splitlines()
    assert len(trace) == 201
    # an explicit flag beats the environment
    assert main(["run", str(path), "--seed", "7", "--output", str(tmp_path / "flag_out")]) == 0
    assert read_csv(tmp_path / "flag_out" / "runs.csv")[0]["seed"] == "7"


def test_cli_gen_world_and_bench(tmp_path, capsys):
    out = tmp_path / "world.txt"
    assert main(["gen-world", "FourClusters", str(out), "--targets", "40", "--seed", "2"]) == 0
    xy = load_targets(out)
    assert xy.shape == (40, 2)
    capsys.readouterr()
    assert main(["bench-ideal", str(out), "--robots", "4"]) == 0
    text = capsys.readouterr().out
    t_min = float(text.split("T_min=")[1])
    d_tb = float(np.hypot(xy[:, 0], xy[:, 1]).mean())
    assert t_min > 40 * 5.0 / 4
    assert f"D_TB={d_tb:.6g}" in text


def test_cli_chart(tmp_path):
    run_plan(validate_config(write_plan(tmp_path, reps=2, variants="RandomWalk, RepAtt")))
    svg = tmp_path / "chart.svg"
    assert main(["chart", str(tmp_path / "out" / "summary.csv"), str(svg)]) == 0
    assert "<svg" in svg.read_text()
