"""Batch experiments: config parsing, grid execution, result files and replay.

A plan is an INI file with ``[plan]``, ``[signal]``, ``[algorithm]``,
``[sim]`` and one ``[scenario <name>]`` section per world. Every run in the
grid (scenario x variant x queue size x repetition) gets the seed
``base_seed + repetition``, so all variants of one repetition share a seed.
"""

from __future__ import annotations

import configparser
import csv
import json
import logging
import math
import os
import re
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field, replace
from functools import lru_cache
from pathlib import Path
from typing import Iterable

from repatt.controller import GLOBAL_DETECTOR, VARIANT_NAMES, AlgorithmConfig, config_for
from repatt.engine import EngineFault, RunRecord, SimConfig, run_to_completion
from repatt.scenarios import DISTRIBUTION_NAMES, ConfigError, ScenarioSpec, generate
from repatt.signals import IdealSignal, SignalModel, SoundSignal
from repatt.stats import summarize, welch_t_test

log = logging.getLogger(__name__)

FORMAT_VERSION = 1
RUN_COLUMNS = [
    "format_version",
    "run_id",
    "scenario",
    "distribution",
    "arena_size",
    "n_targets",
    "n_robots",
    "variant",
    "model",
    "queue_size",
    "repetition",
    "seed",
    "config_digest",
    "completed",
    "completion_time",
    "deposited",
    "steps",
    "turns",
    "run_digest",
    "fault",
]
SUMMARY_COLUMNS = [
    "scenario",
    "variant",
    "model",
    "queue",
    "n",
    "mean",
    "std",
    "ci_low",
    "ci_high",
    "normalized_mean",
    "p_vs_randomwalk",
]
ALL_VARIANTS = VARIANT_NAMES + (GLOBAL_DETECTOR,)
BASELINE = "RandomWalk"
ENV_PREFIX = "REPATT_"

_ALG_FLOATS = ("p_b", "g_r", "g_a", "v_r", "turn_mean_deg", "turn_std_deg", "give_up_time")
_SIM_FLOATS = ("dt", "robot_speed", "processing_time", "max_sim_time", "completion_fraction")
_SOUND_FLOATS = ("a0", "alpha", "a_e", "noise_ratio")


class PlanError(ConfigError):
    """All problems found in a plan file, one per entry of ``errors``."""

    def __init__(self, errors: list[str]):
        super().__init__("invalid experiment config:\n  " + "\n  ".join(errors))
        self.errors = errors


@dataclass
class ExperimentPlan:
    scenarios: list[tuple[str, ScenarioSpec]]
    variants: list[str]
    signal_model: SignalModel
    queue_sizes: list[int]
    repetitions: int
    base_seed: int = 0
    output_dir: Path = Path("results")
    algorithm: dict = field(default_factory=dict)
    sim: SimConfig = field(default_factory=SimConfig)
    charts: bool = True

    def algorithm_config(self, variant: str, queue_size: int) -> AlgorithmConfig:
        return config_for(variant, queue_size=queue_size, **self.algorithm)

    def runs(self) -> list["RunSpec"]:
        out = []
        for name, spec in self.scenarios:
            for variant in self.variants:
                for q in self.queue_sizes:
                    for rep in range(self.repetitions):
                        out.append(
                            RunSpec(
                                run_id=len(out),
                                scenario=name,
                                spec=spec,
                                variant=variant,
                                model=self.signal_model,
                                alg=self.algorithm_config(variant, q),
                                sim=replace(self.sim, seed=self.base_seed + rep),
                                repetition=rep,
                            )
                        )
        return out


@dataclass(frozen=True)
class RunSpec:
    run_id: int
    scenario: str
    spec: ScenarioSpec
    variant: str
    model: SignalModel
    alg: AlgorithmConfig
    sim: SimConfig
    repetition: int

    def full_config(self) -> dict:
        return {
            "scenario": self.scenario,
            "spec": asdict(self.spec),
            "variant": self.variant,
            "model": {"name": self.model.name, **asdict(self.model)},
            "alg": {k: _json_float(v) for k, v in self.alg.to_dict().items()},
            "sim": asdict(self.sim),
        }


def _json_float(v):
    if isinstance(v, float) and math.isinf(v):
        return "inf"
    return v


def _model_from_dict(d: dict) -> SignalModel:
    d = dict(d)
    name = d.pop("name")
    return IdealSignal(**d) if name == "ideal" else SoundSignal(**d)


def runspec_from_config(cfg: dict, run_id: int = 0, repetition: int = 0) -> RunSpec:
    alg = {k: (math.inf if v == "inf" else v) for k, v in cfg["alg"].items()}
    return RunSpec(
        run_id=run_id,
        scenario=cfg["scenario"],
        spec=ScenarioSpec(**cfg["spec"]),
        variant=cfg["variant"],
        model=_model_from_dict(cfg["model"]),
        alg=AlgorithmConfig(**alg),
        sim=SimConfig(**cfg["sim"]),
        repetition=repetition,
    )


# -- config parsing ---------------------------------------------------------


def _line_index(text: str) -> dict:
    """Map ``(section, key)`` and ``(section, None)`` to 1-based line numbers."""
    where = {}
    section = None
    for n, raw in enumerate(text.splitlines(), 1):
        line = raw.strip()
        if not line or line[0] in "#;":
            continue
        m = re.match(r"\[(.+)\]$", line)
        if m:
            section = m.group(1).strip()
            where[(section, None)] = n
            continue
        key = re.split(r"[=:]", line, 1)[0].strip().lower()
        where.setdefault((section, key), n)
    return where


class _Reader:
    def __init__(self, parser, path, where):
        self.parser = parser
        self.path = path
        self.where = where
        self.errors: list[str] = []

    def error(self, section, key, message):
        line = self.where.get((section, key)) or self.where.get((section, None))
        loc = f"{self.path}:{line}" if line else str(self.path)
        field_name = f"[{section}] {key}" if key else f"[{section}]"
        self.errors.append(f"{loc}: {field_name}: {message}")

    def get(self, section, key, conv, default=None, required=False, check=None, check_msg=""):
        if not self.parser.has_section(section) or not self.parser.has_option(section, key):
            if required:
                self.error(section, key, "missing required field")
            return default
        raw = self.parser.get(section, key).strip()
        try:
            value = conv(raw)
        except (TypeError, ValueError):
            self.error(section, key, f"cannot parse {raw!r}")
            return default
        if check is not None and not check(value):
            self.error(section, key, check_msg or f"invalid value {raw!r}")
            return default
        return value


def _as_bool(raw: str) -> bool:
    low = raw.lower()
    if low in ("1", "true", "yes", "on"):
        return True
    if low in ("0", "false", "no", "off"):
        return False
    raise ValueError(raw)


def _as_list(raw: str) -> list[str]:
    return [p.strip() for p in re.split(r"[,\s]+", raw) if p.strip()]


def _positive(x):
    return x > 0


def validate_config(path) -> ExperimentPlan:
    """Parse and validate a plan file, reporting every problem at once."""
    path = Path(path)
    text = path.read_text(encoding="utf-8")
    parser = configparser.ConfigParser(interpolation=None)
    try:
        parser.read_string(text, source=str(path))
    except configparser.Error as exc:
        raise PlanError([str(exc)]) from None
    r = _Reader(parser, path, _line_index(text))

    known = {"plan", "signal", "algorithm", "sim"}
    for s in parser.sections():
        if s not in known and not s.startswith("scenario"):
            r.error(s, None, "unknown section")

    repetitions = r.get(
        "plan", "repetitions", int, 1, required=True, check=lambda v: v >= 1, check_msg="repetitions must be ≥ 1"
    )
    base_seed = r.get("plan", "base_seed", int, 0)
    output_dir = r.get("plan", "output_dir", str, "results")
    charts = r.get("plan", "charts", _as_bool, True)
    variants = r.get("plan", "variants", _as_list, None, required=True) or []
    for v in variants:
        if v not in ALL_VARIANTS:
            r.error("plan", "variants", f"unknown variant {v!r}; valid names: {', '.join(ALL_VARIANTS)}")
    queue_sizes = r.get("plan", "queue_sizes", lambda s: [int(x) for x in _as_list(s)], [1])
    if not queue_sizes:
        r.error("plan", "queue_sizes", "queue_sizes must be nonempty")
    elif any(q < 1 for q in queue_sizes):
        r.error("plan", "queue_sizes", "queue sizes must be positive integers")

    model_name = r.get("signal", "model", str, "ideal")
    model = None
    if model_name == "ideal":
        c_max = r.get("signal", "c_max", float, 15.0, check=_positive, check_msg="c_max must be positive")
        model = IdealSignal(c_max)
    elif model_name == "sound":
        kw = {}
        for k in _SOUND_FLOATS:
            v = r.get("signal", k, float)
            if v is not None:
                kw[k] = v
        try:
            model = SoundSignal(**kw)
        except ValueError as exc:
            r.error("signal", None, str(exc))
    else:
        r.error("signal", "model", f"unknown model {model_name!r}; valid: ideal, sound")

    algorithm = {}
    for k in _ALG_FLOATS:
        v = r.get("algorithm", k, float)
        if v is not None:
            algorithm[k] = v
    c_m = r.get("algorithm", "c_m", int)
    if c_m is not None:
        algorithm["c_m"] = c_m
    mode = r.get("algorithm", "combine_gains", str)
    if mode is not None:
        algorithm["combine_gains"] = mode
    if parser.has_section("algorithm"):
        for key in parser.options("algorithm"):
            if key not in _ALG_FLOATS + ("c_m", "combine_gains"):
                r.error("algorithm", key, "unknown field")
    try:
        AlgorithmConfig(**algorithm)
    except ValueError as exc:
        r.error("algorithm", None, str(exc))

    sim_kw = {}
    for k in _SIM_FLOATS:
        v = r.get("sim", k, float)
        if v is not None:
            sim_kw[k] = v
    sim = SimConfig()
    try:
        sim = SimConfig(**sim_kw)
    except ValueError as exc:
        r.error("sim", None, str(exc))

    scenarios = []
    for s in parser.sections():
        if not s.startswith("scenario"):
            continue
        name = s[len("scenario") :].strip() or f"scenario{len(scenarios)}"
        dist = r.get(s, "distribution", str, None, required=True)
        if dist is not None and dist not in DISTRIBUTION_NAMES:
            r.error(s, "distribution", f"unknown distribution {dist!r}; valid names: {', '.join(DISTRIBUTION_NAMES)}")
            dist = None
        arena = r.get(s, "arena_size", float, 50.0, check=_positive, check_msg="arena_size must be positive")
        n_t = r.get(s, "n_targets", int, 200, check=_positive, check_msg="n_targets must be positive")
        n_r = r.get(s, "n_robots", int, 36, check=_positive, check_msg="n_robots must be positive")
        seed = r.get(s, "seed", int, 0)
        if dist is not None:
            scenarios.append((name, ScenarioSpec(dist, arena, n_t, n_r, seed)))
    if not scenarios and not any(e for e in r.errors if "[scenario" in e):
        r.errors.append(f"{path}: at least one [scenario <name>] section is required")

    if r.errors:
        raise PlanError(r.errors)
    return ExperimentPlan(
        scenarios=scenarios,
        variants=variants,
        signal_model=model,
        queue_sizes=queue_sizes,
        repetitions=repetitions,
        base_seed=base_seed,
        output_dir=Path(output_dir),
        algorithm=algorithm,
        sim=sim,
        charts=charts,
    )


# -- running ---------------------------------------------------------------


@lru_cache(maxsize=32)
def _world(spec: ScenarioSpec):
    return generate(spec)


def execute_run(run: RunSpec, trace_dir: str | None = None) -> tuple[dict, dict]:
    """Run one grid cell; returns the CSV row and the full JSON record."""
    row = {
        "format_version": FORMAT_VERSION,
        "run_id": run.run_id,
        "scenario": run.scenario,
        "distribution": run.spec.distribution,
        "arena_size": repr(float(run.spec.arena_size)),
        "n_targets": run.spec.n_targets,
        "n_robots": run.spec.n_robots,
        "variant": run.variant,
        "model": run.model.name,
        "queue_size": run.alg.queue_size,
        "repetition": run.repetition,
        "seed": run.sim.seed,
        "config_digest": "",
        "completed": "",
        "completion_time": "",
        "deposited": "",
        "steps": "",
        "turns": "",
        "run_digest": "",
        "fault": "",
    }
    record = None
    try:
        world = _world(run.spec)
        if trace_dir is not None:
            Path(trace_dir).mkdir(parents=True, exist_ok=True)
            with open(Path(trace_dir) / f"run_{run.run_id:05d}.jsonl", "w", encoding="utf-8") as fh:
                record = run_to_completion(world, run.sim, run.alg, run.model, trace=fh)
        else:
            record = run_to_completion(world, run.sim, run.alg, run.model)
    except (EngineFault, ConfigError, ValueError) as exc:
        row["fault"] = str(exc).splitlines()[0]
        log.error("run %d failed: %s", run.run_id, exc)
        return row, {"run_id": run.run_id, "fault": row["fault"], "config": run.full_config()}
    row.update(
        config_digest=record.config_digest,
        completed=int(record.completed),
        completion_time=repr(record.completion_time) if record.completed else "",
        deposited=record.deposited,
        steps=record.steps,
        turns=record.turns,
        run_digest=record.trace_digest,
    )
    return row, {"run_id": run.run_id, "record": record.to_dict(), "config": run.full_config()}


def _execute(args):
    return execute_run(*args)


def run_grid(runs: list[RunSpec], jobs: int = 1, trace_dir: str | None = None) -> list[tuple[dict, dict]]:
    tasks = [(r, trace_dir) for r in runs]
    if jobs <= 1 or len(runs) <= 1:
        results = [_execute(t) for t in tasks]
    else:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            results = list(pool.map(_execute, tasks, chunksize=1))
    return sorted(results, key=lambda rr: rr[0]["run_id"])


def write_csv(path, columns, rows: Iterable[dict]):
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.DictWriter(fh, fieldnames=columns, lineterminator="\n")
        w.writeheader()
        for row in rows:
            w.writerow({c: row.get(c, "") for c in columns})


def read_csv(path) -> list[dict]:
    with open(path, newline="", encoding="utf-8") as fh:
        return list(csv.DictReader(fh))


def _fmt(x) -> str:
    if x is None or (isinstance(x, float) and math.isnan(x)):
        return ""
    return f"{x:.6g}" if isinstance(x, float) else str(x)


def summary_rows(rows: list[dict], max_sim_time: float) -> list[dict]:
    """One summary row per (scenario, variant, model, queue) cell.

    Timed-out runs are counted at ``max_sim_time``; faulted runs are dropped.
    """
    cells: dict[tuple, list[float]] = {}
    for row in rows:
        if row.get("fault"):
            continue
        key = (row["scenario"], row["variant"], row["model"], int(row["queue_size"]))
        completed = str(row["completed"]) == "1"
        t = float(row["completion_time"]) if completed else max_sim_time
        cells.setdefault(key, []).append(t)

    def baseline(scenario, model, queue):
        for k in ((scenario, BASELINE, model, queue),):
            if k in cells:
                return cells[k]
        for (s, v, _m, _q), samples in cells.items():
            if s == scenario and v == BASELINE:
                return samples
        return None

    out = []
    for key, samples in cells.items():
        scenario, variant, model, queue = key
        row = {"scenario": scenario, "variant": variant, "model": model, "queue": queue, "n": len(samples)}
        mean = sum(samples) / len(samples)
        row["mean"] = _fmt(mean)
        if len(samples) >= 2:
            s = summarize(samples)
            row.update(std=_fmt(s.std), ci_low=_fmt(s.ci95_low), ci_high=_fmt(s.ci95_high))
        base = baseline(scenario, model, queue)
        if base:
            base_mean = sum(base) / len(base)
            row["normalized_mean"] = _fmt(mean / base_mean)
            if len(samples) >= 2 and len(base) >= 2:
                row["p_vs_randomwalk"] = _fmt(welch_t_test(samples, base))
        out.append(row)
    return out


def env_default(name: str, default=None, conv=str):
    raw = os.environ.get(ENV_PREFIX + name)
    return default if raw is None or raw == "" else conv(raw)


def run_plan(plan: ExperimentPlan, jobs: int = 1, trace: bool = False) -> int:
    """Execute every run of ``plan`` and write the result files.

    Returns 0 if all runs succeeded and 1 if any faulted (results are still
    written).
    """
    out = Path(plan.output_dir)
    out.mkdir(parents=True, exist_ok=True)
    runs = plan.runs()
    log.info("running %d simulations with %d job(s)", len(runs), jobs)
    results = run_grid(runs, jobs=jobs, trace_dir=str(out / "traces") if trace else None)
    rows = [r for r, _ in results]
    write_csv(out / "runs.csv", RUN_COLUMNS, rows)
    configs = {}
    with open(out / "runs.jsonl", "w", encoding="utf-8") as fh:
        for row, full in results:
            fh.write(json.dumps(full, sort_keys=True) + "\n")
            if row["config_digest"]:
                configs[row["config_digest"]] = full["config"]
    (out / "configs.json").write_text(json.dumps(configs, sort_keys=True, indent=1), encoding="utf-8")
    summary = summary_rows(rows, plan.sim.max_sim_time)
    write_csv(out / "summary.csv", SUMMARY_COLUMNS, summary)
    if plan.charts and summary:
        from repatt.charts import bar_chart

        bar_chart(out / "summary.csv", out / "summary.svg")
    faults = sum(1 for r in rows if r["fault"])
    if faults:
        log.error("%d of %d runs faulted", faults, len(rows))
    return 1 if faults else 0


def parse_row_ref(ref: str) -> tuple[Path, int]:
    """``path/to/runs.csv#<run_id>`` -> (path, run_id)."""
    if "#" not in ref:
        raise ValueError(f"row reference must look like runs.csv#<run_id>, got {ref!r}")
    path, rid = ref.rsplit("#", 1)
    return Path(path), int(rid)


def replay(ref: str) -> tuple[bool, RunRecord, dict]:
    """Re-run the referenced CSV row and compare its digest with the stored one."""
    path, run_id = parse_row_ref(ref)
    rows = [r for r in read_csv(path) if int(r["run_id"]) == run_id]
    if not rows:
        raise ValueError(f"no run {run_id} in {path}")
    row = rows[0]
    configs = json.loads((path.parent / "configs.json").read_text(encoding="utf-8"))
    if row["config_digest"] not in configs:
        raise ValueError(f"config digest {row['config_digest']!r} not found next to {path}")
    spec = runspec_from_config(configs[row["config_digest"]], run_id=run_id, repetition=int(row["repetition"]))
    if spec.sim.seed != int(row["seed"]):
        spec = replace(spec, sim=replace(spec.sim, seed=int(row["seed"])))
    record = run_to_completion(_world(spec.spec), spec.sim, spec.alg, spec.model)
    ok = record.trace_digest == row["run_digest"] and record.config_digest == row["config_digest"]
    return ok, record, row
