"""Command-line entry point (``repatt``).

Flags fall back to ``REPATT_JOBS``, ``REPATT_OUTPUT``, ``REPATT_TRACE`` and
``REPATT_SEED`` when not given on the command line.
"""

from __future__ import annotations

import argparse
import logging
import sys
from pathlib import Path

from repatt.experiment import PlanError, env_default, replay, run_plan, validate_config


def _truthy(s: str) -> bool:
    return s.lower() in ("1", "true", "yes", "on")


def cmd_run(args) -> int:
    try:
        plan = validate_config(args.config)
    except PlanError as exc:
        print(exc, file=sys.stderr)
        return 2
    output = args.output or env_default("OUTPUT")
    if output:
        plan.output_dir = Path(output)
    seed = args.seed if args.seed is not None else env_default("SEED", None, int)
    if seed is not None:
        plan.base_seed = seed
    jobs = args.jobs or env_default("JOBS", 1, int)
    trace = args.trace or env_default("TRACE", False, _truthy)
    code = run_plan(plan, jobs=jobs, trace=trace)
    print(f"wrote {plan.output_dir}/runs.csv and {plan.output_dir}/summary.csv")
    return code


def cmd_validate(args) -> int:
    try:
        plan = validate_config(args.config)
    except PlanError as exc:
        print(exc, file=sys.stderr)
        return 2
    print(f"ok: {len(plan.runs())} runs")
    return 0


def cmd_replay(args) -> int:
    ok, record, row = replay(args.ref)
    status = "match" if ok else "MISMATCH"
    print(f"run {row['run_id']}: {status} (stored {row['run_digest'][:16]}, replayed {record.trace_digest[:16]})")
    return 0 if ok else 1


def cmd_bench_ideal(args) -> int:
    from repatt.engine import SimConfig
    from repatt.scenarios import load_targets, world_from_targets
    from repatt.stats import derive_idealized_inputs, idealized_time

    world = world_from_targets(load_targets(args.world), args.arena, args.robots)
    cfg = SimConfig(robot_speed=args.speed, processing_time=args.processing_time)
    inp = derive_idealized_inputs(world, cfg, capacity=args.capacity)
    print(f"D_TB={inp.mean_dist_to_nest:.6g} D_TN={inp.mean_neighbor_dist:.6g}")
    print(f"T_min={idealized_time(inp):.6g}")
    return 0


def cmd_gen_world(args) -> int:
    from repatt.scenarios import ScenarioSpec, generate, save_targets

    seed = args.seed if args.seed is not None else env_default("SEED", 0, int)
    world = generate(ScenarioSpec(args.spec, args.arena, args.targets, args.robots, seed))
    save_targets(args.out, world.target_xy)
    print(f"wrote {world.n_targets} targets to {args.out}")
    return 0


def cmd_chart(args) -> int:
    from repatt.charts import bar_chart

    bar_chart(args.summary, args.out)
    print(f"wrote {args.out}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="repatt", description="Swarm foraging experiments.")
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True)

    r = sub.add_parser("run", help="run an experiment plan")
    r.add_argument("config")
    r.add_argument("--jobs", type=int, default=None)
    r.add_argument("--output", default=None)
    r.add_argument("--trace", action="store_true", help="write a per-step JSONL trace per run")
    r.add_argument("--seed", type=int, default=None, help="override the plan's base seed")
    r.set_defaults(func=cmd_run)

    v = sub.add_parser("validate", help="check a plan file and report every error")
    v.add_argument("config")
    v.set_defaults(func=cmd_validate)

    rp = sub.add_parser("replay", help="re-run one row of runs.csv and verify its digest")
    rp.add_argument("ref", help="runs.csv#<run_id>")
    rp.set_defaults(func=cmd_replay)

    b = sub.add_parser("bench-ideal", help="idealized foraging time for a target file")
    b.add_argument("world")
    b.add_argument("--robots", type=int, default=36)
    b.add_argument("--speed", type=float, default=0.605)
    b.add_argument("--capacity", type=int, default=5)
    b.add_argument("--processing-time", type=float, default=5.0)
    b.add_argument("--arena", type=float, default=50.0)
    b.set_defaults(func=cmd_bench_ideal)

    g = sub.add_parser("gen-world", help="write a target layout as 'id x y' lines")
    g.add_argument("spec", help="distribution name, e.g. TwoClusters")
    g.add_argument("out")
    g.add_argument("--arena", type=float, default=50.0)
    g.add_argument("--targets", type=int, default=200)
    g.add_argument("--robots", type=int, default=36)
    g.add_argument("--seed", type=int, default=None)
    g.set_defaults(func=cmd_gen_world)

    c = sub.add_parser("chart", help="SVG bar chart from summary.csv")
    c.add_argument("summary")
    c.add_argument("out")
    c.set_defaults(func=cmd_chart)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
