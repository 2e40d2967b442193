"""
How far from ideal?
===================

The idealized time assumes perfect task allocation: every robot walks
straight to a group of targets, collects a full load and goes home. It is a
lower bound to compare measured times against.
"""

from repatt import IdealSignal, ScenarioSpec, SimConfig, generate, make_variant, run_to_completion
from repatt.stats import derive_idealized_inputs, idealized_time

cfg = SimConfig(seed=0)
for dist in ["OneCluster", "FourClusters", "Uniform"]:
    world = generate(ScenarioSpec(dist, 25.0, 60, 10, seed=0))
    inp = derive_idealized_inputs(world, cfg)
    t_min = idealized_time(inp)
    rec = run_to_completion(world, cfg, make_variant("RepAtt"), IdealSignal())
    measured = rec.completion_time if rec.completed else float("nan")
    print(
        f"{dist:13s} D_TB={inp.mean_dist_to_nest:5.2f} m  D_TN={inp.mean_neighbor_dist:4.2f} m  "
        f"T_min={t_min:6.1f} s  RepAtt={measured:6.1f} s  ratio={measured / t_min:4.1f}"
    )

# %%
# All targets still need their processing time, so with 60 targets and 10
# robots the bound can never drop below 60 * 5 / 10 = 30 s.
