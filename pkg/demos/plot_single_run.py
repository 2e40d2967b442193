"""
A single foraging run
=====================

Ten robots collect 60 clustered targets in a 25 m arena. The per-step trace
stream is used to draw robot paths.
"""

import matplotlib

matplotlib.use("Agg")
import io
import json
from pathlib import Path

import matplotlib.pyplot as plt
import numpy as np

from repatt import IdealSignal, ScenarioSpec, SimConfig, generate, make_variant, run_to_completion

out = Path(__file__).with_name("_output")
out.mkdir(exist_ok=True)

world = generate(ScenarioSpec("OneCluster", 25.0, 60, 10, seed=0))
buf = io.StringIO()
record = run_to_completion(world, SimConfig(seed=3), make_variant("RepAtt"), IdealSignal(), trace=buf)
print(f"completed={record.completed} time={record.completion_time:.1f} s deposited={record.deposited}")

# %%
# Paths
# -----

frames = [json.loads(line) for line in buf.getvalue().splitlines()]
paths = np.array([[r[:2] for r in f["robots"]] for f in frames])

fig, (ax1, ax2) = plt.subplots(1, 2, figsize=(10, 4.5))
for i in range(paths.shape[1]):
    ax1.plot(paths[:, i, 0], paths[:, i, 1], lw=0.5)
ax1.plot(*world.target_xy.T, "k.", ms=3)
ax1.add_patch(plt.Circle((0, 0), world.arena.nest_radius, fill=False))
ax1.set_aspect("equal")
ax1.set_title("robot paths")

# %%
# Deposits over time
# ------------------

ax2.step(np.arange(len(record.deposits_per_second)), record.deposits_per_second, where="post")
ax2.axhline(54, ls="--", color="k", lw=0.5)
ax2.set(xlabel="time [s]", ylabel="targets deposited")
fig.tight_layout()
fig.savefig(out / "single_run.png", dpi=120)
