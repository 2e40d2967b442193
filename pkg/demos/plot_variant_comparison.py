"""
Comparing the five controllers
==============================

Every variant runs on the same desk-scale world with the same seeds, so each
repetition is a paired comparison. Times are normalised by the random-walk
mean.
"""

import matplotlib

matplotlib.use("Agg")
from pathlib import Path

import matplotlib.pyplot as plt
import numpy as np

from repatt import VARIANT_NAMES, IdealSignal, ScenarioSpec, SimConfig, generate, make_variant, run_to_completion
from repatt.controller import global_detector
from repatt.stats import summarize, welch_t_test

out = Path(__file__).with_name("_output")
out.mkdir(exist_ok=True)
world = generate(ScenarioSpec("TwoClusters", 25.0, 60, 10, seed=0))
seeds = range(10)

times = {}
configs = {name: make_variant(name) for name in VARIANT_NAMES}
configs["GlobalDetector"] = global_detector(make_variant("RandomWalk"))
for name, alg in configs.items():
    recs = [run_to_completion(world, SimConfig(seed=s, max_sim_time=3600), alg, IdealSignal()) for s in seeds]
    times[name] = np.array([r.completion_time if r.completed else 3600.0 for r in recs])

# %%
# Summary
# -------

base = times["RandomWalk"].mean()
rows = []
for name, t in times.items():
    s = summarize(t).scaled(1 / base)
    p = welch_t_test(t, times["RandomWalk"])
    rows.append((name, s))
    print(f"{name:20s} mean {t.mean():7.1f} s  normalised {s.mean:.2f}  p={p:.3g}")

fig, ax = plt.subplots(figsize=(7, 3.5))
x = np.arange(len(rows))
ax.bar(x, [s.mean for _, s in rows], yerr=[[s.mean - s.ci95_low for _, s in rows], [s.ci95_high - s.mean for _, s in rows]], capsize=3)
ax.set_xticks(x)
ax.set_xticklabels([n for n, _ in rows], rotation=20)
ax.set_ylabel("time / random-walk time")
fig.tight_layout()
fig.savefig(out / "variant_comparison.png", dpi=120)
