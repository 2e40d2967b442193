"""
Averaging noisy gradients
=========================

With 6 % multiplicative noise, consecutive sound samples differ mostly by
noise. Averaging ``Q`` samples per window before differencing recovers the
sign of the gradient.
"""

import matplotlib

matplotlib.use("Agg")
from pathlib import Path

import matplotlib.pyplot as plt
import numpy as np

from repatt.signals import FilterQueue, SoundSignal, gradient_sign_accuracy

out = Path(__file__).with_name("_output")
out.mkdir(exist_ok=True)
model = SoundSignal()

# %%
# One approach
# ------------
# A receiver drives at 0.605 m/s toward a source 15 m away, sampling at 40 Hz.

rng = np.random.default_rng(1)
d = np.arange(15.0, 1.0, -0.605 * 0.025)
pure = model.a0 * np.exp(-model.alpha * d) + model.a_e
noisy = pure * np.clip(1 - model.noise_ratio * rng.standard_normal(d.size), 0, 2)

fig, ax = plt.subplots(figsize=(6, 3))
ax.plot(d, noisy, ".", ms=2, label="samples")
ax.plot(d, pure, label="noise-free")
ax.invert_xaxis()
ax.set(xlabel="distance to source [m]", ylabel="intensity")
ax.legend()
fig.tight_layout()
fig.savefig(out / "filter_approach.png", dpi=120)

q = FilterQueue(40)
deltas = [g.delta for g in map(q.push, noisy) if g.valid]
print(f"Q=40 on this approach: {sum(x > 0 for x in deltas)}/{len(deltas)} positive gradients")

# %%
# Accuracy against queue size
# ---------------------------

queues = [1, 2, 5, 10, 20, 40, 80]
acc = [gradient_sign_accuracy(model, qs, 5000, rng) for qs in queues]
for qs, a in zip(queues, acc):
    print(f"Q={qs:3d}  correct sign {a:.3f}")

fig, ax = plt.subplots(figsize=(5, 3))
ax.semilogx(queues, acc, "o-")
ax.set(xlabel="queue size Q", ylabel="fraction correct sign")
fig.tight_layout()
fig.savefig(out / "filter_accuracy.png", dpi=120)
