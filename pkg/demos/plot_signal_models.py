"""
Signal intensity models
=======================

Two ways a robot can hear its neighbours: a linear ideal falloff with a hard
cutoff, and an exponential sound model with an ambient floor and
multiplicative noise.
"""

import matplotlib

matplotlib.use("Agg")
from pathlib import Path

import matplotlib.pyplot as plt
import numpy as np

from repatt.signals import IdealSignal, SoundSignal, pairwise_intensity_ideal, pairwise_intensity_sound, total_intensity

out = Path(__file__).with_name("_output")
out.mkdir(exist_ok=True)

# %%
# Single source
# -------------
# The ideal model drops linearly to zero at ``c_max``. The sound model never
# reaches zero; far away it settles at the ambient level.

d = np.linspace(0, 40, 400)
ideal = IdealSignal(15.0)
sound = SoundSignal(noise_ratio=0.0)
fig, (ax1, ax2) = plt.subplots(1, 2, figsize=(9, 3.5))
ax1.plot(d, [pairwise_intensity_ideal(ideal, x) for x in d])
ax1.set(xlabel="distance [m]", ylabel="intensity", title="ideal")
ax2.plot(d, [pairwise_intensity_sound(sound, x) for x in d], label="noise off")

rng = np.random.default_rng(0)
noisy = SoundSignal()
ax2.plot(d, [pairwise_intensity_sound(noisy, x, rng) for x in d], ".", ms=2, alpha=0.5, label="one noisy draw")
ax2.axhline(sound.a_e, color="k", lw=0.5)
ax2.set(xlabel="distance [m]", title="sound")
ax2.legend()
fig.tight_layout()
fig.savefig(out / "signal_models.png", dpi=120)

# %%
# Superposition
# -------------
# A receiver hears the sum over all broadcasting robots. Here a field of
# intensity is sampled on a grid with three sources.

sources = np.array([[-5.0, 0.0], [4.0, 3.0], [2.0, -6.0]])
xs = np.linspace(-15, 15, 121)
field = np.zeros((xs.size, xs.size))
for a, y in enumerate(xs):
    for b, x in enumerate(xs):
        pos = np.vstack([[x, y], sources])
        mask = np.array([False, True, True, True])
        field[a, b] = total_intensity(pos, mask, 0, ideal)

fig, ax = plt.subplots(figsize=(4.5, 4))
im = ax.imshow(field, origin="lower", extent=[xs[0], xs[-1], xs[0], xs[-1]])
ax.plot(*sources.T, "w^")
fig.colorbar(im, ax=ax, label="summed intensity")
fig.savefig(out / "signal_superposition.png", dpi=120)
print("figures written to", out)
