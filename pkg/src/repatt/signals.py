"""Communication signal models, superposition and gradient filtering.

Two intensity laws are provided:

* :class:`IdealSignal` - linear fall-off to zero at the communication range.
* :class:`SoundSignal` - exponential attenuation over an ambient floor, with
  multiplicative Gaussian measurement noise.

Robots estimate the temporal gradient of each signal kind through a
:class:`FilterQueue`, which averages non-overlapping windows of ``Q`` samples
and reports the change between consecutive window means.
"""

from __future__ import annotations

import enum
import math
from collections import deque
from dataclasses import dataclass
from typing import NamedTuple, Union

import numpy as np

from repatt._jit import njit

MODEL_IDEAL = 0
MODEL_SOUND = 1

# Fitted constants of the sound attenuation law.
SOUND_A0 = 140.5193
SOUND_ALPHA = 0.1193
SOUND_AMBIENT = 48.1824
SOUND_NOISE_RATIO = 0.06


class SignalKind(enum.IntEnum):
    REPULSION = 0
    ATTRACTION = 1


@dataclass(frozen=True)
class IdealSignal:
    c_max: float = 15.0

    def __post_init__(self):
        if not self.c_max > 0:
            raise ValueError("c_max must be positive")

    name = "ideal"

    def kernel_params(self):
        return MODEL_IDEAL, self.c_max, 0.0, 0.0, 0.0, 0.0


@dataclass(frozen=True)
class SoundSignal:
    a0: float = SOUND_A0
    alpha: float = SOUND_ALPHA
    a_e: float = SOUND_AMBIENT
    noise_ratio: float = SOUND_NOISE_RATIO

    def __post_init__(self):
        if not (self.a0 > 0 and self.alpha > 0):
            raise ValueError("a0 and alpha must be positive")
        if self.a_e < 0:
            raise ValueError("a_e must be non-negative")
        if not 0 <= self.noise_ratio < 1:
            raise ValueError("noise_ratio must lie in [0, 1)")

    name = "sound"

    def kernel_params(self):
        return MODEL_SOUND, 0.0, self.a0, self.alpha, self.a_e, self.noise_ratio


SignalModel = Union[IdealSignal, SoundSignal]


@njit(cache=True)
def ideal_intensity(d, c_max):
    if d <= c_max:
        return (c_max - d) / c_max
    return 0.0


@njit(cache=True)
def sound_source_term(d, a0, alpha):
    return a0 * math.exp(-alpha * d)


@njit(cache=True)
def noise_multiplier(z, noise_ratio):
    """``1 - noise_ratio * z`` clamped to ``[0, 2]`` for a standard normal ``z``."""
    m = 1.0 - noise_ratio * z
    if m < 0.0:
        return 0.0
    if m > 2.0:
        return 2.0
    return m


@njit(cache=True)
def sensed_total(i, xs, ys, sources, model_kind, c_max, a0, alpha, a_e, noise_ratio, z):
    """Summed intensity at robot ``i`` from every other robot flagged in ``sources``.

    For the sound model the ambient floor is added once and the noise
    multiplier (driven by the standard normal draw ``z``) scales the total.
    """
    total = 0.0
    for j in range(xs.shape[0]):
        if j == i or not sources[j]:
            continue
        d = math.hypot(xs[j] - xs[i], ys[j] - ys[i])
        if model_kind == MODEL_IDEAL:
            total += ideal_intensity(d, c_max)
        else:
            total += sound_source_term(d, a0, alpha)
    if model_kind == MODEL_SOUND:
        total += a_e
        if noise_ratio > 0.0:
            total *= noise_multiplier(z, noise_ratio)
    return total


def pairwise_intensity_ideal(model: IdealSignal, d: float) -> float:
    if d < 0:
        raise ValueError("distance must be non-negative")
    return float(ideal_intensity(float(d), model.c_max))


def pairwise_intensity_sound(model: SoundSignal, d: float, rng: np.random.Generator | None = None) -> float:
    """Single-source sound intensity at distance ``d``.

    Noise is applied only when ``model.noise_ratio > 0``; ``rng`` is then
    required.
    """
    if d < 0:
        raise ValueError("distance must be non-negative")
    pure = model.a0 * math.exp(-model.alpha * d) + model.a_e
    if model.noise_ratio == 0:
        return pure
    if rng is None:
        raise ValueError("a random generator is required when noise is enabled")
    return pure * float(noise_multiplier(rng.standard_normal(), model.noise_ratio))


def total_intensity(
    positions: np.ndarray,
    broadcasting: np.ndarray,
    receiver: int,
    model: SignalModel,
    rng: np.random.Generator | None = None,
) -> float:
    """Intensity of one signal kind sensed by ``receiver``.

    ``positions`` is ``(n, 2)``; ``broadcasting`` flags the robots currently
    emitting that kind. The receiver never hears itself.
    """
    positions = np.ascontiguousarray(positions, dtype=float).reshape(-1, 2)
    sources = np.ascontiguousarray(broadcasting, dtype=np.bool_)
    kind, c_max, a0, alpha, a_e, noise_ratio = model.kernel_params()
    z = 0.0
    if kind == MODEL_SOUND and noise_ratio > 0:
        if rng is None:
            raise ValueError("a random generator is required when noise is enabled")
        z = float(rng.standard_normal())
    return float(
        sensed_total(
            receiver,
            np.ascontiguousarray(positions[:, 0]),
            np.ascontiguousarray(positions[:, 1]),
            sources,
            kind,
            c_max,
            a0,
            alpha,
            a_e,
            noise_ratio,
            z,
        )
    )


class GradientSample(NamedTuple):
    delta: float
    valid: bool


class FilterQueue:
    """Averaging filter over non-overlapping windows of ``capacity`` samples.

    Each time the window fills, its mean is compared with the previous
    window's mean and the window is cleared. With ``capacity == 1`` this is a
    plain difference of consecutive samples.
    """

    def __init__(self, capacity: int = 1):
        if capacity < 1:
            raise ValueError("capacity must be a positive integer")
        self.capacity = int(capacity)
        self.samples: deque[float] = deque(maxlen=self.capacity)
        self.previous_mean: float | None = None

    def __len__(self):
        return len(self.samples)

    def push(self, sample: float) -> GradientSample:
        self.samples.append(float(sample))
        if len(self.samples) < self.capacity:
            return GradientSample(0.0, False)
        total = 0.0
        for s in self.samples:
            total += s
        mean = total / self.capacity
        self.samples.clear()
        previous, self.previous_mean = self.previous_mean, mean
        if previous is None:
            return GradientSample(0.0, False)
        return GradientSample(mean - previous, True)

    def reset_history(self):
        """Forget the previous window mean (keeps any partial window)."""
        self.previous_mean = None


def push_and_gradient(queue: FilterQueue, sample: float) -> GradientSample:
    return queue.push(sample)


def gradient_sign_accuracy(
    model: SoundSignal,
    queue_size: int,
    n_gradients: int,
    rng: np.random.Generator,
    *,
    start_distance: float = 15.0,
    stop_distance: float = 1.0,
    speed: float = 0.605,
    dt: float = 0.025,
) -> float:
    """Fraction of filtered gradients with the correct (positive) sign.

    A receiver repeatedly drives straight at a single noisy source from
    ``start_distance`` to ``stop_distance``; the filter restarts with each
    approach so no window straddles a reset.
    """
    step = speed * dt
    approach = np.arange(start_distance, stop_distance, -step)
    correct = 0
    emitted = 0
    while emitted < n_gradients:
        queue = FilterQueue(queue_size)
        z = rng.standard_normal(approach.size)
        pure = model.a0 * np.exp(-model.alpha * approach) + model.a_e
        noisy = pure * np.clip(1.0 - model.noise_ratio * z, 0.0, 2.0)
        for value in noisy:
            g = queue.push(value)
            if g.valid:
                emitted += 1
                correct += g.delta > 0
                if emitted == n_gradients:
                    break
    return correct / n_gradients
