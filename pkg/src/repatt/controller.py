"""Per-robot foraging controller.

The four behaviours (searching, acquiring, homing, obstacle avoidance) and
the turn-probability modulation are written as numba-compiled functions over
plain scalars and arrays so the stepping kernel can call them directly.
Python-friendly wrappers sit alongside.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, replace
from typing import Mapping

from repatt._jit import njit
from repatt.geometry import ON_GROUND
from repatt.signals import GradientSample, SignalKind

SEARCHING = 0
ACQUIRING = 1
HOMING = 2
AVOIDING = 3

FSM_STATE_NAMES = ("Searching", "Acquiring", "Homing", "ObstacleAvoidance")

ACT_WAIT = 0
ACT_MOVE = 1
ACT_TURN = 2
ACT_PICKUP = 3
ACT_DEPOSIT = 4
ACT_AVOID = 5

ACTION_NAMES = ("wait", "move_forward", "turn", "pickup", "deposit", "avoid_maneuver")

GAINS_REPLACE = 0
GAINS_COMPOSE = 1
_GAIN_MODES = {"replace": GAINS_REPLACE, "compose": GAINS_COMPOSE}


class Variant(str, enum.Enum):
    RANDOM_WALK = "RandomWalk"
    REPELLER = "Repeller"
    SELECTIVE_REPULSION = "SelectiveRepulsion"
    SELECTIVE_ATTRACTION = "SelectiveAttraction"
    REP_ATT = "RepAtt"


VARIANT_NAMES = tuple(v.value for v in Variant)
GLOBAL_DETECTOR = "GlobalDetector"

# (repel, attract, repeller)
_VARIANT_FLAGS = {
    Variant.RANDOM_WALK: (False, False, False),
    Variant.REPELLER: (True, False, True),
    Variant.SELECTIVE_REPULSION: (True, False, False),
    Variant.SELECTIVE_ATTRACTION: (False, True, False),
    Variant.REP_ATT: (True, True, False),
}


@dataclass(frozen=True)
class AlgorithmConfig:
    """Variant flags plus the controller parameters.

    ``combine_gains`` selects how the repulsion and attraction factors
    interact when both gradients are informative: ``"replace"`` evaluates the
    attraction rule against the base probability and overrides the repulsion
    result, ``"compose"`` multiplies both factors together.

    ``give_up_time`` is how long (seconds) a robot holding a partial load keeps
    searching before it heads home anyway; without it a swarm can strand the
    last targets in half-full robots.
    """

    repel: bool = False
    attract: bool = False
    repeller: bool = False
    p_b: float = 0.0025
    g_r: float = 10.0
    g_a: float = 10.0
    c_m: int = 5
    v_r: float = 3.0
    turn_mean_deg: float = 180.0
    turn_std_deg: float = 90.0
    queue_size: int = 1
    combine_gains: str = "replace"
    give_up_time: float = 60.0

    def __post_init__(self):
        errors = []
        if not 0 < self.p_b <= 1:
            errors.append("p_b must lie in (0, 1]")
        if self.g_r < 1 or self.g_a < 1:
            errors.append("gains must be >= 1")
        if self.c_m < 1:
            errors.append("c_m must be >= 1")
        if not self.v_r > 0:
            errors.append("v_r must be positive (or inf)")
        if self.turn_std_deg < 0:
            errors.append("turn_std_deg must be non-negative")
        if self.queue_size < 1:
            errors.append("queue_size must be >= 1")
        if self.repeller and not self.repel:
            errors.append("repeller requires repel")
        if not self.give_up_time > 0:
            errors.append("give_up_time must be positive (or inf)")
        if self.combine_gains not in _GAIN_MODES:
            errors.append(f"combine_gains must be one of {sorted(_GAIN_MODES)}")
        if errors:
            raise ValueError("; ".join(errors))

    @property
    def gain_mode(self) -> int:
        return _GAIN_MODES[self.combine_gains]

    def to_dict(self) -> dict:
        return dict(self.__dict__)


def make_variant(name: str | Variant, **overrides) -> AlgorithmConfig:
    """Default parameters with the flags of a named variant."""
    variant = Variant(name)
    repel, attract, repeller = _VARIANT_FLAGS[variant]
    return AlgorithmConfig(repel=repel, attract=attract, repeller=repeller, **overrides)


def global_detector(base: AlgorithmConfig | None = None) -> AlgorithmConfig:
    """Benchmark configuration: unlimited target detection range."""
    return replace(base or AlgorithmConfig(), v_r=math.inf)


def config_for(name: str, **overrides) -> AlgorithmConfig:
    """Resolve a variant name or the ``GlobalDetector`` benchmark."""
    if name == GLOBAL_DETECTOR:
        return global_detector(make_variant(Variant.RANDOM_WALK, **overrides))
    return make_variant(name, **overrides)


@njit(cache=True)
def broadcast_flags(state, resume_state, visible_count, repel, attract, repeller, c_m):
    homing = state == HOMING or (state == AVOIDING and resume_state == HOMING)
    if homing:
        return False, False
    rep = repel and (visible_count == 0 or repeller)
    att = attract and visible_count > c_m
    return rep, att


def decide_broadcast(
    state: int,
    visible_count: int,
    cfg: AlgorithmConfig,
    resume_state: int = SEARCHING,
) -> frozenset:
    if visible_count < 0:
        raise ValueError("visible_count must be non-negative")
    rep, att = broadcast_flags(state, resume_state, visible_count, cfg.repel, cfg.attract, cfg.repeller, cfg.c_m)
    out = set()
    if rep:
        out.add(SignalKind.REPULSION)
    if att:
        out.add(SignalKind.ATTRACTION)
    return frozenset(out)


@njit(cache=True)
def turn_probability_raw(p_b, d_rep, ok_rep, d_att, ok_att, repel, attract, g_r, g_a, gain_mode):
    p = p_b
    if repel and ok_rep:
        if d_rep < 0.0:
            p = p_b / g_r
        elif d_rep > 0.0:
            p = p_b * g_r
    if attract and ok_att:
        base = p if gain_mode == GAINS_COMPOSE else p_b
        if d_att < 0.0:
            p = base * g_a
        elif d_att > 0.0:
            p = base / g_a
    if p < 0.0:
        return 0.0
    if p > 1.0:
        return 1.0
    return p


def turn_probability(
    p_b: float,
    gradients: Mapping[SignalKind, GradientSample],
    cfg: AlgorithmConfig,
) -> float:
    rep = gradients.get(SignalKind.REPULSION, GradientSample(0.0, False))
    att = gradients.get(SignalKind.ATTRACTION, GradientSample(0.0, False))
    return float(
        turn_probability_raw(
            p_b, rep.delta, rep.valid, att.delta, att.valid, cfg.repel, cfg.attract, cfg.g_r, cfg.g_a, cfg.gain_mode
        )
    )


@njit(cache=True)
def wrap_angle(theta):
    two_pi = 2.0 * math.pi
    w = theta - two_pi * math.floor(theta / two_pi)
    if w >= two_pi or w < 0.0:
        w = 0.0
    return w


@njit(cache=True)
def draw_turn_angle(turn_mean_deg, turn_std_deg, n_turn, u_sign):
    """Signed turn in radians: magnitude ~ N(mean, std) clamped to [0, 360] deg."""
    deg = turn_mean_deg + turn_std_deg * n_turn
    if deg < 0.0:
        deg = 0.0
    elif deg > 360.0:
        deg = 360.0
    sign = 1.0 if u_sign < 0.5 else -1.0
    return sign * math.radians(deg)


@njit(cache=True)
def nearest_visible(x, y, tx, ty, tstatus, v_r):
    """Count of on-ground targets within ``v_r`` and the nearest one (id, distance)."""
    count = 0
    best = -1
    best_d = math.inf
    for t in range(tx.shape[0]):
        if tstatus[t] != ON_GROUND:
            continue
        d = math.hypot(tx[t] - x, ty[t] - y)
        if d <= v_r:
            count += 1
            if d < best_d:
                best_d = d
                best = t
    return count, best, best_d


@njit(cache=True)
def _reset_gradients(i, has_prev, grad_ok):
    for k in range(has_prev.shape[1]):
        has_prev[i, k] = False
        grad_ok[i, k] = False


@njit(cache=True)
def control_robot(
    i,
    rx,
    ry,
    rh,
    rstate,
    rcargo,
    rproc,
    ravoid,
    rsearch,
    grad,
    grad_ok,
    has_prev,
    tx,
    ty,
    tstatus,
    give_up_steps,
    repel,
    attract,
    p_b,
    g_r,
    g_a,
    gain_mode,
    c_m,
    v_r,
    turn_mean_deg,
    turn_std_deg,
    nest_x,
    nest_y,
    nest_r,
    contact,
    u_turn,
    n_turn,
    u_sign,
):
    """Decide one robot's action for this step.

    Mutates the robot's FSM state, heading and give-up counter in place.
    ``give_up_steps < 0`` disables the partial-load return. Returns
    ``(action, value, visible_count)`` where ``value`` is the target id for a
    pickup, the signed angle for a turn, and 0 otherwise.
    """
    x = rx[i]
    y = ry[i]
    count, nearest, d_near = nearest_visible(x, y, tx, ty, tstatus, v_r)
    if rproc[i] > 0:
        return ACT_WAIT, 0.0, count

    st = rstate[i]
    if st == AVOIDING:
        if ravoid[i] > 0.0:
            return ACT_AVOID, 0.0, count
        if rcargo[i] >= c_m:
            st = HOMING
        elif count > 0:
            st = ACQUIRING
        else:
            st = SEARCHING
            _reset_gradients(i, has_prev, grad_ok)
        rstate[i] = st

    if st == HOMING:
        if math.hypot(x - nest_x, y - nest_y) <= nest_r:
            return ACT_DEPOSIT, 0.0, count
        rh[i] = wrap_angle(math.atan2(nest_y - y, nest_x - x))
        return ACT_MOVE, 0.0, count

    if st == SEARCHING and count > 0 and rcargo[i] < c_m:
        st = ACQUIRING
    elif st == ACQUIRING and count == 0:
        st = SEARCHING
        _reset_gradients(i, has_prev, grad_ok)
    if st == ACQUIRING:
        rsearch[i] = 0
    elif rcargo[i] > 0:
        rsearch[i] += 1
        if give_up_steps >= 0 and rsearch[i] >= give_up_steps:
            rsearch[i] = 0
            rstate[i] = HOMING
            rh[i] = wrap_angle(math.atan2(nest_y - y, nest_x - x))
            return ACT_MOVE, 0.0, count
    rstate[i] = st

    if st == ACQUIRING:
        if d_near <= contact:
            return ACT_PICKUP, float(nearest), count
        rh[i] = wrap_angle(math.atan2(ty[nearest] - y, tx[nearest] - x))
        return ACT_MOVE, 0.0, count

    p_t = turn_probability_raw(
        p_b, grad[i, 0], grad_ok[i, 0], grad[i, 1], grad_ok[i, 1], repel, attract, g_r, g_a, gain_mode
    )
    if u_turn < p_t:
        angle = draw_turn_angle(turn_mean_deg, turn_std_deg, n_turn, u_sign)
        rh[i] = wrap_angle(rh[i] + angle)
        return ACT_TURN, angle, count
    return ACT_MOVE, 0.0, count
