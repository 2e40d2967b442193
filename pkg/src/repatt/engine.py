"""Fixed-step simulation engine.

World state is stored as parallel numpy arrays (one entry per robot or per
target) so the whole step can run inside a single compiled kernel. Each step
runs these phases in order:

1. broadcast sets from the previous step's visibility,
2. sensing and filter updates,
3. controller decisions (robots in id order),
4. motion,
5. collision resolution (walls, nest, other robots),
6. pickup / processing / deposit bookkeeping,
7. clock advance.

Randomness comes from one ``numpy.random.Generator`` per robot. Every robot
consumes a fixed number of draws per step regardless of what it does, so the
trace depends only on the seed and the configuration.
"""

from __future__ import annotations

import copy
import hashlib
import json
import math
from dataclasses import asdict, dataclass, field
from typing import IO, Optional

import numpy as np

from repatt._jit import njit
from repatt.controller import (
    ACT_AVOID,
    ACT_DEPOSIT,
    ACT_MOVE,
    ACT_PICKUP,
    ACT_TURN,
    ACTION_NAMES,
    AVOIDING,
    FSM_STATE_NAMES,
    HOMING,
    SEARCHING,
    AlgorithmConfig,
    broadcast_flags,
    control_robot,
    wrap_angle,
)
from repatt.geometry import (
    BEING_PROCESSED,
    CARRIED,
    CONTACT_DISTANCE,
    DEPOSITED,
    ON_GROUND,
    ROBOT_RADIUS,
    TARGET_STATUS_NAMES,
    Arena,
    Pose,
    Vec2,
    visible_targets,
)
from repatt.signals import SignalModel, sensed_total

DRAW_BLOCK = 1024
# per-robot, per-step random draws
U_TURN, N_TURN, U_SIGN, U_DIST, U_ANGLE, Z_REP, Z_ATT = range(7)
N_DRAWS = 7
_UNIFORM_COLS = [U_TURN, U_SIGN, U_DIST, U_ANGLE]
_NORMAL_COLS = [N_TURN, Z_REP, Z_ATT]


class EngineFault(RuntimeError):
    """A world invariant was violated; ``dump`` holds diagnostic state."""

    def __init__(self, message: str, dump: dict | None = None):
        super().__init__(message)
        self.dump = dump or {}


@dataclass(frozen=True)
class SimConfig:
    dt: float = 0.025
    robot_speed: float = 0.605
    processing_time: float = 5.0
    max_sim_time: float = 4 * 3600.0
    completion_fraction: float = 0.9
    seed: int = 0

    def __post_init__(self):
        if not self.dt > 0:
            raise ValueError("dt must be positive")
        if not 0 <= self.completion_fraction <= 1:
            raise ValueError("completion_fraction must lie in [0, 1]")
        if self.robot_speed < 0 or self.processing_time < 0 or self.max_sim_time < 0:
            raise ValueError("speed, processing time and max_sim_time must be non-negative")

    @property
    def processing_steps(self) -> int:
        return int(round(self.processing_time / self.dt))

    @property
    def samples_per_second(self) -> int:
        return max(1, int(round(1.0 / self.dt)))


def required_deposits(fraction: float, n_targets: int) -> int:
    # guard against 0.9 * 200 == 180.00000000000003
    return int(math.ceil(fraction * n_targets - 1e-9))


@dataclass(frozen=True)
class StepOutcome:
    deposited_count: int
    completed: bool
    time: float


@dataclass(frozen=True)
class Robot:
    """Read-only snapshot of one robot."""

    id: int
    pose: Pose
    fsm: str
    resume_state: str
    cargo: int
    processing_steps_left: int
    avoid_remaining: float
    broadcasting: frozenset
    visible_count: int


@dataclass(frozen=True)
class Target:
    id: int
    position: Vec2
    status: str
    owner: int
    remaining_seconds: float


@dataclass(frozen=True)
class ControlAction:
    kind: str
    value: float = 0.0
    visible_count: int = 0

    @property
    def target_id(self) -> int:
        return int(self.value)


class WorldState:
    """Arena, targets, robots and clock for one simulation."""

    def __init__(self, arena: Arena, target_xy, robot_xy, robot_heading=None):
        self.arena = arena
        txy = np.asarray(target_xy, dtype=float).reshape(-1, 2)
        rxy = np.asarray(robot_xy, dtype=float).reshape(-1, 2)
        n_t, n_r = txy.shape[0], rxy.shape[0]
        if n_r == 0:
            raise ValueError("at least one robot is required")
        if not (np.isfinite(txy).all() and np.isfinite(rxy).all()):
            raise ValueError("non-finite coordinates")
        for x, y in rxy:
            if not arena.contains((x, y), ROBOT_RADIUS - 1e-12):
                raise ValueError(f"robot at ({x}, {y}) is outside the arena")
        self.tx = txy[:, 0].copy()
        self.ty = txy[:, 1].copy()
        self.tstatus = np.full(n_t, ON_GROUND, dtype=np.int64)
        self.towner = np.full(n_t, -1, dtype=np.int64)
        self.tremain = np.zeros(n_t)

        heading = np.zeros(n_r) if robot_heading is None else np.asarray(robot_heading, dtype=float)
        self.rx = rxy[:, 0].copy()
        self.ry = rxy[:, 1].copy()
        self.rh = np.array([wrap_angle(h) for h in heading], dtype=float)
        self.rstate = np.full(n_r, SEARCHING, dtype=np.int64)
        self.rresume = np.full(n_r, SEARCHING, dtype=np.int64)
        self.rcargo = np.zeros(n_r, dtype=np.int64)
        self.rproc = np.zeros(n_r, dtype=np.int64)
        self.rtarget = np.full(n_r, -1, dtype=np.int64)
        self.ravoid = np.zeros(n_r)
        self.rsearch = np.zeros(n_r, dtype=np.int64)
        self.rvis = np.zeros(n_r, dtype=np.int64)
        self.rturns = np.zeros(n_r, dtype=np.int64)
        self.action = np.zeros(n_r, dtype=np.int64)
        # signal-kind-major so each kind's broadcaster mask is contiguous
        self.bcast = np.zeros((2, n_r), dtype=np.bool_)
        self.intensity = np.zeros((n_r, 2))
        self.q_sum = np.zeros((n_r, 2))
        self.q_n = np.zeros((n_r, 2), dtype=np.int64)
        self.prev_mean = np.zeros((n_r, 2))
        self.has_prev = np.zeros((n_r, 2), dtype=np.bool_)
        self.grad = np.zeros((n_r, 2))
        self.grad_ok = np.zeros((n_r, 2), dtype=np.bool_)

        self.step_index = 0
        self.time = 0.0
        self.deposited = 0
        self.rngs: Optional[list] = None
        self.draws = np.zeros((n_r, DRAW_BLOCK, N_DRAWS))
        self.draw_offset = DRAW_BLOCK

    @property
    def n_robots(self) -> int:
        return self.rx.shape[0]

    @property
    def n_targets(self) -> int:
        return self.tx.shape[0]

    @property
    def robot_xy(self) -> np.ndarray:
        return np.column_stack([self.rx, self.ry])

    @property
    def target_xy(self) -> np.ndarray:
        return np.column_stack([self.tx, self.ty])

    def copy(self) -> "WorldState":
        return copy.deepcopy(self)

    def seed_streams(self, seed: int):
        """Give every robot an independent random stream derived from ``seed``."""
        children = np.random.SeedSequence(int(seed)).spawn(self.n_robots)
        self.rngs = [np.random.Generator(np.random.PCG64(c)) for c in children]
        self.draw_offset = DRAW_BLOCK

    def _refill_draws(self):
        for i, rng in enumerate(self.rngs):
            self.draws[i][:, _UNIFORM_COLS] = rng.random((DRAW_BLOCK, len(_UNIFORM_COLS)))
            self.draws[i][:, _NORMAL_COLS] = rng.standard_normal((DRAW_BLOCK, len(_NORMAL_COLS)))
        self.draw_offset = 0

    def status_counts(self) -> dict:
        counts = np.bincount(self.tstatus, minlength=4)
        return {name: int(c) for name, c in zip(TARGET_STATUS_NAMES, counts)}

    def robot(self, i: int) -> Robot:
        from repatt.signals import SignalKind

        kinds = frozenset(k for k in SignalKind if self.bcast[int(k), i])
        return Robot(
            id=i,
            pose=Pose(Vec2(float(self.rx[i]), float(self.ry[i])), float(self.rh[i])),
            fsm=FSM_STATE_NAMES[self.rstate[i]],
            resume_state=FSM_STATE_NAMES[self.rresume[i]],
            cargo=int(self.rcargo[i]),
            processing_steps_left=int(self.rproc[i]),
            avoid_remaining=float(self.ravoid[i]),
            broadcasting=kinds,
            visible_count=int(self.rvis[i]),
        )

    @property
    def robots(self) -> list[Robot]:
        return [self.robot(i) for i in range(self.n_robots)]

    @property
    def targets(self) -> list[Target]:
        return [
            Target(
                id=t,
                position=Vec2(float(self.tx[t]), float(self.ty[t])),
                status=TARGET_STATUS_NAMES[self.tstatus[t]],
                owner=int(self.towner[t]),
                remaining_seconds=float(self.tremain[t]),
            )
            for t in range(self.n_targets)
        ]

    def visible_targets(self, robot: int, v_r: float) -> list[int]:
        return visible_targets((self.rx[robot], self.ry[robot]), self.target_xy, self.tstatus, v_r)

    def layout_digest(self) -> str:
        h = hashlib.sha256()
        for a in (self.tx, self.ty, self.rx, self.ry, self.rh):
            h.update(np.ascontiguousarray(a).tobytes())
        h.update(json.dumps(asdict(self.arena), sort_keys=True).encode())
        return h.hexdigest()

    def state_bytes(self) -> bytes:
        parts = (self.rx, self.ry, self.rh, self.rstate, self.rcargo, self.rproc, self.tstatus, self.towner)
        return b"".join(np.ascontiguousarray(a).tobytes() for a in parts)


@njit(cache=True)
def _advance(
    max_steps,
    n_required,
    dt,
    speed,
    proc_steps,
    half_w,
    half_h,
    nest_x,
    nest_y,
    nest_r,
    robot_r,
    contact,
    give_up_steps,
    repel,
    attract,
    repeller,
    p_b,
    g_r,
    g_a,
    gain_mode,
    c_m,
    v_r,
    turn_mean,
    turn_std,
    q_cap,
    model_kind,
    c_max,
    a0,
    alpha,
    a_e,
    noise_ratio,
    rx,
    ry,
    rh,
    rstate,
    rresume,
    rcargo,
    rproc,
    rtarget,
    ravoid,
    rsearch,
    rvis,
    rturns,
    action,
    bcast,
    intensity,
    q_sum,
    q_n,
    prev_mean,
    has_prev,
    grad,
    grad_ok,
    tx,
    ty,
    tstatus,
    towner,
    tremain,
    draws,
    offset,
    deposited,
):
    n = rx.shape[0]
    n_t = tx.shape[0]
    value = np.zeros(n)
    old_x = np.empty(n)
    old_y = np.empty(n)
    moving = np.zeros(n, dtype=np.bool_)
    responsive = np.zeros(n, dtype=np.bool_)
    hit = np.zeros(n, dtype=np.bool_)
    nx = np.zeros(n)
    ny = np.zeros(n)
    step_len = speed * dt
    two_r = 2.0 * robot_r
    wall_x = half_w - robot_r
    wall_y = half_h - robot_r

    steps = 0
    while steps < max_steps and deposited < n_required:
        k = offset + steps

        # 1. broadcast sets from last step's visibility
        for i in range(n):
            rep, att = broadcast_flags(rstate[i], rresume[i], rvis[i], repel, attract, repeller, c_m)
            bcast[0, i] = rep
            bcast[1, i] = att

        # 2. sensing and filtering
        for i in range(n):
            for kind in range(2):
                val = sensed_total(
                    i, rx, ry, bcast[kind], model_kind, c_max, a0, alpha, a_e, noise_ratio, draws[i, k, 5 + kind]
                )
                intensity[i, kind] = val
                q_sum[i, kind] += val
                q_n[i, kind] += 1
                if q_n[i, kind] >= q_cap:
                    mean = q_sum[i, kind] / q_cap
                    if has_prev[i, kind]:
                        grad[i, kind] = mean - prev_mean[i, kind]
                        grad_ok[i, kind] = True
                    prev_mean[i, kind] = mean
                    has_prev[i, kind] = True
                    q_sum[i, kind] = 0.0
                    q_n[i, kind] = 0

        # 3. controllers
        for i in range(n):
            a, v, cnt = control_robot(
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
                turn_mean,
                turn_std,
                nest_x,
                nest_y,
                nest_r,
                contact,
                draws[i, k, 0],
                draws[i, k, 1],
                draws[i, k, 2],
            )
            action[i] = a
            value[i] = v
            rvis[i] = cnt
            if a == ACT_TURN:
                rturns[i] += 1

        # 4. motion
        for i in range(n):
            old_x[i] = rx[i]
            old_y[i] = ry[i]
            a = action[i]
            moving[i] = a == ACT_MOVE or a == ACT_AVOID
            responsive[i] = moving[i] or a == ACT_TURN
            hit[i] = False
            nx[i] = 0.0
            ny[i] = 0.0
            if moving[i]:
                rx[i] += step_len * math.cos(rh[i])
                ry[i] += step_len * math.sin(rh[i])

        # 5. collisions
        for i in range(n):
            if not moving[i]:
                continue
            if rx[i] > wall_x:
                hit[i] = True
                nx[i] -= 1.0
            elif rx[i] < -wall_x:
                hit[i] = True
                nx[i] += 1.0
            if ry[i] > wall_y:
                hit[i] = True
                ny[i] -= 1.0
            elif ry[i] < -wall_y:
                hit[i] = True
                ny[i] += 1.0
            homing = rstate[i] == HOMING or (rstate[i] == AVOIDING and rresume[i] == HOMING)
            if not homing:
                d_new = math.hypot(rx[i] - nest_x, ry[i] - nest_y)
                d_old = math.hypot(old_x[i] - nest_x, old_y[i] - nest_y)
                if d_new < nest_r + robot_r and d_new < d_old:
                    hit[i] = True
                    if d_new > 0.0:
                        nx[i] += (rx[i] - nest_x) / d_new
                        ny[i] += (ry[i] - nest_y) / d_new
        for i in range(n):
            for j in range(i + 1, n):
                if not (moving[i] or moving[j]):
                    continue
                dx = rx[i] - rx[j]
                dy = ry[i] - ry[j]
                d_new = math.hypot(dx, dy)
                if d_new >= two_r:
                    continue
                d_old = math.hypot(old_x[i] - old_x[j], old_y[i] - old_y[j])
                if d_new >= d_old:
                    continue
                if d_new > 0.0:
                    ux = dx / d_new
                    uy = dy / d_new
                else:
                    ux = -math.cos(rh[i])
                    uy = -math.sin(rh[i])
                if responsive[i]:
                    hit[i] = True
                    nx[i] += ux
                    ny[i] += uy
                if responsive[j]:
                    hit[j] = True
                    nx[j] -= ux
                    ny[j] -= uy
        for i in range(n):
            if hit[i]:
                rx[i] = old_x[i]
                ry[i] = old_y[i]
                if rstate[i] != AVOIDING:
                    rresume[i] = rstate[i]
                    rstate[i] = AVOIDING
                ravoid[i] = draws[i, k, 3]
                if nx[i] == 0.0 and ny[i] == 0.0:
                    base = rh[i] + math.pi
                else:
                    base = math.atan2(ny[i], nx[i])
                rh[i] = wrap_angle(base + (draws[i, k, 4] - 0.5) * math.pi)
            elif action[i] == ACT_AVOID:
                ravoid[i] -= step_len

        # 6. processing countdown, pickups, deposits
        for i in range(n):
            if rproc[i] > 0:
                t = rtarget[i]
                rproc[i] -= 1
                tremain[t] = rproc[i] * dt
                if rproc[i] == 0:
                    tstatus[t] = CARRIED
                    rtarget[i] = -1
                    rcargo[i] += 1
                    if rcargo[i] >= c_m:
                        rstate[i] = HOMING
        for i in range(n):
            if action[i] != ACT_PICKUP:
                continue
            t = int(value[i])
            if tstatus[t] != ON_GROUND:
                continue  # claimed by a lower-id robot this step
            towner[t] = i
            if proc_steps > 0:
                tstatus[t] = BEING_PROCESSED
                tremain[t] = proc_steps * dt
                rproc[i] = proc_steps
                rtarget[i] = t
            else:
                tstatus[t] = CARRIED
                rcargo[i] += 1
                if rcargo[i] >= c_m:
                    rstate[i] = HOMING
        for i in range(n):
            if action[i] != ACT_DEPOSIT:
                continue
            for t in range(n_t):
                if towner[t] == i and tstatus[t] == CARRIED:
                    tstatus[t] = DEPOSITED
                    deposited += 1
            rcargo[i] = 0
            rstate[i] = SEARCHING
            for kind in range(2):
                has_prev[i, kind] = False
                grad_ok[i, kind] = False
            rh[i] = wrap_angle(rh[i] + math.pi)

        # 7. clock
        steps += 1
    return steps, deposited


def give_up_steps(alg: AlgorithmConfig, dt: float) -> int:
    if math.isinf(alg.give_up_time):
        return -1
    return int(math.ceil(alg.give_up_time / dt - 1e-9))


def _kernel_args(world: WorldState, cfg: SimConfig, alg: AlgorithmConfig, model: SignalModel):
    a = world.arena
    kind, c_max, a0, alpha, a_e, noise_ratio = model.kernel_params()
    return (
        float(cfg.dt),
        float(cfg.robot_speed),
        int(cfg.processing_steps),
        float(a.half_width),
        float(a.half_height),
        float(a.nest_center.x),
        float(a.nest_center.y),
        float(a.nest_radius),
        ROBOT_RADIUS,
        CONTACT_DISTANCE,
        give_up_steps(alg, cfg.dt),
        bool(alg.repel),
        bool(alg.attract),
        bool(alg.repeller),
        float(alg.p_b),
        float(alg.g_r),
        float(alg.g_a),
        int(alg.gain_mode),
        int(alg.c_m),
        float(alg.v_r),
        float(alg.turn_mean_deg),
        float(alg.turn_std_deg),
        int(alg.queue_size),
        int(kind),
        float(c_max),
        float(a0),
        float(alpha),
        float(a_e),
        float(noise_ratio),
        world.rx,
        world.ry,
        world.rh,
        world.rstate,
        world.rresume,
        world.rcargo,
        world.rproc,
        world.rtarget,
        world.ravoid,
        world.rsearch,
        world.rvis,
        world.rturns,
        world.action,
        world.bcast,
        world.intensity,
        world.q_sum,
        world.q_n,
        world.prev_mean,
        world.has_prev,
        world.grad,
        world.grad_ok,
        world.tx,
        world.ty,
        world.tstatus,
        world.towner,
        world.tremain,
    )


def advance(
    world: WorldState,
    n_steps: int,
    cfg: SimConfig,
    alg: AlgorithmConfig,
    model: SignalModel,
    stop_at: int | None = None,
) -> int:
    """Run up to ``n_steps`` steps in place; stops early once ``stop_at`` targets are deposited.

    Returns the number of steps executed. Invariants are not checked here.
    """
    if world.rngs is None:
        world.seed_streams(cfg.seed)
    params = _kernel_args(world, cfg, alg, model)
    limit = np.iinfo(np.int64).max if stop_at is None else int(stop_at)
    done = 0
    while done < n_steps:
        if world.draw_offset >= DRAW_BLOCK:
            world._refill_draws()
        chunk = min(n_steps - done, DRAW_BLOCK - world.draw_offset)
        steps, deposited = _advance(chunk, limit, *params, world.draws, world.draw_offset, world.deposited)
        world.draw_offset += steps
        world.deposited = int(deposited)
        world.step_index += steps
        world.time = world.step_index * cfg.dt
        done += steps
        if steps < chunk:
            break
    return done


def check_invariants(world: WorldState, alg: AlgorithmConfig, previous_deposited: int | None = None):
    """Raise :class:`EngineFault` if any world invariant is broken."""
    problems = []
    a = world.arena
    margin = ROBOT_RADIUS - 1e-9
    if not (np.isfinite(world.rx).all() and np.isfinite(world.ry).all() and np.isfinite(world.rh).all()):
        problems.append("non-finite robot pose")
    outside = (np.abs(world.rx) > a.half_width - margin) | (np.abs(world.ry) > a.half_height - margin)
    if outside.any():
        problems.append(f"robots outside arena: {np.flatnonzero(outside).tolist()}")
    if ((world.rh < 0) | (world.rh >= 2 * math.pi)).any():
        problems.append("heading not normalised")
    if ((world.rcargo < 0) | (world.rcargo > alg.c_m)).any():
        problems.append("cargo out of range")
    if ((world.tstatus < ON_GROUND) | (world.tstatus > DEPOSITED)).any():
        problems.append("unknown target status")
    carried = np.bincount(world.towner[world.tstatus == CARRIED], minlength=world.n_robots)
    if (carried != world.rcargo).any():
        problems.append("carried targets do not match robot cargo")
    for t in np.flatnonzero(world.tstatus == BEING_PROCESSED):
        owner = world.towner[t]
        if owner < 0 or world.rtarget[owner] != t or world.rproc[owner] <= 0:
            problems.append(f"target {t} processed without an owner")
    claimed = world.rtarget[world.rtarget >= 0]
    if np.unique(claimed).size != claimed.size:
        problems.append("target referenced by more than one robot")
    n_dep = int((world.tstatus == DEPOSITED).sum())
    if n_dep != world.deposited:
        problems.append("deposit counter out of sync")
    if previous_deposited is not None and n_dep < previous_deposited:
        problems.append("deposited count decreased")
    if problems:
        raise EngineFault(
            "; ".join(problems),
            dump={
                "step_index": world.step_index,
                "robots": [asdict(r) for r in world.robots],
                "status_counts": world.status_counts(),
            },
        )


def step(world: WorldState, cfg: SimConfig, alg: AlgorithmConfig, model: SignalModel) -> StepOutcome:
    """Advance ``world`` in place by exactly one step."""
    before = world.deposited
    advance(world, 1, cfg, alg, model)
    check_invariants(world, alg, before)
    required = required_deposits(cfg.completion_fraction, world.n_targets)
    return StepOutcome(world.deposited, world.deposited >= required, world.time)


def step_controller(
    world: WorldState,
    robot: int,
    alg: AlgorithmConfig,
    u_turn: float = 1.0,
    n_turn: float = 0.0,
    u_sign: float = 0.0,
    dt: float = 0.025,
) -> ControlAction:
    """Controller decision for one robot against the current world, without mutating it.

    ``u_turn``, ``n_turn`` and ``u_sign`` are the uniform turn trigger, the
    standard normal for the turn magnitude and the uniform for its sign.
    """
    w = world.copy()
    a, v, cnt = control_robot(
        robot,
        w.rx,
        w.ry,
        w.rh,
        w.rstate,
        w.rcargo,
        w.rproc,
        w.ravoid,
        w.rsearch,
        w.grad,
        w.grad_ok,
        w.has_prev,
        w.tx,
        w.ty,
        w.tstatus,
        give_up_steps(alg, dt),
        alg.repel,
        alg.attract,
        alg.p_b,
        alg.g_r,
        alg.g_a,
        alg.gain_mode,
        alg.c_m,
        alg.v_r,
        alg.turn_mean_deg,
        alg.turn_std_deg,
        world.arena.nest_center.x,
        world.arena.nest_center.y,
        world.arena.nest_radius,
        CONTACT_DISTANCE,
        u_turn,
        n_turn,
        u_sign,
    )
    return ControlAction(ACTION_NAMES[a], float(v), int(cnt))


def config_digest(world: WorldState, cfg: SimConfig, alg: AlgorithmConfig, model: SignalModel) -> str:
    payload = {
        "world": world.layout_digest(),
        "sim": asdict(cfg),
        "alg": alg.to_dict(),
        "model": {"name": model.name, **asdict(model)},
    }
    blob = json.dumps(payload, sort_keys=True, default=repr).encode()
    return hashlib.sha256(blob).hexdigest()[:16]


@dataclass
class RunRecord:
    seed: int
    config_digest: str
    completed: bool
    completion_time: Optional[float]
    deposited: int
    n_targets: int
    steps: int
    deposits_per_second: list = field(default_factory=list)
    trace_digest: str = ""
    turns: int = 0

    @property
    def time_or_timeout(self) -> float:
        return self.completion_time if self.completed else float("nan")

    def to_dict(self) -> dict:
        return asdict(self)


def _trace_line(world: WorldState) -> str:
    robots = [
        [round(float(world.rx[i]), 6), round(float(world.ry[i]), 6), round(float(world.rh[i]), 6), FSM_STATE_NAMES[world.rstate[i]]]
        for i in range(world.n_robots)
    ]
    return json.dumps({"t": round(world.time, 6), "step": world.step_index, "deposited": world.deposited, "robots": robots})


def run_to_completion(
    initial: WorldState,
    cfg: SimConfig,
    alg: AlgorithmConfig,
    model: SignalModel,
    trace: IO[str] | None = None,
    check_every: int | None = None,
) -> RunRecord:
    """Simulate until the completion fraction is deposited or ``max_sim_time`` passes.

    ``check_every`` is the invariant-check period in steps (default: once per
    simulated second). With ``trace`` set, one JSON line per step is written.
    """
    world = initial.copy()
    world.seed_streams(cfg.seed)
    digest = config_digest(initial, cfg, alg, model)
    required = required_deposits(cfg.completion_fraction, world.n_targets)
    per_sample = cfg.samples_per_second
    max_steps = int(math.ceil(cfg.max_sim_time / cfg.dt - 1e-9))
    period = check_every or per_sample
    hasher = hashlib.sha256(digest.encode())
    curve = [world.deposited]
    last_checked = world.deposited
    if trace is not None:
        trace.write(_trace_line(world) + "\n")

    while world.deposited < required and world.step_index < max_steps:
        chunk = min(period - world.step_index % period, per_sample - world.step_index % per_sample)
        chunk = min(chunk, max_steps - world.step_index)
        if trace is not None:
            chunk = 1
        advance(world, chunk, cfg, alg, model, stop_at=required)
        if trace is not None:
            trace.write(_trace_line(world) + "\n")
        if world.step_index % period == 0 or world.deposited >= required or trace is not None:
            check_invariants(world, alg, last_checked)
            last_checked = world.deposited
        if world.step_index % per_sample == 0:
            curve.append(world.deposited)
            hasher.update(world.state_bytes())

    check_invariants(world, alg, last_checked)
    hasher.update(world.state_bytes())
    completed = world.deposited >= required
    return RunRecord(
        seed=int(cfg.seed),
        config_digest=digest,
        completed=completed,
        completion_time=world.time if completed else None,
        deposited=world.deposited,
        n_targets=world.n_targets,
        steps=world.step_index,
        deposits_per_second=curve,
        trace_digest=hasher.hexdigest(),
        turns=int(world.rturns.sum()),
    )
