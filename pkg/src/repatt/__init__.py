"""Gradient-based swarm foraging simulator (repulsion/attraction signalling)."""

from repatt.controller import (
    GLOBAL_DETECTOR,
    VARIANT_NAMES,
    AlgorithmConfig,
    Variant,
    config_for,
    decide_broadcast,
    global_detector,
    make_variant,
    turn_probability,
)
from repatt.engine import RunRecord, SimConfig, StepOutcome, WorldState, run_to_completion, step, step_controller
from repatt.geometry import Arena, Pose, Vec2, distance, in_nest, visible_targets
from repatt.scenarios import ScenarioSpec, generate
from repatt.signals import FilterQueue, GradientSample, IdealSignal, SignalKind, SoundSignal, total_intensity
from repatt.stats import idealized_time, summarize, welch_t_test

__version__ = "0.1.0"

__all__ = [name for name in dir() if not name.startswith("_")]
