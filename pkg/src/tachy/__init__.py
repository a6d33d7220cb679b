"""Relativistic kinematics of a preferred-frame faster-than-light signal."""

from .kinematics import (
    Boost,
    Divergent,
    Event,
    Frame,
    FrameMismatch,
    IntervalClass,
    IntervalKind,
    Velocity,
    boost_event,
    compose_velocity_to_lab,
    compose_velocity_to_preferred,
    interval,
    inverse_boost_event,
    to_frame,
)
from .worldline import Segment, Worldline
from .ftl import (
    INSTANTANEOUS,
    FtlSignal,
    FtlSpeed,
    LabNarrative,
    NarrativeKind,
    arrival_event,
    front_reaches,
    induced_lab_narrative,
    lab_slowness,
    lab_speed,
)
from .experiment import (
    Collinear,
    Detoured,
    ExperimentConfig,
    FirstDetected,
    OrderClass,
    Outcome,
    SweepTable,
    Transverse,
    detour_sweep,
    equidistant_l1,
    run_collinear,
    run_equidistant_test,
    run_experiment,
    run_transverse,
)
from .solver import (
    DirectionalMeasurement,
    InsufficientData,
    NoConvergence,
    OutOfRange,
    RecoveryResult,
    forward_measurements,
    recover_frame,
    solve_v_from_transverse,
)

__version__ = "0.1.0"
