"""Entangled-pair timing experiments with a preferred-frame FTL interaction.

A source at rest at the lab origin emits two photons at t' = 0. Photon 1
heads for a detector on the negative axis, photon 2 for one on the positive
axis; either arm may carry a detour that adds path length. The detection
that comes first in S triggers the FTL interaction, and the pair counts as
correlated when the front reaches the partner photon no later than its
detection.
"""

from __future__ import annotations

import csv
import enum
import io
import itertools
import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, replace
from functools import cached_property
from typing import Iterable, Sequence, Union

from .ftl import (
    FtlSignal,
    FtlSpeed,
    LabNarrative,
    arrival_event,
    front_reaches,
    induced_lab_narrative,
    lab_slowness,
)
from .kinematics import (
    DERIVED_TOL,
    Boost,
    Event,
    Frame,
    IntervalClass,
    IntervalKind,
    Velocity,
    boost_event,
    compose_velocity_to_preferred,
    interval,
)
from .worldline import Segment, Worldline

__all__ = [
    "Collinear", "Transverse", "Detoured", "ExperimentConfig", "Outcome",
    "FirstDetected", "OrderClass", "TransverseResult", "SweepRow", "SweepTable",
    "Worldline", "run_experiment", "run_collinear", "run_transverse",
    "equidistant_l1", "run_equidistant_test", "correlation_predicate",
    "detour_sweep", "detour_extra_length", "detour_height",
]


@dataclass(frozen=True)
class Collinear:
    """Detectors on the lab x-axis at -l1 and +l2."""

    l1: float
    l2: float

    def __post_init__(self):
        _check_lengths(self.l1, self.l2)


@dataclass(frozen=True)
class Transverse:
    """Detectors on the lab y-axis at -l1 and +l2."""

    l1: float
    l2: float

    def __post_init__(self):
        _check_lengths(self.l1, self.l2)


@dataclass(frozen=True)
class Detoured:
    """Collinear geometry with extra path length on either arm.

    Each detour is an isosceles bump (towards +y) spanning its whole arm,
    so only ``left_extra``/``right_extra`` matter for timing.
    """

    base: Collinear
    left_extra: float = 0.0
    right_extra: float = 0.0

    def __post_init__(self):
        for name in ("left_extra", "right_extra"):
            val = getattr(self, name)
            if not (math.isfinite(val) and val >= 0.0):
                raise ValueError(f"{name} must be finite and >= 0, got {val!r}")


Geometry = Union[Collinear, Transverse, Detoured]


def _check_lengths(l1, l2):
    for name, val in (("l1", l1), ("l2", l2)):
        if not (math.isfinite(val) and val > 0.0):
            raise ValueError(f"{name} must be finite and > 0, got {val!r}")


@dataclass(frozen=True)
class ExperimentConfig:
    """Geometry lengths are lab-frame quantities."""

    v: Velocity
    ftl: FtlSpeed
    geometry: Geometry

    def __post_init__(self):
        if self.v.speed() >= 1.0:
            raise ValueError(f"|v| = {self.v.speed()!r} must be < 1")

    @property
    def boost(self) -> Boost:
        return Boost(self.v)


def detour_extra_length(height: float, base: float) -> float:
    """Added path length of an isosceles bump of ``height`` over ``base``."""
    return 2.0 * math.hypot(base / 2.0, height) - base


def detour_height(extra: float, base: float) -> float:
    """Inverse of :func:`detour_extra_length`."""
    half = (base + extra) / 2.0
    return math.sqrt(max(0.0, half * half - (base / 2.0) ** 2))


def _arm(axis: tuple[float, float, float], length: float, extra: float) -> Worldline:
    origin = Event(0.0, frame=Frame.LAB)
    if extra == 0.0:
        return Worldline.straight(origin, axis, length)
    half = (length + extra) / 2.0
    h = detour_height(extra, length)
    up = (0.0, 1.0, 0.0)
    a = (length / 2.0) / half
    b = h / half
    d1 = (a * axis[0] + b * up[0], a * axis[1] + b * up[1], a * axis[2] + b * up[2])
    d2 = (a * axis[0] - b * up[0], a * axis[1] - b * up[1], a * axis[2] - b * up[2])
    return Worldline(origin, (Segment(d1, half), Segment(d2, half)))


def photon_worldlines(geometry: Geometry) -> tuple[Worldline, Worldline]:
    """Lab-frame worldlines of photon 1 and photon 2."""
    if isinstance(geometry, Collinear):
        return (Worldline.straight(Event(0.0, frame=Frame.LAB), (-1.0, 0.0, 0.0), geometry.l1),
                Worldline.straight(Event(0.0, frame=Frame.LAB), (1.0, 0.0, 0.0), geometry.l2))
    if isinstance(geometry, Transverse):
        return (Worldline.straight(Event(0.0, frame=Frame.LAB), (0.0, -1.0, 0.0), geometry.l1),
                Worldline.straight(Event(0.0, frame=Frame.LAB), (0.0, 1.0, 0.0), geometry.l2))
    if isinstance(geometry, Detoured):
        g = geometry.base
        return (_arm((-1.0, 0.0, 0.0), g.l1, geometry.left_extra),
                _arm((1.0, 0.0, 0.0), g.l2, geometry.right_extra))
    raise TypeError(f"unknown geometry {geometry!r}")


class FirstDetected(enum.Enum):
    NU1 = "nu1"
    NU2 = "nu2"
    SIMULTANEOUS = "simultaneous"


class OrderClass(enum.Enum):
    NU1_FIRST_ALL_FRAMES = "Nu1FirstAllFrames"
    NU2_FIRST_ALL_FRAMES = "Nu2FirstAllFrames"
    FRAME_DEPENDENT = "FrameDependent"


def _same_time(a: float, b: float, tol: float = DERIVED_TOL) -> bool:
    return abs(a - b) <= tol * max(1.0, abs(a), abs(b))


@dataclass(frozen=True)
class Outcome:
    """Event record of one run. Detection events are kept in both frames."""

    config: ExperimentConfig
    photons: tuple[Worldline, Worldline]          # lab frame
    photons_s: tuple[Worldline, Worldline]        # preferred frame
    detections: tuple[Event, Event]               # preferred frame
    detections_lab: tuple[Event, Event]
    first_in_s: FirstDetected
    ftl_trigger: Event
    ftl_arrival: Event | None
    correlated: bool
    pair_interval: IntervalClass
    order_class: OrderClass

    @property
    def detection1(self) -> Event:
        return self.detections[0]

    @property
    def detection2(self) -> Event:
        return self.detections[1]

    @property
    def trigger_index(self) -> int:
        return 1 if self.first_in_s is FirstDetected.NU2 else 0

    @property
    def partner_detection(self) -> Event:
        return self.detections[1 - self.trigger_index]

    @property
    def signal(self) -> FtlSignal:
        return FtlSignal(self.ftl_trigger, self.config.ftl)

    @property
    def ftl_arrival_lab(self) -> Event | None:
        if self.ftl_arrival is None:
            return None
        return boost_event(self.ftl_arrival, self.config.boost)

    @cached_property
    def lab_reach(self) -> tuple[bool, bool]:
        """(front from detection 1 covers detection 2, and the reverse), in lab terms."""
        b = self.config.boost
        d1, d2 = self.detections_lab
        return (front_reaches(d1, d2, self.config.ftl, b),
                front_reaches(d2, d1, self.config.ftl, b))

    @property
    def lab_correlated(self) -> bool:
        """Correlation flag worked out from lab coordinates only."""
        return any(self.lab_reach)

    def narrative(self) -> LabNarrative | None:
        if self.ftl_arrival is None:
            return None
        return induced_lab_narrative(self.signal, self.config.boost,
                                     self.photons_s[1 - self.trigger_index])

    @property
    def boundary(self) -> bool:
        """Arrival coincides with the partner's detection."""
        return (self.ftl_arrival is not None
                and _same_time(self.ftl_arrival.t, self.partner_detection.t))


def _arrived_in_time(arrival: Event | None, partner: Event, tol: float = DERIVED_TOL) -> bool:
    if arrival is None:
        return False
    return arrival.t <= partner.t + tol * max(1.0, abs(partner.t))


def correlation_predicate(o: Outcome, tol: float = DERIVED_TOL) -> bool:
    """True iff the front arrived no later than the partner's detection (in S)."""
    return _arrived_in_time(o.ftl_arrival, o.partner_detection, tol)


def _order_class(lab1: Event, lab2: Event, iv: IntervalClass) -> OrderClass:
    if iv.kind is IntervalKind.SPACELIKE:
        return OrderClass.FRAME_DEPENDENT
    return OrderClass.NU1_FIRST_ALL_FRAMES if lab1.t < lab2.t else OrderClass.NU2_FIRST_ALL_FRAMES


def run_experiment(cfg: ExperimentConfig) -> Outcome:
    b = cfg.boost
    photons = photon_worldlines(cfg.geometry)
    photons_s = tuple(w.in_frame(Frame.PREFERRED, b) for w in photons)
    det_lab = (photons[0].detection, photons[1].detection)
    det_s = (photons_s[0].detection, photons_s[1].detection)

    if _same_time(det_s[0].t, det_s[1].t):
        first = FirstDetected.SIMULTANEOUS
    elif det_s[0].t < det_s[1].t:
        first = FirstDetected.NU1
    else:
        first = FirstDetected.NU2
    i = 1 if first is FirstDetected.NU2 else 0
    trigger = det_s[i]
    arrival = arrival_event(FtlSignal(trigger, cfg.ftl), photons_s[1 - i])

    iv = interval(det_lab[0], det_lab[1])
    return Outcome(
        config=cfg,
        photons=photons,
        photons_s=photons_s,
        detections=det_s,
        detections_lab=det_lab,
        first_in_s=first,
        ftl_trigger=trigger,
        ftl_arrival=arrival,
        correlated=_arrived_in_time(arrival, det_s[1 - i]),
        pair_interval=iv,
        order_class=_order_class(det_lab[0], det_lab[1], iv),
    )


def run_collinear(cfg: ExperimentConfig) -> Outcome:
    if not isinstance(cfg.geometry, (Collinear, Detoured)):
        raise ValueError("run_collinear needs a Collinear or Detoured geometry")
    return run_experiment(cfg)


def equidistant_l1(l2: float, v: float) -> float:
    """Lab distance for detector 1 that puts both detectors equidistant in S.

    ``v`` is the lab speed along +x (photon 2's direction).
    """
    if not (0.0 <= v < 1.0):
        raise ValueError(f"need 0 <= v < 1, got {v!r}")
    if not l2 > 0.0:
        raise ValueError(f"need l2 > 0, got {l2!r}")
    return (1.0 + v) / (1.0 - v) * l2


def run_equidistant_test(l2: float, v: float, ftl: FtlSpeed) -> Outcome:
    cfg = ExperimentConfig(Velocity.along_x(v), ftl, Collinear(equidistant_l1(l2, v), l2))
    return run_experiment(cfg)


@dataclass(frozen=True)
class TransverseResult:
    outcome: Outcome
    uy_prime: float
    ubar_x: float
    ubar_y: float
    ubar: float


def run_transverse(cfg: ExperimentConfig, uy_prime: float | None = None) -> TransverseResult:
    """Run the transverse set-up and map the lab transverse FTL speed to S.

    With ``uy_prime`` omitted it is taken from ``cfg.ftl`` (the lab speed of
    the front along +y).
    """
    if not isinstance(cfg.geometry, Transverse):
        raise ValueError("run_transverse needs a Transverse geometry")
    b = cfg.boost
    if uy_prime is None:
        k = lab_slowness(cfg.ftl, b, (0.0, 1.0, 0.0))
        if k <= 0.0:
            raise ValueError("the front has no finite forward lab speed along +y; pass uy_prime")
        uy_prime = 1.0 / k
    else:
        u = compose_velocity_to_preferred(Velocity(0.0, uy_prime, 0.0), b)
        cfg = replace(cfg, ftl=FtlSpeed(u.speed()))
    u = compose_velocity_to_preferred(Velocity(0.0, uy_prime, 0.0), b)
    return TransverseResult(run_experiment(cfg), uy_prime, u.vx, u.vy, u.speed())


# -- detour sweep ------------------------------------------------------------

SWEEP_COLUMNS = ("delta_left", "delta_right", "order_class", "correlated", "s2", "t1_S", "t2_S", "tF_S")


def fmt(x: float) -> str:
    """Locale-free 15 significant digit rendering used by every output file."""
    return format(float(x), ".15g")


@dataclass(frozen=True)
class SweepRow:
    delta_left: float
    delta_right: float
    order_class: OrderClass
    correlated: bool
    s2: float
    t1_s: float
    t2_s: float
    tf_s: float   # nan when the front never arrives

    def as_strings(self) -> list[str]:
        return [fmt(self.delta_left), fmt(self.delta_right), self.order_class.value,
                "true" if self.correlated else "false", fmt(self.s2),
                fmt(self.t1_s), fmt(self.t2_s), fmt(self.tf_s)]


@dataclass(frozen=True)
class SweepTable:
    left_grid: tuple[float, ...]
    right_grid: tuple[float, ...]
    rows: tuple[SweepRow, ...]       # left-major: rows[i * len(right_grid) + j]

    def cell(self, i: int, j: int) -> SweepRow:
        return self.rows[i * len(self.right_grid) + j]

    def transitions(self) -> list[tuple[float, float, float, OrderClass, OrderClass]]:
        """Order-class changes along delta_left at each fixed delta_right.

        Each entry is (delta_right, left_before, left_after, class_before,
        class_after).
        """
        out = []
        for j, r in enumerate(self.right_grid):
            for i in range(len(self.left_grid) - 1):
                a, c = self.cell(i, j), self.cell(i + 1, j)
                if a.order_class is not c.order_class:
                    out.append((r, a.delta_left, c.delta_left, a.order_class, c.order_class))
        return out

    def to_csv(self, fh=None) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(SWEEP_COLUMNS)
        for row in self.rows:
            w.writerow(row.as_strings())
        text = buf.getvalue()
        if fh is not None:
            fh.write(text)
        return text


def _check_grid(name: str, grid: Sequence[float]) -> tuple[float, ...]:
    g = tuple(float(x) for x in grid)
    if not g:
        raise ValueError(f"{name} is empty")
    bad = [x for x in g if not (math.isfinite(x) and x >= 0.0)]
    if bad:
        raise ValueError(f"{name} has negative or non-finite entries: {bad}")
    return g


def _sweep_cell(base: ExperimentConfig, g: Collinear, dl: float, dr: float) -> SweepRow:
    o = run_experiment(ExperimentConfig(base.v, base.ftl, Detoured(g, dl, dr)))
    tf = o.ftl_arrival.t if o.ftl_arrival is not None else math.nan
    return SweepRow(dl, dr, o.order_class, o.correlated, o.pair_interval.s2,
                    o.detection1.t, o.detection2.t, tf)


def detour_sweep(base: ExperimentConfig, left_grid: Iterable[float], right_grid: Iterable[float],
                 workers: int | None = None) -> SweepTable:
    """Run every (left, right) detour combination over a Collinear/Detoured base.

    Cells are independent and may run on ``workers`` threads (default from
    ``TACHY_THREADS``, else 1); row order is always left-major grid order.
    """
    lg = _check_grid("left_grid", list(left_grid))
    rg = _check_grid("right_grid", list(right_grid))
    geom = base.geometry
    if isinstance(geom, Detoured):
        geom = geom.base
    if not isinstance(geom, Collinear):
        raise ValueError("detour_sweep needs a Collinear or Detoured base geometry")
    if workers is None:
        workers = int(os.environ.get("TACHY_THREADS", "1") or 1)
    cells = list(itertools.product(lg, rg))

    def run(cell):
        return _sweep_cell(base, geom, *cell)

    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            rows = tuple(pool.map(run, cells))
    else:
        rows = tuple(map(run, cells))
    return SweepTable(lg, rg, rows)
