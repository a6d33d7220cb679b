"""The superluminal interaction between the photons of an entangled pair.

In S the interaction front expands isotropically at a fixed speed ``ubar``
(or is instantaneous) from the event that triggers it. In the lab the same
front is anisotropic; the helpers here express it there.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass

from scipy.optimize import brentq

from .kinematics import (
    ALGEBRA_TOL,
    DERIVED_TOL,
    Boost,
    Divergent,
    Event,
    Frame,
    Velocity,
    boost_event,
    compose_velocity_to_lab,
)
from .worldline import Worldline

TWO_PI = 2.0 * math.pi


@dataclass(frozen=True)
class FtlSpeed:
    """Preferred-frame speed of the interaction.

    ``ubar is None`` is the instantaneous limit. It is kept symbolic rather
    than as a large float so that the limiting formulas stay exact.
    """

    ubar: float | None

    def __post_init__(self):
        if self.ubar is not None:
            u = float(self.ubar)
            if not (math.isfinite(u) and u > 1.0):
                raise ValueError(f"finite FTL speed must satisfy 1 < ubar < inf, got {self.ubar!r}")
            object.__setattr__(self, "ubar", u)

    @classmethod
    def finite(cls, ubar: float) -> FtlSpeed:
        return cls(ubar)

    @classmethod
    def instantaneous(cls) -> FtlSpeed:
        return cls(None)

    @classmethod
    def parse(cls, text: str | float) -> FtlSpeed:
        if isinstance(text, str) and text.strip().lower() in ("inf", "infinity", "instantaneous"):
            return cls(None)
        return cls(float(text))

    @property
    def is_instantaneous(self) -> bool:
        return self.ubar is None

    def __str__(self) -> str:
        return "inf" if self.ubar is None else format(self.ubar, ".15g")


INSTANTANEOUS = FtlSpeed(None)


@dataclass(frozen=True)
class FtlSignal:
    origin: Event
    speed: FtlSpeed

    def __post_init__(self):
        if self.origin.frame is not Frame.PREFERRED:
            raise ValueError("FTL signals are defined in the preferred frame")


@dataclass(frozen=True)
class DirectionalSpeed:
    """Signal speed along a direction at ``theta`` from the frame velocity."""

    theta: float
    speed: float
    frame: Frame
    velocity: Velocity | None = None


def _unit(v: tuple[float, float, float]) -> tuple[float, float, float]:
    m = max(abs(v[0]), abs(v[1]), abs(v[2]))
    if m == 0.0:
        raise ValueError("zero vector has no direction")
    x, y, z = v[0] / m, v[1] / m, v[2] / m
    n = math.sqrt(x * x + y * y + z * z)
    return (x / n, y / n, z / n)


def plane_basis(v: Velocity) -> tuple[Velocity, Velocity]:
    """Unit vectors (along v, perpendicular to v) spanning the angle plane.

    The perpendicular is z x v-hat, i.e. the xy-plane rotation by +90 deg,
    so for in-plane velocities angles are counter-clockwise from v.
    """
    s = v.speed()
    vhat = (1.0, 0.0, 0.0) if s == 0.0 else _unit(v.as_tuple())
    if vhat[0] == 0.0 and vhat[1] == 0.0:
        perp = (1.0, 0.0, 0.0)
    else:
        perp = _unit((-vhat[1], vhat[0], 0.0))
    return Velocity(*vhat), Velocity(*perp)


def _instantaneous_lab_velocity(n: Velocity, b: Boost) -> Velocity:
    # limit of the composed velocity as |u| -> inf along the unit vector n:
    # u' -> -(n_par + n_perp / gamma) / (n . v)
    nv = n.dot(b.v)
    if abs(nv) <= ALGEBRA_TOL:
        raise Divergent("instantaneous signal transverse to v stays instantaneous in the lab")
    v2 = b.v.dot(b.v)
    par = b.v.scaled(nv / v2)
    perp = n - par
    return (par + perp.scaled(1.0 / b.gamma)).scaled(-1.0 / nv)


def lab_speed(speed: FtlSpeed, b: Boost, theta: float) -> DirectionalSpeed:
    """Lab-frame velocity of a signal launched at angle ``theta`` (in S) from v.

    The returned ``theta`` is the lab-frame angle between the propagation
    direction and v, in [0, 2 pi). Raises :class:`Divergent` when the signal
    is instantaneous in the lab.
    """
    vhat, perp = plane_basis(b.v)
    n = vhat.scaled(math.cos(theta)) + perp.scaled(math.sin(theta))
    if speed.is_instantaneous:
        if b.speed == 0.0:
            raise Divergent("instantaneous in S and v = 0")
        u_lab = _instantaneous_lab_velocity(n, b)
    else:
        u_lab = compose_velocity_to_lab(n.scaled(speed.ubar), b)
    theta_lab = math.atan2(u_lab.dot(perp), u_lab.dot(vhat)) % TWO_PI
    return DirectionalSpeed(theta_lab, u_lab.speed(), Frame.LAB, u_lab)


def lab_slowness(speed: FtlSpeed, b: Boost, direction: tuple[float, float, float]) -> float:
    """Lab time per unit lab distance for the front to reach the ray ``direction``.

    The front leaves a trigger event and expands in S. Every point of the
    lab ray from the trigger along ``direction`` is crossed exactly once by
    the forward S front; the lab time of that crossing scales linearly with
    distance. The slope is returned. It is negative when the crossing lies
    in the lab past of the trigger (the lab then sees a signal running
    inward along the ray) and 0 when the crossing is lab-simultaneous.
    """
    e = _unit(direction)
    s = b.speed
    if s == 0.0:
        return 0.0 if speed.is_instantaneous else 1.0 / speed.ubar
    ev = e[0] * b.v.vx + e[1] * b.v.vy + e[2] * b.v.vz
    if speed.is_instantaneous:
        # the front is the S-simultaneity slice through the trigger
        return -ev

    vhat, _ = plane_basis(b.v)
    c = (e[0] * vhat.vx + e[1] * vhat.vy + e[2] * vhat.vz)
    c = max(-1.0, min(1.0, c))
    phi = math.atan2(math.sqrt(max(0.0, 1.0 - c * c)), c)
    eperp = (e[0] - c * vhat.vx, e[1] - c * vhat.vy, e[2] - c * vhat.vz)
    if math.hypot(*eperp) > ALGEBRA_TOL:
        eperp = Velocity(*_unit(eperp))
    else:
        eperp = plane_basis(b.v)[1]

    # The lab displacement of the S-front point launched at S-angle theta is
    # parallel to (ubar cos theta - |v|, ubar sin theta / gamma), whose polar
    # angle rises monotonically from 0 to pi over theta in [0, pi].
    ubar, g = speed.ubar, b.gamma

    def mismatch(theta):
        return math.atan2(ubar * math.sin(theta) / g, ubar * math.cos(theta) - s) - phi

    if phi <= 0.0:
        theta = 0.0
    elif phi >= math.pi:
        theta = math.pi
    else:
        theta = brentq(mismatch, 0.0, math.pi, xtol=1e-15, rtol=4 * 2.0**-52)
    u = vhat.scaled(ubar * math.cos(theta)) + eperp.scaled(ubar * math.sin(theta))
    try:
        u_lab = compose_velocity_to_lab(u, b)
    except Divergent:
        return 0.0
    return 1.0 / (u_lab.vx * e[0] + u_lab.vy * e[1] + u_lab.vz * e[2])


def front_reaches(origin: Event, target: Event, speed: FtlSpeed, b: Boost | None = None,
                  tol: float = DERIVED_TOL) -> bool:
    """Whether ``target`` lies inside (or on) the front launched at ``origin``.

    Works in either frame. In S the front is the cone |dr| <= ubar dt; in the
    lab it is evaluated through :func:`lab_slowness`, so no coordinates are
    transformed. Boundary contact counts as inside.
    """
    dt, dx, dy, dz = origin.displacement_to(target)
    dist = math.sqrt(dx * dx + dy * dy + dz * dz)
    scale = max(abs(dt), dist, 1.0)
    if origin.frame is Frame.PREFERRED:
        if speed.is_instantaneous:
            return dt >= -tol * scale
        return dt >= -tol * scale and dist <= speed.ubar * dt + tol * scale * speed.ubar
    if b is None:
        raise ValueError("a boost is required to evaluate the front in the lab frame")
    if dist == 0.0:
        return dt >= -tol * scale
    k = lab_slowness(speed, b, (dx, dy, dz))
    return dt >= k * dist - tol * scale


def arrival_event(signal: FtlSignal, target: Worldline, tol: float = DERIVED_TOL) -> Event | None:
    """First event at which the front from ``signal`` meets the photon ``target``.

    Both are in S. Returns ``None`` when the photon is detected before the
    front reaches it; contact within ``tol`` (relative) of the detection
    time counts as arrival.
    """
    if target.frame is not Frame.PREFERRED:
        raise ValueError("arrival_event works on preferred-frame worldlines")
    o = signal.origin
    verts = target.vertices()
    t_det = verts[-1].t
    slack = tol * max(1.0, abs(t_det))

    if signal.speed.is_instantaneous:
        t = max(o.t, verts[0].t)
        if t > t_det + slack:
            return None
        return Event(min(t, t_det), *target.position_at(min(t, t_det)), Frame.PREFERRED)

    ubar = signal.speed.ubar
    a2 = ubar * ubar - 1.0
    start = max(o.t, verts[0].t)
    for k, (a, seg) in enumerate(zip(verts, target.segments)):
        end = verts[k + 1].t
        if end < start:
            continue
        d = seg.direction
        # photon on this segment's line, at the signal's launch time
        h = o.t - a.t
        q = (a.x + d[0] * h - o.x, a.y + d[1] * h - o.y, a.z + d[2] * h - o.z)
        qd = q[0] * d[0] + q[1] * d[1] + q[2] * d[2]
        qq = q[0] * q[0] + q[1] * q[1] + q[2] * q[2]
        # (ubar^2 - 1) s^2 - 2 (q.d) s - |q|^2 = 0, positive root
        disc = math.sqrt(qd * qd + a2 * qq)
        s = (qd + disc) / a2 if qd >= 0.0 else qq / (disc - qd) if qq > 0.0 else 0.0
        t_hit = o.t + s
        if t_hit < start:
            # photon already inside the front when it came into existence
            t_hit = start
        last = k == len(target.segments) - 1
        if t_hit <= end or (last and t_hit <= end + slack):
            hh = t_hit - a.t
            return Event(t_hit, a.x + d[0] * hh, a.y + d[1] * hh, a.z + d[2] * hh, Frame.PREFERRED)
    return None


class NarrativeKind(enum.Enum):
    DIRECT = "signal from trigger to partner"
    SPONTANEOUS = "spontaneous forcing then back-propagating signal"
    SIMULTANEOUS = "simultaneous; signal instantaneous in lab"


@dataclass(frozen=True)
class LabNarrative:
    """How the lab describes one trigger/arrival pair.

    ``events`` is ordered by lab time. ``speed`` is None when the pair is
    lab-simultaneous.
    """

    trigger: Event
    arrival: Event
    kind: NarrativeKind
    distance: float
    duration: float
    speed: float | None

    @property
    def events(self) -> tuple[Event, Event]:
        if self.kind is NarrativeKind.SPONTANEOUS:
            return (self.arrival, self.trigger)
        return (self.trigger, self.arrival)


def induced_lab_narrative(signal: FtlSignal, b: Boost, target: Worldline,
                          tol: float = DERIVED_TOL) -> LabNarrative:
    """Lab-frame account of the trigger and arrival events of ``signal``.

    When the arrival precedes the trigger in lab time, the lab sees the
    partner photon acquire its state first and a signal run back to the
    trigger point; the returned speed is that apparent signal's speed.
    """
    arrival = arrival_event(signal, target, tol)
    if arrival is None:
        raise ValueError("the signal never reaches the target photon")
    trig = boost_event(signal.origin, b)
    arr = boost_event(arrival, b)
    dt, dx, dy, dz = trig.displacement_to(arr)
    dist = math.sqrt(dx * dx + dy * dy + dz * dz)
    if abs(dt) <= tol * max(1.0, abs(trig.t), abs(arr.t)):
        return LabNarrative(trig, arr, NarrativeKind.SIMULTANEOUS, dist, 0.0, None)
    kind = NarrativeKind.DIRECT if dt > 0 else NarrativeKind.SPONTANEOUS
    return LabNarrative(trig, arr, kind, dist, abs(dt), dist / abs(dt))
