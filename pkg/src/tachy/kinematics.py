"""Lorentz boosts, relativistic velocity composition and interval classes.

Units have c = 1 throughout. The preferred frame S and the laboratory frame
S' share axis orientations; S' moves with velocity ``v`` as seen from S.
Everything here works on plain floats: the vectors are 3-long and the
numpy call overhead would dominate.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field

ALGEBRA_TOL = 1e-12
DERIVED_TOL = 1e-9


class Frame(enum.Enum):
    PREFERRED = "S"
    LAB = "S'"


class FrameMismatch(ValueError):
    pass


class Divergent(ArithmeticError):
    """The composed velocity has a vanishing denominator.

    This is not a numerical failure: the transformed signal is instantaneous
    in the target frame and has no finite velocity.
    """


@dataclass(frozen=True)
class Velocity:
    vx: float = 0.0
    vy: float = 0.0
    vz: float = 0.0

    def __post_init__(self):
        if not all(math.isfinite(c) for c in (self.vx, self.vy, self.vz)):
            raise ValueError(f"velocity components must be finite, got {self}")

    @classmethod
    def along_x(cls, speed: float) -> Velocity:
        return cls(float(speed), 0.0, 0.0)

    @classmethod
    def polar(cls, speed: float, angle: float) -> Velocity:
        """Velocity in the xy-plane at ``angle`` radians from +x."""
        return cls(speed * math.cos(angle), speed * math.sin(angle), 0.0)

    def as_tuple(self) -> tuple[float, float, float]:
        return (self.vx, self.vy, self.vz)

    def speed(self) -> float:
        return math.sqrt(self.vx * self.vx + self.vy * self.vy + self.vz * self.vz)

    def dot(self, other: Velocity) -> float:
        return self.vx * other.vx + self.vy * other.vy + self.vz * other.vz

    def scaled(self, k: float) -> Velocity:
        return Velocity(k * self.vx, k * self.vy, k * self.vz)

    def __neg__(self) -> Velocity:
        return Velocity(-self.vx, -self.vy, -self.vz)

    def __add__(self, other: Velocity) -> Velocity:
        return Velocity(self.vx + other.vx, self.vy + other.vy, self.vz + other.vz)

    def __sub__(self, other: Velocity) -> Velocity:
        return Velocity(self.vx - other.vx, self.vy - other.vy, self.vz - other.vz)


@dataclass(frozen=True)
class Event:
    t: float
    x: float = 0.0
    y: float = 0.0
    z: float = 0.0
    frame: Frame = Frame.PREFERRED

    def __post_init__(self):
        if not all(math.isfinite(c) for c in (self.t, self.x, self.y, self.z)):
            raise ValueError(f"event coordinates must be finite, got {self}")

    @property
    def position(self) -> tuple[float, float, float]:
        return (self.x, self.y, self.z)

    def displacement_to(self, other: Event) -> tuple[float, float, float, float]:
        """(dt, dx, dy, dz) from this event to ``other``; both in one frame."""
        if self.frame is not other.frame:
            raise FrameMismatch(f"cannot combine {self.frame.value} and {other.frame.value} events")
        return (other.t - self.t, other.x - self.x, other.y - self.y, other.z - self.z)


@dataclass(frozen=True)
class Boost:
    """Pure boost from S to a lab frame moving at ``v`` relative to S."""

    v: Velocity
    gamma: float = field(init=False, repr=False)

    def __post_init__(self):
        if not isinstance(self.v, Velocity):
            object.__setattr__(self, "v", Velocity(*self.v))
        s = self.v.speed()
        if s >= 1.0:
            raise ValueError(f"|v| = {s!r} is not a valid frame velocity (need |v| < 1)")
        object.__setattr__(self, "gamma", 1.0 / math.sqrt(1.0 - s * s))

    @classmethod
    def along_x(cls, speed: float) -> Boost:
        return cls(Velocity.along_x(speed))

    @property
    def speed(self) -> float:
        return self.v.speed()

    def inverse(self) -> Boost:
        return Boost(-self.v)


class IntervalKind(enum.Enum):
    TIMELIKE = "timelike"
    SPACELIKE = "spacelike"
    LIGHTLIKE = "lightlike"


@dataclass(frozen=True)
class IntervalClass:
    s2: float
    kind: IntervalKind


def _lorentz(t, x, y, z, v: Velocity, gamma: float):
    # r' = r + (gamma - 1)/v^2 (r.v) v - gamma v t ;  t' = gamma (t - r.v)
    vx, vy, vz = v.vx, v.vy, v.vz
    v2 = vx * vx + vy * vy + vz * vz
    if v2 == 0.0:
        return t, x, y, z
    rv = x * vx + y * vy + z * vz
    k = (gamma - 1.0) * rv / v2 - gamma * t
    return (
        gamma * (t - rv),
        x + k * vx,
        y + k * vy,
        z + k * vz,
    )


def boost_event(e: Event, b: Boost) -> Event:
    """Express a preferred-frame event in lab coordinates."""
    if e.frame is not Frame.PREFERRED:
        raise FrameMismatch("boost_event expects a preferred-frame event")
    t, x, y, z = _lorentz(e.t, e.x, e.y, e.z, b.v, b.gamma)
    return Event(t, x, y, z, Frame.LAB)


def inverse_boost_event(e: Event, b: Boost) -> Event:
    """Express a lab-frame event in preferred-frame coordinates."""
    if e.frame is not Frame.LAB:
        raise FrameMismatch("inverse_boost_event expects a lab-frame event")
    t, x, y, z = _lorentz(e.t, e.x, e.y, e.z, -b.v, b.gamma)
    return Event(t, x, y, z, Frame.PREFERRED)


def to_frame(e: Event, frame: Frame, b: Boost) -> Event:
    if e.frame is frame:
        return e
    return boost_event(e, b) if frame is Frame.LAB else inverse_boost_event(e, b)


def _compose(u: Velocity, v: Velocity, gamma: float) -> Velocity:
    # Parallel/perpendicular split of
    #   u' = [u + (gamma-1)/v^2 (u.v) v - gamma v] / [gamma (1 - u.v)]
    # which keeps the collinear case equal to (u - v)/(1 - uv) to rounding.
    v2 = v.dot(v)
    uv = u.dot(v)
    denom = 1.0 - uv
    if abs(denom) <= ALGEBRA_TOL:
        raise Divergent(f"1 - u.v = {denom!r}: transformed signal is instantaneous")
    if v2 == 0.0:
        return u
    k = uv / v2
    par = v.scaled(k)
    perp = u - par
    return Velocity(
        (par.vx - v.vx + perp.vx / gamma) / denom,
        (par.vy - v.vy + perp.vy / gamma) / denom,
        (par.vz - v.vz + perp.vz / gamma) / denom,
    )


def compose_velocity_to_lab(u: Velocity, b: Boost) -> Velocity:
    """Lab-frame velocity of something moving at ``u`` in S.

    Superluminal ``u`` is allowed. Raises :class:`Divergent` when
    ``u . v = 1``.
    """
    return _compose(u, b.v, b.gamma)


def compose_velocity_to_preferred(u_lab: Velocity, b: Boost) -> Velocity:
    """Preferred-frame velocity of something moving at ``u_lab`` in the lab.

    Raises :class:`Divergent` when ``u_lab . v = -1``.
    """
    return _compose(u_lab, -b.v, b.gamma)


def interval(e1: Event, e2: Event, tol: float = ALGEBRA_TOL) -> IntervalClass:
    """Classify the separation of two events in the same frame.

    ``tol`` applies to s2 normalised by dt^2 + |dr|^2.
    """
    dt, dx, dy, dz = e1.displacement_to(e2)
    r2 = dx * dx + dy * dy + dz * dz
    s2 = dt * dt - r2
    scale = dt * dt + r2
    if scale == 0.0 or abs(s2) <= tol * scale:
        kind = IntervalKind.LIGHTLIKE
    elif s2 > 0:
        kind = IntervalKind.TIMELIKE
    else:
        kind = IntervalKind.SPACELIKE
    return IntervalClass(s2, kind)
