"""Piecewise-linear photon worldlines."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

from .kinematics import DERIVED_TOL, Boost, Event, Frame, to_frame

Vec3 = tuple[float, float, float]


def _norm(d: Sequence[float]) -> float:
    return math.sqrt(d[0] * d[0] + d[1] * d[1] + d[2] * d[2])


@dataclass(frozen=True)
class Segment:
    direction: Vec3
    duration: float


@dataclass(frozen=True)
class Worldline:
    """A photon path: emission event plus contiguous light-speed segments.

    Each segment is traversed at speed exactly 1, so a segment of duration
    ``d`` covers path length ``d``. The end of the last segment is the
    detection event; the photon does not exist after it.
    """

    emission: Event
    segments: tuple[Segment, ...]

    def __post_init__(self):
        segs = tuple(s if isinstance(s, Segment) else Segment(tuple(s[0]), float(s[1]))
                     for s in self.segments)
        if not segs:
            raise ValueError("a worldline needs at least one segment")
        for s in segs:
            if not (s.duration >= 0.0 and math.isfinite(s.duration)):
                raise ValueError(f"segment duration must be finite and >= 0, got {s.duration!r}")
            n = _norm(s.direction)
            if abs(n - 1.0) > DERIVED_TOL:
                raise ValueError(f"segment is not light-like: |direction| = {n!r}")
        object.__setattr__(self, "segments", segs)

    @classmethod
    def straight(cls, emission: Event, direction: Vec3, length: float) -> Worldline:
        return cls(emission, (Segment(tuple(direction), float(length)),))

    @property
    def frame(self) -> Frame:
        return self.emission.frame

    def vertices(self) -> list[Event]:
        e = self.emission
        out = [e]
        t, x, y, z = e.t, e.x, e.y, e.z
        for s in self.segments:
            dx, dy, dz = s.direction
            t += s.duration
            x += dx * s.duration
            y += dy * s.duration
            z += dz * s.duration
            out.append(Event(t, x, y, z, e.frame))
        return out

    @property
    def detection(self) -> Event:
        return self.vertices()[-1]

    @property
    def path_length(self) -> float:
        return sum(s.duration for s in self.segments)

    def position_at(self, t: float) -> Vec3:
        verts = self.vertices()
        if t < verts[0].t or t > verts[-1].t:
            raise ValueError(f"t = {t!r} outside the photon's lifetime [{verts[0].t}, {verts[-1].t}]")
        for a, s, b in zip(verts, self.segments, verts[1:]):
            if t <= b.t:
                h = t - a.t
                return (a.x + s.direction[0] * h, a.y + s.direction[1] * h, a.z + s.direction[2] * h)
        return verts[-1].position

    def in_frame(self, frame: Frame, b: Boost) -> Worldline:
        """The same photon path described in ``frame``.

        Light-like segments stay light-like under a boost, only their
        directions and durations change.
        """
        if frame is self.frame:
            return self
        verts = [to_frame(e, frame, b) for e in self.vertices()]
        segs = []
        for a, c in zip(verts, verts[1:]):
            dt = c.t - a.t
            dr = (c.x - a.x, c.y - a.y, c.z - a.z)
            if dt == 0.0:
                segs.append(Segment((1.0, 0.0, 0.0), 0.0))
                continue
            n = _norm(dr)
            if abs(n - dt) > DERIVED_TOL * max(1.0, dt):
                raise ValueError("boosted segment is not light-like")
            segs.append(Segment((dr[0] / n, dr[1] / n, dr[2] / n), dt))
        return Worldline(verts[0], tuple(segs))
