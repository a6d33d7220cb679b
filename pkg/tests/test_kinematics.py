import math

import pytest
from hypothesis import given
from hypothesis import strategies as st

from tachy.kinematics import (
    Boost,
    Divergent,
    Event,
    Frame,
    FrameMismatch,
    IntervalKind,
    Velocity,
    boost_event,
    compose_velocity_to_lab,
    compose_velocity_to_preferred,
    interval,
    inverse_boost_event,
    to_frame,
)

coord = st.floats(-100, 100, allow_nan=False)
unit_comp = st.floats(-1, 1, allow_nan=False)


@st.composite
def velocities(draw, vmax=0.99):
    x, y, z = draw(unit_comp), draw(unit_comp), draw(unit_comp)
    n = math.sqrt(x * x + y * y + z * z)
    if n < 1e-6:
        x, y, z, n = 1.0, 0.0, 0.0, 1.0
    s = draw(st.floats(0.0, vmax))
    return Velocity(s * x / n, s * y / n, s * z / n)


@st.composite
def directions(draw):
    x, y, z = draw(unit_comp), draw(unit_comp), draw(unit_comp)
    n = math.sqrt(x * x + y * y + z * z)
    if n < 1e-6:
        return (0.0, 1.0, 0.0)
    return (x / n, y / n, z / n)


def standard_boost(e, v):
    # textbook x-boost, used as an independent oracle
    g = 1 / math.sqrt(1 - v * v)
    return g * (e.t - v * e.x), g * (e.x - v * e.t)


class TestBoost:
    def test_gamma(self):
        assert Boost.along_x(0.6).gamma == pytest.approx(1.25, abs=1e-15)

    @pytest.mark.parametrize("s", [1.0, 1.5, -1.0])
    def test_rejects_luminal(self, s):
        with pytest.raises(ValueError):
            Boost.along_x(s)

    def test_known_event(self):
        e = boost_event(Event(2.0, 2.0), Boost.along_x(0.6))
        assert (e.t, e.x, e.frame) == (pytest.approx(1.0), pytest.approx(1.0), Frame.LAB)

    def test_lab_to_preferred_known_event(self):
        e = inverse_boost_event(Event(1.0, -1.0, frame=Frame.LAB), Boost.along_x(0.6))
        assert e.t == pytest.approx(0.5, abs=1e-15)
        assert e.x == pytest.approx(-0.5, abs=1e-15)

    def test_frame_tags_enforced(self):
        b = Boost.along_x(0.5)
        with pytest.raises(FrameMismatch):
            boost_event(Event(0, 1, frame=Frame.LAB), b)
        with pytest.raises(FrameMismatch):
            inverse_boost_event(Event(0, 1), b)
        with pytest.raises(FrameMismatch):
            Event(0, frame=Frame.LAB).displacement_to(Event(1))

    @given(st.floats(-0.99, 0.99), coord, coord)
    def test_matches_standard_configuration(self, v, t, x):
        e = Event(t, x)
        got = boost_event(e, Boost.along_x(v))
        tt, xx = standard_boost(e, v)
        scale = max(1.0, abs(t), abs(x)) / (1 - abs(v))
        assert abs(got.t - tt) <= 1e-12 * scale
        assert abs(got.x - xx) <= 1e-12 * scale

    @given(velocities(), coord, coord, coord, coord)
    def test_round_trip(self, v, t, x, y, z):
        b = Boost(v)
        e = Event(t, x, y, z)
        back = inverse_boost_event(boost_event(e, b), b)
        scale = b.gamma ** 2 * max(1.0, abs(t), abs(x), abs(y), abs(z))
        for a, c in zip((e.t, *e.position), (back.t, *back.position)):
            assert abs(a - c) <= 1e-12 * scale

    @given(velocities(vmax=0.9), coord, coord, coord, coord)
    def test_interval_invariant(self, v, t, x, y, z):
        b = Boost(v)
        e = Event(t, x, y, z)
        f = boost_event(e, b)
        s0 = t * t - x * x - y * y - z * z
        s1 = f.t ** 2 - f.x ** 2 - f.y ** 2 - f.z ** 2
        assert abs(s0 - s1) <= 1e-9 * max(1.0, t * t + x * x + y * y + z * z) * b.gamma ** 2

    def test_to_frame_identity(self):
        e = Event(1, 2, 3, 4)
        assert to_frame(e, Frame.PREFERRED, Boost.along_x(0.3)) is e


class TestComposition:
    def test_collinear_addition(self):
        u = compose_velocity_to_lab(Velocity.along_x(0.5), Boost.along_x(-0.5))
        assert u.vx == pytest.approx(0.8, abs=1e-15)

    def test_superluminal_reverse(self):
        u = compose_velocity_to_lab(Velocity.along_x(-2.0), Boost.along_x(0.5))
        assert u.vx == pytest.approx(-1.25, abs=1e-15)

    def test_divergent_pole(self):
        with pytest.raises(Divergent):
            compose_velocity_to_lab(Velocity.along_x(2.0), Boost.along_x(0.5))

    @given(velocities(), directions())
    def test_light_speed_preserved(self, v, d):
        b = Boost(v)
        try:
            u = compose_velocity_to_lab(Velocity(*d), b)
        except Divergent:
            return
        assert abs(u.speed() - 1.0) <= 1e-12 * b.gamma ** 2

    @given(velocities(vmax=0.95), velocities(vmax=0.99))
    def test_round_trip(self, v, u):
        b = Boost(v)
        back = compose_velocity_to_preferred(compose_velocity_to_lab(u, b), b)
        for a, c in zip(u.as_tuple(), back.as_tuple()):
            assert abs(a - c) <= 1e-12 * b.gamma ** 2

    @given(velocities(vmax=0.9), directions(), st.floats(1.01, 100))
    def test_matches_event_boost(self, v, d, w):
        # the velocity of a straight worldline must agree with boosting two of its events
        b = Boost(v)
        u = Velocity(*d).scaled(w)
        try:
            got = compose_velocity_to_lab(u, b)
        except Divergent:
            return
        e0 = boost_event(Event(0.0), b)
        e1 = boost_event(Event(1.0, *u.as_tuple()), b)
        dt = e1.t - e0.t
        if abs(dt) < 1e-6:
            return
        for a, c in zip(got.as_tuple(), ((e1.x - e0.x) / dt, (e1.y - e0.y) / dt, (e1.z - e0.z) / dt)):
            assert abs(a - c) <= 1e-9 * max(1.0, abs(a))


class TestInterval:
    @pytest.mark.parametrize("e2, kind", [
        (Event(2, 1), IntervalKind.TIMELIKE),
        (Event(1, 2), IntervalKind.SPACELIKE),
        (Event(1, 1), IntervalKind.LIGHTLIKE),
        (Event(1, 0, 1), IntervalKind.LIGHTLIKE),
    ])
    def test_classes(self, e2, kind):
        assert interval(Event(0), e2).kind is kind

    def test_lightlike_with_rounding(self):
        assert interval(Event(0), Event(0.1 + 0.2, 0.3)).kind is IntervalKind.LIGHTLIKE

    def test_frames_must_match(self):
        with pytest.raises(FrameMismatch):
            interval(Event(0), Event(1, frame=Frame.LAB))

    @given(velocities(vmax=0.9), coord, coord)
    def test_class_is_invariant(self, v, t, x):
        b = Boost(v)
        a, c = Event(0.0), Event(t, x)
        k0 = interval(a, c).kind
        k1 = interval(boost_event(a, b), boost_event(c, b)).kind
        # near the cone rounding may flip a class into LIGHTLIKE, never across
        assert k0 is k1 or IntervalKind.LIGHTLIKE in (k0, k1) or abs(abs(t) - abs(x)) < 1e-9
