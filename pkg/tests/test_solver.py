import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from tachy.ftl import FtlSpeed, lab_speed
from tachy.kinematics import Boost, Velocity
from tachy.solver import (
    DirectionalMeasurement,
    InsufficientData,
    NoConvergence,
    OutOfRange,
    forward_measurements,
    preferred_speed_sq,
    preferred_speeds,
    recover_frame,
    solve_v_from_transverse,
    with_noise,
)

PHIS = [2 * math.pi * k / 8 for k in range(8)]


def angle_gap(a, b):
    d = (a - b) % (2 * math.pi)
    return min(d, 2 * math.pi - d)


class TestForward:
    def test_pole_is_dropped_and_reverse_reported(self):
        ms = forward_measurements(Velocity.along_x(0.5), 2.0, [0.0, math.pi])
        assert len(ms) == 1
        assert ms[0].phi == pytest.approx(math.pi)
        assert ms[0].u_prime == pytest.approx(1.25, abs=1e-12)

    def test_isotropic_at_rest(self):
        ms = forward_measurements(Velocity(0, 0, 0), 7.0, PHIS)
        assert all(m.u_prime == pytest.approx(7.0) for m in ms)

    @given(st.floats(0.05, 0.9), st.floats(0, 2 * math.pi), st.floats(1.2, 20), st.floats(0, 2 * math.pi))
    def test_measurements_map_back_to_ubar(self, s, a, ubar, phi):
        v = Velocity.polar(s, a)
        for m in forward_measurements(v, ubar, [phi]):
            assert preferred_speeds([m], v)[0] == pytest.approx(ubar, rel=1e-9)

    def test_agrees_with_lab_speed(self):
        # a launch angle whose lab direction is then measured
        b = Boost.along_x(0.4)
        d = lab_speed(FtlSpeed(3.0), b, 2.0)
        m = forward_measurements(b.v, 3.0, [d.theta])[0]
        assert m.u_prime == pytest.approx(d.speed, rel=1e-12)

    def test_noise_is_seeded(self):
        ms = forward_measurements(Velocity.along_x(0.3), 5.0, PHIS)
        a = with_noise(ms, 1e-3, np.random.default_rng(1))
        b = with_noise(ms, 1e-3, np.random.default_rng(1))
        assert a == b and a != ms


class TestVectorisedForm:
    def test_matches_scalar_route(self, rng):
        ms = [DirectionalMeasurement(p, 2 + 3 * rng.random()) for p in PHIS]
        u = np.array([[m.u_prime * math.cos(m.phi), m.u_prime * math.sin(m.phi)] for m in ms])
        for _ in range(20):
            v = Velocity.polar(0.9 * rng.random(), 2 * math.pi * rng.random())
            q = preferred_speed_sq(u, np.array([v.vx, v.vy]))
            ref = np.array(preferred_speeds(ms, v)) ** 2
            assert np.allclose(q, ref, rtol=1e-10)


class TestRecovery:
    @settings(max_examples=40)
    @given(st.floats(0.05, 0.9), st.floats(0, 2 * math.pi), st.floats(1.5, 50))
    def test_noiseless(self, s, a, ubar):
        r = recover_frame(forward_measurements(Velocity.polar(s, a), ubar, PHIS))
        assert r.identifiable
        assert r.speed == pytest.approx(s, abs=1e-6)
        assert angle_gap(r.orientation, a) < 1e-6
        assert r.ubar == pytest.approx(ubar, rel=1e-6)
        assert r.residual < 1e-10

    def test_rotation_covariant(self):
        ms = forward_measurements(Velocity.polar(0.6, 0.7), 10.0, PHIS)
        base = recover_frame(ms)
        rot = recover_frame([DirectionalMeasurement(m.phi + 1.0, m.u_prime) for m in ms])
        assert rot.speed == pytest.approx(base.speed, abs=1e-10)
        assert angle_gap(rot.orientation, base.orientation + 1.0) < 1e-10

    def test_isotropic_data_not_identifiable(self):
        r = recover_frame([DirectionalMeasurement(p, 10.0) for p in PHIS])
        assert not r.identifiable and r.speed == 0.0 and r.ubar == 10.0

    def test_inconsistent_data(self):
        speeds = [3.0, 9.0, 2.0, 40.0, 1.5, 7.0, 2.2, 11.0]
        with pytest.raises(NoConvergence):
            recover_frame([DirectionalMeasurement(p, u) for p, u in zip(PHIS, speeds)])

    def test_too_few(self):
        with pytest.raises(InsufficientData):
            recover_frame([DirectionalMeasurement(0.0, 2.0), DirectionalMeasurement(1.0, 3.0)])
        with pytest.raises(InsufficientData):
            recover_frame([DirectionalMeasurement(0.0, 2.0)] * 2 + [DirectionalMeasurement(1.0, 3.0)])

    def test_subluminal_rejected(self):
        with pytest.raises(ValueError):
            recover_frame([DirectionalMeasurement(p, u) for p, u in zip(PHIS[:3], [0.5, 2, 3])])

    def test_json_keys(self):
        r = recover_frame(forward_measurements(Velocity.polar(0.3, 1.0), 4.0, PHIS))
        assert set(r.to_json()) == {"speed", "orientation", "ubar", "residual", "identifiable"}

    def test_noisy(self):
        ms = forward_measurements(Velocity.polar(0.6, 0.7), 10.0, PHIS)
        r = recover_frame(with_noise(ms, 1e-4, np.random.default_rng(3)))
        assert abs(r.speed - 0.6) < 1e-2


class TestTransverseInverse:
    @given(st.floats(0.0, 0.95), st.floats(1.01, 100))
    def test_round_trip(self, v, ubar):
        g = 1 / math.sqrt(1 - v * v)
        uy = g * math.sqrt(ubar * ubar - v * v)
        # v^2 is the well-conditioned quantity; the square root amplifies error near 0
        got = solve_v_from_transverse(ubar, uy)
        assert abs(got * got - v * v) <= 1e-12 * ubar * ubar

    def test_agrees_with_full_solver(self):
        v, ubar = 0.45, 6.0
        ms = forward_measurements(Velocity.along_x(v), ubar, PHIS)
        perp = [m for m in ms if abs(m.phi - math.pi / 2) < 1e-12][0]
        assert solve_v_from_transverse(ubar, perp.u_prime) == pytest.approx(recover_frame(ms).speed, abs=1e-12)

    @pytest.mark.parametrize("ubar, uy", [(0.5, 2.0), (2.0, 0.9), (5.0, 2.0)])
    def test_out_of_range(self, ubar, uy):
        with pytest.raises(OutOfRange):
            solve_v_from_transverse(ubar, uy)
