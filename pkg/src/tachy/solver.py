"""Recover the lab velocity relative to S from directional FTL speeds.

The interaction speed is the same in every direction in S. Each lab
measurement (apparatus angle, speed) is a lab velocity; mapping it back to S
with a trial lab velocity must give the same |u| for every measurement. The
solver searches the (planar) lab velocity that makes them agree.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np
from scipy.optimize import least_squares

from .ftl import FtlSpeed, lab_slowness
from .kinematics import Boost, Velocity, compose_velocity_to_preferred

log = logging.getLogger(__name__)

TWO_PI = 2.0 * math.pi
INSTANTANEOUS_THRESHOLD = 1e6
FD_STEP = 1e-7
POLE_TOL = 1e-12


class InsufficientData(ValueError):
    pass


class NoConvergence(RuntimeError):
    pass


class OutOfRange(ValueError):
    pass


@dataclass(frozen=True)
class DirectionalMeasurement:
    """Lab-measured FTL speed along the apparatus angle ``phi``.

    ``phi`` is the direction of propagation in lab time, counter-clockwise
    from an arbitrary lab reference axis (taken as +x).
    """

    phi: float
    u_prime: float
    sigma: float | None = None

    def __post_init__(self):
        if not (math.isfinite(self.u_prime) and self.u_prime > 0.0):
            raise ValueError(f"u_prime must be finite and > 0, got {self.u_prime!r}")
        object.__setattr__(self, "phi", float(self.phi) % TWO_PI)


@dataclass(frozen=True)
class RecoveryResult:
    speed: float
    orientation: float
    ubar: float
    residual: float
    identifiable: bool
    instantaneous: bool = False

    @property
    def v_hat(self) -> Velocity:
        return Velocity.polar(self.speed, self.orientation)

    def to_json(self) -> dict:
        return {
            "speed": self.speed,
            "orientation": self.orientation,
            "ubar": self.ubar,
            "residual": self.residual,
            "identifiable": self.identifiable,
        }


def forward_measurements(v: Velocity, ubar: FtlSpeed | float,
                         phis: Iterable[float]) -> list[DirectionalMeasurement]:
    """Synthetic lab measurements for a lab velocity ``v`` (in the xy-plane).

    For each lab angle the front crossing of that lab ray is found by a
    root-find on the S launch angle. When the crossing is in the lab past of
    the trigger, the lab sees the signal travel the other way, and the
    measurement is reported at ``phi + pi``. Directions where the front is
    lab-instantaneous have no finite speed and are left out.
    """
    speed = ubar if isinstance(ubar, FtlSpeed) else FtlSpeed(ubar)
    b = Boost(v)
    out = []
    for phi in phis:
        k = lab_slowness(speed, b, (math.cos(phi), math.sin(phi), 0.0))
        if k == 0.0:
            log.info("phi=%r: front is instantaneous in the lab; measurement excluded", phi)
            continue
        if k > 0:
            out.append(DirectionalMeasurement(phi, 1.0 / k))
        else:
            out.append(DirectionalMeasurement(phi + math.pi, -1.0 / k))
    return out


def with_noise(ms: Sequence[DirectionalMeasurement], sigma: float,
               rng: np.random.Generator) -> list[DirectionalMeasurement]:
    """Apply i.i.d. multiplicative Gaussian noise of relative size ``sigma``."""
    eps = rng.standard_normal(len(ms))
    return [DirectionalMeasurement(m.phi, m.u_prime * (1.0 + sigma * e), sigma)
            for m, e in zip(ms, eps)]


def preferred_speed_sq(u_lab: np.ndarray, v: np.ndarray) -> np.ndarray:
    """|u|^2 in S for lab velocities ``u_lab`` (n, 2) under trial lab velocities ``v`` (..., 2).

    Returns an array of shape (..., n); entries at a pole are inf.
    """
    v = np.asarray(v, dtype=float)[..., None, :]
    u = np.asarray(u_lab, dtype=float)
    v2 = np.sum(v * v, axis=-1)
    uv = np.sum(u * v, axis=-1)
    gamma = 1.0 / np.sqrt(1.0 - v2)
    with np.errstate(divide="ignore", invalid="ignore"):
        k = np.where(v2 > 0, uv / np.where(v2 > 0, v2, 1.0), 0.0)
        par = k[..., None] * v
        num = par + v + (u - par) / gamma[..., None]
        denom = 1.0 + uv
        out = np.sum(num * num, axis=-1) / (denom * denom)
    return np.where(np.abs(denom) <= POLE_TOL, np.inf, out)


def _excess_spread(q: np.ndarray) -> np.ndarray:
    # Relative spread of |u|^2 - 1 rather than of |u|^2: as |v| -> 1 every
    # mapped speed collapses onto 1, so any spread of |u|^2 itself vanishes
    # there and the search would be drawn to the edge of the disk.
    e = q - 1.0
    with np.errstate(invalid="ignore", divide="ignore"):
        return e / np.mean(e, axis=-1, keepdims=True) - 1.0


def _relative_spread(q: np.ndarray) -> np.ndarray:
    with np.errstate(invalid="ignore"):
        return q / np.mean(q, axis=-1, keepdims=True) - 1.0


def _to_velocity(p: np.ndarray) -> np.ndarray:
    # maps R^2 onto the open unit disk
    return p / np.sqrt(1.0 + p @ p)


def _from_velocity(v: np.ndarray) -> np.ndarray:
    return v / np.sqrt(1.0 - v @ v)


def _sign_pattern_starts(u_lab: np.ndarray, max_n: int = 12) -> np.ndarray:
    """Candidate lab velocities from the linearised isotropy condition.

    |u'|^2 - 1 is Lorentz invariant, so isotropy in S reads
    sqrt(|u'_i|^2 - 1) = gamma sqrt(ubar^2 - 1) |1 + u'_i . v|. With the
    sign of each 1 + u'_i . v fixed this is linear in (v, 1/kappa),
    kappa = gamma sqrt(ubar^2 - 1). Every sign pattern is solved and the
    self-consistent solutions are returned.
    """
    n = len(u_lab)
    if n > max_n:
        patterns = np.ones((1, n))
    else:
        bits = (np.arange(2 ** n)[:, None] >> np.arange(n)) & 1
        patterns = 1.0 - 2.0 * bits
    m = np.sqrt(np.sum(u_lab * u_lab, axis=1) - 1.0)
    A = np.empty((len(patterns), n, 3))
    A[:, :, 0] = u_lab[:, 0]
    A[:, :, 1] = u_lab[:, 1]
    A[:, :, 2] = -patterns * m
    rhs = -np.ones(n)
    out = []
    for k in range(len(patterns)):
        x, *_ = np.linalg.lstsq(A[k], rhs, rcond=None)
        v = x[:2]
        if x[2] <= 0.0 or v @ v >= 1.0:
            continue
        if np.all(np.sign(1.0 + u_lab @ v) == patterns[k]):
            out.append(v)
    return np.array(out).reshape(-1, 2)


def recover_frame(ms: Sequence[DirectionalMeasurement], *, n_speed: int = 20, n_orient: int = 36,
                  n_starts: int = 8, max_residual: float | None = None) -> RecoveryResult:
    """Fit the lab velocity (speed, orientation) and the S speed of the front.

    The misfit is the relative spread, across measurements, of
    |u_i|^2 - 1 where u_i is measurement i mapped to S. Starting points
    come from the linearised isotropy condition and from the best cells of
    a coarse speed x orientation grid; each is refined by
    Levenberg-Marquardt with a central-difference Jacobian. The grid is only
    searched when the linearised starts leave a misfit above
    ``max_residual``. The reported residual is the RMS relative spread of
    |u_i|^2 at the optimum.
    """
    usable = [m for m in ms if math.isfinite(m.u_prime) and m.u_prime > 0.0]
    if len(usable) < 3 or len({round(m.phi, 12) for m in usable}) < 3:
        raise InsufficientData(f"need >= 3 measurements at >= 3 distinct angles, got {len(usable)}")

    phi = np.array([m.phi for m in usable])
    w = np.array([m.u_prime for m in usable])
    sigmas = [m.sigma for m in usable if m.sigma]
    sigma = max(sigmas) if sigmas else 0.0
    u_lab = np.column_stack([w * np.cos(phi), w * np.sin(phi)])

    cv = float(np.std(w) / np.mean(w))
    if cv < (10.0 * sigma if sigma > 0 else 1e-9):
        ubar = float(np.mean(w))
        return RecoveryResult(0.0, 0.0, ubar, cv, False, ubar > INSTANTANEOUS_THRESHOLD)
    if np.any(w <= 1.0):
        raise ValueError("subluminal lab speeds cannot come from a superluminal front")

    if max_residual is None:
        max_residual = max(1e-8, 100.0 * sigma)

    def resid(p):
        r = _excess_spread(preferred_speed_sq(u_lab, _to_velocity(p)))
        return np.where(np.isfinite(r), r, 1e6)

    def jac(p):
        J = np.empty((len(w), 2))
        for j in range(2):
            h = np.zeros(2)
            h[j] = FD_STEP
            J[:, j] = (resid(p + h) - resid(p - h)) / (2.0 * FD_STEP)
        return J

    def refine(starts):
        out = []
        for v0 in starts:
            sol = least_squares(resid, _from_velocity(np.asarray(v0)), jac=jac, method="lm",
                                xtol=1e-15, ftol=1e-15, gtol=1e-15, max_nfev=400)
            v_hat = _to_velocity(sol.x)
            r = _excess_spread(preferred_speed_sq(u_lab, v_hat))
            obj = float(np.sqrt(np.mean(r * r)))
            if not math.isfinite(obj):
                continue
            s_hat = float(np.hypot(*v_hat))
            a_hat = float(math.atan2(v_hat[1], v_hat[0]) % TWO_PI)
            out.append((obj, s_hat, a_hat, v_hat))
        return out

    def best(cands):
        return min(cands, key=lambda c: (round(c[0], 15), c[1], c[2]), default=None)

    # the linearised starts are exact for consistent data; the grid is the
    # fallback for data they cannot explain
    cands = refine(_sign_pattern_starts(u_lab))
    top = best(cands)
    if top is None or not top[0] <= max_residual:
        speeds = (np.arange(n_speed) + 0.5) / n_speed
        orients = np.arange(n_orient) * (TWO_PI / n_orient)
        S, A = np.meshgrid(speeds, orients, indexing="ij")
        grid_v = np.stack([S * np.cos(A), S * np.sin(A)], axis=-1).reshape(-1, 2)
        spread = _excess_spread(preferred_speed_sq(u_lab, grid_v))
        score = np.sqrt(np.mean(spread * spread, axis=-1))
        score = np.where(np.isfinite(score), score, np.inf)
        order = np.lexsort((A.ravel(), S.ravel(), score))
        cands += refine([grid_v[i] for i in order[:n_starts] if np.isfinite(score[i])])
        top = best(cands)
    if top is None:
        raise NoConvergence("no start point led to a finite misfit")
    obj, s_hat, a_hat, v_hat = top
    if not obj <= max_residual:
        raise NoConvergence(f"best misfit {obj:.3g} exceeds {max_residual:.3g}")
    r = _relative_spread(preferred_speed_sq(u_lab, v_hat))
    rms = float(np.sqrt(np.mean(r * r)))

    ubar = float(np.mean(np.sqrt(preferred_speed_sq(u_lab, v_hat))))
    return RecoveryResult(s_hat, a_hat, ubar, rms, True, ubar > INSTANTANEOUS_THRESHOLD)


def preferred_speeds(ms: Sequence[DirectionalMeasurement], v: Velocity) -> list[float]:
    """|u| in S of every measurement under lab velocity ``v`` (scalar route)."""
    b = Boost(v)
    return [compose_velocity_to_preferred(Velocity.polar(m.u_prime, m.phi), b).speed() for m in ms]


def solve_v_from_transverse(ubar: float, u_prime_y: float) -> float:
    """Lab speed from the S speed and the lab speed perpendicular to v.

    Inverts ubar^2 = v^2 + u'_y^2 (1 - v^2).
    """
    if not (ubar > 1.0 and u_prime_y > 1.0):
        raise OutOfRange(f"need ubar > 1 and u'_y > 1, got {ubar!r}, {u_prime_y!r}")
    ratio = (ubar * ubar - u_prime_y * u_prime_y) / (1.0 - u_prime_y * u_prime_y)
    if abs(ratio) < 1e-15:
        ratio = 0.0
    if not (0.0 <= ratio < 1.0):
        raise OutOfRange(f"no sub-light v: v^2 would be {ratio!r}")
    return math.sqrt(ratio)
