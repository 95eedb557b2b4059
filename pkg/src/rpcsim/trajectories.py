"""Time-parameterized interpolation primitives.

Four scalar curve families shared by swing-foot planning, manipulation
reaching, and state-machine reference generation: half-cosine ease, cubic
Hermite with prescribed endpoint velocities, minimum-jerk quintic, and
4-control-point cubic Bezier.  Evaluation outside [0, duration] clamps to
the nearest endpoint value with zero derivatives.
"""
from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field

import numpy as np

from .errors import InputError


class ProfileKind(enum.Enum):
    COSINE = "cosine"
    HERMITE_CUBIC = "hermite_cubic"
    MIN_JERK_QUINTIC = "min_jerk_quintic"
    CUBIC_BEZIER = "cubic_bezier"


@dataclass(frozen=True)
class ScalarProfile:
    """One scalar curve from start_value to end_value over duration seconds.

    aux carries the kind-specific coefficients: (v_start, v_end) for the
    Hermite curve, the two interior control points for the Bezier.
    """

    kind: ProfileKind
    start_value: float
    end_value: float
    duration: float
    aux: tuple = field(default=())

    def __post_init__(self):
        if not (self.duration > 0.0 and math.isfinite(self.duration)):
            raise InputError(f"profile duration must be > 0, got {self.duration}")
        if self.kind == ProfileKind.HERMITE_CUBIC and len(self.aux) != 2:
            raise InputError("hermite profile needs aux=(v_start, v_end)")
        if self.kind == ProfileKind.CUBIC_BEZIER and len(self.aux) != 2:
            raise InputError("bezier profile needs aux=(p1, p2) interior controls")


def cosine(start, end, duration):
    return ScalarProfile(ProfileKind.COSINE, start, end, duration)


def hermite(start, end, duration, v_start=0.0, v_end=0.0):
    return ScalarProfile(ProfileKind.HERMITE_CUBIC, start, end, duration, (v_start, v_end))


def min_jerk(start, end, duration):
    return ScalarProfile(ProfileKind.MIN_JERK_QUINTIC, start, end, duration)


def bezier(start, end, duration, p1, p2):
    return ScalarProfile(ProfileKind.CUBIC_BEZIER, start, end, duration, (p1, p2))


def evaluate(profile: ScalarProfile, t: float):
    """Evaluate position, velocity, acceleration at time t (clamped)."""
    if not math.isfinite(t):
        raise InputError(f"non-finite evaluation time {t}")
    T = profile.duration
    if t < 0.0:
        return profile.start_value, 0.0, 0.0
    if t > T:
        return profile.end_value, 0.0, 0.0
    tau = t / T
    a, b = profile.start_value, profile.end_value

    if profile.kind == ProfileKind.COSINE:
        s = 0.5 * (1.0 - math.cos(math.pi * tau))
        sd = 0.5 * math.pi * math.sin(math.pi * tau) / T
        sdd = 0.5 * math.pi**2 * math.cos(math.pi * tau) / T**2
        d = b - a
        return a + d * s, d * sd, d * sdd

    if profile.kind == ProfileKind.MIN_JERK_QUINTIC:
        s = tau**3 * (10.0 - 15.0 * tau + 6.0 * tau**2)
        sd = tau**2 * (30.0 - 60.0 * tau + 30.0 * tau**2) / T
        sdd = tau * (60.0 - 180.0 * tau + 120.0 * tau**2) / T**2
        d = b - a
        return a + d * s, d * sd, d * sdd

    if profile.kind == ProfileKind.HERMITE_CUBIC:
        v0, v1 = profile.aux
        h00 = 2 * tau**3 - 3 * tau**2 + 1
        h10 = tau**3 - 2 * tau**2 + tau
        h01 = -2 * tau**3 + 3 * tau**2
        h11 = tau**3 - tau**2
        pos = h00 * a + h10 * T * v0 + h01 * b + h11 * T * v1
        d00 = 6 * tau**2 - 6 * tau
        d10 = 3 * tau**2 - 4 * tau + 1
        d01 = -6 * tau**2 + 6 * tau
        d11 = 3 * tau**2 - 2 * tau
        vel = (d00 * a + d10 * T * v0 + d01 * b + d11 * T * v1) / T
        dd00 = 12 * tau - 6
        dd10 = 6 * tau - 4
        dd01 = -12 * tau + 6
        dd11 = 6 * tau - 2
        acc = (dd00 * a + dd10 * T * v0 + dd01 * b + dd11 * T * v1) / T**2
        return pos, vel, acc

    if profile.kind == ProfileKind.CUBIC_BEZIER:
        p0, p3 = a, b
        p1, p2 = profile.aux
        u = 1.0 - tau
        pos = u**3 * p0 + 3 * u**2 * tau * p1 + 3 * u * tau**2 * p2 + tau**3 * p3
        vel = 3 * (u**2 * (p1 - p0) + 2 * u * tau * (p2 - p1) + tau**2 * (p3 - p2)) / T
        acc = 6 * (u * (p2 - 2 * p1 + p0) + tau * (p3 - 2 * p2 + p1)) / T**2
        return pos, vel, acc

    raise InputError(f"unknown profile kind {profile.kind}")


def min_jerk_boundary_check(profile: ScalarProfile) -> bool:
    """True iff velocity and acceleration vanish at both endpoints.

    Property harness for the minimum-jerk option; rejects other kinds.
    """
    if profile.kind != ProfileKind.MIN_JERK_QUINTIC:
        raise InputError("boundary check only applies to min-jerk profiles")
    tol = 1e-12
    _, v0, a0 = evaluate(profile, 0.0)
    _, v1, a1 = evaluate(profile, profile.duration)
    return abs(v0) < tol and abs(v1) < tol and abs(a0) < tol and abs(a1) < tol


@dataclass(frozen=True)
class VectorProfile:
    """Per-dimension scalar profiles sharing one duration."""

    profiles: tuple

    def __post_init__(self):
        if not self.profiles:
            raise InputError("vector profile needs at least one dimension")
        T = self.profiles[0].duration
        for p in self.profiles:
            if p.duration != T:
                raise InputError("all component profiles must share one duration")

    @property
    def duration(self):
        return self.profiles[0].duration

    def evaluate(self, t):
        out = np.array([evaluate(p, t) for p in self.profiles])
        return out[:, 0], out[:, 1], out[:, 2]


def vector_min_jerk(start, end, duration) -> VectorProfile:
    return VectorProfile(tuple(min_jerk(a, b, duration) for a, b in zip(start, end)))
