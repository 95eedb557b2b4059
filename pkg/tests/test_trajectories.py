import numpy as np
import pytest

from rpcsim import trajectories as traj
from rpcsim.errors import InputError


ALL_KINDS = [
    traj.cosine(0.2, 1.3, 0.7),
    traj.hermite(0.2, 1.3, 0.7, v_start=0.5, v_end=-0.25),
    traj.min_jerk(0.2, 1.3, 0.7),
    traj.bezier(0.2, 1.3, 0.7, p1=0.5, p2=1.0),
]


@pytest.mark.parametrize("profile", ALL_KINDS, ids=lambda p: p.kind.value)
def test_endpoints_exact(profile):
    p0, _, _ = traj.evaluate(profile, 0.0)
    p1, _, _ = traj.evaluate(profile, profile.duration)
    assert p0 == profile.start_value
    assert p1 == profile.end_value


@pytest.mark.parametrize("profile", ALL_KINDS, ids=lambda p: p.kind.value)
def test_clamping(profile):
    lo = traj.evaluate(profile, -0.5)
    hi = traj.evaluate(profile, profile.duration + 2.0)
    assert lo == (profile.start_value, 0.0, 0.0)
    assert hi == (profile.end_value, 0.0, 0.0)


@pytest.mark.parametrize("profile", ALL_KINDS, ids=lambda p: p.kind.value)
def test_finite_difference_derivatives(profile, rng):
    h = 1e-7
    T = profile.duration
    for t in rng.uniform(h * 10, T - h * 10, size=100):
        pm, vm, _ = traj.evaluate(profile, t - h)
        pp, vp, _ = traj.evaluate(profile, t + h)
        _, v, a = traj.evaluate(profile, t)
        fd_v = (pp - pm) / (2 * h)
        assert abs(fd_v - v) <= 1e-6 * max(1.0, abs(v))
        fd_a = (vp - vm) / (2 * h)
        assert abs(fd_a - a) <= 1e-5 * max(1.0, abs(a))


def test_min_jerk_midpoint_value():
    p = traj.min_jerk(0.0, 1.0, 1.0)
    pos, vel, acc = traj.evaluate(p, 0.5)
    assert pos == pytest.approx(0.5, abs=1e-12)
    assert vel == pytest.approx(15.0 / 8.0, abs=1e-12)
    assert acc == pytest.approx(0.0, abs=1e-12)


def test_cosine_midpoint_is_average():
    p = traj.cosine(-2.0, 5.0, 3.3)
    pos, _, _ = traj.evaluate(p, 3.3 / 2)
    assert pos == pytest.approx((-2.0 + 5.0) / 2, abs=1e-12)


def test_bezier_midpoint_bernstein():
    p0, p1, p2, p3 = 0.3, 0.9, -0.4, 2.0
    p = traj.bezier(p0, p3, 2.0, p1, p2)
    pos, _, _ = traj.evaluate(p, 1.0)
    assert pos == pytest.approx((p0 + 3 * p1 + 3 * p2 + p3) / 8, abs=1e-12)


def test_min_jerk_boundary_check():
    assert traj.min_jerk_boundary_check(traj.min_jerk(0.0, 1.0, 0.8))
    assert traj.min_jerk_boundary_check(traj.min_jerk(0.0, 0.0, 0.8))
    with pytest.raises(InputError):
        traj.min_jerk_boundary_check(traj.cosine(0.0, 1.0, 0.8))


def test_min_jerk_boundary_magnitudes():
    p = traj.min_jerk(-1.0, 2.0, 0.65)
    _, v0, a0 = traj.evaluate(p, 0.0)
    _, v1, a1 = traj.evaluate(p, p.duration)
    assert max(abs(v0), abs(v1), abs(a0), abs(a1)) < 1e-12


def test_hermite_endpoint_velocities_exact():
    p = traj.hermite(0.0, 1.0, 0.5, v_start=0.7, v_end=-0.3)
    _, v0, _ = traj.evaluate(p, 0.0)
    _, v1, _ = traj.evaluate(p, 0.5)
    assert v0 == pytest.approx(0.7, abs=1e-12)
    assert v1 == pytest.approx(-0.3, abs=1e-12)


def test_invalid_inputs():
    with pytest.raises(InputError):
        traj.min_jerk(0.0, 1.0, 0.0)
    with pytest.raises(InputError):
        traj.evaluate(traj.min_jerk(0.0, 1.0, 1.0), float("nan"))


def test_vector_profile_shares_duration():
    v = traj.vector_min_jerk([0.0, 1.0], [1.0, 3.0], 0.5)
    pos, vel, acc = v.evaluate(0.25)
    assert pos == pytest.approx([0.5, 2.0])
    with pytest.raises(InputError):
        traj.VectorProfile((traj.min_jerk(0, 1, 0.5), traj.min_jerk(0, 1, 0.6)))
