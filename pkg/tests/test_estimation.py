import copy

import numpy as np
import pytest

from rpcsim.architecture.config import load_config
from rpcsim.architecture.control import standing_state
from rpcsim.estimation import (FootFrame, KalmanEstimator, KfNoise,
                               KinematicEstimator)
from rpcsim.interface import Command, SensorData
from rpcsim.rbd import update_kinematics
from rpcsim.runner import build_world


def frames_from(config):
    return [FootFrame(n, f["link"], np.asarray(f["center"]))
            for n, f in config["robot"]["feet"].items()]


def exact_sensors(model, state, contacts):
    """Noise-free SensorData synthesized directly from a state."""
    return SensorData(
        t=0.0, imu_quat=state.base_quat.copy(),
        imu_gyro=state.base_twist[:3].copy(),
        imu_acc=state.base_rot().T @ np.array([0.0, 0.0, 9.81]),
        joint_pos=state.q_joints.copy(), joint_vel=state.v_joints.copy(),
        contacts=dict(contacts))


class TestKinematic:
    def test_algebraic_inversion_exact(self, biped, quiet_config, rng):
        st = standing_state(biped, quiet_config)
        st.q_joints += rng.normal(size=10) * 0.05
        est = KinematicEstimator(biped, frames_from(quiet_config), dt=1e-3)
        est.initialize(st)
        out = est.update(exact_sensors(biped, st, {"left": True, "right": True}))
        assert np.max(np.abs(out.base_pos - st.base_pos)) < 1e-12

    def test_consistency_fk_round_trip(self, biped, quiet_config):
        st = standing_state(biped, quiet_config)
        est = KinematicEstimator(biped, frames_from(quiet_config), dt=1e-3)
        est.initialize(st)
        sensors = exact_sensors(biped, st, {"left": True, "right": True})
        out = est.update(sensors)
        st2 = out.to_state(sensors)
        cache = update_kinematics(biped, st2)
        f = frames_from(quiet_config)[0]
        li = biped.link_index(f.link)
        anchor = cache.R[li] @ f.offset + cache.p[li]
        assert np.max(np.abs(anchor - est.pinned)) < 1e-12

    def test_anchor_switch_continuity(self, biped, quiet_config):
        st = standing_state(biped, quiet_config)
        est = KinematicEstimator(biped, frames_from(quiet_config), dt=1e-3)
        est.initialize(st)
        s = exact_sensors(biped, st, {"left": True, "right": True})
        p0 = est.update(s).base_pos
        s2 = exact_sensors(biped, st, {"left": False, "right": True})
        p1 = est.update(s2).base_pos
        assert est.anchor == "right"
        assert np.max(np.abs(p1 - p0)) < 1e-9

    def test_dead_reckoning_flag(self, biped, quiet_config):
        st = standing_state(biped, quiet_config)
        est = KinematicEstimator(biped, frames_from(quiet_config), dt=1e-3)
        est.initialize(st)
        out = est.update(exact_sensors(biped, st, {"left": False, "right": False}))
        assert out.dead_reckoning

    def test_orientation_passthrough(self, biped, quiet_config, rng):
        st = standing_state(biped, quiet_config)
        q = rng.normal(size=4)
        st.base_quat = q / np.linalg.norm(q)
        est = KinematicEstimator(biped, frames_from(quiet_config), dt=1e-3)
        est.initialize(st)
        out = est.update(exact_sensors(biped, st, {"left": True, "right": True}))
        assert np.allclose(out.base_quat, st.base_quat, atol=1e-12)


class TestKalman:
    def test_zero_noise_exact_init_stays_exact(self, biped, quiet_config):
        st = standing_state(biped, quiet_config)
        est = KalmanEstimator(biped, frames_from(quiet_config), dt=1e-3)
        est.initialize(st)
        sensors = exact_sensors(biped, st, {"left": True, "right": True})
        for _ in range(200):
            out = est.update(sensors)
        assert np.max(np.abs(out.base_pos - st.base_pos)) < 1e-9

    def test_noiseless_standing_converges(self, biped, quiet_config):
        world = build_world(biped, quiet_config)
        st = standing_state(biped, quiet_config)
        world.reset(st)
        cmd = Command(np.asarray(quiet_config["sim"]["initial_q"]),
                      np.zeros(10), np.zeros(10))
        for _ in range(4000):
            sensors = world.step(cmd)
        est = KalmanEstimator(biped, frames_from(quiet_config), dt=1e-3,
                              noise=KfNoise(acc=0.5, foot_stationary=1e-7,
                                            meas=1e-6))
        init = world.state.copy()
        init.base_pos = init.base_pos + np.array([5e-4, -5e-4, 5e-4])
        # Feet start pinned at their true ground points with tight
        # covariance: the base offset is then observable and absorbed by
        # the base states.
        truth = update_kinematics(biped, world.state)
        feet_true = {}
        for f in frames_from(quiet_config):
            li = biped.link_index(f.link)
            feet_true[f.name] = truth.R[li] @ f.offset + truth.p[li]
        est.initialize(init, foot_positions=feet_true, base_cov=1e-2,
                       foot_cov=1e-12)
        for _ in range(1000):
            sensors = world.step(cmd)
            out = est.update(sensors)
        assert np.max(np.abs(out.base_pos - world.state.base_pos)) < 1e-6

    def test_covariance_spd_and_trace_contraction(self, biped, quiet_config):
        st = standing_state(biped, quiet_config)
        est = KalmanEstimator(biped, frames_from(quiet_config), dt=1e-3)
        est.initialize(st)
        sensors = exact_sensors(biped, st, {"left": True, "right": True})
        est.predict(sensors)
        tr_before = np.trace(est.P)
        out = est.correct(sensors)
        tr_after = np.trace(est.P)
        assert tr_after <= tr_before + 1e-12
        live = np.r_[0:6, 9:est.err_dim]
        eig = np.linalg.eigvalsh(out.covariance[np.ix_(live, live)])
        assert eig[0] > 0

    def test_beats_dead_reckoning_under_noise(self, biped, quiet_config):
        cfg = copy.deepcopy(quiet_config)
        cfg["sim"]["noise"].update({"enabled": True, "acc_std": 0.1})
        st = standing_state(biped, cfg)
        cmd = Command(np.asarray(cfg["sim"]["initial_q"]), np.zeros(10),
                      np.zeros(10))
        kf_errs, dr_errs = [], []
        for seed in range(12):
            cfg["sim"]["seed"] = seed
            world = build_world(biped, cfg)
            world.reset(st)
            for _ in range(300):
                world.step(cmd)
            est = KalmanEstimator(biped, frames_from(cfg), dt=1e-3,
                                  noise=KfNoise(acc=0.1))
            est.initialize(world.state.copy())
            dr_pos = world.state.base_pos.copy()
            dr_vel = world.state.base_rot() @ world.state.base_twist[3:]
            g = np.array([0.0, 0.0, -9.81])
            for _ in range(500):
                sensors = world.step(cmd)
                out = est.update(sensors)
                R = out.to_state(sensors).base_rot()
                acc_w = R @ sensors.imu_acc + g
                dr_pos = dr_pos + dr_vel * 1e-3 + 0.5 * acc_w * 1e-6
                dr_vel = dr_vel + acc_w * 1e-3
            kf_errs.append(np.linalg.norm(out.base_pos - world.state.base_pos))
            dr_errs.append(np.linalg.norm(dr_pos - world.state.base_pos))
        assert np.std(kf_errs) <= np.std(dr_errs)
        assert np.mean(kf_errs) < np.mean(dr_errs)

    def test_orientation_passthrough(self, biped, quiet_config):
        st = standing_state(biped, quiet_config)
        est = KalmanEstimator(biped, frames_from(quiet_config), dt=1e-3)
        est.initialize(st)
        out = est.update(exact_sensors(biped, st, {"left": True, "right": True}))
        assert np.allclose(out.base_quat, st.base_quat, atol=1e-12)
