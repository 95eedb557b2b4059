"""Floating-base state estimation from IMU and leg kinematics.

Two interchangeable estimators: a kinematic estimator that pins the stance
foot to the world and inverts forward kinematics, and an error-state
Kalman filter over [base position, base velocity, orientation (frozen,
IMU-trusted), per-foot position].  Both pass the IMU orientation through
unchanged.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import NumericalError
from .interface import SensorData
from .rbd import RobotModel, RobotState, update_kinematics
from .rbd import spatial
from .rbd.dynamics import GRAVITY


@dataclass
class FootFrame:
    name: str
    link: str
    offset: np.ndarray        # anchor point in the foot link frame (sole center)


@dataclass
class EstimatorOutput:
    base_pos: np.ndarray
    base_quat: np.ndarray
    base_twist: np.ndarray            # [angular; linear], base frame
    covariance: np.ndarray = None     # 15x15, KF only
    anchor_foot: str = None           # kinematic estimator only
    dead_reckoning: bool = False

    def to_state(self, sensors: SensorData) -> RobotState:
        return RobotState(
            base_pos=self.base_pos.copy(),
            base_quat=self.base_quat.copy(),
            base_twist=self.base_twist.copy(),
            q_joints=sensors.joint_pos.copy(),
            v_joints=sensors.joint_vel.copy(),
        )


def _base_relative_cache(model, sensors):
    """FK with the base at the origin carrying the IMU orientation."""
    st = RobotState(
        base_pos=np.zeros(3),
        base_quat=spatial.quat_normalize(sensors.imu_quat),
        base_twist=np.concatenate([sensors.imu_gyro, np.zeros(3)]),
        q_joints=sensors.joint_pos,
        v_joints=sensors.joint_vel,
    )
    return update_kinematics(model, st)


class KinematicEstimator:
    """Pins the anchor foot where it first touched and inverts kinematics.

    Velocity comes from the zero-anchor-velocity assumption, low-pass
    filtered (first order) before being handed to planners.
    """

    def __init__(self, model: RobotModel, feet, dt, velocity_cutoff_hz=50.0,
                 gravity=GRAVITY):
        self.model = model
        self.feet = {f.name: f for f in feet}
        self.dt = dt
        self.gravity = gravity
        alpha = 1.0 - math.exp(-2.0 * math.pi * velocity_cutoff_hz * dt)
        self._alpha = alpha if velocity_cutoff_hz > 0 else 1.0
        self.anchor = None
        self.pinned = None
        self.dead_reckoning = False
        self._v_filt = np.zeros(3)
        self._dr_vel_world = np.zeros(3)
        self._last = None

    def initialize(self, initial: RobotState, anchor: str = None):
        cache = update_kinematics(self.model, initial)
        if anchor is None:
            anchor = next(iter(self.feet))
        f = self.feet[anchor]
        li = self.model.link_index(f.link)
        self.anchor = anchor
        self.pinned = cache.R[li] @ f.offset + cache.p[li]
        self.dead_reckoning = False
        self._v_filt = initial.base_twist[3:].copy()
        self._last = EstimatorOutput(
            initial.base_pos.copy(), initial.base_quat.copy(),
            initial.base_twist.copy(), anchor_foot=anchor)

    def _anchor_point(self, cache, name):
        f = self.feet[name]
        li = self.model.link_index(f.link)
        return cache.R[li] @ f.offset + cache.p[li], li

    def update(self, sensors: SensorData) -> EstimatorOutput:
        in_contact = {n: bool(sensors.contacts.get(n, False)) for n in self.feet}
        R = spatial.quat_to_rot(spatial.quat_normalize(sensors.imu_quat))

        if not any(in_contact.values()):
            # Dead-reckon on the IMU until a foot lands again.
            g_vec = np.array([0.0, 0.0, -self.gravity])
            acc_w = R @ sensors.imu_acc + g_vec
            self._dr_vel_world = self._dr_vel_world + acc_w * self.dt
            pos = self._last.base_pos + self._dr_vel_world * self.dt
            self.dead_reckoning = True
            v_b = R.T @ self._dr_vel_world
            self._v_filt = self._v_filt + self._alpha * (v_b - self._v_filt)
            out = EstimatorOutput(
                pos, spatial.quat_normalize(sensors.imu_quat),
                np.concatenate([sensors.imu_gyro, self._v_filt]),
                anchor_foot=self.anchor, dead_reckoning=True)
            self._last = out
            return out

        cache = _base_relative_cache(self.model, sensors)

        if self.dead_reckoning or not in_contact[self.anchor]:
            candidates = [n for n, c in in_contact.items() if c]
            new_anchor = self.anchor if in_contact.get(self.anchor) else candidates[0]
            # Re-pin where the current estimate places the new anchor; the
            # base position stays continuous across the switch.
            pt0, _ = self._anchor_point(cache, new_anchor)
            self.pinned = self._last.base_pos + pt0
            self.anchor = new_anchor
            self.dead_reckoning = False

        pt0, li = self._anchor_point(cache, self.anchor)
        base_pos = self.pinned - pt0
        # Zero anchor-velocity assumption: J v = 0 solved for the base linear
        # velocity (world), then expressed in the base frame.
        anchor_vel0 = cache.point_velocity(li, pt0)
        v_base_world = -anchor_vel0
        v_b = R.T @ v_base_world
        self._v_filt = self._v_filt + self._alpha * (v_b - self._v_filt)
        self._dr_vel_world = v_base_world

        out = EstimatorOutput(
            base_pos, spatial.quat_normalize(sensors.imu_quat),
            np.concatenate([sensors.imu_gyro, self._v_filt]),
            anchor_foot=self.anchor, dead_reckoning=False)
        self._last = out
        return out


@dataclass
class KfNoise:
    acc: float = 0.05             # m/s^2, process (accelerometer) noise
    foot_stationary: float = 1e-4  # m/sqrt(s), contact-foot random walk
    foot_swing: float = 1.0        # m/sqrt(s), swing-foot random walk
    meas: float = 1e-4             # m, relative foot position measurement
    meas_swing_scale: float = 1e3  # inflation for non-contact feet


class KalmanEstimator:
    """Error-state KF; the 15x15 covariance keeps a frozen orientation block."""

    IDX_P = slice(0, 3)
    IDX_V = slice(3, 6)
    IDX_TH = slice(6, 9)

    def __init__(self, model: RobotModel, feet, dt, noise: KfNoise = None,
                 gravity=GRAVITY):
        self.model = model
        self.feet = list(feet)
        self.dt = dt
        self.noise = noise or KfNoise()
        self.gravity = gravity
        self.reset_count = 0
        n = len(self.feet)
        # State vector: [p, v, foot_0, foot_1, ...]; the error state inserts
        # a frozen 3-entry orientation block after the velocity.
        self._foot_x = {f.name: slice(6 + 3 * k, 9 + 3 * k)
                        for k, f in enumerate(self.feet)}
        self._foot_err = {f.name: slice(9 + 3 * k, 12 + 3 * k)
                          for k, f in enumerate(self.feet)}
        self.err_dim = 9 + 3 * n
        self.x = np.zeros(6 + 3 * n)
        self.P = self._fresh_cov(1e-6)
        self._gyro = np.zeros(3)
        self._quat = np.array([1.0, 0.0, 0.0, 0.0])

    def _fresh_cov(self, scale):
        P = np.eye(self.err_dim) * scale
        P[self.IDX_TH, :] = 0.0
        P[:, self.IDX_TH] = 0.0
        return P

    def initialize(self, initial: RobotState, foot_positions=None,
                   base_cov=1e-6, foot_cov=1e-6):
        """foot_positions optionally pins feet at known world points (e.g.
        on the ground plane); otherwise they come from forward kinematics of
        the initial state and share any error the base guess carries.  The
        base/foot covariance split decides who absorbs early corrections."""
        cache = update_kinematics(self.model, initial)
        self.x = np.zeros(6 + 3 * len(self.feet))
        self.x[0:3] = initial.base_pos
        R = initial.base_rot()
        self.x[3:6] = R @ initial.base_twist[3:]
        for f in self.feet:
            if foot_positions is not None and f.name in foot_positions:
                self.x[self._foot_x[f.name]] = np.asarray(foot_positions[f.name])
            else:
                li = self.model.link_index(f.link)
                self.x[self._foot_x[f.name]] = cache.R[li] @ f.offset + cache.p[li]
        self.P = self._fresh_cov(base_cov)
        for f in self.feet:
            sl = self._foot_err[f.name]
            self.P[sl, sl] = np.eye(3) * foot_cov
        self._quat = initial.base_quat.copy()

    def predict(self, sensors: SensorData, dt=None):
        dt = dt or self.dt
        if dt <= 0:
            raise ValueError("dt must be > 0")
        R = spatial.quat_to_rot(spatial.quat_normalize(sensors.imu_quat))
        g_vec = np.array([0.0, 0.0, -self.gravity])
        acc_w = R @ sensors.imu_acc + g_vec
        self.x[0:3] += self.x[3:6] * dt + 0.5 * acc_w * dt**2
        self.x[3:6] += acc_w * dt
        F = np.eye(self.err_dim)
        F[0:3, 3:6] = np.eye(3) * dt
        Q = np.zeros((self.err_dim, self.err_dim))
        Q[0:3, 0:3] = np.eye(3) * (0.5 * self.noise.acc * dt**2) ** 2
        Q[3:6, 3:6] = np.eye(3) * (self.noise.acc * dt) ** 2
        for f in self.feet:
            contact = bool(sensors.contacts.get(f.name, False))
            sd = self.noise.foot_stationary if contact else self.noise.foot_swing
            sl = self._foot_err[f.name]
            Q[sl, sl] = np.eye(3) * sd**2 * dt
        self.P = F @ self.P @ F.T + Q
        self.P = 0.5 * (self.P + self.P.T)
        self.P[self.IDX_TH, :] = 0.0
        self.P[:, self.IDX_TH] = 0.0
        self._gyro = sensors.imu_gyro.copy()
        self._quat = spatial.quat_normalize(sensors.imu_quat)

    def correct(self, sensors: SensorData) -> EstimatorOutput:
        cache = _base_relative_cache(self.model, sensors)
        R = spatial.quat_to_rot(spatial.quat_normalize(sensors.imu_quat))
        m = 3 * len(self.feet)
        H = np.zeros((m, self.err_dim))
        y = np.zeros(m)
        Rm = np.zeros(m)
        for k, f in enumerate(self.feet):
            li = self.model.link_index(f.link)
            meas = R.T @ (cache.R[li] @ f.offset + cache.p[li])
            pred = R.T @ (self.x[self._foot_x[f.name]] - self.x[0:3])
            rows = slice(3 * k, 3 * k + 3)
            y[rows] = meas - pred
            H[rows, 0:3] = -R.T
            H[rows, self._foot_err[f.name]] = R.T
            sd = self.noise.meas
            if not sensors.contacts.get(f.name, False):
                sd = sd * self.noise.meas_swing_scale
            Rm[rows] = sd**2
        S = H @ self.P @ H.T + np.diag(Rm)
        try:
            K = self.P @ H.T @ np.linalg.inv(S)
        except np.linalg.LinAlgError:
            self._reset()
            raise NumericalError("KF innovation covariance singular; filter reset")
        dx = K @ y
        self.x[0:6] += dx[0:6]
        for f in self.feet:
            self.x[self._foot_x[f.name]] += dx[self._foot_err[f.name]]
        IKH = np.eye(self.err_dim) - K @ H
        self.P = IKH @ self.P @ IKH.T + K @ np.diag(Rm) @ K.T
        self.P = 0.5 * (self.P + self.P.T)
        self.P[self.IDX_TH, :] = 0.0
        self.P[:, self.IDX_TH] = 0.0
        # SPD check on the live blocks (orientation rows are frozen zeros).
        live = np.r_[0:6, 9:self.err_dim]
        eig = np.linalg.eigvalsh(self.P[np.ix_(live, live)])
        if eig[0] < -1e-12:
            self._reset()
            raise NumericalError("KF covariance lost positive definiteness; reset")
        cov = self.P.copy()
        cov[self.IDX_TH, self.IDX_TH] = np.eye(3) * 1e-12
        v_b = R.T @ self.x[3:6]
        return EstimatorOutput(
            base_pos=self.x[0:3].copy(),
            base_quat=self._quat.copy(),
            base_twist=np.concatenate([self._gyro, v_b]),
            covariance=cov,
        )

    def update(self, sensors: SensorData) -> EstimatorOutput:
        self.predict(sensors)
        return self.correct(sensors)

    def _reset(self):
        self.reset_count += 1
        self.P = self._fresh_cov(1e-4)
