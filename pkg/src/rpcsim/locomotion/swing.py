"""Swing-foot reference trajectories.

xy follows minimum-jerk profiles, z chains two profiles through the apex,
and orientation interpolates along the relative rotation vector with
minimum-jerk timing (C1 at the apex junction by the zero-velocity/zero-
acceleration endpoint property).
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .. import trajectories as traj
from ..errors import InputError
from ..rbd import spatial


@dataclass
class SwingResult:
    pos: np.ndarray
    vel: np.ndarray
    acc: np.ndarray
    quat: np.ndarray
    ang_vel: np.ndarray


class SwingTrajectory:
    def __init__(self, lift_off_pos, lift_off_quat, touch_down_pos, touch_down_quat,
                 apex_height, duration):
        if duration <= 0:
            raise InputError("swing duration must be > 0")
        p0 = np.asarray(lift_off_pos, dtype=float)
        p1 = np.asarray(touch_down_pos, dtype=float)
        if not (np.all(np.isfinite(p0)) and np.all(np.isfinite(p1))):
            raise InputError("non-finite swing endpoints")
        self.duration = float(duration)
        self.p0, self.p1 = p0, p1
        self.q0 = spatial.quat_normalize(np.asarray(lift_off_quat, dtype=float))
        self.q1 = spatial.quat_normalize(np.asarray(touch_down_quat, dtype=float))
        self.x_prof = traj.min_jerk(p0[0], p1[0], duration)
        self.y_prof = traj.min_jerk(p0[1], p1[1], duration)
        apex_z = max(p0[2], p1[2]) + apex_height
        half = duration / 2.0
        self.z_up = traj.min_jerk(p0[2], apex_z, half)
        self.z_down = traj.min_jerk(apex_z, p1[2], half)
        # Orientation: rotation vector from q0 to q1 with min-jerk timing.
        R0 = spatial.quat_to_rot(self.q0)
        R1 = spatial.quat_to_rot(self.q1)
        self.rotvec = spatial.so3_log(R1 @ R0.T)
        self.s_prof = traj.min_jerk(0.0, 1.0, duration)

    def at(self, t) -> SwingResult:
        if not math.isfinite(t):
            raise InputError("non-finite swing time")
        x, vx, ax = traj.evaluate(self.x_prof, t)
        y, vy, ay = traj.evaluate(self.y_prof, t)
        half = self.duration / 2.0
        if t <= half:
            z, vz, az = traj.evaluate(self.z_up, t)
        else:
            z, vz, az = traj.evaluate(self.z_down, t - half)
        s, sd, _ = traj.evaluate(self.s_prof, t)
        dq = spatial.quat_from_rotvec(self.rotvec * s)
        quat = spatial.quat_normalize(spatial.quat_mul(dq, self.q0))
        ang_vel = self.rotvec * sd
        return SwingResult(
            pos=np.array([x, y, z]), vel=np.array([vx, vy, vz]),
            acc=np.array([ax, ay, az]), quat=quat, ang_vel=ang_vel)


def swing_trajectory(lift_off_pos, lift_off_quat, touch_down_pos, touch_down_quat,
                     apex_height, duration, t) -> SwingResult:
    return SwingTrajectory(lift_off_pos, lift_off_quat, touch_down_pos,
                           touch_down_quat, apex_height, duration).at(t)
