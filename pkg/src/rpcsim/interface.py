"""Interface-boundary value types exchanged each servo tick.

SensorData flows from the test environment (or hardware bridge) to the
planning/control layer; Command flows back and is applied by the joint
impedance actuator.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np


@dataclass
class SensorData:
    t: float
    imu_quat: np.ndarray          # (w, x, y, z), from the IMU's own filter
    imu_gyro: np.ndarray          # rad/s, body frame
    imu_acc: np.ndarray           # m/s^2, body frame, gravity included
    joint_pos: np.ndarray
    joint_vel: np.ndarray
    contacts: dict                # foot name -> bool

    def copy(self):
        return SensorData(
            self.t, self.imu_quat.copy(), self.imu_gyro.copy(), self.imu_acc.copy(),
            self.joint_pos.copy(), self.joint_vel.copy(), dict(self.contacts),
        )


@dataclass
class Command:
    """Joint position, velocity and feed-forward torque triple."""

    q_des: np.ndarray
    v_des: np.ndarray
    tau_ff: np.ndarray

    def copy(self):
        return Command(self.q_des.copy(), self.v_des.copy(), self.tau_ff.copy())

    @staticmethod
    def zeros(n):
        return Command(np.zeros(n), np.zeros(n), np.zeros(n))

    def validate(self, n):
        for arr in (self.q_des, self.v_des, self.tau_ff):
            if len(arr) != n or not np.all(np.isfinite(arr)):
                raise ValueError("command has wrong dimension or non-finite values")
