"""Managers bridge planner outputs into the task/contact container."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..locomotion import GrfTrajectory, SwingTrajectory
from ..rbd import spatial
from ..wbc import TciContainer


@dataclass
class FootSpec:
    name: str
    link: str
    toe: np.ndarray
    heel: np.ndarray
    center: np.ndarray
    corners: np.ndarray
    hip_offset: np.ndarray

    @staticmethod
    def from_config(name, cfg):
        return FootSpec(
            name=name, link=cfg["link"],
            toe=np.asarray(cfg["toe"], dtype=float),
            heel=np.asarray(cfg["heel"], dtype=float),
            center=np.asarray(cfg["center"], dtype=float),
            corners=np.asarray(cfg["corners"], dtype=float),
            hip_offset=np.asarray(cfg["hip_offset"], dtype=float),
        )


class FootTaskManager:
    """Swing-foot pose tasks for one foot; inactive while in stance."""

    def __init__(self, container: TciContainer, foot: FootSpec, pos_task, ori_task):
        self.foot = foot
        self.pos_task = pos_task
        self.ori_task = ori_task
        self.swing = None
        self.swing_start = 0.0
        self._lift = None
        self._apex = 0.05
        self._duration = 0.3

    def start_swing(self, t, lift_pos, lift_quat, target_pose, apex, duration,
                    touch_down_z=0.0):
        self._lift = (np.asarray(lift_pos, dtype=float).copy(),
                      np.asarray(lift_quat, dtype=float).copy())
        self._apex = apex
        self._duration = duration
        self.swing_start = t
        self._build(target_pose, touch_down_z)
        self.pos_task.active = True
        self.ori_task.active = True

    def _build(self, target_pose, touch_down_z):
        td_pos = np.array([target_pose[0], target_pose[1], touch_down_z])
        td_quat = spatial.quat_from_rotvec(np.array([0.0, 0.0, target_pose[2]]))
        self.swing = SwingTrajectory(self._lift[0], self._lift[1], td_pos, td_quat,
                                     self._apex, self._duration)

    def retarget(self, target_pose, touch_down_z=0.0):
        """Rebuild the trajectory toward an updated touchdown target."""
        if self.swing is None:
            return
        self._build(target_pose, touch_down_z)

    def update(self, t):
        if self.swing is None:
            return
        r = self.swing.at(t - self.swing_start)
        self.pos_task.set_target(x_des=r.pos, v_des=r.vel, a_ff=r.acc)
        self.ori_task.set_target(x_des=r.quat, v_des=r.ang_vel)

    def end_swing(self):
        self.swing = None
        self.pos_task.active = False
        self.ori_task.active = False


class ContactManager:
    """Normal-force budget ramps for smooth contact transitions."""

    def __init__(self, container: TciContainer, full_fz=500.0):
        self.container = container
        self.full_fz = full_fz
        self._ramps = {}       # contact name -> (t0, t1, from, to)

    def set_active(self, name, active):
        c = self.container.contact(name)
        c.active = active
        if active and c.max_fz <= 1e-9:
            c.max_fz = 1e-6    # reopened contacts ramp up from nothing

    def start_ramp(self, name, t, duration, target):
        c = self.container.contact(name)
        self._ramps[name] = (t, t + max(duration, 1e-6), c.max_fz, target)

    def update(self, t):
        done = []
        for name, (t0, t1, f0, f1) in self._ramps.items():
            s = min(max((t - t0) / (t1 - t0), 0.0), 1.0)
            c = self.container.contact(name)
            c.max_fz = f0 + (f1 - f0) * s
            if s >= 1.0:
                done.append(name)
        for name in done:
            del self._ramps[name]

    def snap(self, name, value):
        self._ramps.pop(name, None)
        self.container.contact(name).max_fz = value


class GrfManager:
    """Desired reaction forces for the WBC, static or MPC-fed."""

    def __init__(self, container: TciContainer, total_mass, gravity=9.81):
        self.container = container
        self.total_mass = total_mass
        self.gravity = gravity
        self.mode = "static"
        self.grf_traj: GrfTrajectory = None
        self.grf_t0 = 0.0
        self.foot_order = []

    def set_grf_trajectory(self, traj: GrfTrajectory, t):
        self.grf_traj = traj
        self.grf_t0 = t

    def f_des(self, t):
        """Stacked desired forces aligned with the active ContactSet order."""
        active = self.container.active_contacts()
        if not active:
            return None
        n_pts = sum(c.n_points for c in active)
        out = np.zeros(3 * n_pts)
        if self.mode == "mpc" and self.grf_traj is not None:
            k = int((t - self.grf_t0) / self.grf_traj.dt)
            idx = 0
            for c in active:
                try:
                    fi = self.foot_order.index(c.name)
                except ValueError:
                    fi = -1
                f_foot = self.grf_traj.force_at_step(k, fi) if fi >= 0 else np.zeros(3)
                for _ in range(c.n_points):
                    out[3 * idx:3 * idx + 3] = f_foot / c.n_points
                    idx += 1
            return out
        # Static distribution proportional to the ramped normal budgets.
        weights = []
        for c in active:
            weights.extend([max(c.max_fz, 0.0) / c.n_points] * c.n_points)
        weights = np.array(weights)
        total = weights.sum()
        if total <= 1e-9:
            weights = np.ones(n_pts)
            total = float(n_pts)
        fz_total = self.total_mass * self.gravity
        out[2::3] = fz_total * weights / total
        return out
