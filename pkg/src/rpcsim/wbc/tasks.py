"""Task primitives for whole-body control.

A Task carries its own PD gains, weight (soft hierarchy) and priority rank
(strict hierarchy), so the live gain-tuning path can mutate them atomically
between ticks.
"""
from __future__ import annotations

import enum
from dataclasses import dataclass

import numpy as np

from ..errors import InputError
from ..rbd import DynamicsCache, RobotState
from ..rbd import spatial


class TaskKind(enum.Enum):
    JOINT = "joint"
    SELECTED_JOINT = "selected_joint"
    LINK_POS = "link_pos"
    LINK_ORI = "link_ori"
    COM = "com"


@dataclass
class Task:
    name: str
    kind: TaskKind
    dim: int
    link: str = None
    point_offset: np.ndarray = None      # body-frame offset for LINK_POS
    joint_indices: np.ndarray = None     # SELECTED_JOINT only
    kp: np.ndarray = None
    kd: np.ndarray = None
    weight: float = 1.0
    priority: int = 1                    # WBIC rank; contacts hold rank 0
    active: bool = True
    x_des: np.ndarray = None             # quaternion (wxyz) for LINK_ORI
    v_des: np.ndarray = None
    a_ff: np.ndarray = None

    def __post_init__(self):
        d = self.dim
        if self.kp is None:
            self.kp = np.zeros(d)
        if self.kd is None:
            self.kd = np.zeros(d)
        self.kp = np.broadcast_to(np.asarray(self.kp, dtype=float), (d,)).copy()
        self.kd = np.broadcast_to(np.asarray(self.kd, dtype=float), (d,)).copy()
        if np.any(self.kp < 0) or np.any(self.kd < 0):
            raise InputError(f"task '{self.name}': gains must be >= 0")
        if self.weight <= 0:
            raise InputError(f"task '{self.name}': weight must be > 0")
        if self.v_des is None:
            self.v_des = np.zeros(d)
        if self.a_ff is None:
            self.a_ff = np.zeros(d)
        if self.x_des is None:
            self.x_des = np.array([1.0, 0, 0, 0]) if self.kind == TaskKind.LINK_ORI \
                else np.zeros(d)

    def set_target(self, x_des=None, v_des=None, a_ff=None):
        if x_des is not None:
            self.x_des = np.asarray(x_des, dtype=float).copy()
        if v_des is not None:
            self.v_des = np.asarray(v_des, dtype=float).copy()
        if a_ff is not None:
            self.a_ff = np.asarray(a_ff, dtype=float).copy()

    def set_gains(self, kp=None, kd=None):
        if kp is not None:
            kp = np.broadcast_to(np.asarray(kp, dtype=float), (self.dim,))
            if np.any(kp < 0):
                raise InputError("kp must be >= 0")
            self.kp = kp.copy()
        if kd is not None:
            kd = np.broadcast_to(np.asarray(kd, dtype=float), (self.dim,))
            if np.any(kd < 0):
                raise InputError("kd must be >= 0")
            self.kd = kd.copy()


def joint_task(name, n_joints, **kw):
    return Task(name=name, kind=TaskKind.JOINT, dim=n_joints, **kw)


def selected_joint_task(name, joint_indices, **kw):
    idx = np.asarray(joint_indices, dtype=int)
    return Task(name=name, kind=TaskKind.SELECTED_JOINT, dim=len(idx),
                joint_indices=idx, **kw)


def link_pos_task(name, link, point_offset=None, **kw):
    off = np.zeros(3) if point_offset is None else np.asarray(point_offset, dtype=float)
    return Task(name=name, kind=TaskKind.LINK_POS, dim=3, link=link,
                point_offset=off, **kw)


def link_ori_task(name, link, **kw):
    return Task(name=name, kind=TaskKind.LINK_ORI, dim=3, link=link, **kw)


def com_task(name="com", **kw):
    return Task(name=name, kind=TaskKind.COM, dim=3, **kw)


def task_jacobian(task: Task, cache: DynamicsCache):
    """(J, bias) with J dim x n_v and bias = Jdot v for the task space."""
    model = cache.model
    if task.kind in (TaskKind.JOINT, TaskKind.SELECTED_JOINT):
        if task.kind == TaskKind.JOINT:
            idx = np.arange(model.n_joints)
        else:
            idx = task.joint_indices
        J = np.zeros((len(idx), model.n_v))
        off = 6 if model.floating_base else 0
        J[np.arange(len(idx)), off + idx] = 1.0
        return J, np.zeros(len(idx))
    if task.kind == TaskKind.COM:
        return cache.com_jacobian(), cache.com_bias_acc()
    li = model.link_index(task.link)
    if task.kind == TaskKind.LINK_ORI:
        J6 = cache.link_jacobian(li)
        return J6[:3], cache.link_bias_acc(li)[:3]
    # LINK_POS at an optional body-fixed point
    p_world = cache.R[li] @ task.point_offset + cache.p[li]
    return cache.point_jacobian(li, p_world), cache.point_bias_acc(li, p_world)


def task_state(task: Task, cache: DynamicsCache, state: RobotState):
    """Current task-space position (or rotation) and velocity."""
    model = cache.model
    if task.kind in (TaskKind.JOINT, TaskKind.SELECTED_JOINT):
        idx = np.arange(model.n_joints) if task.kind == TaskKind.JOINT \
            else task.joint_indices
        return state.q_joints[idx], state.v_joints[idx]
    if task.kind == TaskKind.COM:
        return cache.com_position, cache.com_velocity
    li = model.link_index(task.link)
    if task.kind == TaskKind.LINK_ORI:
        v6 = cache.link_velocity(li)
        return cache.R[li], v6[:3]
    p_world = cache.R[li] @ task.point_offset + cache.p[li]
    return p_world, cache.point_velocity(li, p_world)


def task_command(task: Task, cache: DynamicsCache, state: RobotState):
    """PD servo law in task space: a_ff + kp o err + kd o (v_des - v).

    Returns (acc_cmd, err, vel_err).  Orientation error is the log map of
    the relative rotation, expressed in the world frame.
    """
    x, v = task_state(task, cache, state)
    if task.kind == TaskKind.LINK_ORI:
        R_des = spatial.quat_to_rot(np.asarray(task.x_des, dtype=float))
        err = spatial.so3_log(R_des @ x.T)
    else:
        err = np.asarray(task.x_des, dtype=float) - x
    vel_err = np.asarray(task.v_des, dtype=float) - v
    acc = np.asarray(task.a_ff, dtype=float) + task.kp * err + task.kd * vel_err
    return acc, err, vel_err
