"""Robot model and state containers.

A RobotModel is an immutable kinematic tree parsed from a URDF subset.
Coordinate layout: a floating base contributes position(3) + quaternion(4)
to q and a base-frame twist [angular; linear] as the first 6 velocity
coordinates; every 1-DOF joint appends one coordinate to both q and v in
tree (parent-before-child) order.
"""
from __future__ import annotations

import enum
import math
from dataclasses import dataclass

import numpy as np

from ..errors import InputError
from . import spatial


class JointType(enum.Enum):
    FLOATING = "floating"
    REVOLUTE = "revolute"
    PRISMATIC = "prismatic"
    FIXED = "fixed"


@dataclass(frozen=True)
class Link:
    name: str
    parent: int                 # index into RobotModel.links, -1 for root
    joint_type: JointType
    joint_name: str
    axis: np.ndarray            # unit axis in the link frame (1-DOF joints)
    offset_R: np.ndarray        # joint origin rotation (parent frame -> joint frame)
    offset_p: np.ndarray
    mass: float
    com: np.ndarray             # CoM offset in the link frame
    inertia: np.ndarray         # 3x3 rotational inertia about the CoM
    effort_limit: float = math.inf
    lower_limit: float = -math.inf
    upper_limit: float = math.inf
    q_index: int = -1           # first generalized-position coordinate
    v_index: int = -1           # first generalized-velocity coordinate

    @property
    def dof(self):
        if self.joint_type == JointType.FLOATING:
            return 6
        if self.joint_type == JointType.FIXED:
            return 0
        return 1


class RobotModel:
    """Immutable kinematic tree; shareable across threads after construction."""

    def __init__(self, links, floating_base):
        self.links = tuple(links)
        self.floating_base = bool(floating_base)
        self.name_to_index = {l.name: i for i, l in enumerate(self.links)}
        self.n_v = sum(l.dof for l in self.links)
        self.n_q = self.n_v + (1 if floating_base else 0)  # quaternion adds one
        self.actuated_mask = np.ones(self.n_v, dtype=bool)
        if floating_base:
            self.actuated_mask[:6] = False
        self.n_joints = int(np.sum(self.actuated_mask))
        self.joint_links = tuple(
            i for i, l in enumerate(self.links)
            if l.dof == 1
        )
        self.joint_names = tuple(self.links[i].joint_name for i in self.joint_links)
        self.effort_limits = np.array([self.links[i].effort_limit for i in self.joint_links])
        self.lower_limits = np.array([self.links[i].lower_limit for i in self.joint_links])
        self.upper_limits = np.array([self.links[i].upper_limit for i in self.joint_links])
        self.total_mass = float(sum(l.mass for l in self.links))

        # Static precomputations for the per-tick dynamics code.
        self.spatial_inertias = tuple(
            spatial.spatial_inertia(l.mass, l.com, l.inertia) for l in self.links
        )
        self.link_dofs = np.array([l.dof for l in self.links], dtype=int)
        # Rodrigues generators (K, K^2) per link axis for fast joint rotation.
        self.axis_K = tuple(spatial.skew(l.axis) for l in self.links)
        self.axis_K2 = tuple(K @ K for K in self.axis_K)

        # Flat arrays for the compiled dynamics core.
        jt_map = {JointType.FLOATING: 0, JointType.REVOLUTE: 1,
                  JointType.PRISMATIC: 2, JointType.FIXED: 3}
        self.pk_parent = np.array([l.parent for l in self.links], dtype=np.int64)
        self.pk_jtype = np.array([jt_map[l.joint_type] for l in self.links],
                                 dtype=np.int64)
        self.pk_vindex = np.array([l.v_index for l in self.links], dtype=np.int64)
        self.pk_jcoord = np.array(
            [self.joint_coord(i) if l.dof == 1 else -1
             for i, l in enumerate(self.links)], dtype=np.int64)
        self.pk_axis = np.ascontiguousarray([l.axis for l in self.links])
        self.pk_K = np.ascontiguousarray(self.axis_K)
        self.pk_K2 = np.ascontiguousarray(self.axis_K2)
        self.pk_offR = np.ascontiguousarray([l.offset_R for l in self.links])
        self.pk_offp = np.ascontiguousarray([l.offset_p for l in self.links])
        self.pk_I6 = np.ascontiguousarray(self.spatial_inertias)
        self.pk_mass = np.array([l.mass for l in self.links])
        self.pk_com = np.ascontiguousarray([l.com for l in self.links])
        n = len(self.links)
        self.ancestry = np.zeros((n, self.n_v), dtype=bool)
        for i, lk in enumerate(self.links):
            j = i
            while j >= 0:
                lj = self.links[j]
                if lj.dof:
                    self.ancestry[i, lj.v_index:lj.v_index + lj.dof] = True
                j = lj.parent

    def link_index(self, name):
        return self.name_to_index[name]

    def joint_index(self, joint_name):
        """Index into the joint coordinate vector (not counting the base)."""
        return self.joint_names.index(joint_name)

    def joint_coord(self, link_index):
        """Joint-vector coordinate of a 1-DOF link (base coordinates excluded)."""
        lk = self.links[link_index]
        return lk.v_index - 6 if self.floating_base else lk.v_index

    def neutral_state(self):
        nj = self.n_joints
        return RobotState(
            base_pos=np.zeros(3),
            base_quat=np.array([1.0, 0.0, 0.0, 0.0]),
            base_twist=np.zeros(6),
            q_joints=np.zeros(nj),
            v_joints=np.zeros(nj),
        )


@dataclass
class RobotState:
    """Floating-base pose/twist plus joint positions and velocities.

    base_twist is [angular; linear] expressed in the base frame.  For a
    fixed-base model the base fields are identity/zero and ignored.
    """

    base_pos: np.ndarray
    base_quat: np.ndarray  # (w, x, y, z)
    base_twist: np.ndarray
    q_joints: np.ndarray
    v_joints: np.ndarray

    def validate(self, model: RobotModel):
        if len(self.q_joints) != model.n_joints or len(self.v_joints) != model.n_joints:
            raise InputError(
                f"state has {len(self.q_joints)} joints, model expects {model.n_joints}"
            )
        if abs(np.linalg.norm(self.base_quat) - 1.0) > 1e-9:
            raise InputError("base quaternion not normalized")
        for arr in (self.base_pos, self.base_quat, self.base_twist,
                    self.q_joints, self.v_joints):
            if not np.all(np.isfinite(arr)):
                raise InputError("non-finite robot state")

    def copy(self):
        return RobotState(
            self.base_pos.copy(), self.base_quat.copy(), self.base_twist.copy(),
            self.q_joints.copy(), self.v_joints.copy(),
        )

    def v_full(self, model: RobotModel):
        if model.floating_base:
            return np.concatenate([self.base_twist, self.v_joints])
        return self.v_joints.copy()

    def base_rot(self):
        return spatial.quat_to_rot(self.base_quat)


def integrate_state(model: RobotModel, state: RobotState, v, dt) -> RobotState:
    """Integrate a generalized velocity for dt seconds.

    Joint coordinates integrate additively; the base orientation integrates
    through the exponential map of the body-frame angular velocity and the
    base position through the rotated body-frame linear velocity.
    """
    v = np.asarray(v, dtype=float)
    if not (np.all(np.isfinite(v)) and math.isfinite(dt)) or dt < 0:
        raise InputError("non-finite velocity or negative dt")
    if len(v) != model.n_v:
        raise InputError(f"velocity has length {len(v)}, model expects {model.n_v}")
    out = state.copy()
    if model.floating_base:
        omega, vlin = v[:3], v[3:6]
        R = spatial.quat_to_rot(state.base_quat)
        out.base_pos = state.base_pos + R @ (vlin * dt)
        dq = spatial.quat_from_rotvec(omega * dt)
        out.base_quat = spatial.quat_normalize(spatial.quat_mul(state.base_quat, dq))
        out.q_joints = state.q_joints + v[6:] * dt
    else:
        out.q_joints = state.q_joints + v * dt
    return out
