"""Per-tick kinematics and dynamics quantities.

DynamicsCache is rebuilt from a RobotState each control/physics step and
holds world link poses, the joint-space mass matrix (composite rigid body
algorithm), bias and gravity generalized forces (recursive Newton-Euler),
CoM quantities, and lazily evaluated link Jacobians expressed in a
world-aligned frame at the link origin, ordered [angular; linear].
"""
from __future__ import annotations

import numpy as np

from . import spatial
from . import _fastdyn
from .model import JointType, RobotModel, RobotState

GRAVITY = 9.81


class DynamicsCache:
    def __init__(self, model: RobotModel, state: RobotState, gravity=GRAVITY):
        state.validate(model)
        self.model = model
        self.state = state
        self.gravity = gravity
        self.g_world = np.array([0.0, 0.0, -gravity])
        n = len(model.links)
        self.R = [None] * n            # world rotation per link
        self.p = [None] * n            # world origin per link
        self._rel_R = [None] * n       # link pose in parent frame (after joint motion)
        self._rel_p = [None] * n
        self._X = [None] * n           # 6x6 motion transform parent -> link
        self._v = [None] * n           # spatial velocity in link coordinates
        self._avp = [None] * n         # velocity-product spatial acceleration (link coords)
        self._avp_inc = [None] * n     # this joint's velocity-product increment
        self._jac = {}                 # lazy link Jacobians
        self._com_jac = None
        self.v_full = state.v_full(model)

        if _fastdyn.HAVE_NUMBA:
            baseR = spatial.quat_to_rot(state.base_quat) if model.floating_base \
                else np.eye(3)
            basep = state.base_pos.astype(float) if model.floating_base \
                else np.zeros(3)
            basetw = state.base_twist.astype(float) if model.floating_base \
                else np.zeros(6)
            (R, P, relR, relp, X, V, AVP, A, bias_tot, bias_g, cp, cv) = \
                _fastdyn.fk_dynamics(
                    model.pk_parent, model.pk_jtype, model.pk_vindex,
                    model.pk_jcoord, model.pk_axis, model.pk_K, model.pk_K2,
                    model.pk_offR, model.pk_offp, model.pk_I6, model.pk_mass,
                    model.pk_com, baseR, basep, basetw,
                    state.q_joints.astype(float), state.v_joints.astype(float),
                    float(gravity), model.n_v, model.floating_base)
            self.R = list(R)
            self.p = list(P)
            self._rel_R = list(relR)
            self._rel_p = list(relp)
            self._X = list(X)
            self._X[0] = None
            self._v = list(V)
            self._avp = list(AVP)
            self._mass_matrix = A
            self._bias = bias_tot - bias_g
            self._gravity_vec = bias_g
            self._com_pos = cp
            self._com_vel = cv
        else:
            self._forward_kinematics()
            self._mass_matrix = None
            self._bias = None
            self._gravity_vec = None
            self._com_pos = None
            self._com_vel = None
        self._column_geometry()

    @property
    def mass_matrix(self):
        if self._mass_matrix is None:
            self._mass_matrix = self._crba()
        return self._mass_matrix

    @property
    def bias_forces(self):
        self._ensure_bias()
        return self._bias

    @property
    def gravity_forces(self):
        self._ensure_bias()
        return self._gravity_vec

    def _ensure_bias(self):
        if self._bias is None:
            total, g = self._rnea_bias()
            self._bias = total - g
            self._gravity_vec = g

    @property
    def com_position(self):
        if self._com_pos is None:
            self._com()
        return self._com_pos

    @property
    def com_velocity(self):
        if self._com_vel is None:
            self._com()
        return self._com_vel

    # --- kinematics --------------------------------------------------------

    def _forward_kinematics(self):
        model = self.model
        st = self.state
        qj_all = st.q_joints
        vj_all = st.v_joints
        for i, lk in enumerate(model.links):
            if lk.parent < 0:
                if lk.joint_type == JointType.FLOATING:
                    R = spatial.quat_to_rot(st.base_quat)
                    p = st.base_pos.copy()
                    v = st.base_twist.copy()
                else:
                    R, p = np.eye(3), np.zeros(3)
                    v = np.zeros(6)
                self.R[i], self.p[i] = R, p
                self._rel_R[i], self._rel_p[i] = R, p
                self._v[i] = v
                self._avp[i] = np.zeros(6)
                self._avp_inc[i] = np.zeros(6)
                continue

            jc = model.joint_coord(i) if lk.dof == 1 else -1
            if lk.joint_type == JointType.REVOLUTE:
                th = qj_all[jc]
                Rj = np.sin(th) * model.axis_K[i] + (1.0 - np.cos(th)) * model.axis_K2[i]
                Rj[0, 0] += 1.0
                Rj[1, 1] += 1.0
                Rj[2, 2] += 1.0
                rel_R = lk.offset_R @ Rj
                rel_p = lk.offset_p
            elif lk.joint_type == JointType.PRISMATIC:
                rel_R = lk.offset_R
                rel_p = lk.offset_p + rel_R @ (lk.axis * qj_all[jc])
            else:  # fixed
                rel_R = lk.offset_R
                rel_p = lk.offset_p

            par = lk.parent
            self._rel_R[i], self._rel_p[i] = rel_R, rel_p
            self.R[i] = self.R[par] @ rel_R
            self.p[i] = self.R[par] @ rel_p + self.p[par]

            RT = rel_R.T
            vp = self._v[par]
            ap = self._avp[par]
            w = RT @ vp[:3]
            v = np.empty(6)
            v[:3] = w
            v[3:] = RT @ (vp[3:] + spatial.cross3(vp[:3], rel_p))
            avp = np.empty(6)
            avp[:3] = RT @ ap[:3]
            avp[3:] = RT @ (ap[3:] + spatial.cross3(ap[:3], rel_p))
            inc = np.zeros(6)
            if lk.dof == 1:
                qd = vj_all[jc]
                if lk.joint_type == JointType.REVOLUTE:
                    vj_ang = lk.axis * qd
                    # crm(v, [vj_ang; 0])
                    inc[:3] = spatial.cross3(v[:3], vj_ang)
                    inc[3:] = spatial.cross3(v[3:], vj_ang)
                    v[:3] += vj_ang
                else:
                    vj_lin = lk.axis * qd
                    inc[3:] = spatial.cross3(v[:3], vj_lin)
                    v[3:] += vj_lin
                avp += inc
            self._v[i] = v
            self._avp[i] = avp
            self._avp_inc[i] = inc

    def _column_geometry(self):
        """World axis direction / anchor point per velocity coordinate."""
        model = self.model
        n_v = model.n_v
        W = np.zeros((3, n_v))
        P = np.zeros((3, n_v))
        rot = np.zeros(n_v, dtype=bool)
        for i, lk in enumerate(model.links):
            if lk.dof == 6:
                W[:, 0:3] = self.R[i]
                W[:, 3:6] = self.R[i]
                P[:, 0:3] = self.p[i][:, None]
                rot[0:3] = True
            elif lk.dof == 1:
                vi = lk.v_index
                W[:, vi] = self.R[i] @ lk.axis
                if lk.joint_type == JointType.REVOLUTE:
                    P[:, vi] = self.p[i]
                    rot[vi] = True
        self._col_W = W
        self._col_P = P
        self._col_rot = rot

    # --- composite rigid body algorithm ------------------------------------

    def _ensure_X(self):
        if self._X[-1] is None and len(self._X) > 1:
            for i in range(1, len(self.model.links)):
                self._X[i] = spatial.xmat_to_child(self._rel_R[i], self._rel_p[i])

    def _crba(self):
        model = self.model
        n = len(model.links)
        Ic = [I.copy() for I in model.spatial_inertias]
        A = np.zeros((model.n_v, model.n_v))
        self._ensure_X()
        X = self._X
        for i in range(n - 1, -1, -1):
            lk = model.links[i]
            if lk.parent >= 0:
                Ic[lk.parent] += X[i].T @ Ic[i] @ X[i]
            d = lk.dof
            if d == 0:
                continue
            vi = lk.v_index
            if d == 6:
                A[0:6, 0:6] = Ic[i]
                continue
            # 1-DOF joint: S column is [axis; 0] or [0; axis]
            S = np.zeros(6)
            if lk.joint_type == JointType.REVOLUTE:
                S[:3] = lk.axis
            else:
                S[3:] = lk.axis
            F = Ic[i] @ S
            A[vi, vi] = S @ F
            j = i
            while model.links[j].parent >= 0:
                F = X[j].T @ F
                j = model.links[j].parent
                lj = model.links[j]
                if lj.dof == 6:
                    A[0:6, vi] = F
                    A[vi, 0:6] = F
                elif lj.dof == 1:
                    Sj = lj.axis
                    val = F[:3] @ Sj if lj.joint_type == JointType.REVOLUTE else F[3:] @ Sj
                    A[lj.v_index, vi] = val
                    A[vi, lj.v_index] = val
        return A

    # --- recursive Newton-Euler (inverse dynamics at qddot = 0) ------------
    # Two right-hand sides at once: column 0 with velocity terms (total bias),
    # column 1 at zero velocity (gravity only).

    def _rnea_bias(self):
        model = self.model
        n = len(model.links)
        self._ensure_X()
        a = [None] * n
        f = [None] * n
        for i, lk in enumerate(model.links):
            if lk.parent < 0:
                g_local = self.R[i].T @ self.g_world
                a0 = np.zeros((6, 2))
                a0[3:, 0] = -g_local
                a0[3:, 1] = -g_local
                a[i] = a0
            else:
                X = self._X[i]
                a[i] = X @ a[lk.parent]
                a[i][:, 0] += self._avp_inc[i]
            I6 = model.spatial_inertias[i]
            f[i] = I6 @ a[i]
            v = self._v[i]
            Iv = I6 @ v
            f[i][:3, 0] += spatial.cross3(v[:3], Iv[:3]) + spatial.cross3(v[3:], Iv[3:])
            f[i][3:, 0] += spatial.cross3(v[:3], Iv[3:])
        tau = np.zeros((model.n_v, 2))
        for i in range(n - 1, -1, -1):
            lk = model.links[i]
            if lk.dof == 6:
                tau[0:6] = f[i]
            elif lk.dof == 1:
                if lk.joint_type == JointType.REVOLUTE:
                    tau[lk.v_index] = lk.axis @ f[i][:3]
                else:
                    tau[lk.v_index] = lk.axis @ f[i][3:]
            if lk.parent >= 0:
                f[lk.parent] += self._X[i].T @ f[i]
        return tau[:, 0], tau[:, 1]

    # --- CoM ----------------------------------------------------------------

    def _com(self):
        model = self.model
        acc_p = np.zeros(3)
        acc_v = np.zeros(3)
        for i, lk in enumerate(model.links):
            if lk.mass == 0.0:
                continue
            R = self.R[i]
            c_world = R @ lk.com + self.p[i]
            w_world = R @ self._v[i][:3]
            v_c = R @ self._v[i][3:] + spatial.cross3(w_world, c_world - self.p[i])
            acc_p += lk.mass * c_world
            acc_v += lk.mass * v_c
        self._com_pos = acc_p / model.total_mass
        self._com_vel = acc_v / model.total_mass

    # --- Jacobians ----------------------------------------------------------

    def link_jacobian(self, link) -> np.ndarray:
        """6 x n_v spatial Jacobian, world-aligned at the link origin."""
        idx = link if isinstance(link, int) else self.model.link_index(link)
        if idx not in self._jac:
            J = np.zeros((6, self.model.n_v))
            mask = self.model.ancestry[idx]
            rot = self._col_rot & mask
            trn = ~self._col_rot & mask
            J[:3, rot] = self._col_W[:, rot]
            rel = self.p[idx][:, None] - self._col_P[:, rot]
            J[3:, rot] = spatial.cross_cols(self._col_W[:, rot], rel)
            J[3:, trn] = self._col_W[:, trn]
            self._jac[idx] = J
        return self._jac[idx]

    def point_jacobian(self, link, p_world) -> np.ndarray:
        """3 x n_v Jacobian of a body-fixed point given in world coordinates."""
        idx = link if isinstance(link, int) else self.model.link_index(link)
        J = np.zeros((3, self.model.n_v))
        mask = self.model.ancestry[idx]
        rot = self._col_rot & mask
        trn = ~self._col_rot & mask
        rel = np.asarray(p_world)[:, None] - self._col_P[:, rot]
        J[:, rot] = spatial.cross_cols(self._col_W[:, rot], rel)
        J[:, trn] = self._col_W[:, trn]
        return J

    def com_jacobian(self) -> np.ndarray:
        """3 x n_v CoM Jacobian (mass-weighted average of link CoM Jacobians).

        For floating-base models it falls out of the mass matrix: rows 3:6
        of A are the base-frame linear momentum map, so J_com =
        R_base A[3:6] / M.
        """
        if self._com_jac is None:
            model = self.model
            if model.floating_base:
                self._com_jac = (self.R[0] @ self.mass_matrix[3:6]) / model.total_mass
            else:
                J = np.zeros((3, model.n_v))
                for i, lk in enumerate(model.links):
                    if lk.mass == 0.0:
                        continue
                    c_world = self.R[i] @ lk.com + self.p[i]
                    J += lk.mass * self.point_jacobian(i, c_world)
                self._com_jac = J / model.total_mass
        return self._com_jac

    # --- velocity-product (Jdot v) accelerations ----------------------------

    def link_velocity(self, link) -> np.ndarray:
        """[angular; linear] world-frame velocity of the link origin point."""
        idx = link if isinstance(link, int) else self.model.link_index(link)
        R = self.R[idx]
        return np.concatenate([R @ self._v[idx][:3], R @ self._v[idx][3:]])

    def link_bias_acc(self, link) -> np.ndarray:
        """d/dt(J v) at zero qddot: [angular acc; linear acc of the origin point]."""
        idx = link if isinstance(link, int) else self.model.link_index(link)
        R = self.R[idx]
        a = self._avp[idx]
        w = self._v[idx][:3]
        vl = self._v[idx][3:]
        return np.concatenate([R @ a[:3], R @ (a[3:] + spatial.cross3(w, vl))])

    def point_bias_acc(self, link, p_world) -> np.ndarray:
        """d/dt(J_p v) at zero qddot for a body-fixed point at p_world."""
        idx = link if isinstance(link, int) else self.model.link_index(link)
        bias = self.link_bias_acc(idx)
        w = self.R[idx] @ self._v[idx][:3]
        r = p_world - self.p[idx]
        return bias[3:] + spatial.cross3(bias[:3], r) + spatial.cross3(w, spatial.cross3(w, r))

    def point_velocity(self, link, p_world) -> np.ndarray:
        idx = link if isinstance(link, int) else self.model.link_index(link)
        v6 = self.link_velocity(idx)
        return v6[3:] + spatial.cross3(v6[:3], p_world - self.p[idx])

    def com_bias_acc(self) -> np.ndarray:
        """d/dt(J_com v) at zero qddot."""
        model = self.model
        acc = np.zeros(3)
        for i, lk in enumerate(model.links):
            if lk.mass == 0.0:
                continue
            c_world = self.R[i] @ lk.com + self.p[i]
            acc += lk.mass * self.point_bias_acc(i, c_world)
        return acc / model.total_mass

    def link_pose(self, link):
        idx = link if isinstance(link, int) else self.model.link_index(link)
        return self.R[idx], self.p[idx]

    def kinetic_energy(self):
        v = self.v_full
        return 0.5 * float(v @ self.mass_matrix @ v)

    def potential_energy(self):
        return float(self.model.total_mass * self.gravity * self.com_position[2])


def update_kinematics(model: RobotModel, state: RobotState, gravity=GRAVITY) -> DynamicsCache:
    """Build the per-tick cache; raises InputError on non-finite state."""
    return DynamicsCache(model, state, gravity=gravity)
