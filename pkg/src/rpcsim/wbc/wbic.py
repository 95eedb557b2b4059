"""Whole-body controller with strict task priority.

Kinematics pass: recursive null-space-projected IK over tasks ordered by
rank, seeded with the contact-Jacobian null space, producing joint
position/velocity commands and a prioritized acceleration.  Dynamics pass:
a small QP relaxes only the floating-base acceleration and solves for
reaction forces under the full dynamics, friction pyramids, and torque
limits.

Null-space projectors are built from an exact (SVD rank-revealing)
row-space basis so higher-rank tasks are invariant to lower-rank commands
to machine precision; the per-task steps use damped pseudo-inverses for
deterministic behavior near singular configurations.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .. import qp
from ..rbd import DynamicsCache, RobotModel, RobotState
from .contacts import ContactSet, internal_constraint_rows
from .container import TciContainer
from .ihwbc import WbcResult
from .tasks import task_command, task_jacobian


@dataclass
class WbicSettings:
    lambda_dls: float = 1e-4
    q1_base_relax: float = 1.0       # weight on the floating-base relaxation
    q2_force: float = 1e-3           # weight on (f - f_des)
    torque_limits: bool = True
    kin_step_clip: float = 1.0       # clamp on per-rank position steps (rad)
    qp_settings: qp.QpSettings = field(default_factory=lambda: qp.QpSettings(
        max_iter=50, eps_abs=1e-9, eps_rel=1e-9, regularization=1e-8))


def _damped_pinv(J, lam):
    JJt = J @ J.T + lam**2 * np.eye(J.shape[0])
    return J.T @ np.linalg.solve(JJt, np.eye(J.shape[0]))


def _nullspace_projector(row_stack, rcond=1e-10):
    """I - V_r V_r' with V_r an exact row-space basis of the stack."""
    n = row_stack.shape[1]
    if row_stack.shape[0] == 0:
        return np.eye(n)
    _, sv, Vt = np.linalg.svd(row_stack, full_matrices=False)
    if len(sv) == 0 or sv[0] == 0.0:
        return np.eye(n)
    rank = int(np.sum(sv > rcond * sv[0]))
    Vr = Vt[:rank]
    return np.eye(n) - Vr.T @ Vr


class Wbic:
    def __init__(self, model: RobotModel, settings: WbicSettings = None, dt=1e-3):
        self.model = model
        self.settings = settings or WbicSettings()
        self.dt = dt

    def solve(self, container: TciContainer, cache: DynamicsCache,
              state: RobotState, f_des=None) -> WbcResult:
        model = self.model
        s = self.settings
        n_v = model.n_v
        fb = model.floating_base
        cs = ContactSet(container.active_contacts(), cache)
        n_f = cs.n_f

        # --- kinematics pass -------------------------------------------------
        stack = [cs.jacobian] if cs.n_points else []
        J_ic = internal_constraint_rows(container.internal_constraints, model)
        if len(J_ic):
            stack.append(J_ic)
        base_stack = np.vstack(stack) if stack else np.zeros((0, n_v))
        N = _nullspace_projector(base_stack)

        dq = np.zeros(n_v)
        dv = np.zeros(n_v)
        qddot = np.zeros(n_v)
        if cs.n_points:
            # Contact rank 0: zero velocity and bias-compensating acceleration.
            Jc_pinv = _damped_pinv(cs.jacobian, s.lambda_dls)
            qddot = Jc_pinv @ (-cs.bias)

        task_errors = {}
        tasks = sorted(container.active_tasks(), key=lambda t: t.priority)
        stack_rows = base_stack
        for t in tasks:
            J, bias = task_jacobian(t, cache)
            acc_cmd, err, verr = task_command(t, cache, state)
            task_errors[t.name] = err
            JN = J @ N
            JN_pinv = _damped_pinv(JN, s.lambda_dls)
            step = np.clip(err - J @ dq, -s.kin_step_clip, s.kin_step_clip)
            dq = dq + JN_pinv @ step
            dv = dv + JN_pinv @ (np.asarray(t.v_des, dtype=float) - J @ dv)
            qddot = qddot + JN_pinv @ (acc_cmd - bias - J @ qddot)
            stack_rows = np.vstack([stack_rows, J]) if stack_rows.size else J
            N = _nullspace_projector(stack_rows)

        # --- dynamics pass ---------------------------------------------------
        A = cache.mass_matrix
        bg = cache.bias_forces + cache.gravity_forces
        n_relax = 6 if fb else 0
        nz = n_relax + n_f
        tau = np.zeros(model.n_joints)
        forces = np.zeros(n_f)
        status = "Optimal"
        resid = 0.0

        if nz > 0:
            H = np.zeros((nz, nz))
            g = np.zeros(nz)
            if n_relax:
                H[:n_relax, :n_relax] = s.q1_base_relax * np.eye(6)
            if n_f:
                H[n_relax:, n_relax:] = s.q2_force * np.eye(n_f)
                if f_des is not None:
                    g[n_relax:] = -s.q2_force * np.asarray(f_des, dtype=float)

            eq_rows = None
            eq_vals = None
            if fb:
                # S_f (A (qddot_kin + [delta; 0]) + b + g - Jc' f) = 0
                Sf = np.zeros((6, nz))
                Sf[:, :6] = A[:6, :6]
                if n_f:
                    Sf[:, n_relax:] = -cs.jacobian.T[:6]
                eq_rows = Sf
                eq_vals = -(A[:6] @ qddot + bg[:6])

            in_rows = []
            in_lb = []
            in_ub = []
            if n_f:
                Acone, lb_c, ub_c = cs.cone_rows()
                blk = np.zeros((len(Acone), nz))
                blk[:, n_relax:] = Acone
                in_rows.append(blk)
                in_lb.append(lb_c)
                in_ub.append(ub_c)
            if s.torque_limits:
                ja = slice(6, n_v) if fb else slice(0, n_v)
                Ta = np.zeros((model.n_joints, nz))
                if n_relax:
                    Ta[:, :6] = A[ja, :6]
                if n_f:
                    Ta[:, n_relax:] = -cs.jacobian.T[ja]
                const = A[ja] @ qddot + bg[ja]
                in_rows.append(Ta)
                in_lb.append(-model.effort_limits - const)
                in_ub.append(model.effort_limits - const)

            problem = qp.QpProblem(
                H=H, f=g,
                A_eq=eq_rows, b_eq=eq_vals,
                A_in=np.vstack(in_rows) if in_rows else None,
                lb_in=np.concatenate(in_lb) if in_lb else None,
                ub_in=np.concatenate(in_ub) if in_ub else None,
            )
            self.last_problem = problem
            sol = qp.solve(problem, s.qp_settings)
            if not sol.optimal:
                return WbcResult(status=sol.status, contact_set=cs,
                                 task_errors=task_errors)
            if n_relax:
                qddot = qddot + np.concatenate([sol.x[:6], np.zeros(n_v - 6)])
            forces = sol.x[n_relax:]

        gen = A @ qddot + bg
        if n_f:
            gen -= cs.jacobian.T @ forces
        tau = gen[6:] if fb else gen.copy()
        resid = float(np.max(np.abs(gen[:6]), initial=0.0)) if fb else 0.0

        jsl = slice(6, n_v) if fb else slice(0, n_v)
        q_cmd = state.q_joints + dq[jsl]
        v_cmd = dv[jsl].copy()

        return WbcResult(
            status=status, qddot=qddot, forces=forces, tau=tau,
            q_cmd=q_cmd, v_cmd=v_cmd, task_errors=task_errors,
            contact_set=cs, dynamics_residual=resid,
        )
