"""Implicit-hierarchy whole-body controller.

One QP over (qddot, contact forces): task tracking and contact-motion
terms compete through weights (the implicit hierarchy), while the
unactuated base dynamics, internal constraints, friction pyramids, and
torque limits stay hard.  Joint commands come from leaky integration of
the optimal acceleration, which keeps long runs anchored to the measured
state.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .. import qp
from ..rbd import DynamicsCache, RobotModel, RobotState
from .contacts import ContactSet, internal_constraint_rows
from .container import TciContainer
from .tasks import task_command, task_jacobian


@dataclass
class IhwbcSettings:
    contact_weight: float = 1e3     # soft contact-motion term
    fdes_weight: float = 1e-3       # pull toward the desired reaction forces
    qddot_reg: float = 1e-6
    alpha_leak: float = 0.015       # leak-to-measured factor for integration
    torque_limits: bool = True
    soft_contact_cones: bool = False  # penalties instead of hard pyramids
    soft_cone_weight: float = 1e4
    qp_settings: qp.QpSettings = field(default_factory=lambda: qp.QpSettings(
        max_iter=50, eps_abs=1e-9, eps_rel=1e-9, regularization=1e-8))


@dataclass
class WbcResult:
    status: str
    qddot: np.ndarray = None
    forces: np.ndarray = None            # stacked per contact point
    tau: np.ndarray = None
    q_cmd: np.ndarray = None
    v_cmd: np.ndarray = None
    task_errors: dict = field(default_factory=dict)
    contact_set: object = None
    dynamics_residual: float = 0.0

    @property
    def optimal(self):
        return self.status == "Optimal"


class Ihwbc:
    def __init__(self, model: RobotModel, settings: IhwbcSettings = None, dt=1e-3):
        self.model = model
        self.settings = settings or IhwbcSettings()
        self.dt = dt
        self._v_int = None
        self._q_int = None

    def reset_integrator(self, state: RobotState):
        self._v_int = state.v_joints.copy()
        self._q_int = state.q_joints.copy()

    def solve(self, container: TciContainer, cache: DynamicsCache,
              state: RobotState, f_des=None) -> WbcResult:
        model = self.model
        s = self.settings
        n_v = model.n_v
        cs = ContactSet(container.active_contacts(), cache)
        n_f = cs.n_f
        n = n_v + n_f
        fb = model.floating_base

        H = np.zeros((n, n))
        g = np.zeros(n)

        task_errors = {}
        for t in container.active_tasks():
            J, bias = task_jacobian(t, cache)
            acc, err, verr = task_command(t, cache, state)
            task_errors[t.name] = err
            JW = t.weight * J.T
            H[:n_v, :n_v] += JW @ J
            g[:n_v] += JW @ (bias - acc)

        if cs.n_points:
            Jc, bias_c = cs.jacobian, cs.bias
            H[:n_v, :n_v] += s.contact_weight * (Jc.T @ Jc)
            g[:n_v] += s.contact_weight * (Jc.T @ bias_c)
            H[n_v:, n_v:] += s.fdes_weight * np.eye(n_f)
            if f_des is not None:
                g[n_v:] -= s.fdes_weight * np.asarray(f_des, dtype=float)
        H[:n_v, :n_v] += s.qddot_reg * np.eye(n_v)

        A = cache.mass_matrix
        bg = cache.bias_forces + cache.gravity_forces

        eq_rows = []
        eq_vals = []
        if fb:
            # Unactuated base rows of A qddot + b + g = Jc' f.
            Sf = np.zeros((6, n))
            Sf[:, :n_v] = A[:6]
            if n_f:
                Sf[:, n_v:] = -cs.jacobian.T[:6]
            eq_rows.append(Sf)
            eq_vals.append(-bg[:6])
        J_ic = internal_constraint_rows(container.internal_constraints, model)
        if len(J_ic):
            row = np.zeros((len(J_ic), n))
            row[:, :n_v] = J_ic
            eq_rows.append(row)
            eq_vals.append(np.zeros(len(J_ic)))

        in_rows = []
        in_lb = []
        in_ub = []
        if cs.n_points:
            Acone, lb_c, ub_c = cs.cone_rows()
            if s.soft_contact_cones:
                # Documented divergence knob: penalties instead of hard rows.
                viol = np.zeros((len(Acone), n))
                viol[:, n_v:] = Acone
                H += s.soft_cone_weight * (viol.T @ viol)
            else:
                block = np.zeros((len(Acone), n))
                block[:, n_v:] = Acone
                in_rows.append(block)
                in_lb.append(lb_c)
                in_ub.append(ub_c)
        if s.torque_limits:
            ja = slice(6, n_v) if fb else slice(0, n_v)
            Ta = np.zeros((model.n_joints, n))
            Ta[:, :n_v] = A[ja]
            if n_f:
                Ta[:, n_v:] = -cs.jacobian.T[ja]
            in_rows.append(Ta)
            in_lb.append(-model.effort_limits - bg[ja])
            in_ub.append(model.effort_limits - bg[ja])

        problem = qp.QpProblem(
            H=0.5 * (H + H.T), f=g,
            A_eq=np.vstack(eq_rows) if eq_rows else None,
            b_eq=np.concatenate(eq_vals) if eq_vals else None,
            A_in=np.vstack(in_rows) if in_rows else None,
            lb_in=np.concatenate(in_lb) if in_lb else None,
            ub_in=np.concatenate(in_ub) if in_ub else None,
        )
        self.last_problem = problem
        sol = qp.solve(problem, s.qp_settings)
        if not sol.optimal:
            return WbcResult(status=sol.status, contact_set=cs,
                             task_errors=task_errors)

        qddot = sol.x[:n_v]
        forces = sol.x[n_v:]
        gen = A @ qddot + bg
        if n_f:
            gen -= cs.jacobian.T @ forces
        tau = gen[6:] if fb else gen.copy()
        resid = float(np.max(np.abs(gen[:6]), initial=0.0)) if fb else 0.0

        qdd_j = qddot[6:] if fb else qddot
        if self._v_int is None:
            self.reset_integrator(state)
        a = s.alpha_leak
        self._v_int = (1.0 - a) * (self._v_int + qdd_j * self.dt) + a * state.v_joints
        self._q_int = (1.0 - a) * (self._q_int + self._v_int * self.dt) + a * state.q_joints

        return WbcResult(
            status="Optimal", qddot=qddot, forces=forces, tau=tau,
            q_cmd=self._q_int.copy(), v_cmd=self._v_int.copy(),
            task_errors=task_errors, contact_set=cs, dynamics_residual=resid,
        )
