"""Convex model-predictive control over single-rigid-body dynamics.

State (13): [roll-pitch-yaw, position, world angular velocity, world linear
velocity, gravity constant].  The dynamics are linearized about the
commanded yaw per horizon step, discretized zero-order-hold through the
matrix exponential of the stacked system, and condensed to a dense QP in
the stacked contact forces.  Swing-foot forces are eliminated, not
constrained.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.linalg import expm

from .. import qp
from ..errors import InputError, PlanInfeasibleError
from ..rbd import spatial

GRAVITY = 9.81
NX = 13


@dataclass
class MpcSetup:
    horizon: int = 10
    dt: float = 0.025
    mass: float = 16.0
    inertia_body: np.ndarray = field(default_factory=lambda: np.diag([0.3, 0.25, 0.1]))
    mu: float = 0.5
    f_min: float = 0.0
    f_max: float = 500.0
    q_weights: np.ndarray = field(default_factory=lambda: np.array(
        [50.0, 50.0, 100.0, 100.0, 100.0, 150.0, 1.0, 1.0, 1.0, 1.0, 1.0, 1.0, 0.0]))
    r_weight: float = 1e-6
    regularization: float = 0.0       # forwarded to the QP solver
    foot_names: tuple = ("left", "right")

    def __post_init__(self):
        self.inertia_body = np.asarray(self.inertia_body, dtype=float)
        self.q_weights = np.asarray(self.q_weights, dtype=float)
        if self.horizon < 1:
            raise InputError("horizon must be >= 1")
        if self.mu <= 0 or self.f_min < 0:
            raise InputError("mu must be > 0 and f_min >= 0")


@dataclass
class MpcReference:
    v_x: float = 0.0
    v_y: float = 0.0
    yaw_rate: float = 0.0
    z: float = 0.55


@dataclass
class GrfTrajectory:
    forces: np.ndarray          # (N, n_feet, 3); zero on swing feet
    states: np.ndarray          # (N+1, 13) predicted trajectory incl. x0
    schedule: np.ndarray        # (N, n_feet) bool
    foot_positions: np.ndarray  # (N, n_feet, 3)
    dt: float
    t0: float = 0.0

    def force_at_step(self, k, foot_index):
        k = min(max(k, 0), len(self.forces) - 1)
        return self.forces[k, foot_index]


def srbd_state(com_pos, com_vel, base_rot, omega_world):
    """Pack the 13-vector from estimated quantities."""
    rpy = _rot_to_rpy(base_rot)
    return np.concatenate([rpy, com_pos, omega_world, com_vel, [1.0]])


def _rot_to_rpy(R):
    pitch = -math.asin(min(1.0, max(-1.0, R[2, 0])))
    roll = math.atan2(R[2, 1], R[2, 2])
    yaw = math.atan2(R[1, 0], R[0, 0])
    return np.array([roll, pitch, yaw])


def build_reference(state13, ref: MpcReference, setup: MpcSetup):
    """Per-step reference trajectory integrating the commanded velocities."""
    N = setup.horizon
    out = np.zeros((N, NX))
    yaw = state13[2]
    pos = state13[3:6].copy()
    for k in range(N):
        yaw_k = yaw + ref.yaw_rate * (k + 1) * setup.dt
        c, s = math.cos(yaw_k), math.sin(yaw_k)
        v_world = np.array([c * ref.v_x - s * ref.v_y, s * ref.v_x + c * ref.v_y, 0.0])
        pos = pos + v_world * setup.dt
        out[k, 0:3] = [0.0, 0.0, yaw_k]
        out[k, 3:6] = [pos[0], pos[1], ref.z]
        out[k, 6:9] = [0.0, 0.0, ref.yaw_rate]
        out[k, 9:12] = v_world
        out[k, 12] = 1.0
        pos[2] = ref.z
    return out


def _step_matrices(setup: MpcSetup, yaw_k, feet_k, contact_k, com_k):
    """ZOH-discrete (A, B) for one horizon step."""
    Rz = spatial.rot_z(yaw_k)
    I_w = Rz @ setup.inertia_body @ Rz.T
    I_w_inv = np.linalg.inv(I_w)
    Ac = np.zeros((NX, NX))
    Ac[0:3, 6:9] = Rz.T
    Ac[3:6, 9:12] = np.eye(3)
    Ac[11, 12] = -GRAVITY
    n_active = int(np.sum(contact_k))
    nu = 3 * n_active
    Bc = np.zeros((NX, nu))
    col = 0
    for i in range(len(contact_k)):
        if not contact_k[i]:
            continue
        r = feet_k[i] - com_k
        Bc[6:9, col:col + 3] = I_w_inv @ spatial.skew(r)
        Bc[9:12, col:col + 3] = np.eye(3) / setup.mass
        col += 3
    M = np.zeros((NX + nu, NX + nu))
    M[:NX, :NX] = Ac
    M[:NX, NX:] = Bc
    E = expm(M * setup.dt)
    return E[:NX, :NX], E[:NX, NX:]


def solve_srbd_mpc(setup: MpcSetup, state13, schedule, foot_positions,
                   ref: MpcReference, qp_settings=None) -> GrfTrajectory:
    """Condensed dense QP over stacked active-foot forces.

    schedule: (N, n_feet) booleans; foot_positions: (N, n_feet, 3) world
    positions of the contact points over the horizon.  Raises
    PlanInfeasibleError with a first-violation diagnosis when the QP
    reports infeasibility.
    """
    state13 = np.asarray(state13, dtype=float)
    if state13.shape != (NX,) or not np.all(np.isfinite(state13)):
        raise InputError("state13 must be a finite 13-vector")
    schedule = np.asarray(schedule, dtype=bool)
    foot_positions = np.asarray(foot_positions, dtype=float)
    N = setup.horizon
    n_feet = schedule.shape[1]
    if schedule.shape != (N, n_feet) or foot_positions.shape != (N, n_feet, 3):
        raise InputError("schedule/foot_positions shape mismatch")
    if not schedule.any():
        raise InputError("at least one contact somewhere in the schedule")

    x_ref = build_reference(state13, ref, setup)

    # Per-step matrices; yaw linearized along the commanded rate.
    A_list = []
    B_list = []
    nu_list = []
    com_k = state13[3:6]
    for k in range(N):
        yaw_k = state13[2] + ref.yaw_rate * k * setup.dt
        Ak, Bk = _step_matrices(setup, yaw_k, foot_positions[k], schedule[k],
                                x_ref[k, 3:6])
        A_list.append(Ak)
        B_list.append(Bk)
        nu_list.append(Bk.shape[1])

    n_u = int(np.sum(nu_list))
    offs = np.concatenate([[0], np.cumsum(nu_list)]).astype(int)

    # Condensation: X = Sx x0 + Su U (states 1..N).
    Sx = np.zeros((N * NX, NX))
    Su = np.zeros((N * NX, n_u))
    for k in range(N):
        if k == 0:
            Sx[0:NX] = A_list[0]
            Su[0:NX, offs[0]:offs[1]] = B_list[0]
        else:
            Sx[k * NX:(k + 1) * NX] = A_list[k] @ Sx[(k - 1) * NX:k * NX]
            Su[k * NX:(k + 1) * NX] = A_list[k] @ Su[(k - 1) * NX:k * NX]
            Su[k * NX:(k + 1) * NX, offs[k]:offs[k + 1]] = B_list[k]

    Qd = np.tile(setup.q_weights, N)
    err0 = Sx @ state13 - x_ref.reshape(-1)
    H = 2.0 * ((Su.T * Qd) @ Su + setup.r_weight * np.eye(n_u))
    f = 2.0 * (Su.T @ (Qd * err0))

    # Friction pyramid and normal bounds per active foot per step.
    rows = []
    lbs = []
    ubs = []
    for k in range(N):
        col = offs[k]
        for i in range(n_feet):
            if not schedule[k, i]:
                continue
            fx, fy, fz = col, col + 1, col + 2
            for s, ax in ((1, fx), (-1, fx), (1, fy), (-1, fy)):
                row = np.zeros(n_u)
                row[ax] = s
                row[fz] = -setup.mu
                rows.append(row)
                lbs.append(-np.inf)
                ubs.append(0.0)
            row = np.zeros(n_u)
            row[fz] = 1.0
            rows.append(row)
            lbs.append(setup.f_min)
            ubs.append(setup.f_max)
            col += 3

    settings = qp_settings or qp.QpSettings(
        max_iter=80, eps_abs=1e-10, eps_rel=1e-10,
        regularization=setup.regularization)
    problem = qp.QpProblem(H=H, f=f, A_in=np.vstack(rows), lb_in=np.array(lbs),
                           ub_in=np.array(ubs))
    sol = qp.solve(problem, settings)
    if sol.status == "Infeasible" or (not sol.optimal and sol.primal_residual > 1e-6):
        diag = _first_violation(problem, sol.x, schedule, offs, setup)
        raise PlanInfeasibleError("MPC force QP infeasible", diag)

    U = sol.x
    forces = np.zeros((N, n_feet, 3))
    for k in range(N):
        col = offs[k]
        for i in range(n_feet):
            if schedule[k, i]:
                forces[k, i] = U[col:col + 3]
                col += 3

    states = np.zeros((N + 1, NX))
    states[0] = state13
    for k in range(N):
        states[k + 1] = A_list[k] @ states[k] + B_list[k] @ U[offs[k]:offs[k + 1]]

    return GrfTrajectory(forces=forces, states=states, schedule=schedule.copy(),
                         foot_positions=foot_positions.copy(), dt=setup.dt)


def _first_violation(problem, x, schedule, offs, setup):
    ax = problem.A_in @ x
    viol_lb = problem.lb_in - ax
    viol_ub = ax - problem.ub_in
    worst = np.maximum(viol_lb, viol_ub)
    i = int(np.argmax(worst))
    kind = "pyramid" if (i % 5) < 4 else "normal-bound"
    return f"constraint row {i} ({kind}) violated by {worst[i]:.3g}"
