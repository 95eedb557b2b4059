"""Built-in physics test environment.

Rigid-body simulator with penalty ground contact (spring-damper normal
force, viscous-capped Coulomb friction), joint impedance actuation, and
sensor emulation.  Integration is kick-drift-kick Verlet with the linear
velocity-dependent forces (actuator kd, contact damping, viscous friction)
folded implicitly into each velocity half-kick: light foot links under
stiff contact damping would otherwise need a far smaller step than the
1 ms control tick.  Conservative systems reduce to plain leapfrog (bounded
energy error, ballistic arcs exact).  The first half-kick reuses the force
model evaluated at the end of the previous step, so the cost stays at one
dynamics evaluation per step.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.linalg import cho_factor, cho_solve

from .errors import InputError, SimulationDiverged
from .interface import Command, SensorData
from .rbd import RobotModel, RobotState, integrate_state, update_kinematics
from .rbd.dynamics import GRAVITY


@dataclass
class GroundParams:
    stiffness: float = 3.0e4       # N/m
    damping: float = 1.0e3         # N*s/m
    friction: float = 0.8
    tangential_gain: float = 1.0e3  # N*s/m, viscous cap below the friction limit


@dataclass
class NoiseParams:
    enabled: bool = False
    gyro_std: float = 0.0
    acc_std: float = 0.0
    encoder_pos_std: float = 0.0
    encoder_vel_std: float = 0.0


@dataclass
class ContactBody:
    """A link with ground-contact points (corner set) belonging to one foot."""

    name: str
    link: str
    points: np.ndarray             # (k, 3) offsets in the link frame


class ActuatorParams:
    def __init__(self, kp, kd, tau_max, n_joints):
        self.kp = np.broadcast_to(np.asarray(kp, dtype=float), (n_joints,)).copy()
        self.kd = np.broadcast_to(np.asarray(kd, dtype=float), (n_joints,)).copy()
        self.tau_max = np.asarray(tau_max, dtype=float).copy()


class SimWorld:
    """Owns the ground-truth state; steps physics and synthesizes sensors."""

    def __init__(self, model: RobotModel, contact_bodies, actuator: ActuatorParams,
                 dt=1e-3, substeps=1, ground: GroundParams = None,
                 noise: NoiseParams = None, seed=0, gravity=GRAVITY,
                 contact_force_threshold=None):
        if dt <= 0 or substeps < 1:
            raise InputError("dt must be > 0 and substeps >= 1")
        self.model = model
        self.contact_bodies = list(contact_bodies)
        self.actuator = actuator
        self.dt = float(dt)
        self.substeps = int(substeps)
        self.ground = ground or GroundParams()
        self.noise = noise or NoiseParams()
        self.seed = seed
        self.gravity = gravity
        if contact_force_threshold is None:
            contact_force_threshold = 0.3 * model.total_mass * gravity / 2.0
        self.contact_force_threshold = contact_force_threshold
        self._links = [model.link_index(cb.link) for cb in self.contact_bodies]
        self.state = model.neutral_state()
        self.t = 0.0
        self.tick = 0
        self.rng = np.random.default_rng(seed)
        self._prev_base_vel_world = np.zeros(3)
        self.last_contact_forces = {cb.name: 0.0 for cb in self.contact_bodies}
        self.last_command = Command.zeros(model.n_joints)

    # --- lifecycle ----------------------------------------------------------

    def reset(self, initial: RobotState) -> SensorData:
        """Set the true state, clear contact memory, emit the first sensors."""
        initial.validate(self.model)
        self.state = initial.copy()
        self.t = 0.0
        self.tick = 0
        self.rng = np.random.default_rng(self.seed)
        R = self.state.base_rot()
        self._prev_base_vel_world = R @ self.state.base_twist[3:]
        self.last_contact_forces = {cb.name: 0.0 for cb in self.contact_bodies}
        hold = Command(initial.q_joints.copy(), np.zeros(self.model.n_joints),
                       np.zeros(self.model.n_joints))
        self.last_command = hold
        self._eval = self._force_model(self.state, hold)
        return self._sensors(self._eval[0], np.zeros(3))

    # --- stepping -----------------------------------------------------------

    def step(self, command: Command) -> SensorData:
        command.validate(self.model.n_joints)
        h = self.dt / self.substeps
        cache = None
        for _ in range(self.substeps):
            cache = self._substep(command, h)
        self.t += self.dt
        self.tick += 1
        R = self.state.base_rot()
        base_vel_world = R @ self.state.base_twist[3:] if self.model.floating_base \
            else np.zeros(3)
        base_acc_world = (base_vel_world - self._prev_base_vel_world) / self.dt
        self._prev_base_vel_world = base_vel_world
        if np.max(np.abs(self.state.v_full(self.model)), initial=0.0) > 1e3:
            raise SimulationDiverged(
                f"velocity blew up at t={self.t:.3f}s", last_state=self.state.copy())
        return self._sensors(cache, base_acc_world)

    def _actuator_terms(self, st: RobotState, command: Command):
        """Impedance torque split into constant part + velocity damping.

        Saturation is decided at st's velocity; saturated joints get a
        constant clipped torque and no damping contribution.
        """
        act = self.actuator
        tau_at_v = command.tau_ff + act.kp * (command.q_des - st.q_joints) \
            + act.kd * (command.v_des - st.v_joints)
        saturated = np.abs(tau_at_v) >= act.tau_max
        tau_const = command.tau_ff + act.kp * (command.q_des - st.q_joints) \
            + act.kd * command.v_des
        tau_const[saturated] = np.clip(tau_at_v[saturated],
                                       -act.tau_max[saturated],
                                       act.tau_max[saturated])
        kd_eff = np.where(saturated, 0.0, act.kd)
        return tau_const, kd_eff

    def _force_model(self, st: RobotState, command: Command):
        """Split generalized forces at st into a velocity-independent part and
        a linear damping matrix D such that F(v) ~= F_const - D v.

        The contact active set, friction saturation, and torque saturation
        are decided at st's velocity; saturated terms are held constant.
        Returns (cache, F_const, D).
        """
        model = self.model
        cache = update_kinematics(model, st, gravity=self.gravity)
        n_v = model.n_v
        F = np.zeros(n_v)
        D = np.zeros((n_v, n_v))
        ja = slice(6, n_v) if model.floating_base else slice(0, n_v)

        tau_const, kd_eff = self._actuator_terms(st, command)
        F[ja] += tau_const
        jd = np.arange(n_v)[ja]
        D[jd, jd] += kd_eff

        # Joint travel stops: stiff spring outside the limit, heavy damping
        # folded into the implicit velocity solve.
        q = st.q_joints
        below = q < model.lower_limits
        above = q > model.upper_limits
        if np.any(below) or np.any(above):
            k_stop, d_stop = 400.0, 10.0
            stop = np.zeros(model.n_joints)
            stop[below] = k_stop * (model.lower_limits[below] - q[below])
            stop[above] = k_stop * (model.upper_limits[above] - q[above])
            F[ja] += stop
            engaged = below | above
            D[jd[engaged], jd[engaged]] += d_stop

        # Penalty ground contact at every registered corner point.
        g = self.ground
        for cb, li in zip(self.contact_bodies, self._links):
            total_fz = 0.0
            Rl, pl = cache.R[li], cache.p[li]
            for off in cb.points:
                pw = Rl @ off + pl
                pen = -pw[2]
                if pen <= 0.0:
                    continue
                vw = cache.point_velocity(li, pw)
                fz = g.stiffness * pen - g.damping * vw[2]
                if fz <= 0.0:
                    continue
                Jp = cache.point_jacobian(li, pw)
                # Normal: spring part constant, damper into D.
                F += Jp[2] * (g.stiffness * pen)
                D += g.damping * np.outer(Jp[2], Jp[2])
                # Tangential: viscous-capped Coulomb as a secant coefficient
                # min(k_t, mu fz / |v_t|) folded into the implicit solve, so
                # a sliding point decelerates into the stick band within one
                # step instead of bang-banging across the force cap.
                vt = vw[:2]
                speed = float(np.hypot(vt[0], vt[1]))
                coef = g.tangential_gain
                if coef * speed > g.friction * fz and speed > 1e-12:
                    coef = g.friction * fz / speed
                D += coef * (np.outer(Jp[0], Jp[0]) + np.outer(Jp[1], Jp[1]))
                total_fz += fz
            self.last_contact_forces[cb.name] = total_fz

        F -= cache.bias_forces + cache.gravity_forces
        return cache, F, D

    def _half_kick(self, cache, F, D, v, h):
        """Implicit solve of (A + h/2 D) v' = A v + h/2 F_const."""
        A = cache.mass_matrix
        try:
            return cho_solve(cho_factor(A + 0.5 * h * D), A @ v + 0.5 * h * F)
        except np.linalg.LinAlgError:
            raise SimulationDiverged("implicit velocity solve failed",
                                     last_state=self.state.copy())

    def _substep(self, command: Command, h):
        model = self.model
        st = self.state
        v0 = st.v_full(model)
        # First half-kick reuses the contact force model from the end of the
        # last step (same position) but with actuator terms for the fresh
        # command.
        cache0, F0, D0 = self._eval
        tau_prev, kd_prev = self._actuator_terms(st, self.last_command)
        tau_new, kd_new = self._actuator_terms(st, command)
        self.last_command = command
        n_v = model.n_v
        ja = slice(6, n_v) if model.floating_base else slice(0, n_v)
        jd = np.arange(n_v)[ja]
        F0 = F0.copy()
        D0 = D0.copy()
        F0[ja] += tau_new - tau_prev
        D0[jd, jd] += kd_new - kd_prev
        v_half = self._half_kick(cache0, F0, D0, v0, h)
        # Drift.
        new_state = integrate_state(model, st, v_half, h)
        self._set_velocity(new_state, v_half)
        # Fresh force model, second half-kick.
        cache1, F1, D1 = self._force_model(new_state, command)
        v1 = self._half_kick(cache1, F1, D1, v_half, h)
        self._set_velocity(new_state, v1)
        self.state = new_state
        self._eval = (cache1, F1, D1)
        return cache1

    def _set_velocity(self, st: RobotState, v):
        if self.model.floating_base:
            st.base_twist = v[:6].copy()
            st.v_joints = v[6:].copy()
        else:
            st.v_joints = v.copy()

    # --- sensors -------------------------------------------------------------

    def _sensors(self, cache, base_acc_world) -> SensorData:
        st = self.state
        model = self.model
        nz = self.noise
        R = st.base_rot()
        g_vec = np.array([0.0, 0.0, -self.gravity])
        quat = st.base_quat.copy()
        gyro = st.base_twist[:3].copy()
        acc = R.T @ (base_acc_world - g_vec)
        q = st.q_joints.copy()
        v = st.v_joints.copy()
        if nz.enabled:
            gyro = gyro + self.rng.normal(0.0, nz.gyro_std, 3)
            acc = acc + self.rng.normal(0.0, nz.acc_std, 3)
            q = q + self.rng.normal(0.0, nz.encoder_pos_std, model.n_joints)
            v = v + self.rng.normal(0.0, nz.encoder_vel_std, model.n_joints)
        contacts = {
            name: bool(fz > self.contact_force_threshold)
            for name, fz in self.last_contact_forces.items()
        }
        return SensorData(
            t=self.t, imu_quat=quat, imu_gyro=gyro, imu_acc=acc,
            joint_pos=q, joint_vel=v, contacts=contacts,
        )

    # --- introspection -------------------------------------------------------

    def total_normal_force(self):
        return float(sum(self.last_contact_forces.values()))

    def foot_point_positions(self, name):
        """World positions of a contact body's corner points (debug/overlay)."""
        for cb, li in zip(self.contact_bodies, self._links):
            if cb.name == name:
                cache = update_kinematics(self.model, self.state, gravity=self.gravity)
                Rl, pl = cache.R[li], cache.p[li]
                return np.array([Rl @ off + pl for off in cb.points])
        raise KeyError(name)
