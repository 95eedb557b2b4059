"""ControlArchitecture: the per-tick pipeline.

SensorData -> queues drained -> estimator -> kinematics -> state machines
-> managers -> whole-body solve -> Command.  The tick is a pure
function of (architecture state, sensors, queued events), which the replay
harness exploits for byte-identical reproduction.
"""
from __future__ import annotations

import collections
import math
import threading
from dataclasses import dataclass, field

import numpy as np

from ..errors import ConfigError, NumericalError
from ..estimation import FootFrame, KalmanEstimator, KfNoise, KinematicEstimator
from ..interface import Command, SensorData
from ..locomotion import GaitSchedule, MpcSetup, evaluate_dcm
from ..rbd import RobotModel, RobotState, update_kinematics
from ..rbd import spatial
from .. import qp
from ..wbc import (Ihwbc, IhwbcSettings, TciContainer, Wbic, WbicSettings,
                   com_task, joint_task, link_ori_task, link_pos_task,
                   surface_contact)
from .config import ParameterRegistry, gain_validator, scalar_validator
from .locomotion_fsm import (ContactTransitionEnd, ContactTransitionStart,
                             Initialize, LocomotionControl, SingleSupportSwing,
                             Stand, Walk)
from .managers import ContactManager, FootSpec, FootTaskManager, GrfManager
from .manipulation_fsm import Hold, Idle, ManipulationControl, Reach
from .state_machine import StateMachine
from .teleop import TeleopHandler, TeleopPose

INTERRUPT_CODES = frozenset({
    "step-in-place", "dcm-walk", "walk-forward", "walk", "stop",
    "turn-left", "turn-right", "vx+", "vx-", "vy+", "vy-",
    "hand-hold", "hand-idle", "freeze",
})


@dataclass
class ParamRequest:
    path: str
    value: object
    done: threading.Event = field(default_factory=threading.Event)
    ok: bool = False
    reason: str = None

    def wait(self, timeout=1.0):
        self.done.wait(timeout)
        return self.ok, self.reason


def standing_state(model: RobotModel, config) -> RobotState:
    """Initial state: configured posture with the lowest sole corner resting
    at (minus) the configured drop below the ground plane."""
    st = model.neutral_state()
    st.q_joints = np.asarray(config["sim"]["initial_q"], dtype=float).copy()
    cache = update_kinematics(model, st)
    lowest = math.inf
    for fcfg in config["robot"]["feet"].values():
        li = model.link_index(fcfg["link"])
        for corner in fcfg["corners"]:
            z = (cache.R[li] @ np.asarray(corner) + cache.p[li])[2]
            lowest = min(lowest, z)
    st.base_pos = np.array([0.0, 0.0, -lowest - config["sim"]["initial_drop"]])
    return st


def composite_inertia_about_com(cache) -> np.ndarray:
    """Whole-robot rotational inertia about the CoM in world axes."""
    model = cache.model
    com = cache.com_position
    I = np.zeros((3, 3))
    for i, lk in enumerate(model.links):
        if lk.mass == 0.0:
            continue
        R = cache.R[i]
        r = R @ lk.com + cache.p[i] - com
        S = spatial.skew(r)
        I += R @ lk.inertia @ R.T + lk.mass * (S @ S.T)
    return I


class ControlArchitecture:
    def __init__(self, model: RobotModel, config, log_fn=None):
        self.model = model
        self.config = config
        self.log = log_fn or (lambda channel, payload: None)
        self.dt = config["sim"]["dt"]
        self.t = 0.0
        self.tick_index = 0
        self.gravity = config["sim"]["gravity"]

        self.standing_posture = np.asarray(config["sim"]["initial_q"], dtype=float)
        ref_state = standing_state(model, config)
        ref_cache = update_kinematics(model, ref_state)
        self.z_com = config["dcm"]["z_com"] or float(ref_cache.com_position[2])

        # --- interface-layer queues (the only cross-thread touch points)
        self.interrupt_queue = collections.deque()
        self.param_queue = collections.deque()
        self.teleop_queue = collections.deque()
        self.dropped_events = 0

        # --- TCI container: tasks, contacts
        self.tci = TciContainer()
        tcfg = config["tasks"]
        self.feet = {name: FootSpec.from_config(name, fcfg)
                     for name, fcfg in config["robot"]["feet"].items()}
        # Feet enter the WBC as surface contacts over their corner set, the
        # same geometry the test environment uses; the corner pyramid bounds
        # give center-of-pressure authority in both axes during stance.
        full_fz = config["mpc"]["f_max"]
        for name, spec in self.feet.items():
            self.tci.add_contact(surface_contact(
                name, spec.link, spec.corners,
                mu=config["mpc"]["mu"], max_fz=full_fz))

        torso = config["robot"]["torso_link"]
        t_com = self.tci.add_task(com_task(
            "com", kp=tcfg["com"]["kp"], kd=tcfg["com"]["kd"],
            weight=tcfg["com"]["weight"], priority=tcfg["com"]["priority"]))
        t_torso = self.tci.add_task(link_ori_task(
            "torso_ori", torso, kp=tcfg["torso_ori"]["kp"], kd=tcfg["torso_ori"]["kd"],
            weight=tcfg["torso_ori"]["weight"], priority=tcfg["torso_ori"]["priority"]))
        foot_mgrs = {}
        for name, spec in self.feet.items():
            tp = self.tci.add_task(link_pos_task(
                f"{name}_foot_pos", spec.link, point_offset=spec.center,
                kp=tcfg["foot_pos"]["kp"], kd=tcfg["foot_pos"]["kd"],
                weight=tcfg["foot_pos"]["weight"], priority=tcfg["foot_pos"]["priority"]))
            to = self.tci.add_task(link_ori_task(
                f"{name}_foot_ori", spec.link,
                kp=tcfg["foot_ori"]["kp"], kd=tcfg["foot_ori"]["kd"],
                weight=tcfg["foot_ori"]["weight"], priority=tcfg["foot_ori"]["priority"]))
            tp.active = False
            to.active = False
            foot_mgrs[name] = FootTaskManager(self.tci, spec, tp, to)
        t_posture = self.tci.add_task(joint_task(
            "posture", model.n_joints, kp=tcfg["posture"]["kp"],
            kd=tcfg["posture"]["kd"], weight=tcfg["posture"]["weight"],
            priority=tcfg["posture"]["priority"]))
        t_posture.set_target(x_des=self.standing_posture)
        t_hand = self.tci.add_task(link_pos_task(
            "hand_pos", config["robot"]["hand_link"],
            kp=tcfg["hand_pos"]["kp"], kd=tcfg["hand_pos"]["kd"],
            weight=tcfg["hand_pos"]["weight"], priority=tcfg["hand_pos"]["priority"]))
        t_hand.active = False

        self.contact_mgr = ContactManager(self.tci, full_fz=full_fz)
        self.grf_mgr = GrfManager(self.tci, model.total_mass, self.gravity)
        self.grf_mgr.mode = config["wbc"]["fdes_mode"]
        self.grf_mgr.foot_order = list(self.feet)

        # --- estimators
        frames = [FootFrame(name, spec.link, spec.center)
                  for name, spec in self.feet.items()]
        est_cfg = config["estimator"]
        if est_cfg["type"] == "kinematic":
            self.estimator = KinematicEstimator(
                model, frames, self.dt,
                velocity_cutoff_hz=est_cfg["velocity_filter_cutoff_hz"],
                gravity=self.gravity)
        elif est_cfg["type"] == "kf":
            k = est_cfg["kf"]
            self.estimator = KalmanEstimator(
                model, frames, self.dt,
                noise=KfNoise(acc=k["acc_noise"],
                              foot_stationary=k["foot_stationary_noise"],
                              foot_swing=k["foot_swing_noise"],
                              meas=k["meas_noise"],
                              meas_swing_scale=k["meas_swing_scale"]),
                gravity=self.gravity)
        else:
            raise ConfigError(f"unknown estimator type '{est_cfg['type']}'")

        # --- whole-body controllers
        qps = qp.QpSettings(
            max_iter=config["wbc"]["qp"]["max_iter"],
            eps_abs=config["wbc"]["qp"]["eps_abs"],
            eps_rel=config["wbc"]["qp"]["eps_rel"],
            regularization=config["wbc"]["qp"]["regularization"])
        ih = config["wbc"]["ihwbc"]
        self.ihwbc = Ihwbc(model, IhwbcSettings(
            contact_weight=ih["contact_weight"], fdes_weight=ih["fdes_weight"],
            qddot_reg=ih["qddot_reg"], alpha_leak=ih["alpha_leak"],
            torque_limits=ih["torque_limits"],
            soft_contact_cones=ih["soft_contact_cones"],
            soft_cone_weight=ih["soft_cone_weight"], qp_settings=qps), self.dt)
        wi = config["wbc"]["wbic"]
        self.wbic = Wbic(model, WbicSettings(
            lambda_dls=wi["lambda_dls"], q1_base_relax=wi["q1_base_relax"],
            q2_force=wi["q2_force"], torque_limits=wi["torque_limits"],
            qp_settings=qps), self.dt)
        self.wbc_mode = "dcm"

        # --- state machines
        machine = StateMachine("locomotion", {
            "Initialize": Initialize(),
            "Stand": Stand(),
            "ContactTransitionStart": ContactTransitionStart(),
            "SingleSupportSwing": SingleSupportSwing(),
            "ContactTransitionEnd": ContactTransitionEnd(),
            "Walk": Walk(),
        }, "Initialize")
        self.loco = LocomotionControl(
            self, machine, self.feet, t_com, t_torso, t_posture,
            foot_mgrs, self.grf_mgr, full_fz)
        mcfg = config["mpc"]
        # Phase origin: a short full double support, then the first foot
        # swings; the second follows half a cycle later.
        self.loco.gait = GaitSchedule(
            cycle_time=mcfg["gait"]["cycle_time"], duty=mcfg["gait"]["duty"],
            offsets={name: off for name, off in zip(self.feet, (0.6, 0.1))})
        self.loco.mpc_setup = MpcSetup(
            horizon=mcfg["horizon"], dt=mcfg["dt"], mass=model.total_mass,
            inertia_body=composite_inertia_about_com(ref_cache),
            mu=mcfg["mu"], f_min=mcfg["f_min"], f_max=mcfg["f_max"],
            q_weights=np.asarray(mcfg["q_weights"], dtype=float),
            r_weight=mcfg["r_weight"], foot_names=tuple(self.feet))
        self.loco.set_ref_velocity(mcfg["ref_velocity"]["x"],
                                   mcfg["ref_velocity"]["y"],
                                   mcfg["ref_velocity"]["yaw"])
        self.loco.mpc_ref.z = config["mpc"]["z_com"] or self.z_com

        manip_machine = StateMachine("manipulation", {
            "Idle": Idle(), "Reach": Reach(), "Hold": Hold(),
        }, "Idle")
        self.manip = ManipulationControl(manip_machine, t_hand)

        tele = config["robot"]["teleop"]
        self.teleop = TeleopHandler(
            filter_tau=tele["filter_tau"],
            staleness_timeout=tele["staleness_timeout"],
            workspace_min=tele["workspace_min"],
            workspace_max=tele["workspace_max"])

        # --- live parameters
        self.params = ParameterRegistry()
        self._register_parameters()

        # --- fault handling
        self.fault_threshold = config["wbc"]["fault_threshold"]
        self.fault_count = 0
        self.frozen = False
        self.last_command = Command.zeros(model.n_joints)
        self.last_result = None
        self.last_mpc = None
        self.dump_qp_dir = None

        # populated each tick
        self.sensors: SensorData = None
        self.est_state: RobotState = None
        self.cache = None
        cutoff = config["estimator"]["joint_velocity_cutoff_hz"]
        self._jv_alpha = 1.0 - math.exp(-2.0 * math.pi * cutoff * self.dt) \
            if cutoff > 0 else 1.0
        self._jv_filt = None

    # --- parameter registry --------------------------------------------------

    def _register_parameters(self):
        def kp_setter(task):
            def set_kp(value):
                gain_validator(value)
                task.set_gains(kp=value)
            return set_kp

        def kd_setter(task):
            def set_kd(value):
                gain_validator(value)
                task.set_gains(kd=value)
            return set_kd

        for t in self.tci.tasks:
            base = f"task.{t.name}"
            self.params.register(f"{base}.kp", lambda t=t: t.kp, kp_setter(t))
            self.params.register(f"{base}.kd", lambda t=t: t.kd, kd_setter(t))
            self.params.register_value(f"{base}.weight", t, "weight",
                                       scalar_validator(lo=1e-9))
        s = self.ihwbc.settings
        for attr in ("contact_weight", "fdes_weight", "qddot_reg", "alpha_leak"):
            self.params.register_value(f"wbc.ihwbc.{attr}", s, attr,
                                       scalar_validator(lo=0.0))
        w = self.wbic.settings
        for attr in ("lambda_dls", "q1_base_relax", "q2_force"):
            self.params.register_value(f"wbc.wbic.{attr}", w, attr,
                                       scalar_validator(lo=0.0))
        ref = self.loco.mpc_ref
        self.params.register_value("mpc.ref_velocity.x", ref, "v_x",
                                   scalar_validator(-1.0, 1.0))
        self.params.register_value("mpc.ref_velocity.y", ref, "v_y",
                                   scalar_validator(-1.0, 1.0))
        self.params.register_value("mpc.ref_velocity.yaw", ref, "yaw_rate",
                                   scalar_validator(-1.0, 1.0))

    # --- inbound queues --------------------------------------------------------

    def submit_interrupt(self, code, source="Script"):
        self.interrupt_queue.append((code, source))

    def submit_parameter(self, path, value) -> ParamRequest:
        req = ParamRequest(path, value)
        self.param_queue.append(req)
        return req

    def submit_teleop(self, pose: TeleopPose):
        self.teleop_queue.append(pose)

    # --- lifecycle ---------------------------------------------------------------

    def initialize(self, first_sensors: SensorData, initial_state: RobotState):
        self.estimator.initialize(initial_state)
        self.ihwbc.reset_integrator(initial_state)
        self.est_state = initial_state.copy()
        self.last_command = Command(
            initial_state.q_joints.copy(),
            np.zeros(self.model.n_joints), np.zeros(self.model.n_joints))

    # --- the pipeline ---------------------------------------------------------------

    def tick(self, sensors: SensorData, dt=None) -> Command:
        dt = dt or self.dt
        raw_sensors = sensors
        # Joint velocities are low-pass filtered for control use; stance
        # resonances through raw velocity feedback destabilize the loop.
        if self._jv_filt is None or self._jv_alpha >= 1.0:
            self._jv_filt = sensors.joint_vel.copy()
        else:
            self._jv_filt = self._jv_filt + self._jv_alpha * (
                sensors.joint_vel - self._jv_filt)
        sensors = SensorData(
            t=sensors.t, imu_quat=sensors.imu_quat, imu_gyro=sensors.imu_gyro,
            imu_acc=sensors.imu_acc, joint_pos=sensors.joint_pos,
            joint_vel=self._jv_filt.copy(), contacts=sensors.contacts)
        self.sensors = sensors
        self.t = sensors.t
        events = self._drain_queues()

        try:
            est = self.estimator.update(sensors)
        except NumericalError:
            est = None
        if est is not None:
            self.est_state = est.to_state(sensors)
            self.log("est.base_pos", est.base_pos)
            self.log("est.base_quat", est.base_quat)
            self.log("est.base_vel", est.base_twist[3:])
        self.cache = update_kinematics(self.model, self.est_state,
                                       gravity=self.gravity)

        self.teleop.update(self.t, dt)

        prev_loco = self.loco.machine.active
        prev_manip = self.manip.machine.active
        self.loco.machine.step(self, self.t)
        self.manip.machine.step(self, self.t)
        self.teleop.end_tick()
        if self.loco.machine.active != prev_loco:
            self.log("arch.loco_state", self.loco.machine.active)
        if self.manip.machine.active != prev_manip:
            self.log("arch.manip_state", self.manip.machine.active)

        self.contact_mgr.update(self.t)
        f_des = self.grf_mgr.f_des(self.t)

        type_name = self.config["wbc"]["type_dcm"] if self.wbc_mode == "dcm" \
            else self.config["wbc"]["type_mpc"]
        controller = self.ihwbc if type_name == "ihwbc" else self.wbic
        result = controller.solve(self.tci, self.cache, self.est_state, f_des=f_des)
        self.last_result = result
        if self.dump_qp_dir is not None and getattr(controller, "last_problem", None) is not None:
            import os
            qp.save_problem(controller.last_problem, os.path.join(
                self.dump_qp_dir, f"wbc_{self.tick_index:06d}.json"))

        if self.frozen:
            command = self._freeze_command()
        elif result.optimal:
            self.fault_count = 0
            command = Command(result.q_cmd, result.v_cmd, result.tau)
            self.last_command = command
        else:
            self.fault_count += 1
            self.log("wbc.fault", float(self.fault_count))
            if self.fault_count > self.fault_threshold:
                self.frozen = True
                command = self._freeze_command()
            else:
                command = self.last_command
        self._log_tick(raw_sensors, events, command, result, f_des)
        self.tick_index += 1
        return command.copy()

    def _freeze_command(self) -> Command:
        g = self.cache.gravity_forces
        tau = g[6:] if self.model.floating_base else g.copy()
        tau = np.clip(tau, -self.model.effort_limits, self.model.effort_limits)
        return Command(self.sensors.joint_pos.copy(),
                       np.zeros(self.model.n_joints), tau)

    def _drain_queues(self):
        events = []
        while self.param_queue:
            req = self.param_queue.popleft()
            req.ok, req.reason = self.params.apply(req.path, req.value)
            req.done.set()
            self.log("arch.param", {"path": req.path, "value": req.value,
                                    "ok": req.ok, "reason": req.reason})
        while self.interrupt_queue:
            code, source = self.interrupt_queue.popleft()
            events.append((code, source))
            self._route_interrupt(code, source)
        while self.teleop_queue:
            pose = self.teleop_queue.popleft()
            self.teleop.ingest(pose)
            self.log("arch.teleop", {"t": pose.t, "pos": pose.pos,
                                     "quat": pose.quat,
                                     "gripper": bool(pose.gripper)})
            events.append(("teleop", "Stream"))
        return events

    def _route_interrupt(self, code, source):
        if code not in INTERRUPT_CODES:
            self.log("arch.event_rejected", {"code": code, "source": source})
            return
        self.log("arch.event", {"code": code, "source": source})
        ref = self.loco.mpc_ref
        if code == "freeze":
            self.frozen = True
        elif code in ("vx+", "vx-"):
            ref.v_x = float(np.clip(ref.v_x + (0.05 if code == "vx+" else -0.05),
                                    -0.5, 0.5))
        elif code in ("vy+", "vy-"):
            ref.v_y = float(np.clip(ref.v_y + (0.05 if code == "vy+" else -0.05),
                                    -0.3, 0.3))
        elif code in ("turn-left", "turn-right"):
            ref.yaw_rate = float(np.clip(
                ref.yaw_rate + (0.1 if code == "turn-left" else -0.1), -0.6, 0.6))
        elif code in ("hand-hold", "hand-idle"):
            self.manip.machine.interrupt(code)
        else:
            self.loco.machine.interrupt(code)

    def _log_tick(self, sensors, events, command, result, f_des):
        log = self.log
        cfg = self.config["telemetry"]
        if cfg["log_sensors"]:
            log("sensors.imu_quat", sensors.imu_quat)
            log("sensors.imu_gyro", sensors.imu_gyro)
            log("sensors.imu_acc", sensors.imu_acc)
            log("sensors.q", sensors.joint_pos)
            log("sensors.v", sensors.joint_vel)
            log("sensors.contact", np.array(
                [1.0 if sensors.contacts.get(n, False) else 0.0
                 for n in self.feet]))
        log("cmd.q", command.q_des)
        log("cmd.v", command.v_des)
        log("cmd.tau", command.tau_ff)
        if result.optimal:
            log("wbc.torque", result.tau)
            if result.forces is not None and len(result.forces):
                log("wbc.forces", result.forces)
            if "com" in result.task_errors:
                log("wbc.task.com.err", result.task_errors["com"])
                t = self.tci.task("com")
                log("wbc.task.com.cmd", t.kp * result.task_errors["com"])
        if self.tick_index % cfg["plot_decimation"] == 0:
            log("com.pos", self.cache.com_position)
            log("com.vel", self.cache.com_velocity)
            if self.loco.dcm_plan is not None:
                r = evaluate_dcm(self.loco.dcm_plan, self.loco.plan_time(self))
                log("dcm.ref", r["dcm"])
                log("dcm.com_ref", r["com"])
        if self.tick_index % cfg["viz_decimation"] == 0:
            for i, lk in enumerate(self.model.links):
                pose = np.concatenate([self.cache.p[i],
                                       spatial.rot_to_quat(self.cache.R[i])])
                log(f"viz.link.{lk.name}", pose)
            log("viz.com", self.cache.com_position)
            if f_des is not None:
                log("viz.fdes", f_des)
