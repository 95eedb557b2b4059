"""Headless/serving session glue: simulator + control architecture +
telemetry, with demo scenarios and the deterministic replay harness."""
from __future__ import annotations

import json
import os
import time

import numpy as np

from .architecture.config import load_config
from .architecture.control import ControlArchitecture, standing_state
from .architecture.teleop import TeleopPose
from .errors import ConfigError
from .interface import SensorData
from .rbd import parse_model
from .simenv import (ActuatorParams, ContactBody, GroundParams, NoiseParams,
                     SimWorld)
from .telemetry.hub import TelemetryHub
from .telemetry.records import ChannelSpec, SessionSchema, model_hash_of

DEMOS = ("stand", "step-in-place", "dcm-walk", "mpc-walk")


def build_world(model, config) -> SimWorld:
    scfg = config["sim"]
    feet = []
    for name, fcfg in config["robot"]["feet"].items():
        feet.append(ContactBody(name, fcfg["link"],
                                np.asarray(fcfg["corners"], dtype=float)))
    act = ActuatorParams(
        kp=config["robot"]["actuator"]["kp"],
        kd=config["robot"]["actuator"]["kd"],
        tau_max=model.effort_limits, n_joints=model.n_joints)
    ground = GroundParams(
        stiffness=scfg["ground"]["stiffness"], damping=scfg["ground"]["damping"],
        friction=scfg["ground"]["friction"],
        tangential_gain=scfg["ground"]["tangential_gain"])
    noise = NoiseParams(
        enabled=scfg["noise"]["enabled"], gyro_std=scfg["noise"]["gyro_std"],
        acc_std=scfg["noise"]["acc_std"],
        encoder_pos_std=scfg["noise"]["encoder_pos_std"],
        encoder_vel_std=scfg["noise"]["encoder_vel_std"])
    threshold = (config["estimator"]["contact_force_threshold_factor"]
                 * model.total_mass * scfg["gravity"] / 2.0)
    return SimWorld(model, feet, act, dt=scfg["dt"], substeps=scfg["substeps"],
                    ground=ground, noise=noise, seed=scfg["seed"],
                    gravity=scfg["gravity"], contact_force_threshold=threshold)


def session_schema(model, config, urdf_text) -> SessionSchema:
    chans = [
        ChannelSpec("sensors.imu_quat", "vector"),
        ChannelSpec("sensors.imu_gyro", "vector", "rad/s"),
        ChannelSpec("sensors.imu_acc", "vector", "m/s^2"),
        ChannelSpec("sensors.q", "vector", "rad"),
        ChannelSpec("sensors.v", "vector", "rad/s"),
        ChannelSpec("sensors.contact", "vector"),
        ChannelSpec("est.base_pos", "vector", "m"),
        ChannelSpec("est.base_quat", "vector"),
        ChannelSpec("est.base_vel", "vector", "m/s"),
        ChannelSpec("arch.loco_state", "state-id"),
        ChannelSpec("arch.manip_state", "state-id"),
        ChannelSpec("arch.event", "event"),
        ChannelSpec("arch.event_rejected", "event"),
        ChannelSpec("arch.param", "event"),
        ChannelSpec("arch.teleop", "event"),
        ChannelSpec("cmd.q", "vector", "rad"),
        ChannelSpec("cmd.v", "vector", "rad/s"),
        ChannelSpec("cmd.tau", "vector", "Nm"),
        ChannelSpec("wbc.torque", "vector", "Nm"),
        ChannelSpec("wbc.forces", "vector", "N"),
        ChannelSpec("wbc.fault", "scalar"),
        ChannelSpec("wbc.task.com.err", "vector", "m"),
        ChannelSpec("wbc.task.com.cmd", "vector", "m/s^2"),
        ChannelSpec("com.pos", "vector", "m"),
        ChannelSpec("com.vel", "vector", "m/s"),
        ChannelSpec("dcm.ref", "vector", "m"),
        ChannelSpec("dcm.com_ref", "vector", "m"),
        ChannelSpec("sim.true_base_pos", "vector", "m"),
        ChannelSpec("sim.true_base_quat", "vector"),
        ChannelSpec("sim.com", "vector", "m"),
        ChannelSpec("sim.com_vel", "vector", "m/s"),
        ChannelSpec("viz.com", "vector", "m"),
        ChannelSpec("viz.fdes", "vector", "N"),
        ChannelSpec("viz.footsteps", "event"),
        ChannelSpec("mpc.yaw_ref", "scalar", "rad"),
    ]
    for name in config["robot"]["feet"]:
        chans.append(ChannelSpec(f"sim.fz.{name}", "scalar", "N"))
        chans.append(ChannelSpec(f"mpc.grf.{name}", "vector", "N"))
    for lk in model.links:
        chans.append(ChannelSpec(f"viz.link.{lk.name}", "pose"))
    return SessionSchema(chans, model_hash_of(urdf_text), config)


class SimSession:
    """One simulated robot with its control loop and telemetry."""

    def __init__(self, config=None, demo="stand", log_path=None,
                 script_events=None, urdf_text=None, dump_qp=None):
        self.config = config or load_config()
        if demo not in DEMOS:
            raise ConfigError(f"unknown demo '{demo}' (options: {DEMOS})")
        self.demo = demo
        for section, overrides in demo_config_overrides(demo).items():
            self.config[section].update(overrides)
        if urdf_text is None:
            with open(self.config["robot"]["urdf"], "r", encoding="utf-8") as f:
                urdf_text = f.read()
        self.urdf_text = urdf_text
        self.model = parse_model(urdf_text,
                                 floating_base=self.config["robot"]["floating_base"])
        self.world = build_world(self.model, self.config)
        schema = session_schema(self.model, self.config, urdf_text)
        self.hub = TelemetryHub(schema, log_path=log_path,
                                queue_size=self.config["telemetry"]["queue_size"])
        telemetry_on = self.config["telemetry"]["enabled"]

        def log_fn(channel, payload):
            if telemetry_on:
                self.hub.log(self.arch.t, channel, payload)

        self.arch = ControlArchitecture(self.model, self.config, log_fn=log_fn)
        if dump_qp:
            os.makedirs(dump_qp, exist_ok=True)
            self.arch.dump_qp_dir = dump_qp
        self.events = list(script_events or [])
        self.events.extend(demo_events(demo, self.config))
        self.events.sort(key=lambda e: e["t"])
        self._next_event = 0
        init = standing_state(self.model, self.config)
        self.sensors = self.world.reset(init)
        self.arch.initialize(self.sensors, init.copy())
        self.tick_count = 0
        self.running = False

    # --- stepping -------------------------------------------------------------

    def step(self):
        """One control tick + one physics step."""
        t = self.sensors.t
        while self._next_event < len(self.events) and \
                self.events[self._next_event]["t"] <= t + 1e-12:
            ev = self.events[self._next_event]
            self._apply_event(ev)
            self._next_event += 1
        command = self.arch.tick(self.sensors)
        self.sensors = self.world.step(command)
        self._log_truth()
        self.tick_count += 1
        return command

    def _apply_event(self, ev):
        kind = ev.get("kind", "interrupt")
        if kind == "param":
            self.arch.submit_parameter(ev["path"], ev["value"])
        elif kind == "interrupt":
            self.arch.submit_interrupt(ev["code"], source=ev.get("source", "Script"))
        elif kind == "teleop":
            self.arch.submit_teleop(TeleopPose(
                t=ev["t"], pos=np.asarray(ev["pos"], dtype=float),
                quat=np.asarray(ev.get("quat", [1, 0, 0, 0]), dtype=float),
                gripper=bool(ev.get("gripper", False))))

    def _log_truth(self):
        if not self.config["telemetry"]["enabled"] or \
                not self.config["telemetry"]["log_truth"]:
            return
        if self.tick_count % self.config["telemetry"]["plot_decimation"] != 0:
            return
        t = self.sensors.t
        st = self.world.state
        self.hub.log(t, "sim.true_base_pos", st.base_pos)
        self.hub.log(t, "sim.true_base_quat", st.base_quat)
        cache = self.world._eval[0]
        self.hub.log(t, "sim.com", cache.com_position)
        self.hub.log(t, "sim.com_vel", cache.com_velocity)
        for name, fz in self.world.last_contact_forces.items():
            self.hub.log(t, f"sim.fz.{name}", fz)

    def run(self, duration, realtime=False, on_tick=None, should_stop=None):
        self.running = True
        n = int(round(duration / self.world.dt))
        wall0 = time.perf_counter()
        try:
            for k in range(n):
                if should_stop is not None and should_stop():
                    break
                self.step()
                if on_tick is not None:
                    on_tick(self)
                if realtime:
                    lag = self.sensors.t - (time.perf_counter() - wall0)
                    if lag > 0:
                        time.sleep(min(lag, 0.05))
        finally:
            self.running = False

    def close(self):
        self.hub.close()


def demo_config_overrides(demo):
    """Scenario-specific tuning applied on top of the session config."""
    if demo == "dcm-walk":
        return {"dcm": {"stride": 0.08}}
    return {}


def demo_events(demo, config):
    """Built-in event scripts reproducing the demo scenarios."""
    if demo == "stand":
        return []
    if demo == "step-in-place":
        # 4 triggers x steps_per_trigger(2) = 8 single-support swings.
        return [{"t": 0.5 + 2.8 * k, "kind": "interrupt", "code": "step-in-place"}
                for k in range(4)]
    if demo == "dcm-walk":
        return [{"t": 0.5 + 3.2 * k, "kind": "interrupt", "code": "walk-forward"}
                for k in range(2)]
    if demo == "mpc-walk":
        return [
            {"t": 1.0, "kind": "interrupt", "code": "walk"},
            {"t": 1.2, "kind": "param", "path": "mpc.ref_velocity.x", "value": 0.15},
            {"t": 1.4, "kind": "param", "path": "mpc.ref_velocity.x", "value": 0.3},
            {"t": 6.4, "kind": "param", "path": "mpc.ref_velocity.x", "value": 0.0},
            {"t": 6.4, "kind": "param", "path": "mpc.ref_velocity.yaw", "value": 0.3},
            {"t": 11.4, "kind": "param", "path": "mpc.ref_velocity.yaw", "value": 0.0},
            {"t": 11.6, "kind": "interrupt", "code": "stop"},
        ]
    return []


def default_duration(demo):
    return {"stand": 3.0, "step-in-place": 14.0, "dcm-walk": 9.5,
            "mpc-walk": 13.0}[demo]


def load_events_script(path):
    """Events-script JSON: a list of {t, code} interrupts (plus optional
    {t, kind: param/teleop, ...} entries for richer scripted runs)."""
    with open(path, "r", encoding="utf-8") as f:
        doc = json.load(f)
    if not isinstance(doc, list):
        raise ConfigError("events script must be a JSON list")
    for ev in doc:
        if "t" not in ev or ("code" not in ev and ev.get("kind") not in
                             ("param", "teleop")):
            raise ConfigError(f"bad event entry: {ev}")
    return doc


# --- deterministic replay harness ------------------------------------------

def replay_commands(log_path):
    """Re-run tick() over a recorded sensor/event log.

    Returns (original_cmd_lines, replayed_cmd_lines) as serialized record
    lines for byte comparison.
    """
    from .telemetry.logfile import LogReader
    from .telemetry.records import LogRecord, record_to_json

    reader = LogReader(log_path)
    config = load_config(strip_defaults(reader.schema.config_snapshot))
    with open(config["robot"]["urdf"], "r", encoding="utf-8") as f:
        urdf_text = f.read()
    if model_hash_of(urdf_text) != reader.schema.model_hash:
        raise ConfigError("URDF on disk does not match the logged model hash")
    model = parse_model(urdf_text, floating_base=config["robot"]["floating_base"])

    # Group per-tick inputs from the log.
    ticks = {}
    order = []
    original_cmds = []
    feet = list(config["robot"]["feet"])
    for rec in reader.records():
        tick = ticks.get(rec.t)
        if tick is None:
            tick = {"sensors": {}, "events": []}
            ticks[rec.t] = tick
            order.append(rec.t)
        if rec.channel.startswith("sensors."):
            tick["sensors"][rec.channel.split(".", 1)[1]] = rec.payload
        elif rec.channel in ("arch.event", "arch.param", "arch.teleop"):
            tick["events"].append((rec.channel, rec.payload))
        elif rec.channel.startswith("cmd."):
            original_cmds.append(record_to_json(rec))

    replayed = []

    def log_fn(channel, payload):
        if channel.startswith("cmd."):
            replayed.append(record_to_json(
                LogRecord(t=arch.t, channel=channel, payload=payload)))

    arch = ControlArchitecture(model, config, log_fn=log_fn)
    init = standing_state(model, config)
    arch.initialize(None, init.copy())
    for t in order:
        tick = ticks[t]
        s = tick["sensors"]
        if "q" not in s:
            continue
        for channel, payload in tick["events"]:
            if channel == "arch.event":
                arch.submit_interrupt(payload["code"], payload["source"])
            elif channel == "arch.param":
                arch.submit_parameter(payload["path"], payload["value"])
            elif channel == "arch.teleop":
                arch.submit_teleop(TeleopPose(
                    t=payload["t"], pos=np.asarray(payload["pos"]),
                    quat=np.asarray(payload["quat"]),
                    gripper=payload["gripper"]))
        sensors = SensorData(
            t=t,
            imu_quat=np.asarray(s["imu_quat"]),
            imu_gyro=np.asarray(s["imu_gyro"]),
            imu_acc=np.asarray(s["imu_acc"]),
            joint_pos=np.asarray(s["q"]),
            joint_vel=np.asarray(s["v"]),
            contacts={name: bool(flag) for name, flag in
                      zip(feet, s["contact"])},
        )
        arch.tick(sensors)
    return original_cmds, replayed


def strip_defaults(snapshot):
    """Config snapshots are full trees; they merge cleanly over DEFAULTS."""
    return snapshot
