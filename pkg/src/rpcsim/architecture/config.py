"""Configuration loading, validation, and the live-parameter registry.

One JSON document with sections robot, sim, estimator, dcm, mpc, wbc,
tasks, telemetry, keys.  Values merge over the defaults below; any key
absent from the defaults tree is a startup error, which catches typos
before a run begins.
"""
from __future__ import annotations

import copy
import json
import math

import numpy as np

from ..errors import ConfigError

DEFAULTS = {
    "robot": {
        "urdf": "models/toy_biped.urdf",
        "floating_base": True,
        "torso_link": "torso",
        "hand_link": "hand",
        "feet": {
            "left": {
                "link": "l_foot",
                "toe": [0.09, 0.0, -0.05],
                "heel": [-0.05, 0.0, -0.05],
                "center": [0.02, 0.0, -0.05],
                "corners": [[0.09, 0.02, -0.05], [0.09, -0.02, -0.05],
                            [-0.05, 0.02, -0.05], [-0.05, -0.02, -0.05]],
                "hip_offset": [0.0, 0.10],
            },
            "right": {
                "link": "r_foot",
                "toe": [0.09, 0.0, -0.05],
                "heel": [-0.05, 0.0, -0.05],
                "center": [0.02, 0.0, -0.05],
                "corners": [[0.09, 0.02, -0.05], [0.09, -0.02, -0.05],
                            [-0.05, 0.02, -0.05], [-0.05, -0.02, -0.05]],
                "hip_offset": [0.0, -0.10],
            },
        },
        "actuator": {"kp": 150.0, "kd": 3.0},
        "teleop": {
            "filter_tau": 0.08,
            "staleness_timeout": 0.5,
            "workspace_min": [-0.1, -0.35, 0.1],
            "workspace_max": [0.45, 0.35, 0.7],
        },
    },
    "sim": {
        "dt": 0.001,
        "substeps": 1,
        "seed": 0,
        "gravity": 9.81,
        "ground": {"stiffness": 5.0e4, "damping": 2.0e3, "friction": 0.8,
                   "tangential_gain": 1.0e5},
        "noise": {"enabled": False, "gyro_std": 0.0, "acc_std": 0.0,
                  "encoder_pos_std": 0.0, "encoder_vel_std": 0.0},
        "initial_q": [0.0, 0.0, -0.4, 0.8, -0.4, 0.0, 0.0, -0.4, 0.8, -0.4],
        "initial_drop": 0.0007,
    },
    "estimator": {
        "type": "kinematic",
        "velocity_filter_cutoff_hz": 50.0,
        "joint_velocity_cutoff_hz": 70.0,
        "contact_force_threshold_factor": 0.3,
        "kf": {"acc_noise": 0.05, "foot_stationary_noise": 1e-4,
               "foot_swing_noise": 1.0, "meas_noise": 1e-4,
               "meas_swing_scale": 1e3},
    },
    "dcm": {
        "z_com": None,
        "t_ss": 0.65,
        "t_ds": 0.25,
        "t_initial_transfer": 0.8,
        "t_final": 1.0,
        "stride": 0.1,
        "lateral": 0.0,
        "turn": 0.0,
        "steps_per_trigger": 2,
        "swing_apex": 0.05,
        "early_contact": True,
        "swing_duration_factor": 0.9,
        "k_dcm": 8.0,
        "liftoff_gate_tol": 0.003,
        "liftoff_gate_max_stretch": 0.35,
        "replan_each_step": True,
        "step_adjustment": True,
        "step_adjust_gain": 0.9,
        "step_adjust_max": [0.025, 0.05],
        "step_adjust_slew": 0.4,
        "max_stride": 0.25,
        "max_lateral": 0.12,
        "max_turn": 0.5236,
        "foot_separation": 0.2,
    },
    "mpc": {
        "horizon": 10,
        "dt": 0.025,
        "decimation": 25,
        "mu": 0.5,
        "f_min": 0.0,
        "f_max": 400.0,
        "q_weights": [80.0, 80.0, 250.0, 120.0, 120.0, 200.0,
                      1.0, 1.0, 4.0, 2.0, 2.0, 5.0, 0.0],
        "r_weight": 1e-6,
        "k_raibert": 0.03,
        "swing_apex": 0.04,
        "gait": {"cycle_time": 0.5, "duty": 0.6},
        "ref_velocity": {"x": 0.0, "y": 0.0, "yaw": 0.0},
        "z_com": None,
        "async_solve": False,
        "foothold_clamp": [0.18, 0.12],
    },
    "wbc": {
        "type_dcm": "ihwbc",
        "type_mpc": "ihwbc",
        "fdes_mode": "static",
        "fault_threshold": 10,
        "ihwbc": {"contact_weight": 3e3, "fdes_weight": 1e-5, "qddot_reg": 1e-6,
                  "alpha_leak": 0.015, "torque_limits": True,
                  "soft_contact_cones": False, "soft_cone_weight": 1e4},
        "wbic": {"lambda_dls": 1e-4, "q1_base_relax": 1.0, "q2_force": 1e-3,
                 "torque_limits": True},
        "qp": {"regularization": 1e-8, "eps_abs": 2e-7, "eps_rel": 2e-7,
               "max_iter": 40},
    },
    "tasks": {
        "com": {"kp": [30.0, 30.0, 100.0], "kd": [10.0, 10.0, 20.0],
                "weight": 50.0, "priority": 4},
        "torso_ori": {"kp": [150.0, 150.0, 130.0], "kd": [24.0, 24.0, 22.0],
                      "weight": 10.0, "priority": 3},
        "foot_pos": {"kp": [300.0, 300.0, 300.0], "kd": [28.0, 28.0, 28.0],
                     "weight": 40.0, "priority": 1},
        "foot_ori": {"kp": [100.0, 100.0, 100.0], "kd": [14.0, 14.0, 14.0],
                     "weight": 8.0, "priority": 2},
        "posture": {"kp": 20.0, "kd": 2.0, "weight": 0.03, "priority": 6},
        "hand_pos": {"kp": 40.0, "kd": 8.0, "weight": 0.4, "priority": 7},
    },
    "telemetry": {
        "enabled": True,
        "log_sensors": True,
        "log_truth": True,
        "viz_decimation": 20,
        "plot_decimation": 5,
        "queue_size": 4096,
    },
    "keys": {
        "w": "walk-forward",
        "x": "stop",
        "s": "step-in-place",
        "a": "turn-left",
        "d": "turn-right",
        "i": "vx+",
        "k": "vx-",
        "j": "vy+",
        "l": "vy-",
    },
}


def _merge(defaults, override, path=""):
    if not isinstance(override, dict):
        raise ConfigError(f"section '{path or '<root>'}' must be an object")
    out = copy.deepcopy(defaults)
    for key, val in override.items():
        here = f"{path}.{key}" if path else key
        if key not in defaults:
            raise ConfigError(f"unknown config key '{here}'")
        base = defaults[key]
        if isinstance(base, dict) and not _is_open_dict(path, key):
            out[key] = _merge(base, val, here)
        else:
            out[key] = copy.deepcopy(val)
    return out


def _is_open_dict(path, key):
    # "keys" bindings are free-form: any key name may map to a code.
    return (path == "" and key == "keys")


def load_config(overrides=None) -> dict:
    """Validated config: DEFAULTS overridden by the given document."""
    if overrides is None:
        return copy.deepcopy(DEFAULTS)
    return _merge(DEFAULTS, overrides)


def load_config_file(path) -> dict:
    with open(path, "r", encoding="utf-8") as f:
        doc = json.load(f)
    return load_config(doc)


class ParameterRegistry:
    """Dotted-path registry for live-tunable parameters.

    apply() returns (True, None) on success or (False, reason) with reason
    in {"unknown", "type", "range"}.
    """

    def __init__(self):
        self._entries = {}

    def register(self, path, getter, setter):
        self._entries[path] = (getter, setter)

    def register_value(self, path, obj, attr, validator=None):
        def getter():
            return getattr(obj, attr)

        def setter(value):
            if validator is not None:
                validator(value)
            setattr(obj, attr, value)
        self.register(path, getter, setter)

    def keys(self):
        return sorted(self._entries)

    def get(self, path):
        if path not in self._entries:
            return False, "unknown", None
        value = self._entries[path][0]()
        if isinstance(value, np.ndarray):
            value = value.tolist()
        return True, None, value

    def apply(self, path, value):
        if path not in self._entries:
            return False, "unknown"
        try:
            self._entries[path][1](value)
        except (TypeError,) as e:
            return False, "type"
        except ValueError as e:
            reason = str(e)
            return False, reason if reason in ("type", "range") else "range"
        return True, None


def gain_validator(value):
    arr = np.asarray(value, dtype=float)
    if arr.ndim > 1:
        raise TypeError("type")
    if not np.all(np.isfinite(arr)) or np.any(arr < 0):
        raise ValueError("range")


def scalar_validator(lo=None, hi=None):
    def check(value):
        if isinstance(value, (list, tuple, dict, str, bool)):
            raise TypeError("type")
        v = float(value)
        if not math.isfinite(v):
            raise ValueError("range")
        if lo is not None and v < lo:
            raise ValueError("range")
        if hi is not None and v > hi:
            raise ValueError("range")
    return check
