"""Footstep planning and the velocity-mode foothold heuristic."""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from ..errors import InputError


@dataclass
class Footstep:
    foot: str
    pose: np.ndarray          # (x, y, yaw) of the sole center on flat ground
    t_ss: float               # swing (single support) duration
    t_ds: float               # double support duration after the swing

    def __post_init__(self):
        self.pose = np.asarray(self.pose, dtype=float)
        if self.t_ss <= 0 or self.t_ds <= 0:
            raise InputError("step durations must be > 0")


@dataclass
class FootstepPlan:
    steps: list
    initial_feet: dict        # foot -> (x, y, yaw) at plan start

    def final_feet(self):
        feet = {k: np.asarray(v, dtype=float).copy() for k, v in self.initial_feet.items()}
        for s in self.steps:
            feet[s.foot] = s.pose.copy()
        return feet


@dataclass
class StepCommand:
    n_steps: int = 0
    stride: float = 0.0       # forward displacement per swing of each foot
    lateral: float = 0.0
    turn: float = 0.0         # yaw increment per swing
    t_ss: float = 0.65
    t_ds: float = 0.25
    first_foot: str = "left"
    foot_separation: float = 0.2
    max_stride: float = 0.25
    max_lateral: float = 0.12
    max_turn: float = math.pi / 6


def plan_footsteps(current_feet: dict, command: StepCommand,
                   mid_start=None) -> FootstepPlan:
    """Alternating-foot plan offset by the nominal foot separation.

    Forward motion advances each swing foot by the stride from its own
    previous placement (feet end level after a pair); the lateral offset and
    heading re-anchor to a virtual mid line every step, so width and heading
    drift are pulled back to nominal.  Poses are absolute ground SE(2);
    bound violations reject the plan with the offending step listed.
    """
    if abs(command.stride) > command.max_stride:
        raise InputError(f"stride {command.stride} exceeds bound {command.max_stride}")
    if abs(command.lateral) > command.max_lateral:
        raise InputError(f"lateral {command.lateral} exceeds bound {command.max_lateral}")
    if abs(command.turn) > command.max_turn:
        raise InputError(f"turn {command.turn} exceeds bound {command.max_turn}")

    feet = {k: np.asarray(v, dtype=float).copy() for k, v in current_feet.items()}
    order = [command.first_foot, _other(command.first_foot, feet)]
    side = {order[0]: 1.0 if feet[order[0]][1] >= feet[order[1]][1] else -1.0}
    side[order[1]] = -side[order[0]]
    if mid_start is not None:
        mid = np.asarray(mid_start, dtype=float).copy()
    else:
        vals = list(feet.values())
        mid = np.array([0.5 * (vals[0][0] + vals[1][0]),
                        0.5 * (vals[0][1] + vals[1][1]),
                        0.5 * (vals[0][2] + vals[1][2])])
    steps = []
    for k in range(command.n_steps):
        foot = order[k % 2]
        mid[2] += 0.5 * command.turn
        c, s = math.cos(mid[2]), math.sin(mid[2])
        mid[0] += 0.5 * (c * command.stride - s * command.lateral)
        mid[1] += 0.5 * (s * command.stride + c * command.lateral)
        off = side[foot] * 0.5 * command.foot_separation
        # Forward coordinate from the foot's own last placement, lateral and
        # heading from the mid line.
        fwd_own = c * feet[foot][0] + s * feet[foot][1] + command.stride
        lat_mid = -s * mid[0] + c * mid[1] + off
        new_pose = np.array([c * fwd_own - s * lat_mid,
                             s * fwd_own + c * lat_mid, mid[2]])
        steps.append(Footstep(foot, new_pose, command.t_ss, command.t_ds))
        feet[foot] = new_pose
    return FootstepPlan(steps, {k: np.asarray(v, dtype=float).copy()
                                for k, v in current_feet.items()})


def _other(foot, feet):
    names = list(feet)
    if foot not in names:
        raise InputError(f"unknown first foot '{foot}'")
    return names[1] if names[0] == foot else names[0]


def raibert_foothold(com_velocity, commanded_velocity, t_stance, hip_ref,
                     k_gain=0.03, clamp_box=(0.15, 0.10)):
    """Foothold from the stance-duration/velocity-error placement rule.

    hip_ref is (x, y, yaw); the offset is clamped to a kinematic box around
    the hip reference.  Translation-equivariant by construction.
    """
    if t_stance <= 0:
        raise InputError("stance duration must be > 0")
    v = np.asarray(com_velocity, dtype=float)[:2]
    v_cmd = np.asarray(commanded_velocity, dtype=float)[:2]
    hip = np.asarray(hip_ref, dtype=float)
    offset = 0.5 * t_stance * v + k_gain * (v - v_cmd)
    offset[0] = np.clip(offset[0], -clamp_box[0], clamp_box[0])
    offset[1] = np.clip(offset[1], -clamp_box[1], clamp_box[1])
    return np.array([hip[0] + offset[0], hip[1] + offset[1], hip[2]])
