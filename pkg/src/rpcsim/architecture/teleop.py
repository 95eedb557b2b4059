"""Teleoperation pose-stream handling.

Poses arrive from scripted streams or the operator console; they are
low-pass filtered and clamped to a reachable workspace box before becoming
the manipulation Reach target.  A stale stream freezes the target.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from ..errors import InputError


@dataclass
class TeleopPose:
    t: float
    pos: np.ndarray
    quat: np.ndarray
    gripper: bool = False


class TeleopHandler:
    def __init__(self, filter_tau=0.08, staleness_timeout=0.5,
                 workspace_min=(-0.1, -0.35, 0.1), workspace_max=(0.45, 0.35, 0.7)):
        self.filter_tau = filter_tau
        self.staleness_timeout = staleness_timeout
        self.ws_min = np.asarray(workspace_min, dtype=float)
        self.ws_max = np.asarray(workspace_max, dtype=float)
        self.last_msg_t = None
        self.raw_target = None
        self.filtered_target = None
        self.gripper = False
        self.stale = False
        self.fresh_input = False
        self._last_stream_t = -math.inf

    @property
    def has_target(self):
        return self.raw_target is not None

    def ingest(self, pose: TeleopPose):
        """Queue-drained entry; timestamps must be monotone."""
        if pose.t < self._last_stream_t:
            raise InputError("teleop stream timestamps must be monotone")
        self._last_stream_t = pose.t
        clamped = np.minimum(np.maximum(np.asarray(pose.pos, dtype=float),
                                        self.ws_min), self.ws_max)
        self.raw_target = clamped
        self.gripper = pose.gripper
        self.last_msg_t = pose.t
        self.fresh_input = True

    def update(self, t, dt):
        """Per-tick filter step; call after draining the inbound queue."""
        if self.raw_target is None:
            return
        if self.last_msg_t is not None and t - self.last_msg_t > self.staleness_timeout:
            self.stale = True
            # Target frozen: no further filtering toward raw input.
            return
        self.stale = False
        if self.filtered_target is None:
            self.filtered_target = self.raw_target.copy()
        else:
            alpha = 1.0 - math.exp(-dt / self.filter_tau)
            self.filtered_target = self.filtered_target + alpha * (
                self.raw_target - self.filtered_target)

    def end_tick(self):
        self.fresh_input = False
