"""Manipulation state machine: Idle -> Reach -> Hold.

Runs independently of the locomotion machine; it only touches the hand
task.  Reach targets arrive from the teleop handler (scripted or UI pose
streams).
"""
from __future__ import annotations

import numpy as np

from .state_machine import State


class Idle(State):
    name = "Idle"
    transitions = ("Reach",)

    def first_visit(self, ctx):
        ctx.manip.hand_task.active = False

    def one_step(self, ctx):
        pass

    def end_of_state(self, ctx):
        return ctx.teleop.has_target

    def next_state(self, ctx):
        return "Reach"


class Reach(State):
    name = "Reach"
    transitions = ("Hold", "Idle")

    def first_visit(self, ctx):
        ctx.manip.hand_task.active = True

    def one_step(self, ctx):
        target = ctx.teleop.filtered_target
        if target is not None:
            ctx.manip.hand_task.set_target(x_des=target, v_des=np.zeros(3))

    def end_of_state(self, ctx):
        m = ctx.manip.machine
        if m.consume_interrupt("hand-hold"):
            ctx.manip.go_idle = False
            return True
        if m.consume_interrupt("hand-idle"):
            ctx.manip.go_idle = True
            return True
        return False

    def next_state(self, ctx):
        return "Idle" if ctx.manip.go_idle else "Hold"


class Hold(State):
    name = "Hold"
    transitions = ("Reach", "Idle")

    def one_step(self, ctx):
        pass

    def end_of_state(self, ctx):
        m = ctx.manip.machine
        if m.consume_interrupt("hand-idle"):
            ctx.manip.go_idle = True
            return True
        if ctx.teleop.fresh_input:
            ctx.manip.go_idle = False
            return True
        return False

    def next_state(self, ctx):
        return "Idle" if ctx.manip.go_idle else "Reach"


class ManipulationControl:
    def __init__(self, machine, hand_task):
        self.machine = machine
        self.hand_task = hand_task
        self.go_idle = False
