"""Locomotion state machines.

DCM machine (quasi-static stepping/walking):
    Initialize -> Stand -> [ContactTransitionStart -> SingleSupportSwing ->
    ContactTransitionEnd]* -> Stand
MPC machine (velocity-mode dynamic walking):
    Initialize -> Stand -> Walk -> Stand, with a periodic gait schedule
    driving contacts inside Walk.
"""
from __future__ import annotations

import math

import numpy as np

from ..locomotion import (FootstepPlan, GaitSchedule, MpcReference, MpcSetup,
                          StepCommand, compute_dcm_plan, evaluate_dcm,
                          plan_footsteps, raibert_foothold, solve_srbd_mpc,
                          srbd_state)
from ..errors import PlanInfeasibleError
from ..rbd import spatial
from .state_machine import State

DCM_STEP_CODES = ("step-in-place", "walk-forward", "dcm-walk")


def _foot_ground_pose(cache, spec):
    """(x, y, yaw) of the sole center projected on the ground."""
    li = cache.model.link_index(spec.link)
    p = cache.R[li] @ spec.center + cache.p[li]
    yaw = spatial.yaw_of(cache.R[li])
    return np.array([p[0], p[1], yaw])


class Initialize(State):
    name = "Initialize"
    transitions = ("Stand",)

    def __init__(self, duration=0.3):
        self.duration = duration

    def first_visit(self, ctx):
        loco = ctx.loco
        loco.posture_task.active = True
        loco.posture_task.set_target(x_des=ctx.standing_posture)
        for foot in loco.feet.values():
            ctx.contact_mgr.set_active(foot.name, True)
            ctx.contact_mgr.snap(foot.name, loco.full_fz)
        loco.com_task.active = False
        loco.torso_task.active = False

    def end_of_state(self, ctx):
        return ctx.loco.machine.time_in_state(ctx.t) >= self.duration

    def next_state(self, ctx):
        return "Stand"


class Stand(State):
    name = "Stand"
    transitions = ("ContactTransitionStart", "Walk")

    def first_visit(self, ctx):
        loco = ctx.loco
        loco.com_task.active = True
        loco.torso_task.active = True
        loco.posture_task.active = True
        loco.posture_task.set_target(x_des=ctx.standing_posture,
                                     v_des=np.zeros(ctx.model.n_joints))
        for mgr in loco.foot_mgrs.values():
            mgr.end_swing()
        for foot in loco.feet.values():
            ctx.contact_mgr.set_active(foot.name, True)
            ctx.contact_mgr.start_ramp(foot.name, ctx.t, 0.1, loco.full_fz)
        feet_poses = [_foot_ground_pose(ctx.cache, f) for f in loco.feet.values()]
        mid = np.mean([fp[:2] for fp in feet_poses], axis=0)
        yaw = float(np.mean([fp[2] for fp in feet_poses]))
        loco.com_task.set_target(
            x_des=np.array([mid[0], mid[1], ctx.z_com]),
            v_des=np.zeros(3), a_ff=np.zeros(3))
        loco.torso_task.set_target(
            x_des=spatial.quat_from_rotvec(np.array([0.0, 0.0, yaw])),
            v_des=np.zeros(3))
        loco.grf_mgr.mode = "static"
        loco.plan = None
        loco.dcm_plan = None
        ctx.wbc_mode = "dcm"

    def one_step(self, ctx):
        loco = ctx.loco
        m = loco.machine
        for code in DCM_STEP_CODES:
            if m.consume_interrupt(code):
                loco.start_dcm_plan(ctx, code)
                return
        if m.consume_interrupt("walk"):
            loco.walk_requested = True

    def end_of_state(self, ctx):
        return ctx.loco.plan is not None or ctx.loco.walk_requested

    def next_state(self, ctx):
        if ctx.loco.plan is not None:
            return "ContactTransitionStart"
        ctx.loco.walk_requested = False
        return "Walk"


class ContactTransitionStart(State):
    name = "ContactTransitionStart"
    transitions = ("SingleSupportSwing",)

    def first_visit(self, ctx):
        self._ramp_started = False

    def one_step(self, ctx):
        loco = ctx.loco
        cfg = ctx.config["dcm"]
        if not self._ramp_started:
            step = loco.current_step()
            lift_t = loco.lift_time(loco.step_index)
            window = min(0.6 * step.t_ds, max(lift_t - loco.plan_time(ctx), 1e-3))
            if loco.plan_time(ctx) >= lift_t - window:
                # Gate before unloading: hold the plan clock in full double
                # support until the divergent component has converged, then
                # run the un-stretched unloading ramp.
                err = loco.dcm_error(ctx)
                if err is not None and err > cfg["liftoff_gate_tol"] and \
                        loco.gate_stretch < cfg["liftoff_gate_max_stretch"]:
                    loco.plan_t0 += ctx.dt
                    loco.gate_stretch += ctx.dt
                else:
                    ctx.contact_mgr.start_ramp(step.foot, ctx.t, window, 2.0)
                    self._ramp_started = True
                    loco.gate_stretch = 0.0
        loco.track_dcm(ctx)

    def end_of_state(self, ctx):
        loco = ctx.loco
        return loco.plan_time(ctx) >= loco.lift_time(loco.step_index)

    def next_state(self, ctx):
        return "SingleSupportSwing"


class SingleSupportSwing(State):
    name = "SingleSupportSwing"
    transitions = ("ContactTransitionEnd",)

    def first_visit(self, ctx):
        loco = ctx.loco
        step = loco.current_step()
        swing = step.foot
        ctx.contact_mgr.snap(swing, 0.0)
        ctx.contact_mgr.set_active(swing, False)
        loco.applied_adjust = np.zeros(2)
        spec = loco.feet[swing]
        li = ctx.model.link_index(spec.link)
        lift_pos = ctx.cache.R[li] @ spec.center + ctx.cache.p[li]
        lift_quat = spatial.rot_to_quat(ctx.cache.R[li])
        loco.foot_mgrs[swing].start_swing(
            ctx.t, lift_pos, lift_quat, step.pose,
            ctx.config["dcm"]["swing_apex"],
            step.t_ss * ctx.config["dcm"]["swing_duration_factor"])

    def one_step(self, ctx):
        loco = ctx.loco
        step = loco.current_step()
        cfg = ctx.config["dcm"]
        t_local = ctx.t - loco.machine.entry_time
        if cfg["step_adjustment"] and 0.25 * step.t_ss < t_local < 0.75 * step.t_ss:
            adj = loco.landing_adjustment(ctx)
            if adj is not None:
                # Slew the applied shift so an early noisy prediction cannot
                # slam the swing target to the clamp.
                slew = cfg["step_adjust_slew"] * ctx.dt
                delta = np.clip(adj - loco.applied_adjust, -slew, slew)
                loco.applied_adjust = loco.applied_adjust + delta
                pose = step.pose.copy()
                pose[:2] += loco.applied_adjust
                loco.foot_mgrs[step.foot].retarget(pose)
        loco.foot_mgrs[step.foot].update(ctx.t)
        loco.track_dcm(ctx)

    def end_of_state(self, ctx):
        loco = ctx.loco
        step = loco.current_step()
        t_local = ctx.t - loco.machine.entry_time
        if loco.early_contact and t_local > 0.5 * step.t_ss and \
                ctx.sensors.contacts.get(step.foot, False):
            return True
        return loco.plan_time(ctx) >= loco.land_time(loco.step_index)

    def next_state(self, ctx):
        return "ContactTransitionEnd"


class ContactTransitionEnd(State):
    name = "ContactTransitionEnd"
    transitions = ("ContactTransitionStart", "Stand")

    def first_visit(self, ctx):
        loco = ctx.loco
        step = loco.current_step()
        swing = step.foot
        loco.foot_mgrs[swing].end_swing()
        # The penalty ground loads the landed foot immediately; a slow cone
        # ramp would make the model fight reality, so jump most of the way.
        ctx.contact_mgr.set_active(swing, True)
        ctx.contact_mgr.snap(swing, 0.6 * loco.full_fz)
        ctx.contact_mgr.start_ramp(swing, ctx.t, 0.25 * step.t_ds, loco.full_fz)
        if ctx.config["dcm"]["replan_each_step"] and \
                loco.step_index + 1 < len(loco.plan.steps):
            loco.replan_remaining(ctx)

    def one_step(self, ctx):
        ctx.loco.track_dcm(ctx)

    def end_of_state(self, ctx):
        loco = ctx.loco
        if loco.replanned:
            return loco.plan_time(ctx) >= loco.segment_start(0)
        return loco.plan_time(ctx) >= loco.segment_end(loco.step_index)

    def next_state(self, ctx):
        loco = ctx.loco
        if loco.replanned:
            loco.replanned = False
            return "ContactTransitionStart"
        if loco.step_index + 1 < len(loco.plan.steps):
            loco.step_index += 1
            return "ContactTransitionStart"
        return "Stand"


class Walk(State):
    """Gait-schedule-driven dynamic walking with MPC reaction forces."""

    name = "Walk"
    transitions = ("Stand",)

    def first_visit(self, ctx):
        loco = ctx.loco
        ctx.wbc_mode = "mpc"
        loco.grf_mgr.mode = "mpc"
        loco.gait_t0 = ctx.t
        loco.stop_requested = False
        loco.swing_active = {f: False for f in loco.feet}
        loco.swing_target = {f: None for f in loco.feet}
        loco.swing_armed = {f: False for f in loco.feet}
        loco.awaiting_touchdown = {f: False for f in loco.feet}
        loco.yaw_ref = spatial.yaw_of(ctx.cache.R[ctx.model.link_index(
            ctx.config["robot"]["torso_link"])])
        loco.pos_ref = ctx.cache.com_position[:2].copy()
        loco.com_task.active = True
        loco.torso_task.active = True
        loco.posture_task.active = True
        loco.grf_mgr.foot_order = list(loco.feet)
        loco.last_mpc_tick = -10**9

    def one_step(self, ctx):
        loco = ctx.loco
        m = loco.machine
        if m.consume_interrupt("stop"):
            loco.stop_requested = True
            loco.set_ref_velocity(0.0, 0.0, 0.0)
        gait: GaitSchedule = loco.gait
        t_g = ctx.t - loco.gait_t0

        ref = loco.mpc_ref
        # Integrate the command frame, leashed to the actual CoM.
        loco.yaw_ref += ref.yaw_rate * ctx.dt
        c, s = math.cos(loco.yaw_ref), math.sin(loco.yaw_ref)
        v_world = np.array([c * ref.v_x - s * ref.v_y, s * ref.v_x + c * ref.v_y])
        loco.pos_ref = loco.pos_ref + v_world * ctx.dt
        com_xy = ctx.cache.com_position[:2]
        loco.pos_ref = np.clip(loco.pos_ref, com_xy - 0.08, com_xy + 0.08)

        contacts_now = gait.contacts_at(t_g) if not loco.stop_requested else \
            {f: True for f in loco.feet}

        for fname, spec in loco.feet.items():
            in_stance = contacts_now[fname]
            was_swing = loco.swing_active[fname]
            if in_stance and not loco.swing_armed[fname]:
                loco.swing_armed[fname] = True
            if in_stance and was_swing:
                if ctx.sensors.contacts.get(fname, False) or \
                        not loco.awaiting_touchdown[fname]:
                    # Scheduled touchdown confirmed (or grant it on the
                    # first edge; the late case below re-enters otherwise).
                    loco.foot_mgrs[fname].end_swing()
                    ctx.contact_mgr.set_active(fname, True)
                    ctx.contact_mgr.snap(fname, loco.full_fz)
                    loco.swing_active[fname] = False
                    loco.awaiting_touchdown[fname] = False
            elif not in_stance and not was_swing and loco.swing_armed[fname]:
                ctx.contact_mgr.snap(fname, 0.0)
                ctx.contact_mgr.set_active(fname, False)
                li = ctx.model.link_index(spec.link)
                lift_pos = ctx.cache.R[li] @ spec.center + ctx.cache.p[li]
                lift_quat = spatial.rot_to_quat(ctx.cache.R[li])
                _, _, t_remaining = gait.swing_progress(t_g, fname)
                target = loco.foothold(ctx, fname, t_remaining)
                loco.swing_target[fname] = target
                loco.foot_mgrs[fname].start_swing(
                    ctx.t, lift_pos, lift_quat, target,
                    ctx.config["mpc"]["swing_apex"],
                    max(t_remaining, 0.05))
                loco.swing_active[fname] = True
            if loco.swing_active[fname]:
                in_swing, prog, t_remaining = gait.swing_progress(t_g, fname)
                if in_swing and prog < 0.6:
                    fresh = loco.foothold(ctx, fname, t_remaining)
                    held = loco.swing_target[fname]
                    step_lim = 0.5 * ctx.dt
                    held[:2] += np.clip(fresh[:2] - held[:2], -step_lim, step_lim)
                    held[2] = fresh[2]
                    loco.foot_mgrs[fname].retarget(held)
                elif not in_swing:
                    # Past the scheduled touchdown with no contact yet: keep
                    # reaching below the ground plane until it lands.
                    loco.awaiting_touchdown[fname] = True
                    if ctx.sensors.contacts.get(fname, False):
                        loco.foot_mgrs[fname].end_swing()
                        ctx.contact_mgr.set_active(fname, True)
                        ctx.contact_mgr.snap(fname, loco.full_fz)
                        loco.swing_active[fname] = False
                        loco.awaiting_touchdown[fname] = False
                    else:
                        held = loco.swing_target[fname]
                        loco.foot_mgrs[fname].retarget(held, touch_down_z=-0.02)
                loco.foot_mgrs[fname].update(ctx.t)


        # Body reference tasks.
        loco.com_task.set_target(
            x_des=np.array([loco.pos_ref[0], loco.pos_ref[1], ctx.z_com]),
            v_des=np.array([v_world[0], v_world[1], 0.0]),
            a_ff=np.zeros(3))
        loco.torso_task.set_target(
            x_des=spatial.quat_from_rotvec(np.array([0.0, 0.0, loco.yaw_ref])),
            v_des=np.array([0.0, 0.0, ref.yaw_rate]))

        if ctx.tick_index - loco.last_mpc_tick >= ctx.config["mpc"]["decimation"]:
            loco.replan_mpc(ctx, t_g, contacts_now)
            loco.last_mpc_tick = ctx.tick_index

    def end_of_state(self, ctx):
        loco = ctx.loco
        if not loco.stop_requested:
            return False
        t_g = ctx.t - loco.gait_t0
        return all(loco.gait.contacts_at(t_g).values())

    def next_state(self, ctx):
        return "Stand"


class LocomotionControl:
    """Shared context: plans, managers, references, and the machine itself."""

    def __init__(self, ctx, machine, feet, com_task, torso_task, posture_task,
                 foot_mgrs, grf_mgr, full_fz):
        self.machine = machine
        self.feet = feet
        self.com_task = com_task
        self.torso_task = torso_task
        self.posture_task = posture_task
        self.foot_mgrs = foot_mgrs
        self.grf_mgr = grf_mgr
        self.full_fz = full_fz
        self.plan = None
        self.dcm_plan = None
        self.plan_t0 = 0.0
        self.step_index = 0
        self.early_contact = True
        self.home_mid = None
        self.applied_adjust = np.zeros(2)
        self.gate_stretch = 0.0
        self.replanned = False
        self.walk_requested = False
        self.stop_requested = False
        self.gait = GaitSchedule()
        self.gait_t0 = 0.0
        self.swing_active = {}
        self.swing_target = {}
        self.swing_armed = {}
        self.awaiting_touchdown = {}
        self.mpc_ref = MpcReference()
        self.mpc_setup: MpcSetup = None
        self.yaw_ref = 0.0
        self.pos_ref = np.zeros(2)
        self.last_mpc_tick = -10**9
        self.mpc_failures = 0

    # --- DCM plan bookkeeping ---------------------------------------------

    def start_dcm_plan(self, ctx, code):
        cfg = ctx.config["dcm"]
        feet_poses = {n: _foot_ground_pose(ctx.cache, f) for n, f in self.feet.items()}
        if code == "step-in-place":
            cmd = StepCommand(n_steps=cfg["steps_per_trigger"], stride=0.0,
                              lateral=0.0, turn=0.0, t_ss=cfg["t_ss"],
                              t_ds=cfg["t_ds"], foot_separation=cfg["foot_separation"],
                              max_stride=cfg["max_stride"],
                              max_lateral=cfg["max_lateral"], max_turn=cfg["max_turn"])
        else:
            cmd = StepCommand(n_steps=cfg["steps_per_trigger"], stride=cfg["stride"],
                              lateral=cfg["lateral"], turn=cfg["turn"],
                              t_ss=cfg["t_ss"], t_ds=cfg["t_ds"],
                              foot_separation=cfg["foot_separation"],
                              max_stride=cfg["max_stride"],
                              max_lateral=cfg["max_lateral"], max_turn=cfg["max_turn"])
        # Step targets anchor to a session home pose so execution drift is
        # walked back out instead of accumulating.
        if self.home_mid is None:
            vals = [np.asarray(v, dtype=float) for v in feet_poses.values()]
            self.home_mid = 0.5 * (vals[0] + vals[1])
        self.plan = plan_footsteps(feet_poses, cmd, mid_start=self.home_mid)
        n = cmd.n_steps
        c, sn = math.cos(self.home_mid[2]), math.sin(self.home_mid[2])
        adv = 0.5 * n * np.array([c * cmd.stride - sn * cmd.lateral,
                                  sn * cmd.stride + c * cmd.lateral])
        self.home_mid = self.home_mid + np.array([adv[0], adv[1],
                                                  0.5 * n * cmd.turn])
        com0 = np.array([ctx.cache.com_position[0], ctx.cache.com_position[1],
                         ctx.z_com])
        self.dcm_plan = compute_dcm_plan(
            self.plan, ctx.z_com,
            com0=com0,
            t_initial_transfer=cfg["t_initial_transfer"],
            t_final=cfg["t_final"], dt_grid=ctx.dt)
        self.plan_t0 = ctx.t
        self.step_index = 0
        self.early_contact = cfg["early_contact"]

    def plan_time(self, ctx):
        return ctx.t - self.plan_t0

    def dcm_error(self, ctx):
        """Horizontal distance between measured and reference DCM."""
        if self.dcm_plan is None:
            return None
        r = evaluate_dcm(self.dcm_plan, self.plan_time(ctx))
        w = self.dcm_plan.omega
        xi = ctx.cache.com_position[:2] + ctx.cache.com_velocity[:2] / w
        return float(np.linalg.norm(xi - r["dcm"][:2]))

    def landing_adjustment(self, ctx):
        """Shift the swing target under the predicted divergent-state error.

        The error between measured and reference DCM grows by e^(w t) until
        touchdown; placing the foot there makes the next stance consistent
        with where the robot actually is.
        """
        if self.dcm_plan is None:
            return None
        cfg = ctx.config["dcm"]
        w = self.dcm_plan.omega
        t_rem = max(self.land_time(self.step_index) - self.plan_time(ctx), 0.0)
        r = evaluate_dcm(self.dcm_plan, self.plan_time(ctx))
        xi = ctx.cache.com_position[:2] + ctx.cache.com_velocity[:2] / w
        err_land = (xi - r["dcm"][:2]) * math.exp(min(w * t_rem, 3.0))
        adj = cfg["step_adjust_gain"] * err_land
        m = np.asarray(cfg["step_adjust_max"])
        return np.clip(adj, -m, m)

    def replan_remaining(self, ctx):
        """Rebuild the DCM plan for the steps still ahead from the actual
        foot positions; each landing re-anchors the support sequence."""
        cfg = ctx.config["dcm"]
        remaining = self.plan.steps[self.step_index + 1:]
        feet_now = {n: _foot_ground_pose(ctx.cache, f) for n, f in self.feet.items()}
        new_plan = FootstepPlan(list(remaining), feet_now)
        com0 = np.array([ctx.cache.com_position[0], ctx.cache.com_position[1],
                         ctx.z_com])
        step = self.current_step()
        self.dcm_plan = compute_dcm_plan(
            new_plan, ctx.z_com, com0=com0,
            t_initial_transfer=step.t_ds,
            t_final=cfg["t_final"], dt_grid=ctx.dt)
        # The replanned timeline starts half a double-support before now so
        # the current transition window lines up with segment 0.
        self.plan = new_plan
        self.plan_t0 = ctx.t - 0.5 * step.t_ds
        self.step_index = 0
        self.replanned = True

    def current_step(self):
        return self.plan.steps[self.step_index]

    def segment_start(self, i):
        return float(self.dcm_plan.t_starts[i + 1])

    def segment_end(self, i):
        return self.segment_start(i) + self.plan.steps[i].t_ds + self.plan.steps[i].t_ss

    def lift_time(self, i):
        return self.segment_start(i) + 0.5 * self.plan.steps[i].t_ds

    def land_time(self, i):
        return self.lift_time(i) + self.plan.steps[i].t_ss

    def support_bounds(self, ctx, inset=0.006):
        """Axis-aligned bounds of the active support region (world xy)."""
        lo = np.array([math.inf, math.inf])
        hi = np.array([-math.inf, -math.inf])
        for c in ctx.tci.active_contacts():
            if c.max_fz < 1.0:
                continue
            li = ctx.model.link_index(c.link)
            for off in c.points:
                pw = ctx.cache.R[li] @ off + ctx.cache.p[li]
                lo = np.minimum(lo, pw[:2])
                hi = np.maximum(hi, pw[:2])
        if not np.all(np.isfinite(lo)):
            return None
        mid = 0.5 * (lo + hi)
        lo = np.minimum(lo + inset, mid)
        hi = np.maximum(hi - inset, mid)
        return lo, hi

    def track_dcm(self, ctx):
        """CoM task targets with feedback on the measured divergent component.

        The horizontal acceleration command steers the measured DCM toward
        its reference through a virtual-repellent-point shift, clamped to
        the active support region: requesting a point outside it could only
        be realized by tipping about a foot edge.  Height tracking stays a
        plain PD through the task gains.
        """
        r = evaluate_dcm(self.dcm_plan, self.plan_time(ctx))
        w = self.dcm_plan.omega
        com = ctx.cache.com_position
        com_vel = ctx.cache.com_velocity
        xi_act = com[:2] + com_vel[:2] / w
        xi_err = xi_act - r["dcm"][:2]
        k_xi = ctx.config["dcm"]["k_dcm"]
        xi_dot_cmd = r["dcm_vel"][:2] - k_xi * xi_err
        p_cmd = xi_act - xi_dot_cmd / w
        bounds = self.support_bounds(ctx)
        if bounds is not None:
            p_cmd = np.clip(p_cmd, bounds[0], bounds[1])
        acc_xy = w * w * (com[:2] - p_cmd)
        self.com_task.set_target(
            x_des=r["com"], v_des=r["com_vel"],
            a_ff=np.array([acc_xy[0], acc_xy[1], 0.0]))

    # --- MPC-walk helpers ----------------------------------------------------

    def set_ref_velocity(self, vx=None, vy=None, yaw=None):
        if vx is not None:
            self.mpc_ref.v_x = vx
        if vy is not None:
            self.mpc_ref.v_y = vy
        if yaw is not None:
            self.mpc_ref.yaw_rate = yaw

    def foothold(self, ctx, fname, t_to_touchdown):
        spec = self.feet[fname]
        com = ctx.cache.com_position
        com_vel = ctx.cache.com_velocity
        c, s = math.cos(self.yaw_ref), math.sin(self.yaw_ref)
        v_cmd_world = np.array([c * self.mpc_ref.v_x - s * self.mpc_ref.v_y,
                                s * self.mpc_ref.v_x + c * self.mpc_ref.v_y])
        hip_world = com[:2] + v_cmd_world * t_to_touchdown \
            + np.array([[c, -s], [s, c]]) @ spec.hip_offset
        clamp = ctx.config["mpc"]["foothold_clamp"]
        return raibert_foothold(
            com_vel, v_cmd_world, self.gait.stance_duration(),
            np.array([hip_world[0], hip_world[1], self.yaw_ref]),
            k_gain=ctx.config["mpc"]["k_raibert"],
            clamp_box=(clamp[0], clamp[1]))

    def replan_mpc(self, ctx, t_g, contacts_now):
        setup = self.mpc_setup
        sched = self.gait.horizon_contacts(t_g, setup.horizon, setup.dt) \
            if not self.stop_requested else np.ones((setup.horizon, len(self.feet)), bool)
        # Per-foot positions over the horizon: stance feet at their current
        # spot, swing feet at the predicted touchdown.
        fp = np.zeros((setup.horizon, len(self.feet), 3))
        for i, (fname, spec) in enumerate(self.feet.items()):
            li = ctx.model.link_index(spec.link)
            cur = ctx.cache.R[li] @ spec.center + ctx.cache.p[li]
            if contacts_now[fname]:
                pos = np.array([cur[0], cur[1], 0.0])
            else:
                _, _, t_rem = self.gait.swing_progress(t_g, fname)
                tgt = self.foothold(ctx, fname, t_rem)
                pos = np.array([tgt[0], tgt[1], 0.0])
            fp[:, i, :] = pos
        R_torso = ctx.cache.R[ctx.model.link_index(ctx.config["robot"]["torso_link"])]
        omega_world = R_torso @ ctx.est_state.base_twist[:3]
        x13 = srbd_state(ctx.cache.com_position, ctx.cache.com_velocity,
                         R_torso, omega_world)
        try:
            traj = solve_srbd_mpc(setup, x13, sched, fp, self.mpc_ref)
        except PlanInfeasibleError:
            self.mpc_failures += 1
            return
        self.grf_mgr.set_grf_trajectory(traj, ctx.t)
        ctx.last_mpc = traj
