"""Walking pattern generation on the linear inverted pendulum.

The divergent component xi = x + xdot/omega is planned backward from the
final support point through per-step exponentials; the CoM reference then
follows the stable subsystem xdot = -omega (x - xi).  Step boundaries are
C1-smoothed with cubic Hermite blends across each double-support window.
"""
from __future__ import annotations

import bisect
import math
from dataclasses import dataclass

import numpy as np

from ..errors import InputError
from .footsteps import FootstepPlan

GRAVITY = 9.81


def dcm_backward_recursion(vrp_points, durations, omega):
    """Boundary values per support segment.

    xi_ini[i] = p_i + exp(-w T_i) (xi_eos[i] - p_i), chained with
    xi_eos[i-1] = xi_ini[i] and xi_eos[last] = p_last.
    """
    vrp_points = np.asarray(vrp_points, dtype=float)
    durations = np.asarray(durations, dtype=float)
    if np.any(durations <= 0):
        raise InputError("segment durations must be > 0")
    n = len(vrp_points)
    xi_ini = np.zeros_like(vrp_points)
    xi_eos = np.zeros_like(vrp_points)
    nxt = vrp_points[-1]
    for i in range(n - 1, -1, -1):
        xi_eos[i] = nxt
        xi_ini[i] = vrp_points[i] + math.exp(-omega * durations[i]) * (xi_eos[i] - vrp_points[i])
        nxt = xi_ini[i]
    return xi_ini, xi_eos


@dataclass
class DcmPlan:
    vrp_points: np.ndarray
    durations: np.ndarray
    xi_ini: np.ndarray
    xi_eos: np.ndarray
    omega: float
    t_starts: np.ndarray
    blends: list                      # (t_lo, t_hi, hermite coeff arrays)
    com_grid_t: np.ndarray = None
    com_grid_x: np.ndarray = None

    @property
    def t_end(self):
        return float(self.t_starts[-1] + self.durations[-1])

    def _segment(self, t):
        i = bisect.bisect_right(self.t_starts.tolist(), t) - 1
        return min(max(i, 0), len(self.durations) - 1)

    def _xi_raw(self, t):
        i = self._segment(t)
        tau = t - self.t_starts[i]
        p = self.vrp_points[i]
        e = math.exp(self.omega * (tau - self.durations[i]))
        xi = p + e * (self.xi_eos[i] - p)
        xid = self.omega * e * (self.xi_eos[i] - p)
        return xi, xid

    def dcm_at(self, t):
        """(xi, xi_dot) with double-support Hermite smoothing applied."""
        if t <= 0.0:
            xi, xid = self._xi_raw(0.0)
            return xi, xid
        if t >= self.t_end:
            return self.vrp_points[-1].copy(), np.zeros(3)
        for (t_lo, t_hi, c0, c1, c2, c3) in self.blends:
            if t_lo <= t <= t_hi:
                T = t_hi - t_lo
                s = (t - t_lo) / T
                pos = c0 + s * (c1 + s * (c2 + s * c3))
                vel = (c1 + s * (2 * c2 + 3 * s * c3)) / T
                return pos, vel
        return self._xi_raw(t)


def compute_dcm_plan(plan: FootstepPlan, z_com, omega=None, com0=None,
                     t_initial_transfer=0.8, t_final=1.0, dt_grid=1e-3,
                     foot_separation_frame=None) -> DcmPlan:
    """Build the support-point sequence from a footstep plan and chain it.

    Segments: initial mid-feet transfer, one segment per step with the
    support point at the stance foot, then a final mid-feet segment whose
    end state is stationary at the final support point.
    """
    if z_com <= 0:
        raise InputError("z_com must be > 0")
    w = omega if omega is not None else math.sqrt(GRAVITY / z_com)

    feet = {k: np.asarray(v, dtype=float).copy() for k, v in plan.initial_feet.items()}

    def vrp_of(xy):
        return np.array([xy[0], xy[1], z_com])

    def mid():
        vals = list(feet.values())
        return 0.5 * (vals[0][:2] + vals[1][:2])

    vrps = [vrp_of(mid())]
    durations = [t_initial_transfer]
    for s in plan.steps:
        stance = [f for f in feet if f != s.foot][0]
        vrps.append(vrp_of(feet[stance][:2]))
        durations.append(s.t_ss + s.t_ds)
        feet[s.foot] = s.pose.copy()
    vrps.append(vrp_of(mid()))
    durations.append(t_final)

    vrps = np.array(vrps)
    durations = np.array(durations)
    xi_ini, xi_eos = dcm_backward_recursion(vrps, durations, w)
    t_starts = np.concatenate([[0.0], np.cumsum(durations)[:-1]])

    plan_obj = DcmPlan(vrps, durations, xi_ini, xi_eos, w, t_starts, blends=[])

    # Hermite blends across double-support windows at segment boundaries.
    ds_durations = [s.t_ds for s in plan.steps]
    blends = []
    for b in range(1, len(vrps)):
        t_b = t_starts[b]
        w_ds = ds_durations[b - 1] if b - 1 < len(ds_durations) else \
            (ds_durations[-1] if ds_durations else 0.2)
        half = 0.5 * w_ds
        half = min(half, 0.49 * durations[b - 1], 0.49 * durations[b])
        t_lo, t_hi = t_b - half, t_b + half
        p0, v0 = plan_obj._xi_raw(t_lo)
        # Evaluate the outgoing exponential just inside segment b.
        i = b
        tau = t_hi - t_starts[i]
        p = vrps[i]
        e = math.exp(w * (tau - durations[i]))
        p1 = p + e * (xi_eos[i] - p)
        v1 = w * e * (xi_eos[i] - p)
        T = t_hi - t_lo
        c0 = p0
        c1 = v0 * T
        c2 = 3 * (p1 - p0) - T * (2 * v0 + v1)
        c3 = -2 * (p1 - p0) + T * (v0 + v1)
        blends.append((t_lo, t_hi, c0, c1, c2, c3))
    plan_obj.blends = blends

    # CoM reference from the stable first-order subsystem.
    t_end = plan_obj.t_end
    n = int(round(t_end / dt_grid)) + 1
    ts = np.arange(n) * dt_grid
    xs = np.zeros((n, 3))
    x = np.array([*mid_initial(plan), z_com]) if com0 is None else np.asarray(com0, dtype=float).copy()
    for k, t in enumerate(ts):
        xs[k] = x
        xi, _ = plan_obj.dcm_at(t)
        x = x + (-w * (x - xi)) * dt_grid
    plan_obj.com_grid_t = ts
    plan_obj.com_grid_x = xs
    return plan_obj


def mid_initial(plan: FootstepPlan):
    vals = [np.asarray(v, dtype=float) for v in plan.initial_feet.values()]
    return 0.5 * (vals[0][:2] + vals[1][:2])


def evaluate_dcm(plan: DcmPlan, t):
    """dcm, dcm velocity, CoM reference and CoM velocity reference at t."""
    xi, xid = plan.dcm_at(t)
    if plan.com_grid_t is None:
        raise InputError("plan has no CoM grid")
    if t <= 0.0:
        x = plan.com_grid_x[0]
    elif t >= plan.com_grid_t[-1]:
        # Continue the stable decay analytically past the plan end.
        x_end = plan.com_grid_x[-1]
        x = xi + (x_end - xi) * math.exp(-plan.omega * (t - plan.com_grid_t[-1]))
    else:
        k = int(t / (plan.com_grid_t[1] - plan.com_grid_t[0]))
        k = min(k, len(plan.com_grid_t) - 2)
        s = (t - plan.com_grid_t[k]) / (plan.com_grid_t[k + 1] - plan.com_grid_t[k])
        x = (1 - s) * plan.com_grid_x[k] + s * plan.com_grid_x[k + 1]
    com_vel = -plan.omega * (x - xi)
    return {"dcm": xi, "dcm_vel": xid, "com": x, "com_vel": com_vel}
