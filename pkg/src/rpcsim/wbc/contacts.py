"""Contact and internal-constraint primitives.

A surface contact is modeled as its corner points: each point contributes
3 force rows with a friction-pyramid, so center-of-pressure limits emerge
from the per-corner normal bounds without wrench-cone machinery.
"""
from __future__ import annotations

import enum
from dataclasses import dataclass

import numpy as np

from ..errors import ConfigError, InputError
from ..rbd import DynamicsCache


class ContactKind(enum.Enum):
    POINT = "point"
    SURFACE = "surface"


@dataclass
class Contact:
    name: str
    kind: ContactKind
    link: str
    points: np.ndarray          # (k, 3) offsets in the link frame; k=1 for POINT
    mu: float = 0.5
    max_fz: float = 500.0       # rampable by contact-transition states
    min_fz: float = 0.0
    active: bool = True

    def __post_init__(self):
        self.points = np.atleast_2d(np.asarray(self.points, dtype=float))
        if self.kind == ContactKind.POINT and len(self.points) != 1:
            raise InputError(f"contact '{self.name}': point contact needs 1 point")
        if self.mu <= 0:
            raise InputError(f"contact '{self.name}': mu must be > 0")
        if self.kind == ContactKind.SURFACE and len(self.points) >= 3:
            # Corners must span a promising polygon (non-collinear).
            d = self.points - self.points.mean(axis=0)
            if np.linalg.matrix_rank(d[:, :2], tol=1e-9) < 2:
                raise InputError(f"contact '{self.name}': surface corners collinear")

    @property
    def n_points(self):
        return len(self.points)


def point_contact(name, link, offset, mu=0.5, max_fz=500.0):
    return Contact(name, ContactKind.POINT, link, np.asarray(offset)[None, :], mu, max_fz)


def surface_contact(name, link, corners, mu=0.5, max_fz=500.0):
    return Contact(name, ContactKind.SURFACE, link, corners, mu, max_fz)


@dataclass
class RollingJointConstraint:
    """Internal constraint J_ic v = 0 coupling two joint velocities."""

    name: str
    joint_a: str
    joint_b: str
    ratio: float = 1.0           # v_a - ratio * v_b = 0


class ContactSet:
    """Stacked Jacobian, bias, and cone-constraint matrices for active contacts."""

    def __init__(self, contacts, cache: DynamicsCache):
        model = cache.model
        self.contacts = [c for c in contacts if c.active]
        rows = []
        biases = []
        meta = []
        for c in self.contacts:
            try:
                li = model.link_index(c.link)
            except KeyError:
                raise ConfigError(f"contact '{c.name}' references unknown link '{c.link}'")
            Rl, pl = cache.R[li], cache.p[li]
            for k, off in enumerate(c.points):
                pw = Rl @ off + pl
                rows.append(cache.point_jacobian(li, pw))
                biases.append(cache.point_bias_acc(li, pw))
                meta.append((c, k, pw))
        self.n_points = len(meta)
        self.n_f = 3 * self.n_points
        self.meta = meta
        if self.n_points:
            self.jacobian = np.vstack(rows)
            self.bias = np.concatenate(biases)
        else:
            self.jacobian = np.zeros((0, model.n_v))
            self.bias = np.zeros(0)

    def cone_rows(self):
        """Pyramid inequalities on the stacked force vector.

        Returns (A, lb, ub): 4 pyramid rows (<= 0) plus the normal-force
        box per point.  Forces are world-frame with +z normal.
        """
        m = self.n_points * 5
        A = np.zeros((m, self.n_f))
        lb = np.full(m, -np.inf)
        ub = np.zeros(m)
        r = 0
        for i, (c, _, _) in enumerate(self.meta):
            fx, fy, fz = 3 * i, 3 * i + 1, 3 * i + 2
            for s in (1.0, -1.0):
                A[r, fx] = s
                A[r, fz] = -c.mu
                r += 1
            for s in (1.0, -1.0):
                A[r, fy] = s
                A[r, fz] = -c.mu
                r += 1
            A[r, fz] = 1.0
            lb[r] = c.min_fz
            # Per-point share of the contact's normal budget.
            ub[r] = c.max_fz / c.n_points
            r += 1
        return A, lb, ub

    def force_of(self, stacked, contact_name):
        """Per-point forces (k,3) of one contact from the stacked vector."""
        out = []
        for i, (c, k, _) in enumerate(self.meta):
            if c.name == contact_name:
                out.append(stacked[3 * i:3 * i + 3])
        return np.array(out)

    def cop_of(self, stacked, contact_name):
        """Center of pressure of one contact's corner forces (world xy)."""
        num = np.zeros(2)
        den = 0.0
        for i, (c, k, pw) in enumerate(self.meta):
            if c.name == contact_name:
                fz = stacked[3 * i + 2]
                num += fz * pw[:2]
                den += fz
        if den <= 1e-9:
            return None
        return num / den


def internal_constraint_rows(constraints, model):
    """Stacked J_ic (m x n_v) for the internal-constraint list."""
    if not constraints:
        return np.zeros((0, model.n_v))
    off = 6 if model.floating_base else 0
    rows = []
    for ic in constraints:
        row = np.zeros(model.n_v)
        row[off + model.joint_index(ic.joint_a)] = 1.0
        row[off + model.joint_index(ic.joint_b)] = -ic.ratio
        rows.append(row)
    J = np.vstack(rows)
    if np.linalg.matrix_rank(J) < len(rows):
        raise ConfigError("internal constraints are not independent")
    return J
