"""Minimal spatial-vector algebra.

Conventions used throughout the framework:
  - quaternions are (w, x, y, z), unit norm
  - 6-vectors are ordered [angular; linear], both for motion and force
  - a pose (R, p) maps child coordinates to parent: x_p = R @ x_c + p
"""
from __future__ import annotations

import math

import numpy as np


def skew(v):
    return np.array([
        [0.0, -v[2], v[1]],
        [v[2], 0.0, -v[0]],
        [-v[1], v[0], 0.0],
    ])


def cross3(a, b):
    """3-vector cross product; avoids np.cross overhead on small arrays."""
    return np.array([
        a[1] * b[2] - a[2] * b[1],
        a[2] * b[0] - a[0] * b[2],
        a[0] * b[1] - a[1] * b[0],
    ])


def cross_cols(A, B):
    """Column-wise cross product of 3xK arrays (np.cross without overhead)."""
    out = np.empty_like(B)
    out[0] = A[1] * B[2] - A[2] * B[1]
    out[1] = A[2] * B[0] - A[0] * B[2]
    out[2] = A[0] * B[1] - A[1] * B[0]
    return out


def quat_normalize(q):
    return q / np.linalg.norm(q)


def quat_to_rot(q):
    w, x, y, z = q
    return np.array([
        [1 - 2 * (y * y + z * z), 2 * (x * y - w * z), 2 * (x * z + w * y)],
        [2 * (x * y + w * z), 1 - 2 * (x * x + z * z), 2 * (y * z - w * x)],
        [2 * (x * z - w * y), 2 * (y * z + w * x), 1 - 2 * (x * x + y * y)],
    ])


def rot_to_quat(R):
    # Shepperd's method: pick the largest diagonal combination for stability.
    tr = R[0, 0] + R[1, 1] + R[2, 2]
    if tr > 0:
        s = math.sqrt(tr + 1.0) * 2
        w = 0.25 * s
        x = (R[2, 1] - R[1, 2]) / s
        y = (R[0, 2] - R[2, 0]) / s
        z = (R[1, 0] - R[0, 1]) / s
    elif R[0, 0] > R[1, 1] and R[0, 0] > R[2, 2]:
        s = math.sqrt(1.0 + R[0, 0] - R[1, 1] - R[2, 2]) * 2
        w = (R[2, 1] - R[1, 2]) / s
        x = 0.25 * s
        y = (R[0, 1] + R[1, 0]) / s
        z = (R[0, 2] + R[2, 0]) / s
    elif R[1, 1] > R[2, 2]:
        s = math.sqrt(1.0 + R[1, 1] - R[0, 0] - R[2, 2]) * 2
        w = (R[0, 2] - R[2, 0]) / s
        x = (R[0, 1] + R[1, 0]) / s
        y = 0.25 * s
        z = (R[1, 2] + R[2, 1]) / s
    else:
        s = math.sqrt(1.0 + R[2, 2] - R[0, 0] - R[1, 1]) * 2
        w = (R[1, 0] - R[0, 1]) / s
        x = (R[0, 2] + R[2, 0]) / s
        y = (R[1, 2] + R[2, 1]) / s
        z = 0.25 * s
    q = np.array([w, x, y, z])
    if q[0] < 0:
        q = -q
    return quat_normalize(q)


def quat_mul(a, b):
    aw, ax, ay, az = a
    bw, bx, by, bz = b
    return np.array([
        aw * bw - ax * bx - ay * by - az * bz,
        aw * bx + ax * bw + ay * bz - az * by,
        aw * by - ax * bz + ay * bw + az * bx,
        aw * bz + ax * by - ay * bx + az * bw,
    ])


def so3_exp(w):
    """Rotation matrix of the exponential map of a rotation vector."""
    theta = np.linalg.norm(w)
    if theta < 1e-12:
        W = skew(w)
        return np.eye(3) + W + 0.5 * W @ W
    axis = w / theta
    W = skew(axis)
    return np.eye(3) + math.sin(theta) * W + (1 - math.cos(theta)) * (W @ W)


def so3_log(R):
    """Rotation vector of a rotation matrix (principal branch)."""
    c = (np.trace(R) - 1.0) * 0.5
    c = min(1.0, max(-1.0, c))
    theta = math.acos(c)
    if theta < 1e-9:
        return np.array([R[2, 1] - R[1, 2], R[0, 2] - R[2, 0], R[1, 0] - R[0, 1]]) * 0.5
    if math.pi - theta < 1e-6:
        # Near pi: extract axis from the symmetric part.
        A = (R + np.eye(3)) * 0.5
        axis = np.sqrt(np.maximum(np.diag(A), 0.0))
        # Fix signs using off-diagonals relative to the largest component.
        k = int(np.argmax(axis))
        if axis[k] > 0:
            for i in range(3):
                if i != k:
                    axis[i] = A[k, i] / axis[k] if abs(A[k, i]) > 1e-12 else axis[i]
        axis = axis / np.linalg.norm(axis)
        return axis * theta
    return theta / (2.0 * math.sin(theta)) * np.array(
        [R[2, 1] - R[1, 2], R[0, 2] - R[2, 0], R[1, 0] - R[0, 1]]
    )


def quat_from_rotvec(w):
    theta = np.linalg.norm(w)
    if theta < 1e-12:
        return quat_normalize(np.array([1.0, 0.5 * w[0], 0.5 * w[1], 0.5 * w[2]]))
    axis = w / theta
    s = math.sin(theta / 2.0)
    return np.array([math.cos(theta / 2.0), axis[0] * s, axis[1] * s, axis[2] * s])


def rpy_to_rot(r, p, y):
    """URDF fixed-axis convention: R = Rz(y) @ Ry(p) @ Rx(r)."""
    cr, sr = math.cos(r), math.sin(r)
    cp, sp = math.cos(p), math.sin(p)
    cy, sy = math.cos(y), math.sin(y)
    Rx = np.array([[1, 0, 0], [0, cr, -sr], [0, sr, cr]])
    Ry = np.array([[cp, 0, sp], [0, 1, 0], [-sp, 0, cp]])
    Rz = np.array([[cy, -sy, 0], [sy, cy, 0], [0, 0, 1]])
    return Rz @ Ry @ Rx


def yaw_of(R):
    return math.atan2(R[1, 0], R[0, 0])


def rot_z(yaw):
    c, s = math.cos(yaw), math.sin(yaw)
    return np.array([[c, -s, 0.0], [s, c, 0.0], [0.0, 0.0, 1.0]])


# --- 6-D motion/force transforms -------------------------------------------
# (R, p) is the pose of the child frame in the parent frame.

def motion_to_child(R, p, v):
    """Spatial motion vector from parent coordinates to child coordinates."""
    w = R.T @ v[:3]
    return np.concatenate([w, R.T @ (v[3:] + cross3(v[:3], p))])


def motion_to_parent(R, p, v):
    w = R @ v[:3]
    return np.concatenate([w, R @ v[3:] + cross3(p, w)])


def force_to_parent(R, p, f):
    fl = R @ f[3:]
    return np.concatenate([R @ f[:3] + cross3(p, fl), fl])


def xmat_to_child(R, p):
    """6x6 motion transform matrix, parent coordinates -> child coordinates.

    Its transpose is the force transform child -> parent.
    """
    X = np.zeros((6, 6))
    X[:3, :3] = R.T
    X[3:, 3:] = R.T
    X[3:, :3] = -R.T @ skew(p)
    return X


def crm(v, m):
    """Motion cross product v x m."""
    w, vl = v[:3], v[3:]
    return np.concatenate([cross3(w, m[:3]), cross3(w, m[3:]) + cross3(vl, m[:3])])


def crf(v, f):
    """Force cross product v x* f."""
    w, vl = v[:3], v[3:]
    return np.concatenate([cross3(w, f[:3]) + cross3(vl, f[3:]), cross3(w, f[3:])])


def spatial_inertia(mass, com, inertia_com):
    """6x6 spatial inertia at the link frame origin.

    inertia_com is the rotational inertia about the link CoM, in link axes.
    """
    C = skew(com)
    I = np.zeros((6, 6))
    I[:3, :3] = inertia_com + mass * (C @ C.T)
    I[:3, 3:] = mass * C
    I[3:, :3] = mass * C.T
    I[3:, 3:] = mass * np.eye(3)
    return I
