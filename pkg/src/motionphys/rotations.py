"""Rotation representations used by the motion features.

6D rotations are the first two columns of a rotation matrix, stored
column-major: ``r[0:3]`` is column 0 and ``r[3:6]`` column 1.
"""
from __future__ import annotations

import numpy as np

ARCCOS_GRAD_EPS = 1e-7


class DegenerateRotationError(ValueError):
    pass


def sixd_to_matrix(r) -> np.ndarray:
    """Gram-Schmidt map (..., 6) -> (..., 3, 3) with det = +1."""
    r = np.asarray(r, dtype=float)
    a1, a2 = r[..., 0:3], r[..., 3:6]
    n1 = np.linalg.norm(a1, axis=-1, keepdims=True)
    if np.any(n1 == 0):
        raise DegenerateRotationError("6D rotation has a zero first column")
    b1 = a1 / n1
    u = a2 - np.sum(b1 * a2, axis=-1, keepdims=True) * b1
    nu = np.linalg.norm(u, axis=-1, keepdims=True)
    if np.any(nu <= 1e-12 * np.linalg.norm(a2, axis=-1, keepdims=True)) or np.any(nu == 0):
        raise DegenerateRotationError("6D rotation columns are parallel")
    b2 = u / nu
    b3 = np.cross(b1, b2)
    return np.stack([b1, b2, b3], axis=-1)


def matrix_to_sixd(R) -> np.ndarray:
    R = np.asarray(R, dtype=float)
    return np.concatenate([R[..., :, 0], R[..., :, 1]], axis=-1)


def sixd_to_matrix_backward(r, grad_R) -> np.ndarray:
    """Vector-Jacobian product of :func:`sixd_to_matrix`."""
    r = np.asarray(r, dtype=float)
    a1, a2 = r[..., 0:3], r[..., 3:6]
    n1 = np.linalg.norm(a1, axis=-1, keepdims=True)
    b1 = a1 / n1
    s = np.sum(b1 * a2, axis=-1, keepdims=True)
    u = a2 - s * b1
    nu = np.linalg.norm(u, axis=-1, keepdims=True)
    b2 = u / nu
    gb1, gb2, gb3 = grad_R[..., :, 0], grad_R[..., :, 1], grad_R[..., :, 2]
    # b3 = b1 x b2
    gb1 = gb1 + np.cross(b2, gb3)
    gb2 = gb2 + np.cross(gb3, b1)
    gu = (gb2 - b2 * np.sum(b2 * gb2, axis=-1, keepdims=True)) / nu
    ga2 = gu.copy()
    gs = -np.sum(gu * b1, axis=-1, keepdims=True)
    gb1 = gb1 - s * gu + gs * a2
    ga2 = ga2 + gs * b1
    ga1 = (gb1 - b1 * np.sum(b1 * gb1, axis=-1, keepdims=True)) / n1
    return np.concatenate([ga1, ga2], axis=-1)


def axis_angle_to_matrix(axis, angle) -> np.ndarray:
    axis = np.asarray(axis, dtype=float)
    axis = axis / np.linalg.norm(axis)
    x, y, z = axis
    k = np.array([[0.0, -z, y], [z, 0.0, -x], [-y, x, 0.0]])
    return np.eye(3) + np.sin(angle) * k + (1.0 - np.cos(angle)) * (k @ k)


def random_rotation(rng: np.random.Generator, size=None) -> np.ndarray:
    """Uniformly random rotation matrices via QR of a Gaussian matrix."""
    shape = () if size is None else (size,) if np.isscalar(size) else tuple(size)
    a = rng.standard_normal(shape + (3, 3))
    q, r = np.linalg.qr(a)
    q = q * np.sign(np.diagonal(r, axis1=-2, axis2=-1))[..., None, :]
    det = np.linalg.det(q)
    q[..., :, 0] *= np.sign(det)[..., None]
    return q


def _depths(parents) -> list[int]:
    n = len(parents)
    depth = [-1] * n
    for j in range(n):
        chain = []
        k = j
        while k != -1 and depth[k] < 0:
            if k in chain:
                raise ValueError(f"kinematic tree has a cycle through joint {k}")
            if not -1 <= parents[k] < n:
                raise ValueError(f"joint {k} has invalid parent {parents[k]}")
            chain.append(k)
            k = parents[k]
        d = -1 if k == -1 else depth[k]
        for jj in reversed(chain):
            d += 1
            depth[jj] = d
    return depth


def parent_relative_to_root_relative(pose, parents) -> np.ndarray:
    """Compose parent-relative rotations (..., J, 3, 3) into root-relative ones.

    Root-relative rotation of joint j is the product of parent-relative
    rotations on the chain below the tree root down to j; the root's own
    (global) orientation is excluded, so tree roots map to identity.
    """
    pose = np.asarray(pose, dtype=float)
    parents = [int(p) for p in parents]
    depth = _depths(parents)
    out = np.empty_like(pose)
    eye = np.broadcast_to(np.eye(3), pose.shape[:-3] + (3, 3))
    for j in sorted(range(len(parents)), key=lambda k: depth[k]):
        p = parents[j]
        if p == -1:
            out[..., j, :, :] = eye
        else:
            out[..., j, :, :] = out[..., p, :, :] @ pose[..., j, :, :]
    return out


def _cos_angle(R1, R2) -> np.ndarray:
    # (Tr(R1 R2^T) - 1) / 2 written as 1 - |R1 - R2|_F^2 / 4, identical for rotations
    # but exact (== 1) for equal inputs and well conditioned near zero angle
    d = np.asarray(R1, dtype=float) - np.asarray(R2, dtype=float)
    return 1.0 - np.einsum("...ij,...ij->...", d, d) / 4.0


def geodesic_distance(R1, R2) -> np.ndarray:
    """Rotation angle of R1 R2^T in [0, pi]."""
    return np.arccos(np.clip(_cos_angle(R1, R2), -1.0, 1.0))


def geodesic_distance_backward(R1, R2, grad_out) -> np.ndarray:
    """Gradient of ``geodesic_distance`` w.r.t. R1, with a clamped arccos slope.

    Uses d/dR1 of (Tr(R1 R2^T) - 1)/2 = R2/2; it differs from the derivative of
    the Frobenius form only by a multiple of R1, which is orthogonal to every
    rotation tangent and vanishes through the Gram-Schmidt backward.
    """
    c = _cos_angle(R1, R2)
    dtheta = -1.0 / np.sqrt(np.maximum(1.0 - c * c, ARCCOS_GRAD_EPS))
    return (np.asarray(grad_out) * dtheta / 2.0)[..., None, None] * np.asarray(R2, dtype=float)


def yaw_about(R, normal, forward=None) -> float:
    """Heading angle of rotation R about ``normal``, measured on its forward axis."""
    n = np.asarray(normal, dtype=float)
    if forward is None:
        forward = np.array([1.0, 0.0, 0.0]) if abs(n[0]) < 0.9 else np.array([0.0, 1.0, 0.0])
    e1 = forward - (forward @ n) * n
    e1 /= np.linalg.norm(e1)
    e2 = np.cross(n, e1)
    h = np.asarray(R) @ e1
    hx, hy = h @ e1, h @ e2
    if hx * hx + hy * hy < 1e-24:
        raise DegenerateRotationError("forward axis is parallel to the ground normal")
    return float(np.arctan2(hy, hx))
