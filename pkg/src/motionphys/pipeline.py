"""Sequence preprocessing: resampling, support filtering, canonicalization,
mirroring augmentation and grounding."""
from __future__ import annotations

import numpy as np
from scipy.spatial.transform import Rotation, Slerp

from . import kernels
from .core import GroundPlane, MotionSequence
from .rotations import axis_angle_to_matrix, matrix_to_sixd, sixd_to_matrix, yaw_about

SNAP_TOL = 1e-12


def _drop_traces(meta: dict, **extra) -> dict:
    out = {k: v for k, v in meta.items() if k != "traces"}
    out.update(extra)
    return out


def resample(m: MotionSequence, target_fps: float = 20.0) -> MotionSequence:
    """Resample to ``target_fps``.

    Integer source/target ratios keep every k-th frame; other rates interpolate
    positions linearly and rotations by slerp.
    """
    if target_fps <= 0:
        raise ValueError("target fps must be positive")
    if m.fps == target_fps:
        return m
    ratio = m.fps / target_fps
    k = round(ratio)
    if abs(ratio - k) < 1e-9 and k >= 1:
        idx = np.arange(0, m.num_frames, k)
        return m.replace(
            fps=target_fps, vertices=m.vertices[idx], joints=m.joints[idx], rotations_6d=m.rotations_6d[idx],
            root_translation=m.root_translation[idx],
            metadata=_drop_traces(m.metadata, resampled_from_fps=m.fps),
        )
    duration = (m.num_frames - 1) / m.fps
    count = int(np.floor(duration * target_fps + 1e-9)) + 1
    u = np.arange(count) * (m.fps / target_fps)
    lo = np.minimum(np.floor(u).astype(int), m.num_frames - 2)
    frac = u - lo

    def lerp(a):
        f = frac.reshape((-1,) + (1,) * (a.ndim - 1))
        return (1.0 - f) * a[lo] + f * a[lo + 1]

    src_t = np.arange(m.num_frames, dtype=float)
    mats = sixd_to_matrix(m.rotations_6d)
    rots = np.empty((count, m.num_joints, 6))
    for j in range(m.num_joints):
        slerp = Slerp(src_t, Rotation.from_matrix(mats[:, j]))
        rots[:, j] = matrix_to_sixd(slerp(np.minimum(u, src_t[-1])).as_matrix())
    return m.replace(
        fps=target_fps, vertices=lerp(m.vertices), joints=lerp(m.joints), rotations_6d=rots,
        root_translation=lerp(m.root_translation),
        metadata=_drop_traces(m.metadata, resampled_from_fps=m.fps),
    )


def offending_frames(m: MotionSequence, plane: GroundPlane | None = None, height: float = 0.25) -> int:
    plane = plane or GroundPlane()
    hmin, _ = kernels.lowest_heights(m.vertices, plane.origin, plane.normal)
    return int((hmin > height).sum())


def support_filter(m: MotionSequence, plane: GroundPlane | None = None, height: float = 0.25,
                   max_frames: int = 5) -> bool:
    """Accept unless at least ``max_frames`` frames have their lowest vertex above ``height``."""
    return offending_frames(m, plane, height) < max_frames


def _rigid(m: MotionSequence, Q: np.ndarray, shift: np.ndarray, plane: GroundPlane) -> MotionSequence:
    """Apply p -> o + Q (p - shift - o) to every position and Q to the root orientation."""
    o = plane.origin

    def tf(p):
        return o + (p - shift - o) @ Q.T

    root = sixd_to_matrix(m.rotations_6d[:, 0])
    rots = m.rotations_6d.copy()
    rots[:, 0] = matrix_to_sixd(Q @ root)
    return m.replace(vertices=tf(m.vertices), joints=tf(m.joints), root_translation=tf(m.root_translation),
                     rotations_6d=rots, metadata=_drop_traces(m.metadata))


def canonical_transform(m: MotionSequence, plane: GroundPlane | None = None) -> tuple[np.ndarray, np.ndarray]:
    """Rotation (about the normal) and horizontal shift that canonicalize ``m``."""
    plane = plane or GroundPlane()
    n = plane.normal
    yaw = yaw_about(sixd_to_matrix(m.rotations_6d[0, 0]), n)
    Q = np.eye(3) if abs(yaw) < SNAP_TOL else axis_angle_to_matrix(n, -yaw)
    d = m.root_translation[0] - plane.origin
    shift = d - (d @ n) * n
    if np.all(np.abs(shift) < SNAP_TOL):
        shift = np.zeros(3)
    return Q, shift


def canonicalize(m: MotionSequence, plane: GroundPlane | None = None) -> MotionSequence:
    """Remove first-frame root yaw and horizontal root offset from the whole sequence."""
    plane = plane or GroundPlane()
    Q, shift = canonical_transform(m, plane)
    if np.array_equal(Q, np.eye(3)) and not shift.any():
        return m
    return _rigid(m, Q, shift, plane)


def uncanonicalize(m: MotionSequence, Q: np.ndarray, shift: np.ndarray,
                   plane: GroundPlane | None = None) -> MotionSequence:
    """Inverse of the transform returned by :func:`canonical_transform`."""
    plane = plane or GroundPlane()
    o = plane.origin
    Qi = Q.T

    def tf(p):
        return o + (p - o) @ Qi.T + shift

    root = sixd_to_matrix(m.rotations_6d[:, 0])
    rots = m.rotations_6d.copy()
    rots[:, 0] = matrix_to_sixd(Qi @ root)
    return m.replace(vertices=tf(m.vertices), joints=tf(m.joints), root_translation=tf(m.root_translation),
                     rotations_6d=rots)


def _joint_permutation(num_joints: int, pairs) -> np.ndarray:
    perm = np.arange(num_joints)
    for a, b in pairs:
        if a < num_joints and b < num_joints:
            perm[a], perm[b] = b, a
    return perm


def mirror(m: MotionSequence, axis: int = 0) -> MotionSequence:
    """Reflect across the plane ``x[axis] = 0`` and swap left/right labels.

    With a vertex mirror map in the body the topology is preserved (vertex i
    takes the reflected position of its mirror partner). Otherwise the mesh is
    reflected in place with reversed face winding, vertex labels (parts, feet)
    are left as they are, and the result is flagged in its metadata.
    """
    if axis not in (0, 1, 2):
        raise ValueError("mirror axis must be 0, 1 or 2")
    s = np.ones(3)
    s[axis] = -1.0
    body = m.body
    perm = _joint_permutation(m.num_joints, body.mirror_pairs)
    joints = m.joints[:, perm] * s
    # S R S on stored columns: column k becomes s_k * S * column_k
    r = m.rotations_6d[:, perm]
    rots = np.concatenate([s[0] * s * r[..., 0:3], s[1] * s * r[..., 3:6]], axis=-1)
    meta = _drop_traces(m.metadata)
    if body.vertex_mirror_map is not None:
        vmap = body.vertex_mirror_map
        verts = m.vertices[:, vmap] * s
        body = body.replace(vertices=body.vertices[vmap] * s)
    else:
        verts = m.vertices * s
        body = body.replace(vertices=body.vertices * s, faces=body.faces[:, [0, 2, 1]])
        meta["mirrored_without_vertex_map"] = not meta.get("mirrored_without_vertex_map", False)
        if not meta["mirrored_without_vertex_map"]:
            del meta["mirrored_without_vertex_map"]
    return m.replace(vertices=verts, joints=joints, rotations_6d=rots, root_translation=m.root_translation * s,
                     body=body, metadata=meta)


def ground(m: MotionSequence, plane: GroundPlane | None = None) -> MotionSequence:
    """Translate along the normal so the lowest vertex of the whole sequence touches the ground."""
    plane = plane or GroundPlane()
    hmin, _ = kernels.lowest_heights(m.vertices, plane.origin, plane.normal)
    out = m.translated(-hmin.min() * plane.normal)
    return out.replace(metadata=_drop_traces(m.metadata, grounded_shift=float(-hmin.min())))
