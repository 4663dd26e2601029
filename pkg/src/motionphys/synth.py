"""Procedural bodies and analytic motions used as test oracles.

Coordinates: z up, the body faces -y, its left side is +x. The humanoid is
symmetric under both x -> -x and y -> -y in its rest pose, so a standing body
has its heuristic CoP exactly under its CoM. Generators record
their parameters and analytic ground-truth traces in ``metadata``.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.spatial import cKDTree

from .core import NUM_JOINTS, SMPL_PARENTS, BodyMesh, MotionSequence
from .rotations import axis_angle_to_matrix, matrix_to_sixd, parent_relative_to_root_relative

_REST_JOINTS = np.array([
    [0.0, 0.0, 0.95], [0.09, 0.0, 0.90], [-0.09, 0.0, 0.90], [0.0, 0.0, 1.05],
    [0.09, 0.0, 0.50], [-0.09, 0.0, 0.50], [0.0, 0.0, 1.18], [0.09, 0.0, 0.08],
    [-0.09, 0.0, 0.08], [0.0, 0.0, 1.30], [0.09, -0.10, 0.02], [-0.09, -0.10, 0.02],
    [0.0, 0.0, 1.45], [0.07, 0.0, 1.40], [-0.07, 0.0, 1.40], [0.0, 0.0, 1.55],
    [0.18, 0.0, 1.40], [-0.18, 0.0, 1.40], [0.45, 0.0, 1.40], [-0.45, 0.0, 1.40],
    [0.70, 0.0, 1.40], [-0.70, 0.0, 1.40], [0.78, 0.0, 1.40], [-0.78, 0.0, 1.40],
])
REFERENCE_HEIGHT = 1.71

# (segment label, driving joint, kind, geometry) for the left side and midline;
# right-side segments are exact mirror copies of the left ones.
_MIDLINE = [
    (1, 3, "capsule", ((0.0, 0.0, 0.95), (0.0, 0.0, 1.38), 0.13)),
    (2, 12, "capsule", ((0.0, 0.0, 1.55), (0.0, 0.0, 1.62), 0.09)),
]
_LEFT = [
    (3, 16, "capsule", ((0.20, 0.0, 1.40), (0.74, 0.0, 1.40), 0.045)),
    (5, 1, "capsule", ((0.09, 0.0, 0.88), (0.09, 0.0, 0.52), 0.07)),
    (7, 4, "capsule", ((0.09, 0.0, 0.48), (0.09, 0.0, 0.13), 0.05)),
    (9, 7, "box", ((0.045, -0.12, 0.0), (0.135, 0.12, 0.07))),
]
_RIGHT_OF = {3: 4, 5: 6, 7: 8, 9: 10}
_JOINT_MIRROR = {1: 2, 4: 5, 7: 8, 10: 11, 13: 14, 16: 17, 18: 19, 20: 21, 22: 23}
LEFT_FOOT_JOINTS = (7, 10)
RIGHT_FOOT_JOINTS = (8, 11)


def _orient_outward(verts: np.ndarray, faces: np.ndarray) -> np.ndarray:
    """Flip faces of a convex closed mesh so normals point away from its centroid."""
    c = verts.mean(axis=0)
    p0, p1, p2 = verts[faces[:, 0]], verts[faces[:, 1]], verts[faces[:, 2]]
    nrm = np.cross(p1 - p0, p2 - p0)
    inward = np.einsum("ij,ij->i", nrm, (p0 + p1 + p2) / 3.0 - c) < 0
    out = faces.copy()
    out[inward] = out[inward][:, [0, 2, 1]]
    return out


def capsule_mesh(p0, p1, radius: float, n_around: int = 16, n_cap: int = 4) -> tuple[np.ndarray, np.ndarray]:
    p0, p1 = np.asarray(p0, dtype=float), np.asarray(p1, dtype=float)
    axis = p1 - p0
    length = np.linalg.norm(axis)
    a = axis / length
    ref = np.array([1.0, 0.0, 0.0]) if abs(a[0]) < 0.9 else np.array([0.0, 1.0, 0.0])
    u = ref - (ref @ a) * a
    u /= np.linalg.norm(u)
    w = np.cross(a, u)
    rings = []
    for k in range(1, n_cap + 1):
        th = 0.5 * np.pi * k / n_cap
        rings.append((-radius * np.cos(th), radius * np.sin(th)))
    for k in range(n_cap):
        th = 0.5 * np.pi * k / n_cap
        rings.append((length + radius * np.sin(th), radius * np.cos(th)))
    phi = 2.0 * np.pi * np.arange(n_around) / n_around
    ring_dirs = np.cos(phi)[:, None] * u + np.sin(phi)[:, None] * w
    verts = [p0 - radius * a]
    for s, rho in rings:
        verts.extend(p0 + s * a + rho * ring_dirs)
    verts.append(p0 + (length + radius) * a)
    verts = np.array(verts)
    top = verts.shape[0] - 1
    faces = []
    for j in range(n_around):
        jn = (j + 1) % n_around
        faces.append((0, 1 + jn, 1 + j))
        for i in range(len(rings) - 1):
            a0, a1 = 1 + i * n_around + j, 1 + i * n_around + jn
            b0, b1 = a0 + n_around, a1 + n_around
            faces.append((a0, a1, b1))
            faces.append((a0, b1, b0))
        last = 1 + (len(rings) - 1) * n_around
        faces.append((top, last + j, last + jn))
    faces = np.array(faces, dtype=np.int64)
    return verts, _orient_outward(verts, faces)


def box_mesh(lo, hi, divisions=(2, 2, 1)) -> tuple[np.ndarray, np.ndarray]:
    """Closed box with a grid of ``divisions`` cells per axis on each face."""
    lo, hi = np.asarray(lo, dtype=float), np.asarray(hi, dtype=float)
    ticks = [np.linspace(lo[k], hi[k], divisions[k] + 1) for k in range(3)]
    pts, tris = [], []
    for axis in range(3):
        o1, o2 = [k for k in range(3) if k != axis]
        for side in (lo[axis], hi[axis]):
            g1, g2 = np.meshgrid(ticks[o1], ticks[o2], indexing="ij")
            p = np.zeros(g1.shape + (3,))
            p[..., axis] = side
            p[..., o1], p[..., o2] = g1, g2
            base = sum(len(x) for x in pts)
            flat = p.reshape(-1, 3)
            pts.append(flat)
            n2 = g1.shape[1]
            for i in range(g1.shape[0] - 1):
                for j in range(n2 - 1):
                    a, b = base + i * n2 + j, base + (i + 1) * n2 + j
                    tris.append((a, b, b + 1))
                    tris.append((a, b + 1, a + 1))
    pts = np.concatenate(pts)
    key = np.round(pts, 9)
    verts, inv = np.unique(key, axis=0, return_inverse=True)
    faces = inv.reshape(-1)[np.array(tris, dtype=np.int64)]
    return verts, _orient_outward(verts, faces)


@dataclass(frozen=True)
class Humanoid:
    """A rigid-segment rig: mesh, rest joints and the driving joint of each vertex."""

    body: BodyMesh
    rest_joints: np.ndarray
    binding: np.ndarray

    @property
    def parents(self) -> tuple:
        return self.body.parents


def humanoid(height: float = 1.7, parts: int = 10, resolution: int = 1) -> Humanoid:
    """Symmetric capsule figure with box feet standing on z = 0."""
    if not 1 <= parts <= 10:
        raise ValueError("parts must be between 1 and 10")
    scale = height / REFERENCE_HEIGHT
    n_around, n_cap = 8 * resolution + 8, 2 * resolution + 2
    foot_div = (2 * resolution, 4 * resolution, resolution)
    s = np.array([-1.0, 1.0, 1.0])
    verts, faces, seg, bind = [], [], [], []
    offset = 0

    def add(v, f, label, joint):
        nonlocal offset
        verts.append(v)
        faces.append(f + offset)
        seg.append(np.full(v.shape[0], label))
        bind.append(np.full(v.shape[0], joint))
        offset += v.shape[0]

    for label, joint, kind, geo in _MIDLINE + _LEFT:
        if kind == "capsule":
            v, f = capsule_mesh(geo[0], geo[1], geo[2], n_around, n_cap)
        else:
            v, f = box_mesh(geo[0], geo[1], foot_div)
        add(v * scale, f, label, joint)
        if label in _RIGHT_OF:
            add(v * scale * s, f[:, [0, 2, 1]], _RIGHT_OF[label], _JOINT_MIRROR[joint])
    verts = np.concatenate(verts)
    seg = np.concatenate(seg)
    vmap = _mirror_map(verts)
    verts = 0.5 * (verts + verts[vmap] * s)
    labels = np.minimum(seg, parts)
    feet = {"left": np.flatnonzero(seg == 9), "right": np.flatnonzero(seg == 10)}
    body = BodyMesh(vertices=verts, faces=np.concatenate(faces), part_labels=labels, foot_vertex_sets=feet,
                    num_parts=parts, vertex_mirror_map=vmap)
    return Humanoid(body=body, rest_joints=_REST_JOINTS * scale, binding=np.concatenate(bind))


def _mirror_map(verts: np.ndarray) -> np.ndarray:
    tree = cKDTree(verts)
    dist, idx = tree.query(verts * np.array([-1.0, 1.0, 1.0]))
    if dist.max() > 1e-9 or not np.array_equal(idx[idx], np.arange(verts.shape[0])):
        raise RuntimeError("humanoid mesh is not mirror symmetric")
    return idx


def capsule_humanoid(height: float = 1.7, parts: int = 10, resolution: int = 1) -> BodyMesh:
    return humanoid(height, parts, resolution).body


def pose(fig: Humanoid, local_rotations=None, root_translation=None) -> tuple:
    """Forward kinematics for one frame: (vertices, joints, rotations_6d)."""
    j_count = fig.rest_joints.shape[0]
    local = np.broadcast_to(np.eye(3), (j_count, 3, 3)) if local_rotations is None else np.asarray(local_rotations)
    root = fig.rest_joints[0] if root_translation is None else np.asarray(root_translation, dtype=float)
    parents = fig.parents
    rg = np.empty((j_count, 3, 3))
    jp = np.empty((j_count, 3))
    for j in range(j_count):
        p = parents[j]
        if p < 0:
            rg[j] = local[j]
            jp[j] = root
        else:
            rg[j] = rg[p] @ local[j]
            jp[j] = jp[p] + rg[p] @ (fig.rest_joints[j] - fig.rest_joints[p])
    b = fig.binding
    rel = fig.body.vertices - fig.rest_joints[b]
    verts = np.einsum("nij,nj->ni", rg[b], rel) + jp[b]
    rr = parent_relative_to_root_relative(local, parents)
    rr[0] = rg[0]
    return verts, jp, matrix_to_sixd(rr)


def _sequence(fig_body: BodyMesh, fps, frames, metadata) -> MotionSequence:
    v, j, r, x = (np.stack(c) for c in zip(*frames))
    return MotionSequence(fps=fps, vertices=v, joints=j, rotations_6d=r, root_translation=x, body=fig_body,
                          metadata=metadata)


def _figure(body) -> Humanoid:
    return humanoid() if body is None else body


def _rest_frame(fig: Humanoid, offset=(0.0, 0.0, 0.0)):
    # rest geometry is used directly (not through FK) so feet sit exactly on z = 0
    d = np.asarray(offset, dtype=float)
    r = np.tile([1.0, 0.0, 0.0, 0.0, 1.0, 0.0], (fig.rest_joints.shape[0], 1))
    return fig.body.vertices + d, fig.rest_joints + d, r, fig.rest_joints[0] + d


def static_stand(body: Humanoid | None = None, T: int = 10, fps: float = 20.0) -> MotionSequence:
    fig = _figure(body)
    frame = _rest_frame(fig)
    return _sequence(fig.body, fps, [frame] * T, {"generator": "stand", "params": {"T": T, "fps": fps}})


def random_local_rotations(rng: np.random.Generator, count: int = NUM_JOINTS, max_angle: float = 0.4) -> np.ndarray:
    axes = rng.standard_normal((count, 3))
    angles = rng.uniform(-max_angle, max_angle, count)
    return np.stack([axis_angle_to_matrix(a, t) for a, t in zip(axes, angles)])


def static_pose(body: Humanoid | None = None, T: int = 5, fps: float = 20.0, seed: int = 0,
                max_angle: float = 0.4) -> MotionSequence:
    """A random articulated pose held still, lowered so its lowest vertex touches z = 0."""
    fig = _figure(body)
    rng = np.random.default_rng(seed)
    local = random_local_rotations(rng, fig.rest_joints.shape[0], max_angle)
    local[0] = axis_angle_to_matrix((0.0, 0.0, 1.0), rng.uniform(-np.pi, np.pi))
    v, j, r = pose(fig, local)
    d = np.array([0.0, 0.0, -v[:, 2].min()])
    frame = (v + d, j + d, r, j[0] + d)
    meta = {"generator": "static-pose", "params": {"T": T, "fps": fps, "seed": seed, "max_angle": max_angle}}
    return _sequence(fig.body, fps, [frame] * T, meta)


def box_body(size: float = 0.1, center=(0.0, 0.0, 0.0), divisions=(1, 1, 1)) -> BodyMesh:
    v, f = box_mesh(np.asarray(center) - size / 2, np.asarray(center) + size / 2, divisions)
    return BodyMesh(vertices=v, faces=f, part_labels=np.ones(v.shape[0], dtype=int),
                    foot_vertex_sets={"left": [], "right": []}, num_parts=1)


def cart_table(mass_height: float = 0.8, accel_amplitude: float = 2.0, frequency: float = 1.0,
               phase: float = 0.0, T: int = 100, fps: float = 100.0, size: float = 0.1, x0: float = 0.0,
               support_half_width: float | None = None, support_thickness: float = 0.005,
               gravity: float = 9.81) -> MotionSequence:
    """A compact cube at constant height with sinusoidal horizontal acceleration.

    x''(t) = a sin(wt + phase), x(t) = x0 - a/w^2 sin(wt + phase). With
    ``support_half_width`` a static square pad (part 2) lies on the ground
    under the origin and provides a base of support.

    ``metadata["traces"]["zmp_x"]`` is the point-mass ZMP
    sum_i m_i (g x_i - z_i x''_i) / (g sum_i m_i), with per-vertex masses
    proportional to the analytic box volumes. Without a pad it reduces to the
    cart-table formula x - (z/g) x''.
    """
    cube_v, cube_f = box_mesh(np.full(3, -size / 2), np.full(3, size / 2))
    verts, faces, labels = [cube_v], [cube_f], [np.ones(len(cube_v), dtype=int)]
    vol_cube, vol_pad = size ** 3, 0.0
    if support_half_width is not None:
        w = support_half_width
        pad_v, pad_f = box_mesh((-w, -w, 0.0), (w, w, support_thickness))
        verts.append(pad_v)
        faces.append(pad_f + len(cube_v))
        labels.append(np.full(len(pad_v), 2))
        vol_pad = (2 * w) ** 2 * support_thickness
    body = BodyMesh(vertices=np.concatenate(verts), faces=np.concatenate(faces), part_labels=np.concatenate(labels),
                    foot_vertex_sets={"left": [], "right": []}, num_parts=len(verts))
    w_ = 2.0 * np.pi * frequency
    t = np.arange(T) / fps
    xdd = accel_amplitude * np.sin(w_ * t + phase) if frequency > 0 else np.full(T, accel_amplitude)
    x = x0 + (-xdd / w_ ** 2 if frequency > 0 else 0.5 * accel_amplitude * t ** 2)
    moving = np.arange(body.num_vertices) < len(cube_v)
    frames = []
    for k in range(T):
        c = np.array([x[k], 0.0, mass_height])
        v = body.vertices.copy()
        v[moving] += c
        frames.append((v, np.broadcast_to(c, (NUM_JOINTS, 3)).copy(),
                       np.tile([1.0, 0, 0, 0, 1.0, 0], (NUM_JOINTS, 1)), c))
    zmp_x = vol_cube * (gravity * x - mass_height * xdd) / (gravity * (vol_cube + vol_pad))
    meta = {
        "generator": "cart-table",
        "params": {"mass_height": mass_height, "accel_amplitude": accel_amplitude, "frequency": frequency,
                   "phase": phase, "T": T, "fps": fps, "size": size, "x0": x0,
                   "support_half_width": support_half_width, "support_thickness": support_thickness},
        "traces": {"com_x": x.tolist(), "accel_x": xdd.tolist(), "zmp_x": zmp_x.tolist()},
    }
    v, j, r, c = (np.stack(col) for col in zip(*frames))
    return MotionSequence(fps=fps, vertices=v, joints=j, rotations_6d=r, root_translation=c, body=body,
                          metadata=meta)


def glide(body: Humanoid | None = None, speed: float = 1.0, T: int = 20, fps: float = 20.0,
          direction=(0.0, -1.0, 0.0)) -> MotionSequence:
    """Rigid translation at constant horizontal speed with the feet on the ground."""
    fig = _figure(body)
    d = np.asarray(direction, dtype=float)
    d = d / np.linalg.norm(d)
    frames = [_rest_frame(fig, speed * (k / fps) * d) for k in range(T)]
    meta = {"generator": "glide", "params": {"speed": speed, "T": T, "fps": fps},
            "traces": {"foot_speed": [speed] * (T - 1)}}
    return _sequence(fig.body, fps, frames, meta)


def bounce(body: Humanoid | None = None, amplitude: float = 0.05, T: int = 40, fps: float = 20.0,
           frequency: float = 1.0, phase: float = 0.0) -> MotionSequence:
    """Vertical sinusoid h(t) = A sin(2 pi f t + phase) of the whole standing body."""
    fig = _figure(body)
    t = np.arange(T) / fps
    h = amplitude * np.sin(2.0 * np.pi * frequency * t + phase)
    frames = [_rest_frame(fig, (0.0, 0.0, hk)) for hk in h]
    meta = {"generator": "bounce",
            "params": {"amplitude": amplitude, "T": T, "fps": fps, "frequency": frequency, "phase": phase},
            "traces": {"lowest_height": h.tolist()}}
    return _sequence(fig.body, fps, frames, meta)


def walk_foot_offsets(t, period: float, stride: float, lift: float, shift: float = 0.0):
    """Forward travel and lift of one foot: stance for the first half-cycle, swing for the second."""
    tt = np.asarray(t, dtype=float) + shift * period
    cycles = np.floor(tt / period)
    s = tt / period - cycles
    swing = s >= 0.5
    prog = np.where(swing, (s - 0.5) * 2.0, 0.0)
    forward = stride * (cycles + prog) - shift * stride
    up = np.where(swing, lift * np.sin(np.pi * prog), 0.0)
    return forward, up, swing


def walk(body: Humanoid | None = None, speed: float = 1.0, T: int = 60, fps: float = 20.0, period: float = 1.0,
         lift: float = 0.1) -> MotionSequence:
    """Stylised gait: the upper body advances steadily while each foot alternates stance and swing."""
    fig = _figure(body)
    t = np.arange(T) / fps
    stride = speed * period
    fwd = np.array([0.0, -1.0, 0.0])
    v0, j0, r0, _ = _rest_frame(fig)
    b = fig.binding
    left_v = b == LEFT_FOOT_JOINTS[0]
    right_v = b == RIGHT_FOOT_JOINTS[0]
    lf, lu, _ = walk_foot_offsets(t, period, stride, lift, 0.0)
    rf, ru, _ = walk_foot_offsets(t, period, stride, lift, 0.5)
    frames = []
    for k in range(T):
        body_off = speed * t[k] * fwd
        loff = lf[k] * fwd + np.array([0.0, 0.0, lu[k]])
        roff = rf[k] * fwd + np.array([0.0, 0.0, ru[k]])
        v = v0 + body_off
        v[left_v] = v0[left_v] + loff
        v[right_v] = v0[right_v] + roff
        j = j0 + body_off
        j[list(LEFT_FOOT_JOINTS)] = j0[list(LEFT_FOOT_JOINTS)] + loff
        j[list(RIGHT_FOOT_JOINTS)] = j0[list(RIGHT_FOOT_JOINTS)] + roff
        frames.append((v, j, r0, fig.rest_joints[0] + body_off))
    meta = {"generator": "walk",
            "params": {"speed": speed, "T": T, "fps": fps, "period": period, "lift": lift},
            "traces": {"left_forward": lf.tolist(), "left_lift": lu.tolist(),
                       "right_forward": rf.tolist(), "right_lift": ru.tolist()}}
    return _sequence(fig.body, fps, frames, meta)


def sway(body: Humanoid | None = None, T: int = 30, fps: float = 20.0, seed: int = 0,
         amplitude: float = 0.25) -> MotionSequence:
    """Smooth random joint motion with drifting, bobbing root; a generic non-trivial sequence."""
    fig = _figure(body)
    rng = np.random.default_rng(seed)
    j_count = fig.rest_joints.shape[0]
    axes = rng.standard_normal((j_count, 3))
    freq = rng.uniform(0.3, 1.5, (j_count, 2))
    ph = rng.uniform(0, 2 * np.pi, (j_count, 2))
    amp = rng.uniform(0.2, 1.0, j_count) * amplitude
    yaw0 = rng.uniform(-np.pi, np.pi)
    drift = rng.uniform(-0.5, 0.5, 2)
    bob = rng.uniform(0.0, 0.04)
    frames = []
    for k in range(T):
        t = k / fps
        ang = amp * 0.5 * (np.sin(2 * np.pi * freq[:, 0] * t + ph[:, 0]) + np.sin(2 * np.pi * freq[:, 1] * t + ph[:, 1]))
        local = np.stack([axis_angle_to_matrix(axes[i], ang[i]) for i in range(j_count)])
        local[0] = axis_angle_to_matrix((0.0, 0.0, 1.0), yaw0 + 0.3 * ang[0])
        root = fig.rest_joints[0] + np.array([drift[0] * t, drift[1] * t, bob * np.sin(2 * np.pi * t) - 0.02])
        v, j, r = pose(fig, local, root)
        frames.append((v, j, r, root))
    meta = {"generator": "sway", "params": {"T": T, "fps": fps, "seed": seed, "amplitude": amplitude}}
    return _sequence(fig.body, fps, frames, meta)


GENERATORS = {
    "stand": static_stand,
    "static-pose": static_pose,
    "cart-table": cart_table,
    "glide": glide,
    "bounce": bounce,
    "walk": walk,
    "sway": sway,
}
