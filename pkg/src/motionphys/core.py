"""Shared domain types.

Units are SI throughout (m, s, kg, rad). Only the metric report converts to
centimeters and percentages.
"""
from __future__ import annotations

from dataclasses import dataclass, field, fields
from typing import Mapping

import numpy as np

# SMPL-style 24-slot skeleton: 23 body joints plus the root (pelvis).
NUM_JOINTS = 24
SMPL_PARENTS = (-1, 0, 0, 0, 1, 2, 3, 4, 5, 6, 7, 8, 9, 9, 9, 12, 13, 14, 16, 17, 18, 19, 20, 21)
SMPL_JOINT_NAMES = (
    "pelvis", "l_hip", "r_hip", "spine1", "l_knee", "r_knee", "spine2", "l_ankle",
    "r_ankle", "spine3", "l_foot", "r_foot", "neck", "l_collar", "r_collar", "head",
    "l_shoulder", "r_shoulder", "l_elbow", "r_elbow", "l_wrist", "r_wrist", "l_hand", "r_hand",
)
SMPL_MIRROR_PAIRS = ((1, 2), (4, 5), (7, 8), (10, 11), (13, 14), (16, 17), (18, 19), (20, 21), (22, 23))
FOOT_JOINTS = (7, 8, 10, 11)
DEFAULT_NUM_PARTS = 10


class SchemaError(ValueError):
    """A motion document does not match the interchange schema."""


class ShapeError(ValueError):
    """Array shapes are inconsistent across frames or with the body."""


class SequenceTooShortError(ValueError):
    """Fewer than three frames; central differences are undefined."""


class DegenerateGeometryError(ValueError):
    """A mesh part has zero area or non-positive closed volume."""


def _frozen(a, dtype=float) -> np.ndarray:
    arr = np.array(a, dtype=dtype, copy=True)
    arr.flags.writeable = False
    return arr


@dataclass(frozen=True)
class GroundPlane:
    origin: np.ndarray = field(default_factory=lambda: np.zeros(3))
    normal: np.ndarray = field(default_factory=lambda: np.array([0.0, 0.0, 1.0]))
    gravity: float = 9.81

    def __post_init__(self):
        n = np.asarray(self.normal, dtype=float).reshape(3)
        norm = np.linalg.norm(n)
        if norm == 0:
            raise ValueError("ground normal must be nonzero")
        if abs(norm - 1.0) > 1e-12:
            n = n / norm
        object.__setattr__(self, "normal", _frozen(n))
        object.__setattr__(self, "origin", _frozen(np.asarray(self.origin, dtype=float).reshape(3)))
        if self.gravity <= 0:
            raise ValueError("gravity magnitude must be positive")

    @property
    def gravity_vector(self) -> np.ndarray:
        return -self.gravity * self.normal

    def height(self, points: np.ndarray) -> np.ndarray:
        """Signed height of ``points`` (..., 3) above the plane."""
        return (np.asarray(points) - self.origin) @ self.normal

    def project(self, points: np.ndarray) -> np.ndarray:
        points = np.asarray(points, dtype=float)
        return points - self.height(points)[..., None] * self.normal

    def basis(self) -> tuple[np.ndarray, np.ndarray]:
        """Two in-plane unit axes (e1, e2) with e1 x e2 = normal."""
        n = self.normal
        ref = np.array([1.0, 0.0, 0.0]) if abs(n[0]) < 0.9 else np.array([0.0, 1.0, 0.0])
        e1 = ref - (ref @ n) * n
        e1 /= np.linalg.norm(e1)
        e2 = np.cross(n, e1)
        return e1, e2

    def to_2d(self, points: np.ndarray) -> np.ndarray:
        """In-plane coordinates of ``points`` (..., 3) -> (..., 2)."""
        e1, e2 = self.basis()
        d = np.asarray(points, dtype=float) - self.origin
        return np.stack([d @ e1, d @ e2], axis=-1)


@dataclass(frozen=True)
class BodyMesh:
    """Triangle mesh with per-vertex part labels in 1..K.

    ``vertex_mirror_map`` (optional) is a left/right vertex permutation used
    by mirroring; ``mirror_pairs`` lists swapped joint index pairs.
    """

    vertices: np.ndarray
    faces: np.ndarray
    part_labels: np.ndarray
    foot_vertex_sets: Mapping[str, np.ndarray]
    num_parts: int = DEFAULT_NUM_PARTS
    parents: tuple = SMPL_PARENTS
    mirror_pairs: tuple = SMPL_MIRROR_PAIRS
    vertex_mirror_map: np.ndarray | None = None

    def __post_init__(self):
        v = _frozen(self.vertices)
        f = _frozen(self.faces, dtype=np.int64)
        labels = _frozen(self.part_labels, dtype=np.int64)
        if v.ndim != 2 or v.shape[1] != 3:
            raise ShapeError(f"vertices must be (N, 3), got {v.shape}")
        if f.ndim != 2 or f.shape[1] != 3:
            raise ShapeError(f"faces must be (F, 3), got {f.shape}")
        n = v.shape[0]
        if f.size and (f.min() < 0 or f.max() >= n):
            raise ShapeError("face index out of range")
        if labels.shape != (n,):
            raise ShapeError(f"part_labels must have one entry per vertex ({n}), got {labels.shape}")
        if labels.size and (labels.min() < 1 or labels.max() > self.num_parts):
            raise ShapeError(f"part labels must lie in 1..{self.num_parts}")
        feet = {}
        for side in ("left", "right"):
            idx = _frozen(self.foot_vertex_sets.get(side, ()), dtype=np.int64)
            if idx.size and (idx.min() < 0 or idx.max() >= n):
                raise ShapeError(f"foot vertex index out of range ({side})")
            feet[side] = idx
        object.__setattr__(self, "vertices", v)
        object.__setattr__(self, "faces", f)
        object.__setattr__(self, "part_labels", labels)
        object.__setattr__(self, "foot_vertex_sets", feet)
        object.__setattr__(self, "parents", tuple(int(p) for p in self.parents))
        object.__setattr__(self, "mirror_pairs", tuple((int(a), int(b)) for a, b in self.mirror_pairs))
        if self.vertex_mirror_map is not None:
            vm = _frozen(self.vertex_mirror_map, dtype=np.int64)
            if vm.shape != (n,) or not np.array_equal(np.sort(vm), np.arange(n)):
                raise ShapeError("vertex_mirror_map must be a permutation of the vertices")
            if not np.array_equal(vm[vm], np.arange(n)):
                raise ShapeError("vertex_mirror_map must be an involution")
            object.__setattr__(self, "vertex_mirror_map", vm)

    @property
    def num_vertices(self) -> int:
        return self.vertices.shape[0]

    def replace(self, **changes) -> "BodyMesh":
        kw = {f.name: getattr(self, f.name) for f in fields(self)}
        kw.update(changes)
        return BodyMesh(**kw)


@dataclass(frozen=True)
class MotionSequence:
    """Frames of a motion stored as stacked arrays.

    vertices (T, N, 3), joints (T, J, 3), rotations_6d (T, J, 6) and
    root_translation (T, 3). Rotation slot 0 is the global root orientation;
    slots 1.. are root-relative joint rotations.
    """

    fps: float
    vertices: np.ndarray
    joints: np.ndarray
    rotations_6d: np.ndarray
    root_translation: np.ndarray
    body: BodyMesh
    metadata: Mapping = field(default_factory=dict)

    def __post_init__(self):
        if not self.fps > 0:
            raise ValueError("fps must be positive")
        v = _frozen(self.vertices)
        j = _frozen(self.joints)
        r = _frozen(self.rotations_6d)
        x = _frozen(self.root_translation)
        if v.ndim != 3 or v.shape[2] != 3:
            raise ShapeError(f"vertices must be (T, N, 3), got {v.shape}")
        t, n = v.shape[:2]
        if n != self.body.num_vertices:
            raise ShapeError(f"frames carry {n} vertices but the body has {self.body.num_vertices}")
        if j.ndim != 3 or j.shape[0] != t or j.shape[2] != 3:
            raise ShapeError(f"joints must be (T, J, 3), got {j.shape}")
        if r.shape != (t, j.shape[1], 6):
            raise ShapeError(f"rotations_6d must be (T, J, 6), got {r.shape}")
        if x.shape != (t, 3):
            raise ShapeError(f"root_translation must be (T, 3), got {x.shape}")
        object.__setattr__(self, "fps", float(self.fps))
        object.__setattr__(self, "vertices", v)
        object.__setattr__(self, "joints", j)
        object.__setattr__(self, "rotations_6d", r)
        object.__setattr__(self, "root_translation", x)
        object.__setattr__(self, "metadata", dict(self.metadata))

    @property
    def num_frames(self) -> int:
        return self.vertices.shape[0]

    @property
    def num_joints(self) -> int:
        return self.joints.shape[1]

    def replace(self, **changes) -> "MotionSequence":
        kw = {f.name: getattr(self, f.name) for f in fields(self)}
        kw.update(changes)
        return MotionSequence(**kw)

    def translated(self, offset) -> "MotionSequence":
        """Rigidly translate every frame by ``offset`` (3,) or per-frame (T, 3)."""
        d = np.broadcast_to(np.asarray(offset, dtype=float), (self.num_frames, 3))
        return self.replace(
            vertices=self.vertices + d[:, None, :],
            joints=self.joints + d[:, None, :],
            root_translation=self.root_translation + d,
        )


def require_dynamics_length(num_frames: int) -> None:
    if num_frames < 3:
        raise SequenceTooShortError("sequence too short for dynamics (need at least 3 frames)")


METRIC_FIELDS = ("penetrate_cm", "float_cm", "skate_pct", "dyn_stability_pct", "bos_dist_cm")


@dataclass(frozen=True)
class MetricsReport:
    penetrate_cm: float
    float_cm: float
    skate_pct: float
    dyn_stability_pct: float
    bos_dist_cm: float
    name: str = ""
    per_frame: Mapping | None = None
    flags: tuple = ()

    def __post_init__(self):
        for name in ("penetrate_cm", "float_cm", "bos_dist_cm"):
            if not getattr(self, name) >= 0:
                raise ValueError(f"{name} must be non-negative")
        for name in ("skate_pct", "dyn_stability_pct"):
            if not 0 <= getattr(self, name) <= 100:
                raise ValueError(f"{name} must lie in [0, 100]")

    def values(self) -> tuple[float, ...]:
        return tuple(float(getattr(self, k)) for k in METRIC_FIELDS)

    def to_dict(self, per_frame: bool = False) -> dict:
        out = {"name": self.name, **{k: float(getattr(self, k)) for k in METRIC_FIELDS}}
        if self.flags:
            out["flags"] = list(self.flags)
        if per_frame and self.per_frame is not None:
            out["per_frame"] = {k: np.asarray(v).tolist() for k, v in self.per_frame.items()}
        return out

    @classmethod
    def from_dict(cls, d: Mapping) -> "MetricsReport":
        missing = [k for k in METRIC_FIELDS if k not in d]
        if missing:
            raise SchemaError(f"report missing field '{missing[0]}'")
        return cls(
            **{k: float(d[k]) for k in METRIC_FIELDS},
            name=str(d.get("name", "")),
            flags=tuple(d.get("flags", ())),
        )


@dataclass(frozen=True)
class LossWeights:
    lambda_cycle: float = 1.0
    lambda_physics: float = 1.0
    lambda_dyn: float = 1e-4

    def __post_init__(self):
        for f in fields(self):
            if getattr(self, f.name) < 0:
                raise ValueError(f"{f.name} must be non-negative")
