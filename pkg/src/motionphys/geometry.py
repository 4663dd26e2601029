"""Mesh volumes, mass distribution and 2D support-hull primitives."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.sparse import coo_matrix
from scipy.sparse.csgraph import connected_components

from . import kernels
from .core import BodyMesh, DegenerateGeometryError, GroundPlane, _frozen


@dataclass(frozen=True)
class MassDistribution:
    part_volumes: np.ndarray
    vertex_masses: np.ndarray
    total_mass: float
    density: float

    def __post_init__(self):
        object.__setattr__(self, "part_volumes", _frozen(self.part_volumes))
        object.__setattr__(self, "vertex_masses", _frozen(self.vertex_masses))


@dataclass(frozen=True)
class SupportHull:
    """Base of support: CCW hull of ground-contact points in plane coordinates.

    ``kind`` is "empty", "point", "segment" or "polygon".
    """

    contact_points: np.ndarray
    hull: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "contact_points", _frozen(np.asarray(self.contact_points).reshape(-1, 2)))
        object.__setattr__(self, "hull", _frozen(np.asarray(self.hull).reshape(-1, 2)))

    @property
    def empty(self) -> bool:
        return self.hull.shape[0] == 0

    @property
    def kind(self) -> str:
        return {0: "empty", 1: "point", 2: "segment"}.get(self.hull.shape[0], "polygon")

    @property
    def degenerate(self) -> bool:
        return self.hull.shape[0] < 3


class NoSupportError(ValueError):
    """Raised when a query needs a base of support but the hull is empty."""


def face_parts(body: BodyMesh) -> np.ndarray:
    """Part label of each face: the majority vertex label, ties to the first vertex."""
    lab = body.part_labels[body.faces]
    a, b, c = lab[:, 0], lab[:, 1], lab[:, 2]
    return np.where((b == c) & (a != b), b, a)


def _closed_part_volume(verts: np.ndarray, tris: np.ndarray) -> tuple[float, float]:
    """Signed volume and area of a triangle set closed by centroid fans over its boundary loops."""
    p0, p1, p2 = verts[tris[:, 0]], verts[tris[:, 1]], verts[tris[:, 2]]
    area = 0.5 * np.linalg.norm(np.cross(p1 - p0, p2 - p0), axis=1).sum()
    vol = np.einsum("ij,ij->i", p0, np.cross(p1, p2)).sum() / 6.0

    edges = np.concatenate([tris[:, [0, 1]], tris[:, [1, 2]], tris[:, [2, 0]]])
    # directed edges without a matching reverse belong to the open boundary
    n = verts.shape[0]
    fwd = edges[:, 0] * n + edges[:, 1]
    rev = edges[:, 1] * n + edges[:, 0]
    ufwd, counts = np.unique(fwd, return_counts=True)
    urev, rcounts = np.unique(rev, return_counts=True)
    paired = dict(zip(urev.tolist(), rcounts.tolist()))
    boundary = [k for k, c in zip(ufwd.tolist(), counts.tolist()) for _ in range(max(0, c - paired.get(k, 0)))]
    if not boundary:
        return vol, area
    b = np.array(boundary, dtype=np.int64)
    ea, eb = b // n, b % n
    loop_verts = np.unique(np.concatenate([ea, eb]))
    remap = -np.ones(n, dtype=np.int64)
    remap[loop_verts] = np.arange(loop_verts.size)
    g = coo_matrix((np.ones(ea.size), (remap[ea], remap[eb])), shape=(loop_verts.size,) * 2)
    ncomp, comp = connected_components(g, directed=False)
    centroids = np.stack([verts[loop_verts[comp == c]].mean(axis=0) for c in range(ncomp)])
    c = centroids[comp[remap[ea]]]
    # cap triangle (b, a, c) carries the reversed boundary edge
    vol += np.einsum("ij,ij->i", verts[eb], np.cross(verts[ea], c)).sum() / 6.0
    return vol, area


def part_volumes(body: BodyMesh, frame_vertices: np.ndarray | None = None) -> np.ndarray:
    """Closed volume of every part (K,) in m^3, via the divergence theorem."""
    verts = body.vertices if frame_vertices is None else np.asarray(frame_vertices, dtype=float)
    fp = face_parts(body)
    out = np.zeros(body.num_parts)
    for k in range(1, body.num_parts + 1):
        tris = body.faces[fp == k]
        if tris.shape[0] == 0:
            raise DegenerateGeometryError(f"part {k} has no faces")
        vol, area = _closed_part_volume(verts, tris)
        if area <= 0.0:
            raise DegenerateGeometryError(f"part {k} has zero surface area")
        if not vol > 0.0:
            raise DegenerateGeometryError(f"part {k} has non-positive closed volume ({vol:.3g} m^3)")
        out[k - 1] = vol
    return out


def mass_distribution(body: BodyMesh, frame_vertices: np.ndarray | None = None,
                      density: float = 985.0) -> MassDistribution:
    """Split the body mass over vertices with per-vertex weight equal to its part volume."""
    vols = part_volumes(body, frame_vertices)
    total = density * vols.sum()
    w = vols[body.part_labels - 1]
    masses = w * (total / w.sum())
    return MassDistribution(part_volumes=vols, vertex_masses=masses, total_mass=float(total), density=float(density))


def mesh_volume(vertices: np.ndarray, faces: np.ndarray) -> float:
    v = np.asarray(vertices, dtype=float)
    p0, p1, p2 = v[faces[:, 0]], v[faces[:, 1]], v[faces[:, 2]]
    return float(np.einsum("ij,ij->i", p0, np.cross(p1, p2)).sum() / 6.0)


def surface_samples(body: BodyMesh, count: int, seed: int = 0) -> tuple[np.ndarray, np.ndarray]:
    """Area-weighted uniform surface samples as (face index, barycentric weights).

    Sample positions in any frame are ``sum_k w[:, k] * V[faces[fi, k]]`` so they
    follow the mesh and stay linear in the vertex positions.
    """
    v = body.vertices
    f = body.faces
    areas = 0.5 * np.linalg.norm(np.cross(v[f[:, 1]] - v[f[:, 0]], v[f[:, 2]] - v[f[:, 0]]), axis=1)
    rng = np.random.default_rng(seed)
    fi = rng.choice(f.shape[0], size=count, p=areas / areas.sum())
    u, w = rng.random(count), rng.random(count)
    flip = u + w > 1.0
    u[flip], w[flip] = 1.0 - u[flip], 1.0 - w[flip]
    bary = np.stack([1.0 - u - w, u, w], axis=1)
    return fi, bary


def lowest_vertex_height(frame_vertices: np.ndarray, plane: GroundPlane | None = None) -> float:
    plane = plane or GroundPlane()
    return float(plane.height(frame_vertices).min())


def convex_hull_2d(points: np.ndarray) -> SupportHull:
    pts = np.asarray(points, dtype=float).reshape(-1, 2)
    idx = kernels.convex_hull(pts)
    return SupportHull(contact_points=pts, hull=pts[idx])


def _segment_distance(p: np.ndarray, a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Distance from ``p`` to each segment a[i]-b[i]."""
    ab = b - a
    denom = np.einsum("ij,ij->i", ab, ab)
    t = np.where(denom > 0, np.einsum("ij,ij->i", p - a, ab) / np.where(denom > 0, denom, 1.0), 0.0)
    t = np.clip(t, 0.0, 1.0)
    return np.linalg.norm(a + t[:, None] * ab - p, axis=1)


def hull_edge_distance(h: SupportHull, p) -> float:
    """0 inside or on the hull, otherwise the distance to the nearest hull edge."""
    if h.empty:
        raise NoSupportError("no support: base of support is empty")
    p = np.asarray(p, dtype=float).reshape(2)
    v = h.hull
    if v.shape[0] == 1:
        return float(np.linalg.norm(p - v[0]))
    a, b = v, np.roll(v, -1, axis=0)
    if v.shape[0] >= 3:
        cross = (b[:, 0] - a[:, 0]) * (p[1] - a[:, 1]) - (b[:, 1] - a[:, 1]) * (p[0] - a[:, 0])
        if np.all(cross >= 0.0):
            return 0.0
    else:
        a, b = v[:1], v[1:]
    return float(_segment_distance(p, a, b).min())


def hull_contains(h: SupportHull, p) -> bool:
    return hull_edge_distance(h, p) == 0.0
