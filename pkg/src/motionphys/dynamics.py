"""Center of mass, zero-moment point, center of pressure and base of support.

All per-frame quantities follow the gravito-inertial formulation: the moment
of gravity plus inertia forces about the ground projection of the CoM, and
the ground point where its horizontal component vanishes.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import kernels
from .config import AnalysisConfig
from .core import GroundPlane, MotionSequence, require_dynamics_length
from .geometry import MassDistribution, SupportHull, convex_hull_2d, mass_distribution, surface_samples


class ZMPUndefinedError(ValueError):
    """Vertical gravito-inertial force is ~0 (ballistic body); the ZMP does not exist."""


# -- single-frame building blocks -------------------------------------------

def center_of_mass(frame_vertices, masses: MassDistribution | np.ndarray) -> np.ndarray:
    m = masses.vertex_masses if isinstance(masses, MassDistribution) else np.asarray(masses, dtype=float)
    v = np.asarray(frame_vertices, dtype=float)
    return m @ v / m.sum()


def second_difference(x, fps: float) -> np.ndarray:
    """Central second difference along axis 0; boundary frames copy their interior neighbour."""
    x = np.asarray(x, dtype=float)
    require_dynamics_length(x.shape[0])
    a = np.empty_like(x)
    a[1:-1] = (x[2:] - 2.0 * x[1:-1] + x[:-2]) * (fps * fps)
    a[0] = a[1]
    a[-1] = a[-2]
    return a


def com_acceleration(com_series, fps: float) -> np.ndarray:
    return second_difference(com_series, fps)


def vertex_accelerations(vertex_series, fps: float) -> np.ndarray:
    return second_difference(vertex_series, fps)


def inertia_force(mass: float, com_accel, plane: GroundPlane | None = None) -> np.ndarray:
    plane = plane or GroundPlane()
    return mass * plane.gravity_vector - mass * np.asarray(com_accel, dtype=float)


def angular_momentum_rate(frame_vertices, vertex_accels, masses, com) -> np.ndarray:
    """Sum over vertices of (v_i - G) x m_i a_i."""
    m = masses.vertex_masses if isinstance(masses, MassDistribution) else np.asarray(masses, dtype=float)
    r = np.asarray(frame_vertices, dtype=float) - np.asarray(com, dtype=float)
    return (m[:, None] * np.cross(r, np.asarray(vertex_accels, dtype=float))).sum(axis=0)


def gi_moment(com_projection, com, mass: float, com_accel, h_dot, plane: GroundPlane | None = None) -> np.ndarray:
    """Moment of gravity and inertia forces about the projected CoM."""
    plane = plane or GroundPlane()
    lever = np.asarray(com, dtype=float) - np.asarray(com_projection, dtype=float)
    return (np.cross(lever, mass * plane.gravity_vector)
            - np.cross(lever, mass * np.asarray(com_accel, dtype=float))
            - np.asarray(h_dot, dtype=float))


def zmp(com_projection, force, moment, plane: GroundPlane | None = None, eps: float = 1e-6) -> np.ndarray:
    """Ground point where the horizontal gravito-inertial moment vanishes.

    Z = C_m + (n x M) / (F . n). Raises ZMPUndefinedError when |F . n| <= eps.
    """
    plane = plane or GroundPlane()
    n = plane.normal
    fn = float(np.asarray(force) @ n)
    if abs(fn) <= eps:
        raise ZMPUndefinedError(f"ZMP undefined: vertical force {fn:.3g} N")
    return np.asarray(com_projection, dtype=float) + np.cross(n, moment) / fn


def pressure_field(heights, alpha: float = 100.0, gamma: float = 10.0) -> np.ndarray:
    """Heuristic contact pressure: 1 - alpha*h below ground, exp(-gamma*h) above."""
    h = np.asarray(heights, dtype=float)
    return np.where(h < 0.0, 1.0 - alpha * h, np.exp(-gamma * np.maximum(h, 0.0)))


def pressure_field_slope(heights, alpha: float = 100.0, gamma: float = 10.0) -> np.ndarray:
    h = np.asarray(heights, dtype=float)
    return np.where(h < 0.0, -alpha, -gamma * np.exp(-gamma * np.maximum(h, 0.0)))


def center_of_pressure(points, weights) -> np.ndarray:
    p = np.asarray(points, dtype=float)
    w = np.asarray(weights, dtype=float)
    return w @ p / w.sum()


def base_of_support(frame_vertices, plane: GroundPlane | None = None, contact_height: float = 0.02) -> SupportHull:
    plane = plane or GroundPlane()
    v = np.asarray(frame_vertices, dtype=float)
    contact = v[plane.height(v) < contact_height]
    return convex_hull_2d(plane.to_2d(contact))


# -- CoP sample points --------------------------------------------------------

@dataclass(frozen=True)
class CopSampler:
    """Linear map from frame vertices to CoP sample points (identity for "vertices")."""

    face_vertices: np.ndarray | None = None  # (P, 3) vertex indices
    bary: np.ndarray | None = None  # (P, 3)

    @classmethod
    def from_config(cls, body, config: AnalysisConfig) -> "CopSampler":
        if config.cop_points == "vertices":
            return cls()
        fi, bary = surface_samples(body, config.cop_samples, config.cop_seed)
        return cls(face_vertices=body.faces[fi], bary=bary)

    def points(self, verts: np.ndarray) -> np.ndarray:
        if self.face_vertices is None:
            return verts
        fv = self.face_vertices
        return np.einsum("pk,...pkd->...pd", self.bary, verts[..., fv, :])

    def backward(self, grad_points: np.ndarray, num_vertices: int) -> np.ndarray:
        if self.face_vertices is None:
            return grad_points
        out = np.zeros(grad_points.shape[:-2] + (num_vertices, 3))
        for k in range(3):
            contrib = self.bary[:, k, None] * grad_points
            np.add.at(out, (Ellipsis, self.face_vertices[:, k], slice(None)), contrib)
        return out


# -- frame and sequence analysis ---------------------------------------------

@dataclass(frozen=True)
class DynamicsFrame:
    com: np.ndarray
    com_projection: np.ndarray
    com_acceleration: np.ndarray
    inertia_force: np.ndarray
    moment: np.ndarray
    angular_momentum_rate: np.ndarray
    zmp: np.ndarray
    zmp_defined: bool
    cop: np.ndarray
    support: SupportHull
    lowest_height: float
    support_gate: bool


@dataclass(frozen=True)
class DynamicsTrace:
    """Per-frame dynamics for a whole sequence, arrays indexed by frame."""

    com: np.ndarray
    com_projection: np.ndarray
    com_acceleration: np.ndarray
    inertia_force: np.ndarray
    moment: np.ndarray
    angular_momentum_rate: np.ndarray
    zmp: np.ndarray
    zmp_defined: np.ndarray
    cop: np.ndarray
    lowest_height: np.ndarray
    support_gate: np.ndarray
    supports: tuple
    total_mass: float

    @property
    def num_frames(self) -> int:
        return self.com.shape[0]

    @property
    def interior(self) -> np.ndarray:
        mask = np.zeros(self.num_frames, dtype=bool)
        mask[1:-1] = True
        return mask

    @property
    def stability_frames(self) -> np.ndarray:
        """Interior frames with ground support and a defined ZMP."""
        return self.interior & self.support_gate & self.zmp_defined

    def frame(self, t: int) -> DynamicsFrame:
        return DynamicsFrame(
            com=self.com[t], com_projection=self.com_projection[t], com_acceleration=self.com_acceleration[t],
            inertia_force=self.inertia_force[t], moment=self.moment[t],
            angular_momentum_rate=self.angular_momentum_rate[t], zmp=self.zmp[t],
            zmp_defined=bool(self.zmp_defined[t]), cop=self.cop[t], support=self.supports[t],
            lowest_height=float(self.lowest_height[t]), support_gate=bool(self.support_gate[t]),
        )


def sequence_masses(seq: MotionSequence, config: AnalysisConfig | None = None) -> MassDistribution:
    """Masses from first-frame part volumes, held fixed over the sequence."""
    config = config or AnalysisConfig()
    return mass_distribution(seq.body, seq.vertices[0], config.density)


def analyze_sequence(seq: MotionSequence, masses: MassDistribution | None = None,
                     plane: GroundPlane | None = None, config: AnalysisConfig | None = None,
                     supports: bool = True) -> DynamicsTrace:
    config = config or AnalysisConfig()
    plane = plane or GroundPlane()
    require_dynamics_length(seq.num_frames)
    masses = masses or sequence_masses(seq, config)
    m = masses.vertex_masses
    total = float(m.sum())
    n = plane.normal
    verts = seq.vertices

    com = kernels.com_series(verts, m)
    acc = com_acceleration(com, seq.fps)
    h_dot = kernels.angular_momentum_rate(verts, m, com, seq.fps)
    com_h = plane.height(com)
    com_proj = com - com_h[:, None] * n
    lever = com - com_proj
    force = total * plane.gravity_vector - total * acc
    moment = np.cross(lever, total * plane.gravity_vector) - np.cross(lever, total * acc) - h_dot
    fn = force @ n
    defined = np.abs(fn) > config.eps_vertical_force
    safe_fn = np.where(defined, fn, np.nan)
    z = com_proj + np.cross(n, moment) / safe_fn[:, None]

    sampler = CopSampler.from_config(seq.body, config)
    cop = kernels.pressure_cop(sampler.points(verts), plane.origin, n, config.alpha, config.gamma)
    lowest, _ = kernels.lowest_heights(verts, plane.origin, n)
    gate = lowest <= config.support_gate_height

    hulls = ()
    if supports:
        heights = plane.height(verts)
        coords = plane.to_2d(verts)
        hulls = tuple(convex_hull_2d(coords[t][heights[t] < config.contact_height]) for t in range(seq.num_frames))
    return DynamicsTrace(
        com=com, com_projection=com_proj, com_acceleration=acc, inertia_force=force, moment=moment,
        angular_momentum_rate=h_dot, zmp=z, zmp_defined=defined, cop=cop, lowest_height=lowest,
        support_gate=gate, supports=hulls, total_mass=total,
    )


def analyze_frame(seq: MotionSequence, t: int, masses: MassDistribution | None = None,
                  plane: GroundPlane | None = None, config: AnalysisConfig | None = None) -> DynamicsFrame:
    """Dynamics of frame ``t`` from its two neighbours (boundary frames reuse the interior stencil)."""
    config = config or AnalysisConfig()
    plane = plane or GroundPlane()
    require_dynamics_length(seq.num_frames)
    if not 0 <= t < seq.num_frames:
        raise IndexError(f"frame {t} out of range")
    masses = masses or sequence_masses(seq, config)
    c = min(max(t, 1), seq.num_frames - 2)
    window = seq.vertices[c - 1:c + 2]
    v = seq.vertices[t]
    g = center_of_mass(v, masses)
    gw = np.stack([center_of_mass(w, masses) for w in window])
    a_g = (gw[2] - 2.0 * gw[1] + gw[0]) * seq.fps ** 2
    a_v = (window[2] - 2.0 * window[1] + window[0]) * seq.fps ** 2
    h_dot = angular_momentum_rate(v, a_v, masses, g)
    cm = plane.project(g)
    total = masses.total_mass
    force = inertia_force(total, a_g, plane)
    moment = gi_moment(cm, g, total, a_g, h_dot, plane)
    try:
        z = zmp(cm, force, moment, plane, config.eps_vertical_force)
        defined = True
    except ZMPUndefinedError:
        z = np.full(3, np.nan)
        defined = False
    pts = CopSampler.from_config(seq.body, config).points(v)
    cop = center_of_pressure(pts, pressure_field(plane.height(pts), config.alpha, config.gamma))
    low = float(plane.height(v).min())
    return DynamicsFrame(
        com=g, com_projection=cm, com_acceleration=a_g, inertia_force=force, moment=moment,
        angular_momentum_rate=h_dot, zmp=z, zmp_defined=defined, cop=cop,
        support=base_of_support(v, plane, config.contact_height),
        lowest_height=low, support_gate=low <= config.support_gate_height,
    )
