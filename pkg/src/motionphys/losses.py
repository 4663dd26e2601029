"""Differentiable loss terms with exact analytic gradients.

Every loss returns a :class:`LossValue`. Passing ``wrt`` requests the
gradient with respect to one sequence field:

* ``"vertex_positions"``  (T, N, 3)
* ``"root_translation"``  (T, 3); a root shift moves the whole body
  (vertices and joints) rigidly, so this is the per-frame sum of all
  positional cotangents
* ``"joint_positions"``   (T, J, 3)
* ``"joint_rotations_6d"`` (T, J, 6)

Masses are treated as fixed inputs (computed once from first-frame part
volumes), so the stability gradient does not flow through the volumes.
At kinks the active-branch subgradient is used: ties for the lowest vertex
share the gradient equally, and zero-length residuals get zero gradient.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import kernels
from .config import AnalysisConfig
from .core import FOOT_JOINTS, GroundPlane, LossWeights, MotionSequence, require_dynamics_length
from .dynamics import CopSampler, pressure_field, pressure_field_slope, sequence_masses
from .geometry import MassDistribution
from .rotations import geodesic_distance, geodesic_distance_backward, sixd_to_matrix, sixd_to_matrix_backward

WRT_CHOICES = ("vertex_positions", "root_translation", "joint_positions", "joint_rotations_6d")
TIE_TOL = 1e-12


@dataclass(frozen=True)
class LossValue:
    value: float
    gradient: np.ndarray | None = None
    flags: tuple = ()


@dataclass
class _Cotangents:
    vertices: np.ndarray | None = None
    joints: np.ndarray | None = None
    root: np.ndarray | None = None
    rotations: np.ndarray | None = None
    shapes: dict = field(default_factory=dict)

    def select(self, wrt: str) -> np.ndarray:
        if wrt not in WRT_CHOICES:
            raise ValueError(f"unknown gradient target {wrt!r}; choose from {WRT_CHOICES}")
        s = self.shapes
        if wrt == "vertex_positions":
            return self.vertices if self.vertices is not None else np.zeros(s["vertices"])
        if wrt == "joint_positions":
            return self.joints if self.joints is not None else np.zeros(s["joints"])
        if wrt == "joint_rotations_6d":
            return self.rotations if self.rotations is not None else np.zeros(s["rotations"])
        g = np.zeros(s["root"]) if self.root is None else self.root.copy()
        if self.vertices is not None:
            g += self.vertices.sum(axis=1)
        if self.joints is not None:
            g += self.joints.sum(axis=1)
        return g


def _shapes(seq: MotionSequence) -> dict:
    t = seq.num_frames
    return {"vertices": seq.vertices.shape, "joints": seq.joints.shape,
            "rotations": seq.rotations_6d.shape, "root": (t, 3)}


def _finish(value: float, cot: _Cotangents | None, wrt: str | None, flags=()) -> LossValue:
    grad = None if wrt is None else cot.select(wrt)
    return LossValue(float(value), grad, tuple(flags))


# -- intuitive physics ---------------------------------------------------------

def _lowest_vertex_grad(h: np.ndarray, hmin: np.ndarray, active: np.ndarray, sign: float,
                        normal: np.ndarray) -> np.ndarray:
    t, n = h.shape
    g = np.zeros((t, n, 3))
    if not active.any():
        return g
    tied = (np.abs(h - hmin[:, None]) <= TIE_TOL) & active[:, None]
    share = tied / tied.sum(axis=1, keepdims=True).clip(min=1)
    g += (sign / t) * share[:, :, None] * normal
    return g


def _ground_losses(seq: MotionSequence, plane: GroundPlane | None):
    plane = plane or GroundPlane()
    hmin, _ = kernels.lowest_heights(seq.vertices, plane.origin, plane.normal)
    return plane, hmin


def penetration_loss(seq: MotionSequence, plane: GroundPlane | None = None, wrt: str | None = None) -> LossValue:
    """Mean over frames of the depth of the lowest vertex below the ground."""
    plane, hmin = _ground_losses(seq, plane)
    value = np.maximum(0.0, -hmin).mean()
    cot = None
    if wrt is not None:
        h = plane.height(seq.vertices)
        cot = _Cotangents(vertices=_lowest_vertex_grad(h, hmin, hmin < 0.0, -1.0, plane.normal), shapes=_shapes(seq))
    return _finish(value, cot, wrt)


def float_loss(seq: MotionSequence, plane: GroundPlane | None = None, wrt: str | None = None) -> LossValue:
    """Mean over frames of the height of the lowest vertex above the ground."""
    plane, hmin = _ground_losses(seq, plane)
    value = np.maximum(0.0, hmin).mean()
    cot = None
    if wrt is not None:
        h = plane.height(seq.vertices)
        cot = _Cotangents(vertices=_lowest_vertex_grad(h, hmin, hmin > 0.0, 1.0, plane.normal), shapes=_shapes(seq))
    return _finish(value, cot, wrt)


def foot_contact_pairs(seq: MotionSequence, plane: GroundPlane, contact_height: float, foot_joints) -> tuple:
    """Horizontal displacement (T-1, F, 3) of foot joints and their both-frame contact mask."""
    feet = seq.joints[:, list(foot_joints)]
    h = plane.height(feet)
    contact = (h[:-1] < contact_height) & (h[1:] < contact_height)
    d = np.diff(feet, axis=0)
    d = d - (d @ plane.normal)[..., None] * plane.normal
    return d, contact


def slide_loss(seq: MotionSequence, plane: GroundPlane | None = None, contact_height: float = 0.05,
               foot_joints=FOOT_JOINTS, wrt: str | None = None) -> LossValue:
    """Mean horizontal speed (m/s) of foot joints over frame pairs where they touch the ground."""
    plane = plane or GroundPlane()
    d, contact = foot_contact_pairs(seq, plane, contact_height, foot_joints)
    count = int(contact.sum())
    norm = np.linalg.norm(d, axis=-1)
    value = float((norm * contact).sum() * seq.fps / count) if count else 0.0
    flags = () if count else ("no contact",)
    cot = None
    if wrt is not None:
        gj = np.zeros(seq.joints.shape)
        if count:
            unit = np.where(norm[..., None] > 0, d / np.where(norm > 0, norm, 1.0)[..., None], 0.0)
            gd = unit * (contact[..., None] * seq.fps / count)
            idx = list(foot_joints)
            np.add.at(gj, (slice(1, None), idx), gd)
            np.add.at(gj, (slice(None, -1), idx), -gd)
        cot = _Cotangents(joints=gj, shapes=_shapes(seq))
    return _finish(value, cot, wrt, flags)


# -- dynamic stability ---------------------------------------------------------

def geman_mcclure(x, sigma: float):
    x2 = np.square(x)
    return sigma ** 2 * x2 / (x2 + sigma ** 2)


def geman_mcclure_slope(x, sigma: float):
    s2 = sigma ** 2
    return 2.0 * s2 * s2 * x / np.square(np.square(x) + s2)


def dynamic_stability_loss(seq: MotionSequence, masses: MassDistribution | None = None,
                           plane: GroundPlane | None = None, sigma: float | None = None,
                           config: AnalysisConfig | None = None, wrt: str | None = None) -> LossValue:
    """Geman-McClure penalty on the in-plane CoP-to-ZMP distance, averaged over gated interior frames."""
    config = config or AnalysisConfig()
    plane = plane or GroundPlane()
    sigma = config.sigma_gm if sigma is None else sigma
    require_dynamics_length(seq.num_frames)
    masses = masses or sequence_masses(seq, config)
    m = masses.vertex_masses
    total = m.sum()
    w = m / total
    n, o = plane.normal, plane.origin
    gv = plane.gravity_vector
    f2 = seq.fps ** 2

    V = seq.vertices
    G = np.einsum("n,tnk->tk", w, V)
    Vt, Gt = V[1:-1], G[1:-1]
    A = (V[2:] - 2.0 * Vt + V[:-2]) * f2
    aG = (G[2:] - 2.0 * Gt + G[:-2]) * f2
    h = (Gt - o) @ n
    lever = h[:, None] * n
    Cm = Gt - lever
    F = total * gv - total * aG
    r = Vt - Gt[:, None, :]
    Hd = np.einsum("n,tnk->tk", m, np.cross(r, A))
    Mom = np.cross(lever, total * gv) - np.cross(lever, total * aG) - Hd
    fn = F @ n
    nxM = np.cross(n, Mom)
    defined = np.abs(fn) > config.eps_vertical_force
    fn_safe = np.where(defined, fn, 1.0)
    Z = Cm + nxM / fn_safe[:, None]

    sampler = CopSampler.from_config(seq.body, config)
    P = sampler.points(Vt)
    hp = (P - o) @ n
    rho = pressure_field(hp, config.alpha, config.gamma)
    S = rho.sum(axis=1)
    Cp = np.einsum("tp,tpk->tk", rho, P) / S[:, None]
    Cpp = Cp - ((Cp - o) @ n)[:, None] * n
    D = Cpp - Z
    dist = np.linalg.norm(D, axis=1)

    lowest = plane.height(Vt).min(axis=1)
    gate = defined & (lowest <= config.support_gate_height)
    ng = int(gate.sum())
    if ng == 0:
        cot = _Cotangents(shapes=_shapes(seq)) if wrt is not None else None
        return _finish(0.0, cot, wrt, ("no supported frames",))
    value = geman_mcclure(dist[gate], sigma).mean()
    if wrt is None:
        return LossValue(float(value))

    # reverse pass, frame-batched over interior frames
    scale = gate / ng * geman_mcclure_slope(dist, sigma)
    gD = np.where(dist[:, None] > 0, D / np.where(dist > 0, dist, 1.0)[:, None], 0.0) * scale[:, None]
    gCp = gD - (gD @ n)[:, None] * n
    gZ = -gD
    gP = rho[:, :, None] / S[:, None, None] * gCp[:, None, :]
    grho = np.einsum("tpk,tk->tp", P - Cp[:, None, :], gCp) / S[:, None]
    gP += (grho * pressure_field_slope(hp, config.alpha, config.gamma))[:, :, None] * n
    gVt = sampler.backward(gP, V.shape[1])

    gMom = -np.cross(n, gZ) / fn_safe[:, None]
    gfn = -np.einsum("tk,tk->t", gZ, nxM) / fn_safe ** 2
    gCm = gZ
    glever = np.cross(total * gv - total * aG, gMom)
    gaG = -total * np.cross(gMom, lever) - total * gfn[:, None] * n
    gHd = -gMom
    gh = glever @ n - gCm @ n
    gGt = gCm + gh[:, None] * n
    gr = m[None, :, None] * np.cross(A, gHd[:, None, :])
    gA = m[None, :, None] * np.cross(gHd[:, None, :], r)
    gVt = gVt + gr
    gGt = gGt - gr.sum(axis=1)

    gV = np.zeros_like(V)
    gV[1:-1] += gVt - 2.0 * f2 * gA
    gV[2:] += f2 * gA
    gV[:-2] += f2 * gA
    gG = np.zeros_like(G)
    gG[1:-1] += gGt - 2.0 * f2 * gaG
    gG[2:] += f2 * gaG
    gG[:-2] += f2 * gaG
    gV += w[None, :, None] * gG[:, None, :]
    return _finish(value, _Cotangents(vertices=gV, shapes=_shapes(seq)), wrt)


# -- cycle geometry ---------------------------------------------------------------

def _rotations(x) -> np.ndarray:
    return x.rotations_6d if isinstance(x, MotionSequence) else np.asarray(x, dtype=float)


def _translations(x) -> np.ndarray:
    return x.root_translation if isinstance(x, MotionSequence) else np.asarray(x, dtype=float)


def rotation_cycle_loss(r_a, r_b, grad: bool = False) -> LossValue:
    """Sum over frames and joints of the geodesic angle between two 6D rotation sets.

    The gradient, when requested, is with respect to ``r_a``.
    """
    ra, rb = _rotations(r_a), _rotations(r_b)
    if ra.shape != rb.shape:
        raise ValueError(f"rotation shapes differ: {ra.shape} vs {rb.shape}")
    Ra, Rb = sixd_to_matrix(ra), sixd_to_matrix(rb)
    value = geodesic_distance(Ra, Rb).sum()
    g = None
    if grad:
        g = sixd_to_matrix_backward(ra, geodesic_distance_backward(Ra, Rb, np.ones(ra.shape[:-1])))
    return LossValue(float(value), g)


def smooth_l1(x, delta: float = 1.0):
    ax = np.abs(x)
    return np.where(ax < delta, 0.5 * x * x / delta, ax - 0.5 * delta)


def position_cycle_loss(x_a, x_b, delta: float = 1.0, grad: bool = False) -> LossValue:
    """Elementwise smooth-L1 between root translations, summed over frames and axes."""
    xa, xb = _translations(x_a), _translations(x_b)
    d = xa - xb
    g = np.where(np.abs(d) < delta, d / delta, np.sign(d)) if grad else None
    return LossValue(float(smooth_l1(d, delta).sum()), g)


# -- composition ------------------------------------------------------------------

PHYSICS_TERMS = ("penetrate", "float", "slide")
CYCLE_TERMS = ("rotation_cycle", "position_cycle")


def total_loss(components: dict, weights: LossWeights | None = None) -> LossValue:
    """Weighted sum lambda_cycle*(rot+pos) + lambda_physics*(pen+float+slide) + lambda_dyn*dyn."""
    weights = weights or LossWeights()
    lam = {"rotation_cycle": weights.lambda_cycle, "position_cycle": weights.lambda_cycle,
           "penetrate": weights.lambda_physics, "float": weights.lambda_physics, "slide": weights.lambda_physics,
           "dyn_stability": weights.lambda_dyn}
    unknown = set(components) - set(lam)
    if unknown:
        raise ValueError(f"unknown loss component {sorted(unknown)[0]!r}")
    value = 0.0
    grad = None
    for name, lv in components.items():
        value += lam[name] * lv.value
        if lv.gradient is not None:
            grad = lam[name] * lv.gradient if grad is None else grad + lam[name] * lv.gradient
    return LossValue(float(value), grad)


LOSS_NAMES = ("penetrate", "float", "slide", "dyn_stability", "rotation_cycle", "position_cycle", "total")


def evaluate(name: str, seq: MotionSequence, wrt: str | None = None, reference: MotionSequence | None = None,
             masses: MassDistribution | None = None, plane: GroundPlane | None = None,
             config: AnalysisConfig | None = None, weights: LossWeights | None = None) -> LossValue:
    """Evaluate a named loss on ``seq`` (cycle terms compare against ``reference``)."""
    config = config or AnalysisConfig()
    plane = plane or GroundPlane()
    if name == "penetrate":
        return penetration_loss(seq, plane, wrt)
    if name == "float":
        return float_loss(seq, plane, wrt)
    if name == "slide":
        return slide_loss(seq, plane, config.slide_contact_height, config.foot_joints, wrt)
    if name == "dyn_stability":
        return dynamic_stability_loss(seq, masses, plane, config.sigma_gm, config, wrt)
    if name in CYCLE_TERMS:
        if reference is None:
            raise ValueError(f"loss {name!r} needs a reference sequence")
        if name == "rotation_cycle":
            lv = rotation_cycle_loss(seq, reference, grad=wrt is not None)
            cot = _Cotangents(rotations=lv.gradient, shapes=_shapes(seq))
        else:
            lv = position_cycle_loss(seq, reference, config.smooth_l1_delta, grad=wrt is not None)
            cot = _Cotangents(root=lv.gradient, shapes=_shapes(seq))
        return _finish(lv.value, cot if wrt is not None else None, wrt)
    if name == "total":
        parts = {k: evaluate(k, seq, wrt, reference, masses, plane, config)
                 for k in PHYSICS_TERMS + ("dyn_stability",)}
        if reference is not None:
            parts.update({k: evaluate(k, seq, wrt, reference, masses, plane, config) for k in CYCLE_TERMS})
        return total_loss(parts, weights)
    raise ValueError(f"unknown loss {name!r}; choose from {LOSS_NAMES}")


def gradient(name: str, seq: MotionSequence, wrt: str = "vertex_positions", **kwargs) -> np.ndarray:
    return evaluate(name, seq, wrt=wrt, **kwargs).gradient
