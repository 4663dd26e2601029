"""Central finite-difference verification of the analytic loss gradients.

Random trials are rejection-sampled so that no quantity sits within
``KINK_MARGIN`` of a branch point (argmin ties, contact thresholds, the
pressure-field switch at h = 0, the support gate, arccos at 0).
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .config import AnalysisConfig
from .core import FOOT_JOINTS, NUM_JOINTS, GroundPlane, LossWeights, MotionSequence
from .dynamics import analyze_sequence, sequence_masses
from .geometry import MassDistribution
from .losses import LOSS_NAMES, evaluate
from .rotations import axis_angle_to_matrix, matrix_to_sixd, random_rotation, sixd_to_matrix
from .synth import box_body

FD_STEP = 1e-5
TOLERANCE = 1e-4
KINK_MARGIN = 1e-3

TARGETS = {
    "penetrate": ("vertex_positions", "root_translation"),
    "float": ("vertex_positions", "root_translation"),
    "slide": ("joint_positions", "root_translation"),
    "dyn_stability": ("vertex_positions", "root_translation"),
    "rotation_cycle": ("joint_rotations_6d",),
    "position_cycle": ("root_translation",),
    "total": ("vertex_positions", "joint_positions", "joint_rotations_6d", "root_translation"),
}


@dataclass(frozen=True)
class Trial:
    seq: MotionSequence
    masses: MassDistribution
    reference: MotionSequence


@dataclass(frozen=True)
class GradCheckResult:
    loss: str
    trials: int
    max_relative_error: float
    tolerance: float = TOLERANCE

    @property
    def passed(self) -> bool:
        return self.max_relative_error < self.tolerance


def relative_error(analytic: np.ndarray, numeric: np.ndarray) -> float:
    """max |g - g_fd| scaled by the largest finite-difference entry."""
    scale = max(float(np.abs(numeric).max(initial=0.0)), 1e-12)
    return float(np.abs(analytic - numeric).max(initial=0.0) / scale)


def _field(wrt: str) -> str:
    return {"vertex_positions": "vertices", "joint_positions": "joints",
            "joint_rotations_6d": "rotations_6d", "root_translation": "root_translation"}[wrt]


def perturbed(seq: MotionSequence, wrt: str, index: tuple, delta: float) -> MotionSequence:
    """Copy of ``seq`` with one input coordinate moved by ``delta``.

    For ``root_translation`` the whole frame moves rigidly: vertices, joints
    and the root translation itself.
    """
    if wrt == "root_translation":
        t, k = index
        v, j, r = seq.vertices.copy(), seq.joints.copy(), seq.root_translation.copy()
        v[t, :, k] += delta
        j[t, :, k] += delta
        r[t, k] += delta
        return seq.replace(vertices=v, joints=j, root_translation=r)
    name = _field(wrt)
    arr = getattr(seq, name).copy()
    arr[index] += delta
    return seq.replace(**{name: arr})


def finite_difference(fn, seq: MotionSequence, wrt: str, step: float = FD_STEP) -> np.ndarray:
    shape = (seq.num_frames, 3) if wrt == "root_translation" else getattr(seq, _field(wrt)).shape
    out = np.zeros(shape)
    for index in np.ndindex(*shape):
        out[index] = (fn(perturbed(seq, wrt, index, step)) - fn(perturbed(seq, wrt, index, -step))) / (2.0 * step)
    return out


# -- kink-free random trials ---------------------------------------------------

def _clear_of(values, kinks, margin: float = KINK_MARGIN) -> bool:
    v = np.asarray(values, dtype=float).ravel()
    return all(np.abs(v - k).min(initial=np.inf) > margin for k in kinks)


def _unique_min(h: np.ndarray, margin: float = KINK_MARGIN) -> bool:
    s = np.sort(h, axis=-1)
    return bool((s[..., 1] - s[..., 0] > margin).all())


def _random_sequence(rng: np.random.Generator, T: int, body, config: AnalysisConfig) -> tuple:
    """A jittered box drifting over the ground and a reference with rotated joints and shifted root."""
    rest = body.vertices
    base_h = rng.uniform(-0.08, 0.12)
    centers = np.cumsum(rng.normal(0.0, 0.04, (T, 3)), axis=0)
    centers[:, 2] = base_h + rng.normal(0.0, 0.02, T) - rest[:, 2].min()
    verts = rest[None] + centers[:, None, :] + rng.normal(0.0, 0.01, (T,) + rest.shape)
    joints = centers[:, None, :] + rng.normal(0.0, 0.2, (T, NUM_JOINTS, 3))
    feet = list(FOOT_JOINTS)
    joints[:, feet, 2] = rng.uniform(0.0, 0.1, (T, len(feet)))
    joints[:, feet, :2] = rng.normal(0.0, 0.1, (len(feet), 2)) + np.cumsum(rng.normal(0.0, 0.05, (T, len(feet), 2)), axis=0)
    R = random_rotation(rng, (T, NUM_JOINTS))
    sixd = matrix_to_sixd(R) * rng.uniform(0.7, 1.3, (T, NUM_JOINTS, 1))
    sixd[..., 3:] += 0.2 * sixd[..., :3]
    root = centers.copy()
    seq = MotionSequence(fps=20.0, vertices=verts, joints=joints, rotations_6d=sixd, root_translation=root,
                         body=body)
    axes = rng.standard_normal((T, NUM_JOINTS, 3))
    angles = rng.uniform(0.2, 2.8, (T, NUM_JOINTS))
    delta = np.stack([axis_angle_to_matrix(a, t) for a, t in zip(axes.reshape(-1, 3), angles.ravel())])
    ref_R = sixd_to_matrix(sixd) @ delta.reshape(T, NUM_JOINTS, 3, 3)
    ref = seq.replace(rotations_6d=matrix_to_sixd(ref_R), root_translation=root + rng.uniform(-2.0, 2.0, (T, 3)))
    return seq, ref


def _kink_free(seq: MotionSequence, ref: MotionSequence, plane: GroundPlane, config: AnalysisConfig) -> bool:
    h = plane.height(seq.vertices)
    if not (_unique_min(h) and _clear_of(h, [0.0]) and _clear_of(h.min(axis=1), [config.support_gate_height])):
        return False
    fj = plane.height(seq.joints[:, list(config.foot_joints)])
    if not _clear_of(fj, [config.slide_contact_height]):
        return False
    d = seq.joints[1:, list(config.foot_joints)] - seq.joints[:-1, list(config.foot_joints)]
    d = d - (d @ plane.normal)[..., None] * plane.normal
    if np.linalg.norm(d, axis=-1).min() < KINK_MARGIN:
        return False
    diff = np.abs(seq.root_translation - ref.root_translation)
    if not _clear_of(diff, [0.0, config.smooth_l1_delta]):
        return False
    tr = analyze_sequence(seq, sequence_masses(seq, config), plane, config, supports=False)
    inner = slice(1, -1)
    Cp = tr.cop[inner] - ((tr.cop[inner] - plane.origin) @ plane.normal)[:, None] * plane.normal
    dist = np.linalg.norm(Cp - tr.zmp[inner], axis=1)
    ok = tr.zmp_defined[inner] & (tr.lowest_height[inner] <= config.support_gate_height)
    return bool(ok.any() and dist.min() > KINK_MARGIN)


def random_trial(rng: np.random.Generator, T: int = 5, config: AnalysisConfig | None = None,
                 plane: GroundPlane | None = None, max_attempts: int = 1000) -> Trial:
    config = config or AnalysisConfig()
    plane = plane or GroundPlane()
    body = box_body(0.3, divisions=(2, 2, 2))
    for _ in range(max_attempts):
        seq, ref = _random_sequence(rng, T, body, config)
        if _kink_free(seq, ref, plane, config):
            return Trial(seq=seq, masses=sequence_masses(seq, config), reference=ref)
    raise RuntimeError("could not draw a kink-free trial")


def check_loss(name: str, trials: int = 20, seed: int = 0, config: AnalysisConfig | None = None,
               weights: LossWeights | None = None, perturb: float = 0.0, step: float = FD_STEP) -> GradCheckResult:
    """Compare analytic and finite-difference gradients over ``trials`` random inputs.

    ``perturb`` scales the analytic gradient by (1 + perturb); it exists only
    as a negative control for the harness itself.
    """
    if name not in LOSS_NAMES:
        raise ValueError(f"unknown loss {name!r}; choose from {LOSS_NAMES}")
    if trials < 1:
        raise ValueError("trials must be at least 1")
    config = config or AnalysisConfig()
    plane = GroundPlane()
    rng = np.random.default_rng(seed)
    worst = 0.0
    for _ in range(trials):
        trial = random_trial(rng, config=config, plane=plane)
        kw = dict(reference=trial.reference, masses=trial.masses, plane=plane, config=config, weights=weights)

        def value(s):
            return evaluate(name, s, **kw).value

        for wrt in TARGETS[name]:
            g = evaluate(name, trial.seq, wrt=wrt, **kw).gradient * (1.0 + perturb)
            worst = max(worst, relative_error(g, finite_difference(value, trial.seq, wrt, step)))
    return GradCheckResult(loss=name, trials=trials, max_relative_error=worst)
