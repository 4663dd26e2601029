"""Physical plausibility and dynamic stability metrics, in cm and percent."""
from __future__ import annotations

import numpy as np

from . import kernels
from .config import AnalysisConfig
from .core import METRIC_FIELDS, GroundPlane, MetricsReport, MotionSequence
from .dynamics import DynamicsTrace, analyze_sequence
from .geometry import MassDistribution, hull_edge_distance
from .losses import foot_contact_pairs

COLUMN_HEADERS = ("Penetrate (cm) ↓", "Float (cm) ↓", "Skate (%) ↓", "Dyn. Stability (%) ↑", "BoS Dist (cm) ↓")


def _hmin(seq: MotionSequence, plane: GroundPlane) -> np.ndarray:
    return kernels.lowest_heights(seq.vertices, plane.origin, plane.normal)[0]


def penetrate_metric(seq: MotionSequence, plane: GroundPlane | None = None) -> float:
    plane = plane or GroundPlane()
    return float(np.maximum(0.0, -_hmin(seq, plane)).mean() * 100.0)


def float_metric(seq: MotionSequence, plane: GroundPlane | None = None) -> float:
    plane = plane or GroundPlane()
    return float(np.maximum(0.0, _hmin(seq, plane)).mean() * 100.0)


def skate_flags(seq: MotionSequence, plane: GroundPlane | None = None, contact_height: float = 0.05,
                velocity_eps: float = 0.10, foot_joints=None) -> tuple[np.ndarray, np.ndarray]:
    """Per adjacent-frame-pair masks (considered, sliding)."""
    plane = plane or GroundPlane()
    foot_joints = AnalysisConfig().foot_joints if foot_joints is None else foot_joints
    d, contact = foot_contact_pairs(seq, plane, contact_height, foot_joints)
    speed = np.linalg.norm(d, axis=-1) * seq.fps
    considered = contact.any(axis=1)
    count = contact.sum(axis=1)
    mean_speed = np.where(considered, (speed * contact).sum(axis=1) / np.maximum(count, 1), 0.0)
    return considered, considered & (mean_speed > velocity_eps)


def skate_metric(seq: MotionSequence, plane: GroundPlane | None = None, contact_height: float = 0.05,
                 velocity_eps: float = 0.10, foot_joints=None) -> float:
    considered, sliding = skate_flags(seq, plane, contact_height, velocity_eps, foot_joints)
    if not considered.any():
        return 0.0
    return float(100.0 * sliding.sum() / considered.sum())


def stability_classification(trace: DynamicsTrace, plane: GroundPlane | None = None) -> tuple:
    """Evaluated frame mask, ZMP-inside mask and per-frame ZMP-to-hull distances (m)."""
    plane = plane or GroundPlane()
    nonempty = np.array([not h.empty for h in trace.supports], dtype=bool)
    evaluated = trace.stability_frames & nonempty
    z2 = plane.to_2d(np.where(evaluated[:, None], trace.zmp, 0.0))
    dist = np.full(trace.num_frames, np.nan)
    for t in np.flatnonzero(evaluated):
        dist[t] = hull_edge_distance(trace.supports[t], z2[t])
    inside = evaluated & (dist == 0.0)
    return evaluated, inside, dist


def dyn_stability_metric(seq: MotionSequence, masses: MassDistribution | None = None,
                         plane: GroundPlane | None = None, config: AnalysisConfig | None = None,
                         trace: DynamicsTrace | None = None) -> float:
    """Percentage of evaluated frames whose ZMP lies inside or on the base of support."""
    trace = trace or analyze_sequence(seq, masses, plane, config)
    evaluated, inside, _ = stability_classification(trace, plane)
    if not evaluated.any():
        return 0.0
    return float(100.0 * inside.sum() / evaluated.sum())


def bos_dist_metric(seq: MotionSequence, masses: MassDistribution | None = None,
                    plane: GroundPlane | None = None, config: AnalysisConfig | None = None,
                    trace: DynamicsTrace | None = None) -> float:
    """Mean distance (cm) from the ZMP to the hull edge over unstable evaluated frames."""
    trace = trace or analyze_sequence(seq, masses, plane, config)
    evaluated, inside, dist = stability_classification(trace, plane)
    unstable = evaluated & ~inside
    if not unstable.any():
        return 0.0
    return float(dist[unstable].mean() * 100.0)


def analyze_metrics(seq: MotionSequence, masses: MassDistribution | None = None,
                    plane: GroundPlane | None = None, config: AnalysisConfig | None = None,
                    name: str = "", per_frame: bool = False) -> MetricsReport:
    """All five metrics from a single dynamics pass."""
    config = config or AnalysisConfig()
    plane = plane or GroundPlane()
    trace = analyze_sequence(seq, masses, plane, config)
    hmin = trace.lowest_height
    considered, sliding = skate_flags(seq, plane, config.skate_contact_height, config.velocity_eps,
                                      config.foot_joints)
    evaluated, inside, dist = stability_classification(trace, plane)
    unstable = evaluated & ~inside
    flags = []
    if not considered.any():
        flags.append("no contact")
    if not evaluated.any():
        flags.append("no supported frames")
    frames = None
    if per_frame:
        frames = {"lowest_height_m": hmin, "skate_considered": considered, "skate_sliding": sliding,
                  "stability_evaluated": evaluated, "zmp_inside": inside, "bos_dist_m": dist,
                  "zmp": trace.zmp, "cop": trace.cop, "com": trace.com}
    return MetricsReport(
        penetrate_cm=float(np.maximum(0.0, -hmin).mean() * 100.0),
        float_cm=float(np.maximum(0.0, hmin).mean() * 100.0),
        skate_pct=float(100.0 * sliding.sum() / considered.sum()) if considered.any() else 0.0,
        dyn_stability_pct=float(100.0 * inside.sum() / evaluated.sum()) if evaluated.any() else 0.0,
        bos_dist_cm=float(dist[unstable].mean() * 100.0) if unstable.any() else 0.0,
        name=name, per_frame=frames, flags=tuple(flags),
    )


def aggregate(reports, name: str = "corpus") -> MetricsReport:
    """Unweighted columnwise mean over per-sequence reports."""
    reports = list(reports)
    if not reports:
        raise ValueError("cannot aggregate an empty corpus")
    vals = np.array([r.values() for r in reports])
    return MetricsReport(**dict(zip(METRIC_FIELDS, vals.mean(axis=0).tolist())), name=name)


def report(sequences, masses=None, plane: GroundPlane | None = None, config: AnalysisConfig | None = None,
           names=None) -> tuple[MetricsReport, list[MetricsReport]]:
    """Corpus-level report plus the per-sequence breakdown."""
    sequences = list(sequences)
    names = names or [f"seq{i}" for i in range(len(sequences))]
    per = [analyze_metrics(s, None if masses is None else masses[i], plane, config, name=names[i])
           for i, s in enumerate(sequences)]
    return aggregate(per), per


def format_value(x: float) -> str:
    """Two decimals with trailing zeros dropped (71.90 -> 71.9)."""
    s = f"{x:.2f}".rstrip("0").rstrip(".")
    return "0" if s in ("", "-0") else s


def render_table(reports, fmt: str = "table") -> str:
    """Render reports in the five-column order; ``fmt`` is "table" or "latex"."""
    reports = list(reports)
    if fmt == "latex":
        lines = [" & ".join(("Method",) + COLUMN_HEADERS) + r" \\"]
        for r in reports:
            lines.append(" & ".join([r.name] + [format_value(v) for v in r.values()]) + r" \\")
        return "\n".join(lines)
    rows = [("Method",) + COLUMN_HEADERS] + [(r.name,) + tuple(format_value(v) for v in r.values()) for r in reports]
    widths = [max(len(row[i]) for row in rows) for i in range(len(rows[0]))]
    out = []
    for k, row in enumerate(rows):
        out.append(" | ".join(cell.ljust(widths[i]) if i == 0 else cell.rjust(widths[i]) for i, cell in enumerate(row)))
        if k == 0:
            out.append("-+-".join("-" * w for w in widths))
    return "\n".join(out)
