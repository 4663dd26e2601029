"""Physical plausibility and dynamic stability analysis of articulated body motion."""
from .config import AnalysisConfig, load_config
from .core import (BodyMesh, DegenerateGeometryError, GroundPlane, LossWeights, MetricsReport, MotionSequence,
                   SchemaError, SequenceTooShortError, ShapeError)
from .dynamics import ZMPUndefinedError, analyze_frame, analyze_sequence, sequence_masses
from .io import load_motion, save_motion
from .metrics import aggregate, analyze_metrics, render_table, report

__version__ = "0.1.0"

__all__ = [
    "AnalysisConfig", "BodyMesh", "DegenerateGeometryError", "GroundPlane", "LossWeights", "MetricsReport",
    "MotionSequence", "SchemaError", "SequenceTooShortError", "ShapeError", "ZMPUndefinedError", "aggregate",
    "analyze_frame", "analyze_metrics", "analyze_sequence", "load_config", "load_motion", "render_table",
    "report", "save_motion", "sequence_masses",
]
