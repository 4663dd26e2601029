"""Analysis configuration record and its text loader (JSON or YAML)."""
from __future__ import annotations

import json
from dataclasses import asdict, dataclass, fields, replace
from pathlib import Path

import yaml

from .core import FOOT_JOINTS


@dataclass(frozen=True)
class AnalysisConfig:
    # pressure field
    alpha: float = 100.0
    gamma: float = 10.0
    # mass model
    density: float = 985.0
    # base of support / gating
    contact_height: float = 0.02
    support_gate_height: float = 0.25
    eps_vertical_force: float = 1e-6
    # CoP point set: "vertices" or "surface" (area-weighted resampling)
    cop_points: str = "vertices"
    cop_samples: int = 20000
    cop_seed: int = 0
    # losses
    sigma_gm: float = 0.1
    smooth_l1_delta: float = 1.0
    slide_contact_height: float = 0.05
    # skate metric
    skate_contact_height: float = 0.05
    velocity_eps: float = 0.10
    foot_joints: tuple = FOOT_JOINTS

    def __post_init__(self):
        object.__setattr__(self, "foot_joints", tuple(int(j) for j in self.foot_joints))
        if self.cop_points not in ("vertices", "surface"):
            raise ValueError(f"cop_points must be 'vertices' or 'surface', got {self.cop_points!r}")
        if self.density <= 0:
            raise ValueError("density must be positive")

    def updated(self, **changes) -> "AnalysisConfig":
        changes = {k: v for k, v in changes.items() if v is not None}
        return replace(self, **changes)

    def to_dict(self) -> dict:
        d = asdict(self)
        d["foot_joints"] = list(self.foot_joints)
        return d


def load_config(path: str | Path | None) -> AnalysisConfig:
    if path is None:
        return AnalysisConfig()
    text = Path(path).read_text()
    if str(path).endswith((".yaml", ".yml")):
        data = yaml.safe_load(text) or {}
    else:
        data = json.loads(text)
    known = {f.name for f in fields(AnalysisConfig)}
    unknown = sorted(set(data) - known)
    if unknown:
        raise ValueError(f"unknown config key '{unknown[0]}'")
    return AnalysisConfig(**data)
