"""Semantic validation of model configurations.

Pydantic handles types; the range rules here collect every violation so a
config file with three mistakes reports three errors.
"""

from __future__ import annotations

import math
from typing import Optional

import numpy as np

from app.models.errors import ConfigError, Violation
from app.models.schemas import DispersalSpec, ModelConfig, StepControl

MIN_CELLS = 4


def _dispersal_violations(spec: DispersalSpec, prefix: str) -> list[Violation]:
    found = []
    if not (1.0 < spec.p <= 2.0):
        found.append(Violation(
            code="P_OUT_OF_RANGE", field=f"{prefix}.p",
            message=f"p={spec.p} outside (1, 2]",
        ))
    if not (0.0 <= spec.k <= 1.0):
        found.append(Violation(
            code="K_OUT_OF_RANGE", field=f"{prefix}.k",
            message=f"k={spec.k} outside [0, 1]",
        ))
    for name in ("d", "epsilon"):
        value = getattr(spec, name)
        if not value >= 0.0:
            found.append(Violation(
                code="NEGATIVE_COEFFICIENT", field=f"{prefix}.{name}",
                message=f"{name}={value} must be >= 0",
            ))
    return found


def collect_violations(cfg: ModelConfig) -> list[Violation]:
    """Every invariant violation of cfg, in a stable order. Empty means valid."""
    found: list[Violation] = []

    grid = cfg.grid
    if not (grid.length > 0 and math.isfinite(grid.length)):
        found.append(Violation(
            code="NEGATIVE_COEFFICIENT", field="grid.length",
            message=f"length={grid.length} must be positive",
        ))
    if grid.n_cells < MIN_CELLS:
        found.append(Violation(
            code="GRID_TOO_SMALL", field="grid.n_cells",
            message=f"n_cells={grid.n_cells} < {MIN_CELLS}",
        ))

    found += _dispersal_violations(cfg.disp_u, "disp_u")
    found += _dispersal_violations(cfg.disp_v, "disp_v")

    if not cfg.drift_q >= 0.0:
        found.append(Violation(
            code="NEGATIVE_COEFFICIENT", field="drift_q",
            message=f"drift_q={cfg.drift_q} must be >= 0",
        ))

    m = np.asarray(cfg.resource_m, dtype=np.float64)
    if m.ndim == 1 and m.shape[0] != grid.n_cells:
        found.append(Violation(
            code="RESOURCE_SHAPE", field="resource_m",
            message=f"per-cell m has {m.shape[0]} entries, grid has {grid.n_cells}",
        ))
    elif m.ndim > 1:
        found.append(Violation(
            code="RESOURCE_SHAPE", field="resource_m", message="m must be scalar or 1-D",
        ))
    if not np.all(np.isfinite(m)):
        found.append(Violation(
            code="NONFINITE_RESOURCE", field="resource_m", message="m must be finite",
        ))
    return found


def validate_config(cfg: ModelConfig) -> ModelConfig:
    """Return cfg unchanged if valid, else raise ConfigError listing all violations."""
    violations = collect_violations(cfg)
    if violations:
        raise ConfigError(violations)
    return cfg


def step_control_violations(ctl: StepControl) -> list[Violation]:
    found = []
    if not (0.0 < ctl.cfl_safety <= 1.0):
        found.append(Violation(
            code="STEP_CONTROL", field="cfl_safety",
            message=f"cfl_safety={ctl.cfl_safety} outside (0, 1]",
        ))
    if not (0.0 < ctl.dt_min <= ctl.dt_max):
        found.append(Violation(
            code="STEP_CONTROL", field="dt_min",
            message=f"need 0 < dt_min <= dt_max (got {ctl.dt_min}, {ctl.dt_max})",
        ))
    if not (ctl.t_end >= 0 and math.isfinite(ctl.t_end)):
        found.append(Violation(
            code="STEP_CONTROL", field="t_end", message=f"t_end={ctl.t_end} must be finite and >= 0",
        ))
    if not ctl.nonneg_clip_tolerance >= 0:
        found.append(Violation(
            code="STEP_CONTROL", field="nonneg_clip_tolerance", message="must be >= 0",
        ))
    if ctl.fixed_dt is not None and not (ctl.fixed_dt > 0 and math.isfinite(ctl.fixed_dt)):
        found.append(Violation(
            code="STEP_CONTROL", field="fixed_dt", message="fixed_dt must be positive and finite",
        ))
    if ctl.observe_every < 1:
        found.append(Violation(
            code="STEP_CONTROL", field="observe_every", message="must be >= 1",
        ))
    return found


def threshold_violations(exclusion: Optional[float], survival: Optional[float]) -> list[Violation]:
    """Explicit outcome thresholds must be finite and positive; None means the default."""
    found = []
    for name, value in (("exclusion_threshold", exclusion), ("survival_threshold", survival)):
        if value is not None and not (value > 0 and math.isfinite(value)):
            found.append(Violation(
                code="INVALID_VALUE", field=name,
                message=f"{name}={value} must be finite and > 0",
            ))
    return found
