"""Initial-condition families and the figure presets.

The published figures show their initial data only as images, so every
preset IC here is a reconstruction: u a Gaussian bump biased upstream, v a
Gaussian bump biased downstream, both below m = 1 (also a reconstruction).
The expected verdict, not the pointwise profile, is what a preset promises.
"""

from __future__ import annotations

import logging
from typing import NamedTuple, Optional, Sequence

import numpy as np

from app.config import settings
from app.models.errors import ICShapeMismatchError, NonpositiveICError, NotFoundError
from app.models.schemas import (
    DispersalSpec,
    Grid,
    ICFamily,
    InitialConditionSpec,
    ModelConfig,
    Outcome,
    OutcomeThresholds,
    Preset,
    State,
    StepControl,
    Verdict,
)
from app.services.diagnostics import (
    classify_outcome,
    default_thresholds,
    steady_sample,
    steady_state_detector,
)
from app.services.integrator import integrate
from app.services.validation import validate_config

logger = logging.getLogger(__name__)


# --------------- Initial conditions ---------------

def _gaussian(x: np.ndarray, center: float, width: float, amplitude: float) -> np.ndarray:
    if not width > 0:
        raise NonpositiveICError(f"Gaussian width must be positive, got {width}")
    return amplitude * np.exp(-((x - center) ** 2) / (2.0 * width * width))


def realize_ic(spec: InitialConditionSpec, grid: Grid) -> np.ndarray:
    """Sample spec at the cell centres of grid."""
    x = grid.cell_centers
    family = spec.family

    if family is ICFamily.GAUSSIAN_BUMP:
        field = _gaussian(x, spec.center, spec.width, spec.amplitude)
    elif family is ICFamily.TWO_BUMPS:
        field = (
            _gaussian(x, spec.center, spec.width, spec.amplitude)
            + _gaussian(x, spec.center2, spec.width2, spec.amplitude2)
        )
    elif family is ICFamily.STEP:
        field = np.where(x < spec.center, spec.amplitude, spec.amplitude2)
    elif family is ICFamily.CONSTANT:
        field = np.full(grid.n_cells, spec.amplitude)
    elif family is ICFamily.CUSTOM_TABLE:
        table = spec.table or []
        if len(table) != grid.n_cells:
            raise ICShapeMismatchError(
                f"IC table has {len(table)} entries, grid has {grid.n_cells} cells"
            )
        field = np.array(table, dtype=np.float64)
    else:
        raise NonpositiveICError(f"unknown IC family {family}")

    field = np.asarray(field, dtype=np.float64)
    if not np.all(np.isfinite(field)) or np.any(field < 0):
        raise NonpositiveICError(f"{family.value} IC has negative or non-finite values")
    if family is not ICFamily.CONSTANT and not np.any(field > 0):
        raise NonpositiveICError(f"{family.value} IC is identically zero")
    return field


def initial_state(cfg: ModelConfig, ic_u: InitialConditionSpec, ic_v: InitialConditionSpec) -> State:
    return State(t=0.0, u=realize_ic(ic_u, cfg.grid), v=realize_ic(ic_v, cfg.grid))


# --------------- Presets ---------------

UPSTREAM_BUMP = InitialConditionSpec(center=0.25, width=0.08, amplitude=0.5)
DOWNSTREAM_BUMP = InitialConditionSpec(center=0.75, width=0.08, amplitude=0.5)


def _cfg(
    d1: float, d2: float,
    k_u: float = 0.0, p_u: float = 2.0,
    k_v: float = 1.0, p_v: float = 2.0,
) -> ModelConfig:
    return ModelConfig(
        grid=Grid(length=1.0, n_cells=300),
        disp_u=DispersalSpec(d=d1, k=k_u, p=p_u, epsilon=1e-4),
        disp_v=DispersalSpec(d=d2, k=k_v, p=p_v, epsilon=1e-4),
        drift_q=0.5,
        resource_m=1.0,
    )


def _build_registry() -> dict[str, Preset]:
    presets = [
        Preset(
            name="FIG4_P2",
            cfg=_cfg(0.2, 0.3, p_v=2.0),
            ic_u=UPSTREAM_BUMP, ic_v=DOWNSTREAM_BUMP,
            t_end=90.0, expected_verdict=Verdict.V_WINS,
            snapshot_times=[0.0, 10.0, 90.0],
            description="Classical linear dispersal on both species: the faster disperser v wins.",
        ),
        Preset(
            name="FIG4_P74",
            cfg=_cfg(0.2, 0.3, p_v=1.75),
            ic_u=UPSTREAM_BUMP, ic_v=DOWNSTREAM_BUMP,
            t_end=10.0, expected_verdict=Verdict.U_WINS,
            snapshot_times=[0.0, 1.0, 10.0],
            description="v disperses by the p-Laplacian with p = 7/4 and dies out; the slow disperser u wins.",
        ),
        Preset(
            name="FIG4_P75",
            cfg=_cfg(0.2, 0.3, p_v=1.4),
            ic_u=UPSTREAM_BUMP, ic_v=DOWNSTREAM_BUMP,
            t_end=20.0, expected_verdict=Verdict.U_WINS,
            snapshot_times=[0.0, 10.0, 20.0],
            description="p = 7/5 for v: the slow disperser u wins again.",
        ),
        Preset(
            name="FIG5_K34",
            cfg=_cfg(0.2, 0.3, k_v=0.75, p_v=1.75),
            ic_u=UPSTREAM_BUMP, ic_v=DOWNSTREAM_BUMP,
            t_end=10.0, expected_verdict=Verdict.U_WINS,
            snapshot_times=[0.0, 1.0, 10.0],
            description="Three quarters of v disperse with p = 7/4, the rest linearly; u still wins.",
        ),
        Preset(
            name="FIG6_BOTH_P74",
            # Diffusion rates are not given for this figure; d1 = 0.2, d2 = 0.3 carried over
            cfg=_cfg(0.2, 0.3, k_u=1.0, p_u=1.75, k_v=1.0, p_v=1.75),
            ic_u=UPSTREAM_BUMP.model_copy(update={"amplitude": 0.3}),
            ic_v=DOWNSTREAM_BUMP,
            t_end=40.0, expected_verdict=Verdict.U_WINS,
            snapshot_times=[0.0, 4.2, 40.0],
            description="Both species use p = 7/4; the slow disperser wins from a smaller start.",
        ),
        Preset(
            name="FIG7_U14_V175",
            cfg=_cfg(0.3, 0.3, k_u=1.0, p_u=1.4, k_v=1.0, p_v=1.75),
            ic_u=UPSTREAM_BUMP, ic_v=DOWNSTREAM_BUMP,
            t_end=30.0, expected_verdict=Verdict.U_WINS,
            snapshot_times=[0.0, 10.0, 30.0],
            description="Equal rates, p_u = 7/5 < p_v = 7/4: the smaller exponent wins.",
        ),
        Preset(
            name="FIG7_U175_V14",
            cfg=_cfg(0.3, 0.3, k_u=1.0, p_u=1.75, k_v=1.0, p_v=1.4),
            ic_u=UPSTREAM_BUMP, ic_v=DOWNSTREAM_BUMP,
            t_end=20.0, expected_verdict=Verdict.U_WINS,
            snapshot_times=[0.0, 2.0, 20.0],
            description="Equal rates, p_u = 7/4 > p_v = 7/5: the larger exponent wins.",
        ),
    ]
    registry = {}
    for preset in presets:
        if preset.name in registry:
            raise ValueError(f"duplicate preset {preset.name}")
        validate_config(preset.cfg)
        registry[preset.name] = preset
    return registry


_REGISTRY = _build_registry()


def preset_registry() -> list[Preset]:
    return list(_REGISTRY.values())


def get_preset(name: str) -> Preset:
    try:
        return _REGISTRY[name]
    except KeyError:
        raise NotFoundError(f"no preset named {name!r}; known: {', '.join(_REGISTRY)}") from None


# --------------- Witness search ---------------

class Witness(NamedTuple):
    ic_u: InitialConditionSpec
    ic_v: InitialConditionSpec
    outcome: Outcome


def search_witness_ic(
    preset: Preset,
    amplitudes: Sequence[float],
    offsets: Sequence[float],
    ctl: Optional[StepControl] = None,
    thresholds: Optional[OutcomeThresholds] = None,
) -> Optional[Witness]:
    """First IC in (amplitude, offset) grid order that realises the preset's verdict.

    amplitude replaces u's bump amplitude; offset moves u's bump centre
    (negative is further upstream). v keeps the preset IC.
    """
    cfg = preset.cfg
    ctl = ctl or StepControl(
        cfl_safety=settings.cfl_safety, dt_max=settings.dt_max, dt_min=settings.dt_min,
        nonneg_clip_tolerance=settings.nonneg_clip_tolerance, t_end=preset.t_end,
        observe_every=settings.observe_every,
    )
    thresholds = thresholds or default_thresholds(
        cfg.m_sup, settings.exclusion_factor, settings.survival_factor
    )

    for amplitude in amplitudes:
        for offset in offsets:
            ic_u = preset.ic_u.model_copy(update={
                "amplitude": amplitude, "center": preset.ic_u.center + offset,
            })
            final = integrate(initial_state(cfg, ic_u, preset.ic_v), cfg, ctl)
            settled = steady_state_detector([steady_sample(final, cfg)], settings.steady_tol)
            outcome = classify_outcome(final, cfg.grid, thresholds, settled=settled)
            logger.info(
                "Witness search %s: amplitude=%g offset=%g -> %s",
                preset.name, amplitude, offset, outcome.verdict.value,
            )
            if outcome.verdict is preset.expected_verdict:
                return Witness(ic_u=ic_u, ic_v=preset.ic_v, outcome=outcome)
    return None
