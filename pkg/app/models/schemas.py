from __future__ import annotations

from enum import Enum
from typing import Optional, Union

import numpy as np
from pydantic import BaseModel, Field, field_validator, model_validator


def _readonly(values) -> np.ndarray:
    arr = np.array(values, dtype=np.float64)
    arr.setflags(write=False)
    return arr


class Verdict(str, Enum):
    U_WINS = "U_WINS"
    V_WINS = "V_WINS"
    COEXIST = "COEXIST"
    UNDECIDED = "UNDECIDED"


class ICFamily(str, Enum):
    GAUSSIAN_BUMP = "GAUSSIAN_BUMP"
    STEP = "STEP"
    CONSTANT = "CONSTANT"
    TWO_BUMPS = "TWO_BUMPS"
    CUSTOM_TABLE = "CUSTOM_TABLE"


class OracleScheme(str, Enum):
    EULER_FINE = "EULER_FINE"
    RK4_INDEPENDENT = "RK4_INDEPENDENT"


# --------------- Model definition ---------------

class Grid(BaseModel):
    """Cell-centred mesh over [0, length] with n_cells cells."""

    model_config = {"frozen": True}

    length: float = 1.0
    n_cells: int = 300

    @property
    def dx(self) -> float:
        return self.length / self.n_cells

    @property
    def cell_centers(self) -> np.ndarray:
        return _readonly((np.arange(self.n_cells) + 0.5) * self.dx)


class DispersalSpec(BaseModel):
    """Mixed dispersal d·[(1-k)·linear + k·fast] with exponent p and regularization ε."""

    model_config = {"frozen": True}

    d: float
    k: float = 0.0
    p: float = 2.0
    epsilon: float = 1e-4

    @property
    def is_linear(self) -> bool:
        return self.k == 0.0 or self.p == 2.0


class ModelConfig(BaseModel):
    model_config = {"frozen": True}

    grid: Grid = Field(default_factory=Grid)
    disp_u: DispersalSpec
    disp_v: DispersalSpec
    drift_q: float = 0.5
    resource_m: Union[float, list[float]]
    drift_enabled: bool = True
    # Off only for conservation audits
    reaction_enabled: bool = True

    @property
    def effective_drift(self) -> float:
        return self.drift_q if self.drift_enabled else 0.0

    @property
    def resource(self) -> np.ndarray:
        """Per-cell resource, scalar m broadcast over the grid."""
        m = np.asarray(self.resource_m, dtype=np.float64)
        if m.ndim == 0:
            m = np.full(self.grid.n_cells, float(m))
        m.setflags(write=False)
        return m

    @property
    def m_sup(self) -> float:
        return float(np.max(np.abs(np.asarray(self.resource_m, dtype=np.float64))))


class State(BaseModel):
    """Nonnegative pair (u, v) on the grid at time t. Arrays are read-only."""

    model_config = {"frozen": True, "arbitrary_types_allowed": True}

    t: float = 0.0
    u: np.ndarray
    v: np.ndarray

    @field_validator("u", "v", mode="before")
    @classmethod
    def _as_array(cls, value):
        return _readonly(value)

    @model_validator(mode="after")
    def _check_fields(self) -> "State":
        if self.u.ndim != 1 or self.u.shape != self.v.shape:
            raise ValueError("u and v must be 1-D arrays of equal length")
        if self.t < 0:
            raise ValueError("t must be nonnegative")
        if np.any(self.u < 0) or np.any(self.v < 0):
            raise ValueError("u and v must be nonnegative")
        return self

    @classmethod
    def trusted(cls, t: float, u: np.ndarray, v: np.ndarray) -> "State":
        """Build without validation; for the integrator's hot loop."""
        return cls.model_construct(t=float(t), u=_readonly(u), v=_readonly(v))

    @property
    def n_cells(self) -> int:
        return int(self.u.shape[0])

    def stacked(self) -> np.ndarray:
        return np.vstack((self.u, self.v))


class FaceFluxes(BaseModel):
    """Total rightward flux (advective minus diffusive) at the n_cells+1 faces."""

    model_config = {"frozen": True, "arbitrary_types_allowed": True}

    flux_u: np.ndarray
    flux_v: np.ndarray

    @field_validator("flux_u", "flux_v", mode="before")
    @classmethod
    def _as_array(cls, value):
        return _readonly(value)


# --------------- Time stepping ---------------

class StepControl(BaseModel):
    model_config = {"frozen": True}

    cfl_safety: float = 0.4
    dt_max: float = 0.01
    dt_min: float = 1e-12
    t_end: float = 10.0
    nonneg_clip_tolerance: float = 1e-12
    # Fixed-dt mode bypasses stable_dt (order studies, oracles)
    fixed_dt: Optional[float] = None
    observe_every: int = 200


class StepBudget(BaseModel):
    """Mass flows of one accepted step, integrated with the stepper's own weights."""

    model_config = {"frozen": True}

    dt: float
    reaction_u: float = 0.0
    reaction_v: float = 0.0
    outflow_u: float = 0.0
    outflow_v: float = 0.0
    clipped_u: float = 0.0
    clipped_v: float = 0.0


# --------------- Diagnostics ---------------

class OutcomeThresholds(BaseModel):
    model_config = {"frozen": True}

    exclusion: float = 1e-3
    survival: float = 1e-1


class Outcome(BaseModel):
    verdict: Verdict
    t_final: float
    u_sup: float
    v_sup: float
    v_l2: float
    extinction_time: Optional[float] = None
    u_grad_sup: Optional[float] = None
    exclusion_threshold: float
    survival_threshold: float
    settled: bool = True


class NormReport(BaseModel):
    t: float
    u_l1: float
    u_l2: float
    u_sup: float
    v_l1: float
    v_l2: float
    v_sup: float
    v_lq: dict[float, float] = {}


class BoundCheckConfig(BaseModel):
    lebesgue_q: float = Field(2.0, ge=1.0)
    ode_c1: float
    ode_c2: float
    ode_c3: float = Field(gt=0.0)
    alpha: float = Field(0.875, gt=0.0, lt=1.0)


class BoundViolation(BaseModel):
    t: float
    measured: float
    envelope: float


class BoundCheckReport(BaseModel):
    times: list[float]
    envelope: list[float]
    violations: list[BoundViolation] = []
    tolerance: float

    @property
    def passed(self) -> bool:
        return not self.violations


class FteCheckReport(BaseModel):
    n_samples: int
    satisfied_fraction: float
    violated_times: list[float] = []


# --------------- Scenarios ---------------

class InitialConditionSpec(BaseModel):
    """One IC family and its parameters.

    GAUSSIAN_BUMP uses (center, width, amplitude); TWO_BUMPS adds
    (center2, width2, amplitude2); STEP is amplitude left of center and
    amplitude2 right of it; CONSTANT uses amplitude; CUSTOM_TABLE uses table.
    """

    model_config = {"frozen": True}

    family: ICFamily = ICFamily.GAUSSIAN_BUMP
    center: float = 0.5
    width: float = 0.1
    amplitude: float = 0.5
    center2: float = 0.5
    width2: float = 0.1
    amplitude2: float = 0.0
    table: Optional[list[float]] = None


class Preset(BaseModel):
    model_config = {"frozen": True}

    name: str
    cfg: ModelConfig
    ic_u: InitialConditionSpec
    ic_v: InitialConditionSpec
    t_end: float
    expected_verdict: Verdict
    snapshot_times: list[float] = []
    description: str = ""


class ConfigBundle(BaseModel):
    """Everything one run needs, as produced by load_config."""

    model_config = {"frozen": True}

    model: ModelConfig
    ic_u: InitialConditionSpec
    ic_v: InitialConditionSpec
    step: StepControl
    thresholds: OutcomeThresholds
    snapshots: list[float] = []
    preset: Optional[str] = None


class OracleRun(BaseModel):
    model_config = {"arbitrary_types_allowed": True}

    scheme: OracleScheme
    dt_fixed: float
    trajectory: list[tuple[float, np.ndarray, np.ndarray]] = []

    @property
    def final(self) -> tuple[float, np.ndarray, np.ndarray]:
        return self.trajectory[-1]


# --------------- Runs ---------------

class EmittedFile(BaseModel):
    path: str
    role: str


class RunManifest(BaseModel):
    scenario_id: str
    config: dict
    output_dir: str
    files: list[EmittedFile] = []
    steps: int = 0
    wall_clock_seconds: float = 0.0
    verdict: Optional[Verdict] = None


class SweepRow(BaseModel):
    axis_key: str
    axis_value: str
    verdict: Optional[Verdict] = None
    t_final: Optional[float] = None
    u_sup: Optional[float] = None
    v_sup: Optional[float] = None
    v_l2: Optional[float] = None
    extinction_time: Optional[float] = None
    error: Optional[str] = None


class VerificationCheck(BaseModel):
    name: str
    passed: bool
    detail: str = ""


class VerificationReport(BaseModel):
    scenario_id: str
    checks: list[VerificationCheck] = []

    @property
    def passed(self) -> bool:
        return all(c.passed for c in self.checks)

    @property
    def failed(self) -> list[VerificationCheck]:
        return [c for c in self.checks if not c.passed]
