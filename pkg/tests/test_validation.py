"""Tests for model types and configuration validation."""

import numpy as np
import pytest
from pydantic import ValidationError

from app.models.errors import ConfigError
from app.models.schemas import DispersalSpec, Grid, ModelConfig, State, StepControl
from app.services.validation import (
    collect_violations,
    step_control_violations,
    threshold_violations,
    validate_config,
)
from tests.conftest import make_cfg


def _codes(cfg):
    return [v.code for v in collect_violations(cfg)]


class TestCollectViolations:
    def test_valid_config_has_none(self):
        assert collect_violations(make_cfg()) == []

    def test_p_above_two(self):
        assert _codes(make_cfg(p_v=2.5)) == ["P_OUT_OF_RANGE"]

    def test_p_equal_one_is_excluded(self):
        assert _codes(make_cfg(p_v=1.0)) == ["P_OUT_OF_RANGE"]

    def test_p_equal_two_is_allowed(self):
        assert _codes(make_cfg(p_v=2.0)) == []

    def test_k_out_of_range(self):
        assert _codes(make_cfg(k_v=1.2)) == ["K_OUT_OF_RANGE"]

    def test_negative_diffusion_rate(self):
        assert _codes(make_cfg(d1=-0.1)) == ["NEGATIVE_COEFFICIENT"]

    def test_negative_drift(self):
        assert _codes(make_cfg(drift_q=-0.5)) == ["NEGATIVE_COEFFICIENT"]

    def test_grid_too_small(self):
        assert _codes(make_cfg(n_cells=3)) == ["GRID_TOO_SMALL"]

    def test_resource_length_must_match_grid(self):
        assert _codes(make_cfg(n_cells=8, m=[1.0] * 7)) == ["RESOURCE_SHAPE"]

    def test_per_cell_resource_accepted(self):
        assert _codes(make_cfg(n_cells=8, m=[1.0] * 8)) == []

    def test_nonfinite_resource(self):
        assert _codes(make_cfg(m=float("nan"))) == ["NONFINITE_RESOURCE"]

    def test_every_mistake_is_reported(self):
        """Three mistakes -> three violations, not just the first."""
        cfg = make_cfg(p_v=3.0, k_v=-1.0, n_cells=2)
        assert sorted(_codes(cfg)) == ["GRID_TOO_SMALL", "K_OUT_OF_RANGE", "P_OUT_OF_RANGE"]


class TestValidateConfig:
    def test_returns_config_unchanged(self):
        cfg = make_cfg()
        assert validate_config(cfg) is cfg

    def test_raises_with_all_codes(self):
        with pytest.raises(ConfigError) as exc:
            validate_config(make_cfg(p_v=2.5, d2=-1.0))
        assert set(exc.value.codes) == {"P_OUT_OF_RANGE", "NEGATIVE_COEFFICIENT"}
        assert exc.value.exit_code == 2


class TestStepControl:
    def test_defaults_are_valid(self):
        assert step_control_violations(StepControl()) == []

    def test_bad_values(self):
        ctl = StepControl(cfl_safety=1.5, dt_min=1.0, dt_max=0.1, fixed_dt=-1.0, observe_every=0)
        fields = {v.field for v in step_control_violations(ctl)}
        assert fields == {"cfl_safety", "dt_min", "fixed_dt", "observe_every"}

    @pytest.mark.parametrize("t_end", [float("nan"), float("inf"), -1.0])
    def test_horizon_must_be_finite_and_nonnegative(self, t_end):
        fields = [v.field for v in step_control_violations(StepControl(t_end=t_end))]
        assert fields == ["t_end"]

    def test_nan_tolerance_and_step_are_rejected(self):
        ctl = StepControl(nonneg_clip_tolerance=float("nan"), fixed_dt=float("nan"))
        fields = {v.field for v in step_control_violations(ctl)}
        assert fields == {"nonneg_clip_tolerance", "fixed_dt"}


class TestThresholds:
    def test_defaults_are_not_checked(self):
        assert threshold_violations(None, None) == []

    def test_positive_values_pass(self):
        assert threshold_violations(1e-3, 0.1) == []

    @pytest.mark.parametrize("bad", [0.0, -1e-3, float("nan"), float("inf")])
    def test_nonpositive_or_nonfinite(self, bad):
        found = threshold_violations(bad, bad)
        assert [v.field for v in found] == ["exclusion_threshold", "survival_threshold"]
        assert {v.code for v in found} == {"INVALID_VALUE"}


class TestTypes:
    def test_grid_geometry(self):
        grid = Grid(length=1.0, n_cells=4)
        assert grid.dx == pytest.approx(0.25)
        np.testing.assert_allclose(grid.cell_centers, [0.125, 0.375, 0.625, 0.875])

    def test_linear_dispersal(self):
        assert DispersalSpec(d=0.2).is_linear
        assert DispersalSpec(d=0.2, k=1.0, p=2.0).is_linear
        assert not DispersalSpec(d=0.2, k=0.5, p=1.75).is_linear

    def test_scalar_resource_broadcasts(self):
        cfg = make_cfg(n_cells=5, m=2.0)
        np.testing.assert_array_equal(cfg.resource, np.full(5, 2.0))
        assert cfg.m_sup == 2.0

    def test_state_rejects_negative_density(self):
        with pytest.raises(ValidationError):
            State(t=0.0, u=[0.1, -0.1], v=[0.0, 0.0])

    def test_state_rejects_shape_mismatch(self):
        with pytest.raises(ValidationError):
            State(t=0.0, u=[0.1, 0.1], v=[0.0])

    def test_state_arrays_are_read_only(self):
        state = State(t=0.0, u=[0.1, 0.2], v=[0.3, 0.4])
        with pytest.raises(ValueError):
            state.u[0] = 1.0

    def test_effective_drift(self):
        assert make_cfg(drift_q=0.5).effective_drift == 0.5
        assert make_cfg(drift_q=0.5, drift_enabled=False).effective_drift == 0.0

    def test_config_is_frozen(self):
        cfg = make_cfg()
        with pytest.raises(ValidationError):
            cfg.drift_q = 1.0
