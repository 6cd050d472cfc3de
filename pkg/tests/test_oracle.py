"""Tests for the loop-structured reference solvers and closed forms."""

import math

import numpy as np
import pytest

from app.models.errors import NegativityBlowupError, SingularCoefficientError
from app.models.schemas import DispersalSpec, Grid, ModelConfig, OracleScheme, State
from app.services.integrator import rk4_step
from app.services.operators import semidiscrete_rhs
from app.services.oracle import (
    comparison_equilibrium,
    comparison_ode_solve,
    euler_fine_run,
    independent_rk4_step,
    logistic_closed_form,
    oracle_rhs,
    rk4_oracle_run,
)
from app.services.scenarios import get_preset, realize_ic
from tests.conftest import bump_state, make_cfg

EPS = np.finfo(np.float64).eps


def downscaled(name, n_cells=32):
    preset = get_preset(name)
    cfg = preset.cfg.model_copy(update={"grid": Grid(length=preset.cfg.grid.length, n_cells=n_cells)})
    state = State(t=0.0, u=realize_ic(preset.ic_u, cfg.grid), v=realize_ic(preset.ic_v, cfg.grid))
    return cfg, state


class TestClosedForms:
    def test_logistic_endpoints(self):
        assert logistic_closed_form(0.1, 1.0, 0.0) == pytest.approx(0.1)
        assert logistic_closed_form(0.1, 1.0, 50.0) == pytest.approx(1.0)
        assert logistic_closed_form(0.0, 1.0, 5.0) == 0.0

    def test_equilibrium_root(self):
        eq = comparison_equilibrium(1.0, 1.0, 1.0, 2.0)
        assert 1.0 + eq - eq ** 1.5 == pytest.approx(0.0, abs=1e-10)
        assert eq == pytest.approx(2.148, abs=1e-3)

    def test_equilibrium_without_source(self):
        assert comparison_equilibrium(0.0, 2.0, 1.0, 2.0) == pytest.approx(4.0)
        assert comparison_equilibrium(0.0, 0.0, 1.0, 2.0) == 0.0


class TestComparisonOde:
    def test_zero_stays_zero_without_source(self):
        sol = comparison_ode_solve(0.0, 1.0, 1.0, 2.0, y0=0.0, t_end=5.0)
        np.testing.assert_array_equal(sol.values, 0.0)

    def test_rises_monotonically_to_equilibrium(self):
        sol = comparison_ode_solve(1.0, 1.0, 1.0, 2.0, y0=0.0, t_end=30.0)
        assert sol.times[0] == 0.0
        assert sol.times[-1] == pytest.approx(30.0)
        assert np.all(np.diff(sol.values) >= 0.0)
        assert sol.values[-1] == pytest.approx(sol.equilibrium, rel=1e-6)

    def test_decays_from_above(self):
        sol = comparison_ode_solve(1.0, 1.0, 1.0, 2.0, y0=10.0, t_end=30.0)
        assert np.all(np.diff(sol.values) <= 0.0)
        assert sol.values[-1] == pytest.approx(sol.equilibrium, rel=1e-6)

    def test_negative_start_rejected(self):
        with pytest.raises(ValueError):
            comparison_ode_solve(1.0, 1.0, 1.0, 2.0, y0=-1.0, t_end=1.0)


class TestOracleRhs:
    @pytest.mark.parametrize("name", ["FIG4_P2", "FIG4_P74", "FIG5_K34", "FIG7_U14_V175"])
    def test_matches_vectorized_rhs(self, name):
        cfg, state = downscaled(name)
        du, dv = semidiscrete_rhs(state, cfg)
        ou, ov = oracle_rhs(state.u, state.v, cfg)
        scale = max(1.0, float(np.abs(du).max()), float(np.abs(dv).max()))
        np.testing.assert_allclose(du, ou, rtol=0, atol=8 * EPS * scale)
        np.testing.assert_allclose(dv, ov, rtol=0, atol=8 * EPS * scale)

    def test_matches_without_drift(self):
        cfg = make_cfg(drift_enabled=False)
        state = bump_state(cfg)
        du, _ = semidiscrete_rhs(state, cfg)
        ou, _ = oracle_rhs(state.u, state.v, cfg)
        np.testing.assert_allclose(du, ou, rtol=0, atol=1e-12)

    def test_singular_coefficient(self):
        cfg = ModelConfig(
            grid=Grid(n_cells=4),
            disp_u=DispersalSpec(d=0.2),
            disp_v=DispersalSpec(d=0.3, k=1.0, p=1.5, epsilon=0.0),
            resource_m=1.0,
        )
        with pytest.raises(SingularCoefficientError):
            oracle_rhs([0.1] * 4, [0.2] * 4, cfg)


class TestIndependentRk4:
    def test_agrees_with_main_step_to_rounding(self):
        cfg, state = downscaled("FIG4_P74")
        dt = 1e-4
        after = rk4_step(state, dt, cfg)
        ou, ov = independent_rk4_step(state.u, state.v, dt, cfg)
        scale = max(float(np.abs(after.u).max()), float(np.abs(after.v).max()))
        np.testing.assert_allclose(after.u, np.maximum(ou, 0.0), rtol=0, atol=8 * EPS * scale)
        np.testing.assert_allclose(after.v, np.maximum(ov, 0.0), rtol=0, atol=8 * EPS * scale)

    def test_rk4_run_lands_on_t_end(self):
        cfg, state = downscaled("FIG4_P2", n_cells=8)
        run = rk4_oracle_run(cfg, (state.u, state.v), t_end=0.001, dt_fixed=3e-4)
        assert run.scheme is OracleScheme.RK4_INDEPENDENT
        assert run.final[0] == 0.001
        assert len(run.trajectory) == 2


class TestEulerFine:
    def test_zero_state_stays_zero(self, cfg):
        zeros = np.zeros(cfg.grid.n_cells)
        run = euler_fine_run(cfg, (zeros, zeros), t_end=0.01, dt_fixed=1e-4)
        _, u, v = run.final
        np.testing.assert_array_equal(u, 0.0)
        np.testing.assert_array_equal(v, 0.0)

    def test_homogeneous_logistic(self):
        cfg = make_cfg(n_cells=8, drift_enabled=False)
        ic = (np.full(8, 0.1), np.zeros(8))
        run = euler_fine_run(cfg, ic, t_end=1.0, dt_fixed=1e-3)
        t, u, _ = run.final
        assert t == 1.0
        assert abs(u[0] - logistic_closed_form(0.1, 1.0, 1.0)) < 5e-3
        np.testing.assert_allclose(u, u[0], rtol=1e-12)

    def test_trajectory_records(self, cfg, state):
        run = euler_fine_run(cfg, (state.u, state.v), t_end=1e-3, dt_fixed=1e-4, record_every=2)
        times = [t for t, _, _ in run.trajectory]
        assert times[0] == 0.0
        assert times[-1] == 1e-3
        assert times == sorted(times)
        assert len(times) >= 5

    def test_unstable_step_raises(self, cfg, state):
        with pytest.raises(NegativityBlowupError):
            euler_fine_run(cfg, (state.u, state.v), t_end=1.0, dt_fixed=0.5)

    def test_rejects_nonpositive_step(self, cfg, state):
        with pytest.raises(ValueError):
            euler_fine_run(cfg, (state.u, state.v), t_end=1.0, dt_fixed=0.0)

    def test_converges_toward_rk4(self, cfg, state):
        t_end = 0.01
        reference = rk4_oracle_run(cfg, (state.u, state.v), t_end, dt_fixed=1e-5).final[1]
        errors = []
        for dt in (2e-4, 1e-4):
            u = euler_fine_run(cfg, (state.u, state.v), t_end, dt_fixed=dt).final[1]
            errors.append(math.sqrt(float(np.sum((u - reference) ** 2))))
        assert errors[1] < errors[0]
