"""Figure-preset behaviour. Full-resolution runs need ``pytest --runslow``."""

import numpy as np
import pytest

from app.config import settings
from app.models.schemas import Grid, StepControl, Verdict
from app.services import artifacts
from app.services.config_document import resolve_scenario
from app.services.diagnostics import (
    fit_comparison_constants,
    lq_bound_check,
    mass_budget_residual,
)
from app.services.integrator import integrate, rk4_step_with_budget, stable_dt
from app.services.runner import run_scenario, verify_scenario
from app.services.scenarios import get_preset, initial_state, preset_registry, search_witness_ic

WITNESS_AMPLITUDES = [0.1, 0.3, 0.5, 0.7, 0.9]
WITNESS_OFFSETS = [0.0, -0.1, 0.1]


def run_preset(name, tmp_path):
    scenario_id, bundle = resolve_scenario(name)
    _, outcome = run_scenario(scenario_id, bundle, tmp_path / name)
    return outcome, artifacts.read_norms_csv(tmp_path / name / "norms.csv")


def run_downscaled(name, tmp_path, n_cells=20, t_end=10.0):
    scenario_id, bundle = resolve_scenario(name, [f"n_cells={n_cells}"], t_end=t_end)
    _, outcome = run_scenario(scenario_id, bundle, tmp_path / name)
    return outcome, artifacts.read_norms_csv(tmp_path / name / "norms.csv")


def assert_verdict_or_witness(name, outcome):
    """The preset verdict, at the default IC or at some IC of the documented family."""
    preset = get_preset(name)
    if outcome.verdict is preset.expected_verdict:
        return
    witness = search_witness_ic(preset, WITNESS_AMPLITUDES, WITNESS_OFFSETS)
    assert witness is not None, f"{name}: {outcome.verdict.value}, and no IC in the family gives {preset.expected_verdict.value}"


class TestDownscaledReversal:
    """Coarse-grid versions of the first figure pair; fast enough for every run."""

    def test_fast_diffusion_loses_more_v(self, tmp_path):
        fast, _ = run_downscaled("FIG4_P74", tmp_path)
        linear, _ = run_downscaled("FIG4_P2", tmp_path)
        assert fast.t_final == linear.t_final == 10.0
        assert fast.v_l2 < linear.v_l2
        assert fast.verdict is not Verdict.V_WINS

    def test_upstream_species_persists(self, tmp_path):
        outcome, rows = run_downscaled("FIG4_P74", tmp_path)
        assert outcome.u_sup > outcome.survival_threshold
        assert [r["t"] for r in rows] == sorted(r["t"] for r in rows)
        assert rows[-1]["t"] == 10.0


@pytest.mark.slow
class TestFigureVerdicts:
    def test_linear_dispersal_faster_species_wins(self, tmp_path):
        outcome, _ = run_preset("FIG4_P2", tmp_path)
        assert outcome.verdict is Verdict.V_WINS
        assert outcome.u_sup < 1e-3

    def test_fast_diffusion_species_dies_out(self, tmp_path):
        outcome, _ = run_preset("FIG4_P74", tmp_path)
        assert outcome.verdict is Verdict.U_WINS
        assert outcome.extinction_time is not None
        assert outcome.extinction_time <= 10.0

    @pytest.mark.parametrize("name", ["FIG4_P75", "FIG5_K34", "FIG6_BOTH_P74", "FIG7_U14_V175", "FIG7_U175_V14"])
    def test_remaining_presets(self, name, tmp_path):
        outcome, _ = run_preset(name, tmp_path)
        assert_verdict_or_witness(name, outcome)


@pytest.mark.slow
class TestNoDriftClassical:
    def test_slower_disperser_wins(self):
        n = 40
        grid = Grid(length=1.0, n_cells=n)
        resource = list(1.0 + 0.9 * np.cos(np.pi * grid.cell_centers))
        preset = get_preset("FIG4_P2")
        cfg = preset.cfg.model_copy(update={"grid": grid, "resource_m": resource, "drift_enabled": False})
        state = initial_state(cfg, preset.ic_u, preset.ic_v)

        norms = []

        class Tracker:
            def observe(self, s):
                norms.append(float(np.sqrt(np.sum(s.v ** 2) * grid.dx)))

        final = integrate(state, cfg, StepControl(t_end=600.0, observe_every=2000), observers=[Tracker()])
        assert final.v.max() < 1e-3 * cfg.m_sup
        assert final.u.max() > 1e-1 * cfg.m_sup
        tail = norms[len(norms) // 2:]
        assert all(b <= a * (1 + 1e-9) for a, b in zip(tail, tail[1:]))


@pytest.mark.slow
class TestConservation:
    @pytest.mark.parametrize("preset", preset_registry(), ids=lambda p: p.name)
    def test_closed_system_keeps_mass(self, preset):
        cfg = preset.cfg.model_copy(update={"drift_enabled": False, "reaction_enabled": False})
        state = initial_state(cfg, preset.ic_u, preset.ic_v)
        mass0 = state.stacked().sum(axis=1)
        dt = stable_dt(state, cfg, StepControl())
        final = integrate(state, cfg, StepControl(t_end=10_000 * dt, fixed_dt=dt))
        np.testing.assert_allclose(final.stacked().sum(axis=1), mass0, rtol=1e-10)

    @pytest.mark.parametrize("preset", preset_registry(), ids=lambda p: p.name)
    def test_open_system_budget_closes(self, preset):
        cfg = preset.cfg
        state = initial_state(cfg, preset.ic_u, preset.ic_v)
        ctl = StepControl()
        for _ in range(500):
            after, budget = rk4_step_with_budget(state, stable_dt(state, cfg, ctl), cfg)
            assert max(mass_budget_residual(state, after, budget, cfg.grid)) < 1e-11
            state = after


@pytest.mark.slow
class TestSpatialConvergence:
    @staticmethod
    def _solve(n):
        preset = get_preset("FIG4_P74")
        cfg = preset.cfg.model_copy(update={"grid": Grid(length=1.0, n_cells=n), "drift_enabled": False})
        state = initial_state(cfg, preset.ic_u, preset.ic_v)
        return integrate(state, cfg, StepControl(t_end=1.0, dt_max=1e-3))

    def test_refinement_shrinks_differences(self):
        solutions = [self._solve(n) for n in (75, 150, 300, 600)]
        diffs = []
        for coarse, fine in zip(solutions, solutions[1:]):
            restricted = fine.stacked().reshape(2, -1, 2).mean(axis=2)
            dx = 1.0 / coarse.n_cells
            diffs.append(float(np.sqrt(np.sum((restricted - coarse.stacked()) ** 2) * dx)))
        ratios = [a / b for a, b in zip(diffs, diffs[1:])]
        assert all(r >= 1.8 for r in ratios), ratios


@pytest.mark.slow
class TestLqBound:
    @pytest.mark.parametrize("name", ["FIG4_P2", "FIG4_P74"])
    def test_fitted_envelope_holds(self, name, tmp_path):
        _, rows = run_preset(name, tmp_path)
        series = [(r["t"], r["v_l2"]) for r in rows]
        cfg = get_preset(name).cfg
        bound = fit_comparison_constants(series, 2.0, cfg.grid.length, cfg.m_sup, settings.fit_fraction)
        report = lq_bound_check(series, bound, series[0][1] ** 2, tolerance=0.05)
        assert report.passed, report.violations[:3]


@pytest.mark.slow
class TestOracleEquivalence:
    def test_verify_downscaled_preset(self):
        scenario_id, bundle = resolve_scenario("FIG4_P74", ["n_cells=32"], t_end=1.0)
        report = verify_scenario(scenario_id, bundle)
        assert report.passed, [c.detail for c in report.failed]
