"""Tests for IC families, the preset registry and the witness search."""

import numpy as np
import pytest

from app.models.errors import ICShapeMismatchError, NonpositiveICError, NotFoundError
from app.models.schemas import Grid, ICFamily, InitialConditionSpec, Preset, StepControl, Verdict
from app.services.scenarios import (
    get_preset,
    initial_state,
    preset_registry,
    realize_ic,
    search_witness_ic,
)
from app.services.validation import collect_violations
from tests.conftest import make_cfg

GRID = Grid(length=1.0, n_cells=40)


class TestRealizeIc:
    def test_gaussian_is_symmetric_about_midpoint(self):
        field = realize_ic(InitialConditionSpec(center=0.5, width=0.1, amplitude=0.5), GRID)
        np.testing.assert_allclose(field, field[::-1], rtol=0, atol=1e-15)
        assert field.max() <= 0.5

    def test_gaussian_refines_like_cell_average(self):
        spec = InitialConditionSpec(center=0.5, width=0.1, amplitude=0.5)
        for n in (20, 40, 80):
            grid = Grid(length=1.0, n_cells=n)
            dx = grid.dx
            fine = np.linspace(0.0, 1.0, 200 * n + 1)
            exact = 0.5 * np.exp(-((fine - 0.5) ** 2) / (2 * 0.1 ** 2))
            averages = exact[:-1].reshape(n, 200).mean(axis=1)
            assert np.abs(realize_ic(spec, grid) - averages).max() <= 100 * dx * dx

    def test_two_bumps_add(self):
        spec = InitialConditionSpec(
            family=ICFamily.TWO_BUMPS, center=0.2, width=0.05, amplitude=0.3,
            center2=0.8, width2=0.05, amplitude2=0.4,
        )
        field = realize_ic(spec, GRID)
        assert field[:20].max() == pytest.approx(0.3, rel=0.05)
        assert field[20:].max() == pytest.approx(0.4, rel=0.05)

    def test_step(self):
        spec = InitialConditionSpec(family=ICFamily.STEP, center=0.5, amplitude=0.2, amplitude2=0.7)
        field = realize_ic(spec, GRID)
        np.testing.assert_array_equal(field[:20], 0.2)
        np.testing.assert_array_equal(field[20:], 0.7)

    def test_constant_may_be_zero(self):
        field = realize_ic(InitialConditionSpec(family=ICFamily.CONSTANT, amplitude=0.0), GRID)
        np.testing.assert_array_equal(field, 0.0)

    def test_custom_table(self):
        table = list(np.linspace(0.0, 1.0, 40))
        spec = InitialConditionSpec(family=ICFamily.CUSTOM_TABLE, table=table)
        np.testing.assert_array_equal(realize_ic(spec, GRID), table)

    def test_custom_table_wrong_length(self):
        spec = InitialConditionSpec(family=ICFamily.CUSTOM_TABLE, table=[0.1] * 39)
        with pytest.raises(ICShapeMismatchError):
            realize_ic(spec, GRID)

    def test_negative_amplitude(self):
        with pytest.raises(NonpositiveICError):
            realize_ic(InitialConditionSpec(amplitude=-0.1), GRID)

    def test_identically_zero_bump(self):
        with pytest.raises(NonpositiveICError):
            realize_ic(InitialConditionSpec(amplitude=0.0), GRID)

    def test_zero_width(self):
        with pytest.raises(NonpositiveICError):
            realize_ic(InitialConditionSpec(width=0.0), GRID)

    def test_negative_table_entry(self):
        spec = InitialConditionSpec(family=ICFamily.CUSTOM_TABLE, table=[0.1] * 39 + [-0.1])
        with pytest.raises(NonpositiveICError):
            realize_ic(spec, GRID)

    def test_initial_state(self):
        cfg = make_cfg(n_cells=40)
        state = initial_state(cfg, InitialConditionSpec(center=0.25), InitialConditionSpec(center=0.75))
        assert state.t == 0.0
        assert state.n_cells == 40
        assert np.argmax(state.u) < np.argmax(state.v)


class TestRegistry:
    def test_all_figures_present(self):
        names = {p.name for p in preset_registry()}
        assert names == {
            "FIG4_P2", "FIG4_P74", "FIG4_P75", "FIG5_K34",
            "FIG6_BOTH_P74", "FIG7_U14_V175", "FIG7_U175_V14",
        }

    @pytest.mark.parametrize("preset", preset_registry(), ids=lambda p: p.name)
    def test_presets_are_valid(self, preset):
        assert collect_violations(preset.cfg) == []
        assert preset.cfg.grid.n_cells == 300
        assert preset.cfg.drift_q == 0.5
        assert preset.cfg.disp_v.epsilon == 1e-4
        assert preset.snapshot_times[0] == 0.0
        assert preset.snapshot_times[-1] == preset.t_end
        realize_ic(preset.ic_u, preset.cfg.grid)
        realize_ic(preset.ic_v, preset.cfg.grid)

    def test_figure_parameters(self):
        p2 = get_preset("FIG4_P2")
        assert (p2.cfg.disp_u.d, p2.cfg.disp_v.d, p2.cfg.disp_v.p) == (0.2, 0.3, 2.0)
        assert p2.expected_verdict is Verdict.V_WINS
        assert get_preset("FIG4_P74").cfg.disp_v.p == 1.75
        assert get_preset("FIG4_P75").cfg.disp_v.p == 1.4
        k34 = get_preset("FIG5_K34").cfg.disp_v
        assert (k34.k, k34.p) == (0.75, 1.75)
        both = get_preset("FIG6_BOTH_P74")
        assert both.ic_u.amplitude == 0.3
        assert both.cfg.disp_u.p == both.cfg.disp_v.p == 1.75
        f7 = get_preset("FIG7_U14_V175").cfg
        assert (f7.disp_u.d, f7.disp_v.d, f7.disp_u.p, f7.disp_v.p) == (0.3, 0.3, 1.4, 1.75)

    def test_unknown_preset(self):
        with pytest.raises(NotFoundError) as exc:
            get_preset("FIG9")
        assert exc.value.exit_code == 2


def tiny_preset(expected: Verdict) -> Preset:
    return Preset(
        name="TINY",
        cfg=make_cfg(n_cells=16),
        ic_u=InitialConditionSpec(center=0.25, width=0.08, amplitude=0.5),
        ic_v=InitialConditionSpec(center=0.75, width=0.08, amplitude=0.5),
        t_end=0.0,
        expected_verdict=expected,
    )


class TestWitnessSearch:
    def test_first_match_in_grid_order(self):
        witness = search_witness_ic(tiny_preset(Verdict.UNDECIDED), [0.3, 0.4], [0.0, -0.1])
        assert witness is not None
        assert witness.ic_u.amplitude == 0.3
        assert witness.ic_u.center == 0.25
        assert witness.outcome.verdict is Verdict.UNDECIDED

    def test_offset_moves_u_only(self):
        preset = tiny_preset(Verdict.UNDECIDED)
        witness = search_witness_ic(preset, [0.4], [-0.1], ctl=StepControl(t_end=0.0))
        assert witness.ic_u.center == pytest.approx(0.15)
        assert witness.ic_v == preset.ic_v

    def test_no_witness(self):
        assert search_witness_ic(tiny_preset(Verdict.V_WINS), [0.3], [0.0]) is None
