"""Tests for run summaries and plot titles."""

from app.models.schemas import Outcome, Verdict
from app.services.summary import describe_outcome, profile_title
from tests.conftest import make_cfg


def outcome(verdict, **kwargs):
    values = dict(
        verdict=verdict, t_final=20.0, u_sup=0.9, v_sup=1e-5, v_l2=1e-5,
        exclusion_threshold=1e-3, survival_threshold=0.1,
    )
    values.update(kwargs)
    return Outcome(**values)


class TestProfileTitle:
    def test_carries_time_and_parameters(self):
        title = profile_title("FIG4_P74", make_cfg(p_v=1.75, k_v=0.75, drift_q=0.5), 20.0)
        assert title.startswith("FIG4_P74: t = 20")
        for part in ("q = 0.5", "d1 = 0.2", "d2 = 0.3", "k_u = 0", "k_v = 0.75", "p_u = 2", "p_v = 1.75"):
            assert part in title

    def test_disabled_drift_shows_zero(self):
        title = profile_title("run", make_cfg(drift_enabled=False), 1.0)
        assert "q = 0," in title


class TestDescribeOutcome:
    def test_u_wins(self):
        text = describe_outcome("FIG4_P74", make_cfg(), outcome(Verdict.U_WINS), steps=1200)
        assert "v is excluded" in text
        assert "1,200 steps" in text
        assert "p-Laplacian dispersal (p = 1.75)" in text

    def test_extinction_time_is_reported(self):
        text = describe_outcome("run", make_cfg(), outcome(Verdict.U_WINS, extinction_time=7.5))
        assert "t = 7.5" in text

    def test_unsettled_candidate(self):
        text = describe_outcome(
            "run", make_cfg(), outcome(Verdict.UNDECIDED, v_sup=0.5, settled=False),
        )
        assert "has not settled" in text

    def test_no_drift_wording(self):
        text = describe_outcome("run", make_cfg(drift_enabled=False), outcome(Verdict.COEXIST, v_sup=0.4))
        assert "no drift" in text
        assert "Both species persist" in text
