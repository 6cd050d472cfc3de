"""Plain-language run summaries printed after ``run``."""

from __future__ import annotations

from typing import Optional

from app.models.schemas import ModelConfig, Outcome, Verdict


def _format_time(t: float) -> str:
    return f"t = {t:g}"


def _dispersal_label(d: float, k: float, p: float) -> str:
    if k == 0.0 or p == 2.0:
        return f"linear dispersal at rate {d:g}"
    if k == 1.0:
        return f"p-Laplacian dispersal (p = {p:g}) at rate {d:g}"
    return f"mixed dispersal at rate {d:g}, {k:.0%} p-Laplacian with p = {p:g}"


def describe_outcome(scenario_id: str, cfg: ModelConfig, outcome: Outcome, steps: Optional[int] = None) -> str:
    """Build a single-paragraph summary of how a run ended."""
    u_label = _dispersal_label(cfg.disp_u.d, cfg.disp_u.k, cfg.disp_u.p)
    v_label = _dispersal_label(cfg.disp_v.d, cfg.disp_v.k, cfg.disp_v.p)
    drift = (
        f"downstream drift q = {cfg.drift_q:g}" if cfg.drift_enabled else "no drift"
    )

    parts = [
        f"Scenario {scenario_id}: u with {u_label} competes with v with {v_label} "
        f"under {drift}, integrated to {_format_time(outcome.t_final)}"
        + (f" in {steps:,} steps." if steps is not None else "."),
    ]

    if outcome.verdict is Verdict.U_WINS:
        parts.append(
            f"v is excluded (sup v = {outcome.v_sup:.2e} below {outcome.exclusion_threshold:.1e}) "
            f"while u persists at sup u = {outcome.u_sup:.3f}."
        )
    elif outcome.verdict is Verdict.V_WINS:
        parts.append(
            f"u is excluded (sup u = {outcome.u_sup:.2e} below {outcome.exclusion_threshold:.1e}) "
            f"while v persists at sup v = {outcome.v_sup:.3f}."
        )
    elif outcome.verdict is Verdict.COEXIST:
        parts.append(
            f"Both species persist at a steady state (sup u = {outcome.u_sup:.3f}, "
            f"sup v = {outcome.v_sup:.3f})."
        )
    else:
        reason = "the state has not settled" if not outcome.settled else "neither threshold is met"
        parts.append(
            f"No verdict yet: {reason} (sup u = {outcome.u_sup:.3g}, sup v = {outcome.v_sup:.3g})."
        )

    if outcome.extinction_time is not None:
        parts.append(
            f"||v||_2 fell below the extinction threshold at {_format_time(outcome.extinction_time)}."
        )

    return " ".join(parts)


def profile_title(label: str, cfg: ModelConfig, t: float) -> str:
    """Plot title carrying the time and the drift and dispersal parameters."""
    return (
        f"{label}: {_format_time(t)}  (q = {cfg.effective_drift:g}, "
        f"d1 = {cfg.disp_u.d:g}, d2 = {cfg.disp_v.d:g}, "
        f"k_u = {cfg.disp_u.k:g}, k_v = {cfg.disp_v.k:g}, "
        f"p_u = {cfg.disp_u.p:g}, p_v = {cfg.disp_v.p:g})"
    )
