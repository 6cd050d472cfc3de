"""Norms, mass budgets, outcome classification and a-priori bound checks.

The bound checkers turn existential constants into falsifiable checks:
constants are inputs (or fitted on an initial window by
``fit_comparison_constants``) and the measured series must stay under the
resulting envelope.
"""

from __future__ import annotations

import math
from typing import Optional, Sequence

import numpy as np
from scipy.integrate import solve_ivp

from app.models.errors import ConstantsInfeasibleError
from app.models.schemas import (
    BoundCheckConfig,
    BoundCheckReport,
    BoundViolation,
    FteCheckReport,
    Grid,
    ModelConfig,
    NormReport,
    Outcome,
    OutcomeThresholds,
    State,
    StepBudget,
    Verdict,
)
from app.services.operators import semidiscrete_rhs


# --------------- Norms ---------------

def lq_norm(field: np.ndarray, grid: Grid, q: float) -> float:
    """(Σ field^q · dx)^(1/q); q = inf gives the max."""
    field = np.asarray(field, dtype=np.float64)
    if field.size == 0:
        return 0.0
    if math.isinf(q):
        return float(np.max(np.abs(field)))
    return float((np.sum(np.abs(field) ** q) * grid.dx) ** (1.0 / q))


def lq_ladder(field: np.ndarray, grid: Grid, max_power: int = 5) -> dict[float, float]:
    """Norms at q = 1, 2, 4, ..., 2^max_power and inf.

    Bounded values across the ladder are the discrete picture of the
    L^q-to-L^inf bootstrap.
    """
    qs = [float(2 ** j) for j in range(max_power + 1)] + [math.inf]
    return {q: lq_norm(field, grid, q) for q in qs}


def gradient_sup(field: np.ndarray, grid: Grid) -> float:
    """Max of |Δfield|/dx over interior faces, a proxy for the W^{1,inf} seminorm."""
    if len(field) < 2:
        return 0.0
    return float(np.max(np.abs(np.diff(field))) / grid.dx)


def norm_report(state: State, grid: Grid, lebesgue_qs: Sequence[float] = ()) -> NormReport:
    return NormReport(
        t=state.t,
        u_l1=lq_norm(state.u, grid, 1.0),
        u_l2=lq_norm(state.u, grid, 2.0),
        u_sup=lq_norm(state.u, grid, math.inf),
        v_l1=lq_norm(state.v, grid, 1.0),
        v_l2=lq_norm(state.v, grid, 2.0),
        v_sup=lq_norm(state.v, grid, math.inf),
        v_lq={float(q): lq_norm(state.v, grid, float(q)) for q in lebesgue_qs},
    )


# --------------- Mass budget ---------------

def _relative(residual: float, *scales: float) -> float:
    scale = max(abs(s) for s in scales)
    if scale == 0.0:
        return abs(residual)
    return abs(residual) / scale


def mass_budget_residual(
    before: State, after: State, budget: StepBudget, grid: Grid
) -> tuple[float, float]:
    """Relative mismatch between the mass change of one step and its budget.

    Budget = reaction integral - boundary outflow + clipped mass, all
    weighted the way the stepper weighted its stages.
    """
    dx = grid.dx
    result = []
    for name in ("u", "v"):
        mass_before = float(np.sum(getattr(before, name)) * dx)
        mass_after = float(np.sum(getattr(after, name)) * dx)
        react = getattr(budget, f"reaction_{name}")
        outflow = getattr(budget, f"outflow_{name}")
        clipped = getattr(budget, f"clipped_{name}")
        residual = (mass_after - mass_before) - (react - outflow + clipped)
        result.append(_relative(residual, mass_before, mass_after, react, outflow))
    return result[0], result[1]


# --------------- Outcome ---------------

def default_thresholds(m_sup: float, exclusion_factor: float, survival_factor: float) -> OutcomeThresholds:
    return OutcomeThresholds(exclusion=exclusion_factor * m_sup, survival=survival_factor * m_sup)


def classify_outcome(
    state: State,
    grid: Grid,
    thresholds: OutcomeThresholds,
    settled: bool = True,
    extinction_time: Optional[float] = None,
) -> Outcome:
    """Exclusion, coexistence or undecided from the sup norms of the state.

    Exclusion is reported as soon as it holds. Coexistence needs a settled
    (steady) state; an unsettled coexistence candidate is UNDECIDED.
    """
    u_sup = lq_norm(state.u, grid, math.inf)
    v_sup = lq_norm(state.v, grid, math.inf)

    if v_sup < thresholds.exclusion and u_sup > thresholds.survival:
        verdict = Verdict.U_WINS
    elif u_sup < thresholds.exclusion and v_sup > thresholds.survival:
        verdict = Verdict.V_WINS
    elif u_sup > thresholds.survival and v_sup > thresholds.survival and settled:
        verdict = Verdict.COEXIST
    else:
        verdict = Verdict.UNDECIDED

    return Outcome(
        verdict=verdict,
        t_final=state.t,
        u_sup=u_sup,
        v_sup=v_sup,
        v_l2=lq_norm(state.v, grid, 2.0),
        extinction_time=extinction_time,
        u_grad_sup=gradient_sup(state.u, grid),
        exclusion_threshold=thresholds.exclusion,
        survival_threshold=thresholds.survival,
        settled=settled,
    )


# --------------- Detectors ---------------

def steady_state_detector(
    series: Sequence[tuple[float, float]], tol: float, window: Optional[int] = None
) -> bool:
    """True iff sup|rhs| / max(sup|state|, 1) < tol for every sample in the last window.

    series holds (sup|rhs|, sup|state|) pairs; window defaults to the whole series.
    """
    if not series:
        return False
    window = len(series) if window is None else window
    if len(series) < window:
        return False
    return all(rhs / max(sup, 1.0) < tol for rhs, sup in series[-window:])


def extinction_detector(
    series: Sequence[tuple[float, float]], threshold: float
) -> Optional[float]:
    """Earliest t with ||v||_2 below threshold where the series is locally non-increasing.

    This certifies numerical extinction only; the regularized problem
    never reaches exact zero.
    """
    slack = 1e-3 * threshold
    values = [y for _, y in series]
    for i, (t, y) in enumerate(series):
        if y >= threshold:
            continue
        segment = values[max(0, i - 1): i + 2]
        if all(b <= a + slack for a, b in zip(segment, segment[1:])):
            return t
    return None


# --------------- Comparison-ODE bounds ---------------

def comparison_rhs(y: float, c1: float, c2: float, c3: float, q: float) -> float:
    """C1 + C2·Y - C3·Y^(1+1/q), with the sink evaluated at max(Y, 0)."""
    return c1 + c2 * y - c3 * max(y, 0.0) ** (1.0 + 1.0 / q)


def comparison_envelope(cfg: BoundCheckConfig, y0: float, times: Sequence[float]) -> np.ndarray:
    """Dense solution of the comparison ODE from y0 at times[0], sampled at times."""
    times = np.asarray(times, dtype=np.float64)
    if times.size == 0:
        return times
    if times[-1] == times[0]:
        return np.full(times.shape, float(y0))
    span = times[-1] - times[0]
    with np.errstate(over="raise", invalid="raise"):
        try:
            solution = solve_ivp(
                lambda t, y: [comparison_rhs(y[0], cfg.ode_c1, cfg.ode_c2, cfg.ode_c3, cfg.lebesgue_q)],
                (times[0], times[-1]),
                [float(y0)],
                method="RK45",
                dense_output=True,
                rtol=1e-10,
                atol=1e-14,
                max_step=span / 200.0,
            )
        except (FloatingPointError, OverflowError, ValueError) as e:
            raise ConstantsInfeasibleError(f"comparison ODE overflowed: {e}") from e
    if not solution.success:
        raise ConstantsInfeasibleError(solution.message)
    envelope = solution.sol(times)[0]
    if not np.all(np.isfinite(envelope)):
        raise ConstantsInfeasibleError("comparison ODE produced non-finite values")
    return envelope


def lq_bound_check(
    series: Sequence[tuple[float, float]],
    cfg: BoundCheckConfig,
    y0: float,
    tolerance: float = 0.05,
) -> BoundCheckReport:
    """Flag every sample where ||v||_q^q exceeds the comparison envelope by more than tolerance.

    series holds (t, ||v||_q) pairs; y0 = ||v(0)||_q^q.
    """
    times = [t for t, _ in series]
    envelope = comparison_envelope(cfg, y0, times)
    violations = []
    for (t, norm), bound in zip(series, envelope):
        measured = norm ** cfg.lebesgue_q
        if measured > bound * (1.0 + tolerance):
            violations.append(BoundViolation(t=t, measured=measured, envelope=float(bound)))
    return BoundCheckReport(
        times=times, envelope=[float(e) for e in envelope],
        violations=violations, tolerance=tolerance,
    )


def fit_comparison_constants(
    series: Sequence[tuple[float, float]],
    q: float,
    length: float,
    m_sup: float,
    fit_fraction: float = 0.1,
    alpha: float = 0.875,
) -> BoundCheckConfig:
    """Comparison constants from the growth/sink structure plus the first fit_fraction of samples.

    C2 = q·max m and C3 = q·L^(-1/q) come from the logistic reaction (Hölder
    on the cubic sink); C1 is the smallest nonnegative source that makes the
    fit window satisfy Y' <= C1 + C2·Y - C3·Y^(1+1/q). series holds (t, ||v||_q).
    """
    c2 = q * m_sup
    c3 = q * length ** (-1.0 / q)
    n_fit = max(2, int(math.ceil(fit_fraction * len(series))))
    window = [(t, norm ** q) for t, norm in series[:n_fit]]

    c1 = 1e-12
    for (t0, y0), (t1, y1) in zip(window, window[1:]):
        if t1 <= t0:
            continue
        slope = (y1 - y0) / (t1 - t0)
        worst_y = max(y0, y1)
        needed = slope - c2 * worst_y + c3 * worst_y ** (1.0 + 1.0 / q)
        c1 = max(c1, needed)
    return BoundCheckConfig(lebesgue_q=q, ode_c1=c1, ode_c2=c2, ode_c3=c3, alpha=alpha)


def fte_inequality_check(
    series: Sequence[tuple[float, float]],
    M: float,
    C3: float,
    Ctilde: float,
    alpha: float,
    tolerance: float = 1e-9,
) -> FteCheckReport:
    """Check Y' <= C3 + M·Y - C̃·Y^alpha on backward difference quotients of Y = ||v||_2."""
    if not 0.0 < alpha < 1.0:
        raise ValueError(f"alpha must lie in (0, 1), got {alpha}")
    violated = []
    n = 0
    for (t0, y0), (t1, y1) in zip(series, series[1:]):
        if t1 <= t0:
            continue
        n += 1
        slope = (y1 - y0) / (t1 - t0)
        bound = C3 + M * y1 - Ctilde * y1 ** alpha
        slack = tolerance * max(1.0, abs(C3) + abs(M * y1) + abs(Ctilde * y1 ** alpha))
        if slope > bound + slack:
            violated.append(t1)
    fraction = 1.0 if n == 0 else (n - len(violated)) / n
    return FteCheckReport(n_samples=n, satisfied_fraction=fraction, violated_times=violated)


def steady_sample(state: State, cfg: ModelConfig) -> tuple[float, float]:
    """(sup|rhs|, sup|state|) for one state, the input steady_state_detector expects."""
    du, dv = semidiscrete_rhs(state, cfg)
    rhs_sup = float(max(np.max(np.abs(du), initial=0.0), np.max(np.abs(dv), initial=0.0)))
    state_sup = float(max(np.max(state.u, initial=0.0), np.max(state.v, initial=0.0)))
    return rhs_sup, state_sup
