"""Reference implementations for cross-checking the vectorized solver.

Everything here is written independently of ``operators`` and
``integrator``: plain per-cell loops over Python floats, ``math.pow`` for
the regularized coefficient, and a hand-written RK4. ``cmd_verify`` and the
tests compare the main path against these.
"""

from __future__ import annotations

import logging
import math
from typing import NamedTuple, Optional, Sequence

import numpy as np
from scipy.optimize import bisect

from app.models.errors import NegativityBlowupError, SingularCoefficientError
from app.models.schemas import ModelConfig, OracleRun, OracleScheme, State

logger = logging.getLogger(__name__)


class ComparisonSolution(NamedTuple):
    times: np.ndarray
    values: np.ndarray
    equilibrium: float


# --------------- Loop-structured rhs ---------------

def _species_rhs(
    w: list[float], s: list[float],
    d: float, k: float, p: float, eps: float,
    q: float, drift: bool, react: bool, dx: float,
) -> list[float]:
    n = len(w)
    flux = [0.0] * (n + 1)
    for i in range(1, n):
        g = (w[i] - w[i - 1]) / dx
        if k == 0.0:
            diffusive = d * g
        else:
            base = g * g + eps
            if p < 2.0 and base == 0.0:
                raise SingularCoefficientError(f"singular coefficient at face {i}")
            c = math.pow(base, (p - 2.0) / 2.0)
            diffusive = d * ((1.0 - k) + k * c) * g
        advective = q * w[i - 1] if drift else 0.0
        flux[i] = advective - diffusive
    # Danckwerts inflow face stays 0; outflow face carries q·w at x=L
    flux[n] = q * w[n - 1] if drift else 0.0

    out = [0.0] * n
    for i in range(n):
        r = w[i] * s[i] if react else 0.0
        out[i] = -(flux[i + 1] - flux[i]) / dx + r
    return out


def oracle_rhs(u: Sequence[float], v: Sequence[float], cfg: ModelConfig) -> tuple[list[float], list[float]]:
    """(du/dt, dv/dt) computed cell by cell."""
    u = [float(x) for x in u]
    v = [float(x) for x in v]
    m = [float(x) for x in cfg.resource]
    dx = cfg.grid.length / cfg.grid.n_cells
    drift = cfg.drift_enabled
    q = cfg.drift_q
    react = cfg.reaction_enabled
    # m - u - v, summed in the vectorized order
    s = [m[i] - u[i] - v[i] for i in range(len(u))]
    su, sv = cfg.disp_u, cfg.disp_v
    du = _species_rhs(u, s, su.d, su.k, su.p, su.epsilon, q, drift, react, dx)
    dv = _species_rhs(v, s, sv.d, sv.k, sv.p, sv.epsilon, q, drift, react, dx)
    return du, dv


def linear_diffusion_rhs(state: State, cfg: ModelConfig) -> tuple[np.ndarray, np.ndarray]:
    """Hard-coded linear-diffusion rhs (no p-Laplacian path at all).

    Matches the general rhs whenever each species has p = 2 or k = 0.
    """
    dx = cfg.grid.dx
    q = cfg.effective_drift
    s = cfg.resource - state.u - state.v
    out = []
    for w, spec in ((state.u, cfg.disp_u), (state.v, cfg.disp_v)):
        flux = np.zeros(len(w) + 1)
        flux[1:-1] = q * w[:-1] - spec.d * (np.diff(w) / dx)
        if cfg.drift_enabled:
            flux[-1] = cfg.drift_q * w[-1]
        react = w * s if cfg.reaction_enabled else 0.0
        out.append(-(flux[1:] - flux[:-1]) / dx + react)
    return out[0], out[1]


# --------------- Time stepping ---------------

def independent_rk4_step(
    u: Sequence[float], v: Sequence[float], dt: float, cfg: ModelConfig
) -> tuple[list[float], list[float]]:
    """One classical RK4 step on lists, no clipping."""
    u0 = [float(x) for x in u]
    v0 = [float(x) for x in v]
    n = len(u0)

    def stage(src_u, src_v, ku, kv, h):
        return (
            [src_u[i] + h * ku[i] for i in range(n)],
            [src_v[i] + h * kv[i] for i in range(n)],
        )

    k1u, k1v = oracle_rhs(u0, v0, cfg)
    k2u, k2v = oracle_rhs(*stage(u0, v0, k1u, k1v, 0.5 * dt), cfg)
    k3u, k3v = oracle_rhs(*stage(u0, v0, k2u, k2v, 0.5 * dt), cfg)
    k4u, k4v = oracle_rhs(*stage(u0, v0, k3u, k3v, dt), cfg)
    w = dt / 6.0
    u1 = [u0[i] + w * (k1u[i] + 2.0 * k2u[i] + 2.0 * k3u[i] + k4u[i]) for i in range(n)]
    v1 = [v0[i] + w * (k1v[i] + 2.0 * k2v[i] + 2.0 * k3v[i] + k4v[i]) for i in range(n)]
    return u1, v1


def euler_fine_run(
    cfg: ModelConfig,
    ic: tuple[Sequence[float], Sequence[float]],
    t_end: float,
    dt_fixed: float,
    record_every: int = 0,
    clip_tolerance: float = 1e-12,
) -> OracleRun:
    """Forward Euler at a fixed small step.

    The trajectory always holds the initial and final states; record_every > 0
    adds every record_every-th step in between. The last step is shortened to
    land on t_end.
    """
    if not dt_fixed > 0:
        raise ValueError(f"dt_fixed must be positive, got {dt_fixed}")
    u = [float(x) for x in ic[0]]
    v = [float(x) for x in ic[1]]
    n = len(u)
    t = 0.0
    trajectory = [(t, np.array(u), np.array(v))]
    steps = 0

    while t < t_end:
        h = min(dt_fixed, t_end - t)
        du, dv = oracle_rhs(u, v, cfg)
        u = [u[i] + h * du[i] for i in range(n)]
        v = [v[i] + h * dv[i] for i in range(n)]
        worst = min(min(u, default=0.0), min(v, default=0.0))
        if worst < -clip_tolerance:
            raise NegativityBlowupError(f"oracle component {worst:.3e} at t={t + h:.6g}")
        u = [max(x, 0.0) for x in u]
        v = [max(x, 0.0) for x in v]
        steps += 1
        t = t_end if h < dt_fixed or t + h >= t_end else t + h
        if record_every and steps % record_every == 0 and t < t_end:
            trajectory.append((t, np.array(u), np.array(v)))

    if len(trajectory) == 1 or trajectory[-1][0] != t:
        trajectory.append((t, np.array(u), np.array(v)))
    logger.debug("Euler oracle: %d steps of %.3e to t=%.6g", steps, dt_fixed, t_end)
    return OracleRun(scheme=OracleScheme.EULER_FINE, dt_fixed=dt_fixed, trajectory=trajectory)


def rk4_oracle_run(
    cfg: ModelConfig,
    ic: tuple[Sequence[float], Sequence[float]],
    t_end: float,
    dt_fixed: float,
) -> OracleRun:
    u = [float(x) for x in ic[0]]
    v = [float(x) for x in ic[1]]
    t = 0.0
    trajectory = [(t, np.array(u), np.array(v))]
    while t < t_end:
        h = min(dt_fixed, t_end - t)
        u, v = independent_rk4_step(u, v, h, cfg)
        t = t_end if t + h >= t_end else t + h
    trajectory.append((t, np.array(u), np.array(v)))
    return OracleRun(scheme=OracleScheme.RK4_INDEPENDENT, dt_fixed=dt_fixed, trajectory=trajectory)


# --------------- Closed forms ---------------

def logistic_closed_form(w0: float, m: float, t: float) -> float:
    """Solution of w' = w(m - w) from w0 at time t."""
    if w0 == 0.0:
        return 0.0
    return m * w0 / (w0 + (m - w0) * math.exp(-m * t))


def comparison_equilibrium(c1: float, c2: float, c3: float, q: float) -> float:
    """Positive root of C1 + C2·y - C3·y^(1+1/q) = 0 (0 if there is none)."""
    if c1 == 0.0:
        return (c2 / c3) ** q if c2 > 0.0 else 0.0

    def f(y: float) -> float:
        return c1 + c2 * y - c3 * y ** (1.0 + 1.0 / q)

    hi = 1.0
    while f(hi) > 0.0:
        hi *= 2.0
    return bisect(f, 0.0, hi, xtol=1e-14, rtol=8.9e-16, maxiter=500)


def comparison_ode_solve(
    c1: float,
    c2: float,
    c3: float,
    q: float,
    y0: float,
    t_end: float,
    dt: Optional[float] = None,
) -> ComparisonSolution:
    """Fixed-step RK4 for Y' = C1 + C2·Y - C3·Y^(1+1/q).

    The step is capped at a tenth of the inverse local Lipschitz constant so
    the discrete solution approaches the equilibrium without overshoot.
    """
    if y0 < 0:
        raise ValueError("y0 must be nonnegative")
    eq = comparison_equilibrium(c1, c2, c3, q)

    def f(y: float) -> float:
        return c1 + c2 * y - c3 * max(y, 0.0) ** (1.0 + 1.0 / q)

    y_top = max(y0, eq, 1.0)
    lipschitz = abs(c2) + c3 * (1.0 + 1.0 / q) * y_top ** (1.0 / q)
    cap = 0.1 / lipschitz if lipschitz > 0 else t_end
    h = min(dt if dt is not None else t_end / 10000.0, cap) if t_end > 0 else 0.0

    n_steps = int(math.ceil(t_end / h)) if h > 0 else 0
    times = np.linspace(0.0, t_end, n_steps + 1)
    values = np.empty(n_steps + 1)
    values[0] = y = float(y0)
    for i in range(n_steps):
        step = times[i + 1] - times[i]
        k1 = f(y)
        k2 = f(y + 0.5 * step * k1)
        k3 = f(y + 0.5 * step * k2)
        k4 = f(y + step * k3)
        y = y + step / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
        values[i + 1] = y
    return ComparisonSolution(times=times, values=values, equilibrium=eq)
