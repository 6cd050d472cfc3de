"""Explicit time stepping of the semi-discrete system.

The loop is stable_dt -> stepper -> nonnegativity clip, with the final step
truncated to land exactly on t_end. Steppers work on the stacked (2, N)
array and also return the stepper-weighted reaction and outflow integrals
so mass budgets can be audited with the same quadrature the step used.
Inside the loop everything stays a plain array; ``State`` and
``StepBudget`` are built only for hooks, observers and the result.
"""

from __future__ import annotations

import logging
from typing import Callable, Iterable, Optional, Protocol

import numpy as np

from app.models.errors import DtUnderflowError, HaltedByObserver, NegativityBlowupError
from app.models.schemas import DispersalSpec, ModelConfig, State, StepBudget, StepControl
from app.services.operators import Closure, StackedRhs, effective_diffusivity, stacked_rhs

logger = logging.getLogger(__name__)

# Guards the advective and reaction bounds against division by zero
_DELTA = 1e-12

_NO_CLIP = np.zeros(2)
_NO_CLIP.setflags(write=False)


class Stepper(Protocol):
    name: str

    def __call__(
        self, y: np.ndarray, dt: float, rhs: StackedRhs
    ) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        """Return (y_new, reaction integral, outflow integral) over one step."""
        ...


class RK4Stepper:
    name = "rk4"

    def __call__(self, y, dt, rhs):
        k1, r1, o1 = rhs(y)
        k2, r2, o2 = rhs(y + 0.5 * dt * k1)
        k3, r3, o3 = rhs(y + 0.5 * dt * k2)
        k4, r4, o4 = rhs(y + dt * k3)
        y_new = y + dt / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
        react = dt / 6.0 * (r1 + 2.0 * r2 + 2.0 * r3 + r4)
        outflow = dt / 6.0 * (o1 + 2.0 * o2 + 2.0 * o3 + o4)
        return y_new, react, outflow


class ForwardEulerStepper:
    name = "euler"

    def __call__(self, y, dt, rhs):
        k1, r1, o1 = rhs(y)
        return y + dt * k1, dt * r1, dt * o1


class Observer(Protocol):
    def observe(self, state: State) -> Optional[str]:
        """Inspect a read-only snapshot; a non-None reason requests a halt."""
        ...


StepHook = Callable[[State, State, StepBudget], None]


def _max_diffusivity(field: np.ndarray, spec: DispersalSpec, cfg: ModelConfig) -> float:
    if spec.is_linear:
        return spec.d
    return float(np.max(effective_diffusivity(field, spec, cfg.grid, allow_singular=True)))


def _step_bound(y: np.ndarray, cfg: ModelConfig, ctl: StepControl, resource: np.ndarray) -> float:
    dx = cfg.grid.dx
    d_max = max(
        _max_diffusivity(y[0], cfg.disp_u, cfg),
        _max_diffusivity(y[1], cfg.disp_v, cfg),
    )
    diffusion = dx * dx / (2.0 * d_max) if d_max > 0 else np.inf
    advection = dx / max(cfg.effective_drift, _DELTA)
    if cfg.reaction_enabled:
        rate = float(np.max(np.abs(resource) + 2.0 * (y[0] + y[1])))
    else:
        rate = 0.0
    growth = 1.0 / max(rate, _DELTA)

    dt = ctl.cfl_safety * min(diffusion, advection, growth)
    if not dt >= ctl.dt_min:
        raise DtUnderflowError(
            f"stable dt {dt:.3e} below dt_min {ctl.dt_min:.3e} "
            f"(D_max={d_max:.3e}; epsilon too small for this grid?)"
        )
    return min(dt, ctl.dt_max)


def stable_dt(state: State, cfg: ModelConfig, ctl: StepControl) -> float:
    """Largest safe explicit step from the worst face of each constraint.

    dt = safety·min(dx²/(2·D_max), dx/q, 1/rate), clamped to dt_max. D_max is
    the largest face diffusivity over both species at the current gradients.
    """
    return _step_bound(state.stacked(), cfg, ctl, cfg.resource)


def _step_arrays(
    y: np.ndarray, t: float, dt: float, rhs: StackedRhs, stepper: Stepper,
    clip_tolerance: float, dx: float,
) -> tuple[np.ndarray, np.ndarray, np.ndarray, np.ndarray]:
    y_new, react, outflow = stepper(y, dt, rhs)

    worst = float(np.min(y_new)) if y_new.size else 0.0
    if worst < -clip_tolerance:
        raise NegativityBlowupError(
            f"component {worst:.3e} < -{clip_tolerance:.0e} at t={t + dt:.6g} "
            f"(dt={dt:.3e} too large?)"
        )
    if worst < 0.0:
        clipped = np.where(y_new < 0.0, -y_new, 0.0).sum(axis=1) * dx
        np.maximum(y_new, 0.0, out=y_new)
    else:
        clipped = _NO_CLIP
    return y_new, react, outflow, clipped


def _budget(dt: float, react: np.ndarray, outflow: np.ndarray, clipped: np.ndarray) -> StepBudget:
    return StepBudget.model_construct(
        dt=dt,
        reaction_u=float(react[0]), reaction_v=float(react[1]),
        outflow_u=float(outflow[0]), outflow_v=float(outflow[1]),
        clipped_u=float(clipped[0]), clipped_v=float(clipped[1]),
    )


def advance(
    state: State,
    dt: float,
    cfg: ModelConfig,
    stepper: Optional[Stepper] = None,
    clip_tolerance: float = 1e-12,
    closure: Optional[Closure] = None,
) -> tuple[State, StepBudget]:
    """One step of any stepper, with clipping and its mass budget."""
    if not dt > 0:
        raise ValueError(f"dt must be positive, got {dt}")
    stepper = stepper or RK4Stepper()
    y_new, react, outflow, clipped = _step_arrays(
        state.stacked(), state.t, dt, stacked_rhs(cfg, closure), stepper,
        clip_tolerance, cfg.grid.dx,
    )
    return State.trusted(state.t + dt, y_new[0], y_new[1]), _budget(dt, react, outflow, clipped)


def rk4_step_with_budget(
    state: State,
    dt: float,
    cfg: ModelConfig,
    clip_tolerance: float = 1e-12,
    closure: Optional[Closure] = None,
) -> tuple[State, StepBudget]:
    return advance(state, dt, cfg, RK4Stepper(), clip_tolerance, closure)


def rk4_step(
    state: State,
    dt: float,
    cfg: ModelConfig,
    clip_tolerance: float = 1e-12,
    closure: Optional[Closure] = None,
) -> State:
    """Classical 4-stage Runge-Kutta step; tiny negatives from dispersion are clipped."""
    return advance(state, dt, cfg, RK4Stepper(), clip_tolerance, closure)[0]


def _notify(observers: Iterable[Observer], state: State) -> None:
    for observer in observers:
        reason = observer.observe(state)
        if reason is not None:
            raise HaltedByObserver(reason, state)


def integrate(
    state0: State,
    cfg: ModelConfig,
    ctl: StepControl,
    observers: Iterable[Observer] = (),
    stepper: Optional[Stepper] = None,
    closure: Optional[Closure] = None,
    on_step: Optional[StepHook] = None,
) -> State:
    """Advance state0 to ctl.t_end.

    Observers see every ``ctl.observe_every``-th accepted state and the final
    one (not state0). A halt request raises HaltedByObserver carrying the
    state it was raised on. on_step sees every accepted step with its budget.
    """
    observers = list(observers)
    stepper = stepper or RK4Stepper()
    rhs = stacked_rhs(cfg, closure)
    resource = cfg.resource
    dx = cfg.grid.dx
    t_end = ctl.t_end

    state = state0
    y = state0.stacked()
    t = state0.t
    steps = 0

    while t < t_end:
        dt = ctl.fixed_dt if ctl.fixed_dt is not None else _step_bound(y, cfg, ctl, resource)
        remaining = t_end - t
        last = remaining <= dt * (1.0 + 1e-9)
        if last:
            dt = remaining

        y, react, outflow, clipped = _step_arrays(
            y, t, dt, rhs, stepper, ctl.nonneg_clip_tolerance, dx
        )
        t = t_end if last else t + dt
        steps += 1

        if on_step is not None:
            after = State.trusted(t, y[0], y[1])
            on_step(state, after, _budget(dt, react, outflow, clipped))
            state = after
        else:
            state = None

        if last or steps % ctl.observe_every == 0:
            if state is None:
                state = State.trusted(t, y[0], y[1])
            _notify(observers, state)

    if state is None:
        state = State.trusted(t, y[0], y[1])
    logger.debug(
        "Integrated t=%.6g -> %.6g in %d %s steps", state0.t, state.t, steps, stepper.name
    )
    return state
