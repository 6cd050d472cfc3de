"""Semi-discrete right-hand side in conservative flux form.

Fluxes live on the n_cells+1 faces of the cell-centred grid; face i sits
between cells i-1 and i. ``FaceFluxes`` carry the total rightward flux
(advective minus diffusive), so each cell sees

    rhs_i = -(F[i+1] - F[i]) / dx + reaction_i

and interior fluxes telescope out of the total mass.
"""

from __future__ import annotations

from typing import Callable, NamedTuple, Optional, Union

import numpy as np

from app.models.errors import SingularCoefficientError
from app.models.schemas import DispersalSpec, FaceFluxes, Grid, ModelConfig, State

Closure = Callable[[FaceFluxes, State, ModelConfig], FaceFluxes]

# (dy/dt, reaction integrals, physical outflow) for a stacked (2, N) state
StackedRhs = Callable[[np.ndarray], tuple[np.ndarray, np.ndarray, np.ndarray]]


class RhsTerms(NamedTuple):
    du: np.ndarray
    dv: np.ndarray
    fluxes: FaceFluxes
    react_u: np.ndarray
    react_v: np.ndarray


def regularized_diffusivity(
    g: Union[float, np.ndarray], p: float, epsilon: float
) -> Union[float, np.ndarray]:
    """(g² + ε)^((p-2)/2), elementwise.

    Equals 1 for p = 2 regardless of ε. For p < 2 the coefficient is
    unbounded at g = ε = 0, which raises SingularCoefficientError.
    """
    g = np.asarray(g, dtype=np.float64)
    base = g * g + epsilon
    if p < 2.0 and np.any(base == 0.0):
        raise SingularCoefficientError(
            f"(|g|^2 + eps)^((p-2)/2) is singular at g = eps = 0 for p={p}"
        )
    coef = np.power(base, (p - 2.0) / 2.0)
    return float(coef) if coef.ndim == 0 else coef


def face_gradient(field: np.ndarray, grid: Grid) -> np.ndarray:
    """Centred differences at interior faces; the two boundary faces are 0."""
    grad = np.zeros(grid.n_cells + 1)
    grad[1:-1] = np.diff(field) / grid.dx
    return grad


def effective_diffusivity(
    field: np.ndarray, spec: DispersalSpec, grid: Grid, allow_singular: bool = False
) -> np.ndarray:
    """d·[(1-k) + k·c(g)] at the interior faces.

    With allow_singular the singular point evaluates to +inf instead of
    raising, which is what the step-size bound needs.
    """
    g = face_gradient(field, grid)[1:-1]
    if spec.k == 0.0:
        return np.full(g.shape, spec.d)
    if allow_singular:
        with np.errstate(divide="ignore"):
            coef = np.power(g * g + spec.epsilon, (spec.p - 2.0) / 2.0)
    else:
        coef = regularized_diffusivity(g, spec.p, spec.epsilon)
    return spec.d * ((1.0 - spec.k) + spec.k * coef)


def assemble_diffusive_flux(field: np.ndarray, spec: DispersalSpec, grid: Grid) -> np.ndarray:
    """d·[(1-k) + k·c(g)]·g at interior faces; boundary faces left at 0 for the closure."""
    grad = face_gradient(field, grid)
    flux = np.zeros(grid.n_cells + 1)
    interior = grad[1:-1]
    if spec.k == 0.0:
        flux[1:-1] = spec.d * interior
    else:
        coef = spec.d * ((1.0 - spec.k) + spec.k * regularized_diffusivity(
            interior, spec.p, spec.epsilon
        ))
        flux[1:-1] = coef * interior
    return flux


def assemble_advective_flux(field: np.ndarray, drift_q: float, grid: Grid) -> np.ndarray:
    """First-order upwind for rightward drift: face i carries q·field[i-1]."""
    flux = np.zeros(grid.n_cells + 1)
    if drift_q != 0.0:
        flux[1:-1] = drift_q * field[:-1]
    return flux


def species_flux(field: np.ndarray, spec: DispersalSpec, q: float, grid: Grid) -> np.ndarray:
    """Advective minus diffusive flux of one species; boundary faces left at 0."""
    return assemble_advective_flux(field, q, grid) - assemble_diffusive_flux(field, spec, grid)


def interior_fluxes(state: State, cfg: ModelConfig) -> FaceFluxes:
    """Total rightward flux at interior faces, boundary faces pending closure."""
    q = cfg.effective_drift
    return FaceFluxes.model_construct(
        flux_u=species_flux(state.u, cfg.disp_u, q, cfg.grid),
        flux_v=species_flux(state.v, cfg.disp_v, q, cfg.grid),
    )


def apply_boundary_closures(fluxes: FaceFluxes, state: State, cfg: ModelConfig) -> FaceFluxes:
    """Danckwerts upstream, pure advective outflow downstream; no-flux without drift.

    Upstream (x=0) the diffusive flux cancels the advective one, so the
    total face flux is 0. Downstream (x=L) the diffusive part vanishes and
    q·(last cell) leaves the domain.
    """
    flux_u = np.array(fluxes.flux_u, dtype=np.float64)
    flux_v = np.array(fluxes.flux_v, dtype=np.float64)
    flux_u[0] = 0.0
    flux_v[0] = 0.0
    if cfg.drift_enabled:
        flux_u[-1] = cfg.drift_q * state.u[-1]
        flux_v[-1] = cfg.drift_q * state.v[-1]
    else:
        flux_u[-1] = 0.0
        flux_v[-1] = 0.0
    return FaceFluxes.model_construct(flux_u=flux_u, flux_v=flux_v)


def reaction(u, v, m):
    """Lotka-Volterra competition for a shared resource m. Works on scalars or arrays."""
    s = m - u - v
    return u * s, v * s


def evaluate_rhs(
    state: State, cfg: ModelConfig, closure: Optional[Closure] = None
) -> RhsTerms:
    closure = closure or apply_boundary_closures
    fluxes = closure(interior_fluxes(state, cfg), state, cfg)
    dx = cfg.grid.dx
    if cfg.reaction_enabled:
        react_u, react_v = reaction(state.u, state.v, cfg.resource)
    else:
        react_u = np.zeros(state.n_cells)
        react_v = np.zeros(state.n_cells)
    du = -(fluxes.flux_u[1:] - fluxes.flux_u[:-1]) / dx + react_u
    dv = -(fluxes.flux_v[1:] - fluxes.flux_v[:-1]) / dx + react_v
    return RhsTerms(du, dv, fluxes, react_u, react_v)


def semidiscrete_rhs(
    state: State, cfg: ModelConfig, closure: Optional[Closure] = None
) -> tuple[np.ndarray, np.ndarray]:
    """(du/dt, dv/dt) per cell."""
    terms = evaluate_rhs(state, cfg, closure)
    return terms.du, terms.dv


def stacked_rhs(cfg: ModelConfig, closure: Optional[Closure] = None) -> StackedRhs:
    """The rhs on a stacked (2, N) array, with cfg resolved once.

    Returns dy/dt, the per-species reaction integral and the physical
    outflow q·y[:, -1]. The default closures run on plain arrays and match
    evaluate_rhs bit for bit; a custom closure goes through FaceFluxes.
    """
    grid = cfg.grid
    dx = grid.dx
    q = cfg.effective_drift
    m = cfg.resource
    specs = (cfg.disp_u, cfg.disp_v)
    react_on = cfg.reaction_enabled

    if closure is not None:
        def with_closure(y: np.ndarray):
            terms = evaluate_rhs(State.trusted(0.0, y[0], y[1]), cfg, closure)
            react = np.array([terms.react_u.sum() * dx, terms.react_v.sum() * dx])
            return np.vstack((terms.du, terms.dv)), react, q * y[:, -1]

        return with_closure

    def rhs(y: np.ndarray):
        dy = np.empty_like(y)
        react = np.zeros(2)
        shared = m - y[0] - y[1] if react_on else None
        for i, spec in enumerate(specs):
            w = y[i]
            flux = species_flux(w, spec, q, grid)
            # Danckwerts face stays 0; q is 0 without drift
            flux[-1] = q * w[-1]
            dy[i] = -(flux[1:] - flux[:-1]) / dx
            if react_on:
                r = w * shared
                dy[i] += r
                react[i] = r.sum() * dx
        return dy, react, q * y[:, -1]

    return rhs
