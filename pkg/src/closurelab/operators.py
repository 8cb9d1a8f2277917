"""Semi-discrete residuals, linearizations, numerical fluxes, and the DG
right-hand side for 1D advection(-diffusion) and Burgers problems.

Residuals are pointwise strong-form fields on the quadrature grid; surface
coupling goes through endpoint traces evaluated from modal sums with exact
P_j(+-1) values, never by extrapolating from interior quadrature nodes.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .meshproj import (
    LEGENDRE,
    CoarseState,
    Mesh1D,
    ScaleSplit,
    space_for,
)

PERIODIC = "periodic"
DIRICHLET = "dirichlet"

CENTRAL = "central"
UPWIND = "upwind"
LINEARIZED = "linearized"


@dataclass(frozen=True)
class LinearOperator1D:
    """L = c d/dx - nu d2/dx2."""

    c: float
    nu: float = 0.0

    def __post_init__(self):
        if self.nu < 0:
            raise ValueError("diffusivity must be >= 0")

    def flux(self, u):
        return self.c * u

    def flux_prime(self, u):
        return self.c * np.ones_like(u)


@dataclass(frozen=True)
class BurgersPhysics:
    """R(u) = d/dx (u^2/2) - nu d2u/dx2."""

    nu: float = 0.0

    def __post_init__(self):
        if self.nu < 0:
            raise ValueError("diffusivity must be >= 0")

    def flux(self, u):
        return 0.5 * u * u

    def flux_prime(self, u):
        return u


@dataclass(frozen=True)
class FluxFunction:
    """Interface numerical flux.

    central : mean of the physical flux, f*(a, b) = (f(a) + f(b)) / 2
    upwind  : central plus the |c|/2 jump penalty (linear advection only)
    linearized : flux Jacobian of one of the above frozen about a base state,
        applied to perturbation traces (the b' operator).
    """

    kind: str = CENTRAL
    base: str = CENTRAL  # underlying flux for the linearized kind

    def __post_init__(self):
        if self.kind not in (CENTRAL, UPWIND, LINEARIZED):
            raise ValueError(f"unknown flux kind {self.kind!r}")

    def value(self, physics, u_left, u_right):
        """f*(u_left, u_right) with u_left the trace from the upstream element."""
        if self.kind == CENTRAL:
            return 0.5 * (physics.flux(u_left) + physics.flux(u_right))
        if self.kind == UPWIND:
            if not isinstance(physics, LinearOperator1D):
                raise ValueError("upwind flux is defined for linear advection only")
            c = physics.c
            return 0.5 * c * (u_left + u_right) - 0.5 * abs(c) * (u_right - u_left)
        raise ValueError("linearized flux has no state value; use .linearized")

    def linearized(self, physics, u_left, u_right, v_left, v_right):
        """Directional derivative of f* at (u_left, u_right) in (v_left, v_right)."""
        kind = self.base if self.kind == LINEARIZED else self.kind
        if kind == CENTRAL:
            return 0.5 * (
                physics.flux_prime(u_left) * v_left
                + physics.flux_prime(u_right) * v_right
            )
        if not isinstance(physics, LinearOperator1D):
            raise ValueError("upwind flux is defined for linear advection only")
        c = physics.c
        return 0.5 * c * (v_left + v_right) - 0.5 * abs(c) * (v_right - v_left)


@dataclass(frozen=True)
class JumpData:
    """Per-element interface traces and flux defects.

    df_right[k] = f(u_k^R) - f*(u_k^R, u_{k+1}^L)
    df_left[k]  = f(u_k^L) - f*(u_{k-1}^R, u_k^L)
    """

    u_left: np.ndarray
    u_right: np.ndarray
    df_right: np.ndarray
    df_left: np.ndarray


@dataclass(frozen=True)
class SemiDiscreteProblem:
    """Operator + flux + forcing bundle defining the semi-discrete system."""

    mesh: Mesh1D
    split: ScaleSplit
    physics: object
    forcing: object = None  # callable f(x) or None
    flux: FluxFunction = None
    bc: str = PERIODIC

    def __post_init__(self):
        if self.bc not in (PERIODIC, DIRICHLET):
            raise ValueError(f"unknown boundary kind {self.bc!r}")
        if self.bc == DIRICHLET and self.mesh.periodic:
            raise ValueError("Dirichlet boundaries require a non-periodic mesh")
        if self.bc == PERIODIC and not self.mesh.periodic:
            raise ValueError("periodic boundaries require a periodic mesh")
        if self.flux is not None and self.split.kind != LEGENDRE:
            raise ValueError("numerical fluxes are defined only for the DG split")
        if self.is_dg and getattr(self.physics, "nu", 0.0) > 0.0:
            raise ValueError("viscous DG is out of scope; use nu = 0 with a flux")

    @property
    def is_dg(self) -> bool:
        return self.split.kind == LEGENDRE and self.flux is not None

    def space(self):
        return space_for(self.mesh, self.split)


def _coeffs(state) -> np.ndarray:
    if isinstance(state, CoarseState):
        return np.asarray(state.coeffs)
    return np.atleast_2d(np.asarray(state, dtype=float))


def _grid_values(space, coeffs: np.ndarray) -> np.ndarray:
    """Reconstruct modal coefficients of any width (coarse or full system)."""
    return coeffs @ space.V[: coeffs.shape[1]]


def forcing_grid(problem: SemiDiscreteProblem) -> np.ndarray:
    space = problem.space()
    if problem.forcing is None:
        return np.zeros_like(space.nodes)
    return np.asarray(problem.forcing(space.nodes), dtype=float)


def coarse_residual(problem: SemiDiscreteProblem, state) -> np.ndarray:
    """Pointwise strong residual R(u) - f on the quadrature grid."""
    coeffs = _coeffs(state)
    space = problem.space()
    u = _grid_values(space, coeffs)
    if isinstance(problem.physics, LinearOperator1D):
        res = problem.physics.c * space.dx(u)
    else:
        res = space.dx(0.5 * u * u)
    nu = problem.physics.nu
    if nu > 0.0:
        res = res - nu * space.dxx(u)
    return res - forcing_grid(problem)


def linearized_action(problem: SemiDiscreteProblem, state, v: np.ndarray) -> np.ndarray:
    """Directional derivative of R at the coarse state, applied to v."""
    space = problem.space()
    v = np.atleast_2d(np.asarray(v, dtype=float))
    if isinstance(problem.physics, LinearOperator1D):
        out = problem.physics.c * space.dx(v)
    else:
        u = _grid_values(problem.space(), _coeffs(state))
        # product rule keeps every factor inside the grid's exact polynomial
        # (or trigonometric) space
        out = space.dx(u) * v + u * space.dx(v)
    nu = problem.physics.nu
    if nu > 0.0:
        out = out - nu * space.dxx(v)
    return out


def coarse_traces(problem: SemiDiscreteProblem, state):
    """(u_left, u_right) element endpoint traces of the coarse state."""
    coeffs = _coeffs(state)
    space = problem.space()
    nc = coeffs.shape[1]
    return coeffs @ space.end_minus[:nc], coeffs @ space.end_plus[:nc]


def interface_jumps(
    problem: SemiDiscreteProblem,
    state,
    flux: FluxFunction,
    boundary=None,
) -> JumpData:
    """Flux defects at every element interface.

    For a periodic mesh the neighbor traces wrap around; otherwise boundary
    must supply (inflow_value, outflow_value) ghost traces.
    """
    u_left, u_right = coarse_traces(problem, state)
    if problem.mesh.periodic:
        left_neighbor_right = np.roll(u_right, 1)   # u_{k-1}^R
        right_neighbor_left = np.roll(u_left, -1)   # u_{k+1}^L
    else:
        if boundary is None:
            raise ValueError("non-periodic mesh requires boundary trace data")
        ghost_in, ghost_out = boundary
        left_neighbor_right = np.concatenate([[ghost_in], u_right[:-1]])
        right_neighbor_left = np.concatenate([u_left[1:], [ghost_out]])
    physics = problem.physics
    df_right = physics.flux(u_right) - flux.value(physics, u_right, right_neighbor_left)
    df_left = physics.flux(u_left) - flux.value(physics, left_neighbor_right, u_left)
    return JumpData(u_left=u_left, u_right=u_right, df_right=df_right, df_left=df_left)


def dg_volume_rhs(problem: SemiDiscreteProblem, state) -> np.ndarray:
    """Weak volume term -(dw/dx, f(u)) per element and coarse mode."""
    if not problem.is_dg:
        raise ValueError("dg_volume_rhs requires a DG split with a flux")
    coeffs = _coeffs(state)
    space = problem.space()
    u = _grid_values(space, coeffs)
    f = problem.physics.flux(u)
    nc = coeffs.shape[1]
    # jacobians cancel: dw/dx dx = dw/dxi dxi
    W = space.Vd[:nc] * space.ref_weights
    return -(f @ W.T)


def dg_surface_rhs(problem: SemiDiscreteProblem, state, flux: FluxFunction) -> np.ndarray:
    """Surface term [w(1) f*_R - w(-1) f*_L] per element and coarse mode."""
    u_left, u_right = coarse_traces(problem, state)
    if not problem.mesh.periodic:
        raise ValueError("DG surface assembly implemented for periodic meshes")
    physics = problem.physics
    fstar_right = flux.value(physics, u_right, np.roll(u_left, -1))
    fstar_left = np.roll(fstar_right, 1)
    space = problem.space()
    nc = _coeffs(state).shape[1]
    return (
        fstar_right[:, None] * space.end_plus[:nc]
        - fstar_left[:, None] * space.end_minus[:nc]
    )


def dg_rhs(problem: SemiDiscreteProblem, state, flux: FluxFunction = None) -> np.ndarray:
    """Mass-weighted DG right-hand side: M da/dt = (w_x, f) - surface + (w, f_ext)."""
    flux = flux if flux is not None else problem.flux
    vol = -dg_volume_rhs(problem, state)
    surf = dg_surface_rhs(problem, state, flux)
    out = vol - surf
    if problem.forcing is not None:
        space = problem.space()
        nc = out.shape[1]
        out = out + space.test_inner(np.arange(nc), forcing_grid(problem))
    return out


def galerkin_rhs(problem: SemiDiscreteProblem, state) -> np.ndarray:
    """Mass-weighted spectral-Galerkin right-hand side (w, f - R(u))."""
    space = problem.space()
    nc = _coeffs(state).shape[1]
    res = coarse_residual(problem, state)
    return -space.test_inner(np.arange(nc), res)


def mass_weighted_rhs(problem: SemiDiscreteProblem, state, flux: FluxFunction = None) -> np.ndarray:
    if problem.is_dg or flux is not None:
        return dg_rhs(problem, state, flux)
    return galerkin_rhs(problem, state)


def coarse_masses(problem: SemiDiscreteProblem) -> np.ndarray:
    space = problem.space()
    return space.masses[: problem.split.n_coarse]
