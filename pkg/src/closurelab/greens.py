"""Discrete fine-scale Green's functions for steady advection-diffusion, the
orthogonal-projection approximation, and the stabilized steady solvers.

The coarse space is the interior P1 hat family on (0, 1); the fine space is
realized at a finite truncation by per-element integrated-Legendre bubbles
L2-orthogonalized against the hats (hierarchical refinement plus static
condensation). The weak operator is B(w, u) = c (w, u_x) + nu (w_x, u_x) on
the homogeneous-Dirichlet space, so no boundary terms survive.
"""

from __future__ import annotations

import functools
from dataclasses import dataclass

import numpy as np

from .basis import LegendreBasis, gauss_rule
from .meshproj import fine_projector_kernel
from .operators import LinearOperator1D

EXACT = "exact"
ORTHOGONAL = "orthogonal-approx"


@dataclass(frozen=True)
class SteadyProblem:
    """Steady advection-diffusion on (0, 1) with homogeneous Dirichlet data."""

    physics: LinearOperator1D
    n_elem: int = 16
    forcing: object = None  # callable f(x); None means f = 1

    def __post_init__(self):
        if self.physics.nu <= 0:
            raise ValueError("steady problem requires nu > 0 for well-posedness")
        if self.n_elem < 2:
            raise ValueError("need at least two elements for interior nodes")

    def forcing_values(self, x):
        if self.forcing is None:
            return np.ones_like(x)
        return np.asarray(self.forcing(x), dtype=float)


@dataclass(frozen=True)
class GreensField:
    """Tabulated two-point kernel on an evaluation grid."""

    x_grid: np.ndarray
    y_grid: np.ndarray
    values: np.ndarray  # (len(x_grid), len(y_grid))
    kind: str
    condition: float = np.nan  # conditioning of the condensed fine solve

    def asymmetry(self) -> float:
        if self.x_grid.shape != self.y_grid.shape or not np.allclose(
            self.x_grid, self.y_grid
        ):
            raise ValueError("asymmetry metric needs matching grids")
        return float(np.max(np.abs(self.values - self.values.T)))

    def localization(self, width: float) -> float:
        """Fraction of absolute kernel mass with |x - y| <= width."""
        X = self.x_grid[:, None]
        Y = self.y_grid[None, :]
        mass = np.abs(self.values)
        near = mass[np.abs(X - Y) <= width].sum()
        total = mass.sum()
        return float(near / total) if total > 0 else 1.0

    def save_csv(self, path):
        with open(path, "w") as fh:
            fh.write("x,y,value,kind\n")
            for i, x in enumerate(self.x_grid):
                for j, y in enumerate(self.y_grid):
                    fh.write(f"{x:.17g},{y:.17g},{self.values[i, j]:.17g},{self.kind}\n")


def load_greens_csv(path) -> GreensField:
    rows = []
    kind = None
    with open(path) as fh:
        header = fh.readline().strip().split(",")
        if header[:3] != ["x", "y", "value"]:
            raise ValueError(f"unexpected greens CSV header: {header}")
        for line in fh:
            parts = line.strip().split(",")
            if len(parts) < 3:
                raise ValueError("malformed greens CSV row")
            rows.append([float(parts[0]), float(parts[1]), float(parts[2])])
            if len(parts) > 3:
                kind = parts[3]
    if not rows:
        raise ValueError("empty greens CSV")
    data = np.asarray(rows)
    x = np.unique(data[:, 0])
    y = np.unique(data[:, 1])
    values = data[:, 2].reshape(x.size, y.size)
    return GreensField(x_grid=x, y_grid=y, values=values, kind=kind or "unknown")


class SteadySplitSpace:
    """Hat + bubble hierarchy on (0, 1) with the L2-orthogonalized fine family.

    n_fine is the per-element bubble truncation degree (bubbles 2..n_fine);
    the global fine family is w'_m = b_m - (hat projection of b_m), which is
    L2-orthogonal to every hat by construction.
    """

    def __init__(self, n_elem: int, n_fine: int):
        if n_fine < 2:
            raise ValueError("fine truncation must include at least degree 2")
        self.n_elem = n_elem
        self.n_fine = n_fine
        self.h = 1.0 / n_elem
        self.n_hat = n_elem - 1
        self.n_bub_per = n_fine - 1
        self.n_fine_total = self.n_bub_per * n_elem
        rule = gauss_rule(n_fine + 3)
        self.xi = rule.nodes_array()
        self.wq = rule.weights_array() * (self.h / 2.0)
        self.edges = np.linspace(0.0, 1.0, n_elem + 1)
        self.centers = 0.5 * (self.edges[:-1] + self.edges[1:])
        self.nodes = self.centers[:, None] + (self.h / 2.0) * self.xi[None, :]
        nq = self.xi.size

        basis = LegendreBasis(n_fine)
        V = basis.values(self.xi)
        Vd = basis.derivatives(self.xi) * (2.0 / self.h)
        bub_vals = np.array([V[j] - V[j - 2] for j in range(2, n_fine + 1)])
        bub_derivs = np.array([Vd[j] - Vd[j - 2] for j in range(2, n_fine + 1)])

        self.hat_vals = np.zeros((self.n_hat, n_elem, nq))
        self.hat_derivs = np.zeros((self.n_hat, n_elem, nq))
        for i in range(self.n_hat):
            self.hat_vals[i, i] = (self.nodes[i] - self.edges[i]) / self.h
            self.hat_derivs[i, i] = 1.0 / self.h
            self.hat_vals[i, i + 1] = (self.edges[i + 2] - self.nodes[i + 1]) / self.h
            self.hat_derivs[i, i + 1] = -1.0 / self.h

        self.hat_mass = self._pair(self.hat_vals, self.hat_vals)

        # coarse projection coefficients of every bubble
        rhs = np.zeros((self.n_hat, self.n_fine_total))
        for k in range(n_elem):
            for m in range(self.n_bub_per):
                col = k * self.n_bub_per + m
                for i in (k - 1, k):
                    if 0 <= i < self.n_hat:
                        rhs[i, col] = np.dot(self.wq * self.hat_vals[i, k], bub_vals[m])
        self.bubble_hat_coeffs = np.linalg.solve(self.hat_mass, rhs)

        # global fine tables on the quadrature grid
        F = np.zeros((self.n_fine_total, n_elem, nq))
        Fd = np.zeros_like(F)
        for k in range(n_elem):
            rows = slice(k * self.n_bub_per, (k + 1) * self.n_bub_per)
            F[rows, k] = bub_vals
            Fd[rows, k] = bub_derivs
        C = self.bubble_hat_coeffs
        for i in range(self.n_hat):
            for k in (i, i + 1):
                F[:, k, :] -= C[i][:, None] * self.hat_vals[i, k][None, :]
                Fd[:, k, :] -= C[i][:, None] * self.hat_derivs[i, k][None, :]
        self.fine_vals = F
        self.fine_derivs = Fd
        self.fine_mass = self._pair(F, F)

    def _pair(self, A, B) -> np.ndarray:
        out = np.zeros((A.shape[0], B.shape[0]))
        for k in range(self.n_elem):
            out += (A[:, k, :] * self.wq) @ B[:, k, :].T
        return out

    def hat_at(self, x) -> np.ndarray:
        x = np.atleast_1d(np.asarray(x, dtype=float))
        out = np.zeros((self.n_hat, x.size))
        for i in range(self.n_hat):
            left, mid, right = self.edges[i], self.edges[i + 1], self.edges[i + 2]
            rising = (x >= left) & (x <= mid)
            falling = (x > mid) & (x <= right)
            out[i, rising] = (x[rising] - left) / self.h
            out[i, falling] = (right - x[falling]) / self.h
        return out

    def bubbles_at(self, x) -> np.ndarray:
        x = np.atleast_1d(np.asarray(x, dtype=float))
        k = np.clip((x / self.h).astype(int), 0, self.n_elem - 1)
        xi = (x - self.centers[k]) / (self.h / 2.0)
        V = LegendreBasis(self.n_fine).values(xi)
        out = np.zeros((self.n_fine_total, x.size))
        for m in range(self.n_bub_per):
            vals = V[m + 2] - V[m]
            out[k * self.n_bub_per + m, np.arange(x.size)] = vals
        return out

    def fine_at(self, x) -> np.ndarray:
        """w' values at arbitrary points: bubbles minus their hat projection."""
        return self.bubbles_at(x) - self.bubble_hat_coeffs.T @ self.hat_at(x)

    def fine_operator(self, physics: LinearOperator1D) -> np.ndarray:
        """K = (w', L w'^T) with B(w, u) = c (w, u_x) + nu (w_x, u_x)."""
        adv = self._pair(self.fine_vals, self.fine_derivs)
        stiff = self._pair(self.fine_derivs, self.fine_derivs)
        return physics.c * adv + physics.nu * stiff

    def fine_residual_of_hats(self, physics, u_hat_coeffs, f_vals) -> np.ndarray:
        """(w'_m, L u - f) for a hat-expanded u (weak diffusion form)."""
        u_x = np.einsum("i,ikq->kq", u_hat_coeffs, self.hat_derivs)
        out = np.zeros(self.n_fine_total)
        for k in range(self.n_elem):
            out += (self.fine_vals[:, k, :] * self.wq) @ (
                physics.c * u_x[k] - f_vals[k]
            )
            out += physics.nu * (self.fine_derivs[:, k, :] * self.wq) @ u_x[k]
        return out


@functools.lru_cache(maxsize=16)
def steady_space(n_elem: int, n_fine: int) -> SteadySplitSpace:
    return SteadySplitSpace(n_elem, n_fine)


def default_grids(problem: SteadyProblem, per_elem: int = 8):
    """Uniform evaluation grid, per_elem points per element, open at 0 and 1
    (the kernel vanishes on the boundary by construction)."""
    n = problem.n_elem * per_elem
    delta = 0.5 / n
    x = np.linspace(delta, 1.0 - delta, n)
    return x, x.copy()


def exact_fine_greens(problem: SteadyProblem, n_fine: int, x_grid, y_grid) -> GreensField:
    """Discrete fine-scale Green's function by hierarchical static
    condensation: g(x, y) = w'(y)^T K^{-1} w'(x) at truncation n_fine."""
    space = steady_space(problem.n_elem, n_fine)
    K = space.fine_operator(problem.physics)
    cond = float(np.linalg.cond(K))
    if not np.isfinite(cond) or cond > 1e14:
        raise ValueError(f"condensed fine operator is singular (condition {cond:.2e})")
    x = np.atleast_1d(np.asarray(x_grid, dtype=float))
    y = np.atleast_1d(np.asarray(y_grid, dtype=float))
    Wx = space.fine_at(x)
    Wy = space.fine_at(y)
    values = np.linalg.solve(K, Wx).T @ Wy  # [i, j] = w'(y_j)^T K^{-1} w'(x_i)
    return GreensField(x_grid=x, y_grid=y, values=values, kind=EXACT, condition=cond)


def greens_cauchy_gap(problem: SteadyProblem, n_fine: int, x_grid, y_grid) -> float:
    """Max-norm relative gap between truncations n_fine and 2*n_fine."""
    g1 = exact_fine_greens(problem, n_fine, x_grid, y_grid)
    g2 = exact_fine_greens(problem, 2 * n_fine, x_grid, y_grid)
    scale = np.max(np.abs(g2.values))
    return float(np.max(np.abs(g1.values - g2.values)) / scale)


def apply_greens(field: GreensField, residual_at_x, weights) -> np.ndarray:
    """u'(y) = -int g(x, y) r(x) dx by quadrature on the tabulated x grid."""
    r = np.asarray(residual_at_x, dtype=float)
    w = np.asarray(weights, dtype=float)
    return -(field.values.T @ (w * r))


def orthogonal_greens(source, tau: float, x_grid, y_grid, n_fine: int = None) -> GreensField:
    """tau times the fine-projection kernel.

    source: a SteadyProblem (hat coarse space, requires n_fine) or a
    (ScaleSplit, Mesh1D) pair for the hierarchical Legendre split.
    """
    if tau < 0:
        raise ValueError("tau must be nonnegative")
    x = np.atleast_1d(np.asarray(x_grid, dtype=float))
    y = np.atleast_1d(np.asarray(y_grid, dtype=float))
    if isinstance(source, SteadyProblem):
        if n_fine is None:
            raise ValueError("orthogonal kernel on the steady split needs n_fine")
        space = steady_space(source.n_elem, n_fine)
        Wx = space.fine_at(x)
        Wy = space.fine_at(y)
        values = tau * (np.linalg.solve(space.fine_mass, Wx).T @ Wy)
        return GreensField(x_grid=x, y_grid=y, values=values, kind=ORTHOGONAL)
    split, mesh = source
    table = fine_projector_kernel(split, mesh, x, y)
    return GreensField(x_grid=x, y_grid=y, values=tau * table, kind=ORTHOGONAL)


def _hat_system(problem: SteadyProblem, space: SteadySplitSpace):
    """Galerkin matrix and load vector on the hat space."""
    c, nu = problem.physics.c, problem.physics.nu
    adv = space._pair(space.hat_vals, space.hat_derivs)
    stiff = space._pair(space.hat_derivs, space.hat_derivs)
    f_vals = problem.forcing_values(space.nodes)
    load = np.einsum("ikq,kq,q->i", space.hat_vals, f_vals, space.wq)
    return c * adv + nu * stiff, load, f_vals


def steady_adjoint_stabilized_solve(problem: SteadyProblem, tau_field) -> np.ndarray:
    """Adjoint-stabilized P1 solve: (w, L u) - (L* w, tau (L u - f)) = (w, f).

    tau_field: scalar or per-element array; element-interior residuals only
    (a P1 trial has no second derivative there). tau_field = 0 recovers plain
    Galerkin. Returns interior nodal values.
    """
    space = steady_space(problem.n_elem, 2)
    A, load, f_vals = _hat_system(problem, space)
    tau = np.broadcast_to(np.asarray(tau_field, dtype=float), (space.n_elem,))
    c = problem.physics.c
    for k in range(space.n_elem):
        # -(L* w_i, tau L u_j) with L* w = -c w_x, L u = c u_x elementwise
        A += tau[k] * c * c * (
            (space.hat_derivs[:, k, :] * space.wq) @ space.hat_derivs[:, k, :].T
        )
        load += tau[k] * c * (space.hat_derivs[:, k, :] * space.wq) @ f_vals[k]
    try:
        return np.linalg.solve(A, load)
    except np.linalg.LinAlgError as exc:
        raise ValueError(f"stabilized steady matrix is singular: {exc}") from exc


def tau_model_system(problem: SteadyProblem, tau: float, n_fine: int, route: str):
    """Stabilized system (w, L u) - tau (L* w, Pi'(L u - f)) = (w, f).

    route "projection": the orthogonal projection is applied through the fine
    family (mass solve). route "kernel": the identical term assembled from
    the tabulated kernel tau Pi'(x, y) by double quadrature, i.e. the adjoint
    stabilization form with the approximate Green's function swapped in.
    """
    space = steady_space(problem.n_elem, n_fine)
    A, load, f_vals = _hat_system(problem, space)
    c = problem.physics.c
    n_hat = space.n_hat
    nq = space.xi.size
    Lstar = np.zeros((n_hat, space.n_elem, nq))
    Ltrial = np.zeros((n_hat, space.n_elem, nq))
    for i in range(n_hat):
        for k in (i, i + 1):
            Lstar[i, k] = -c * space.hat_derivs[i, k]
            Ltrial[i, k] = c * space.hat_derivs[i, k]

    if route == "projection":
        F = space.fine_vals
        G = np.zeros((space.n_fine_total, n_hat))   # (w'_m, L hat_j)
        gf = np.zeros(space.n_fine_total)           # (w'_m, f)
        H = np.zeros((n_hat, space.n_fine_total))   # (L* hat_i, w'_m)
        for k in range(space.n_elem):
            G += (F[:, k, :] * space.wq) @ Ltrial[:, k, :].T
            gf += (F[:, k, :] * space.wq) @ f_vals[k]
            H += (Lstar[:, k, :] * space.wq) @ F[:, k, :].T
        stab_matrix = H @ np.linalg.solve(space.fine_mass, G)
        stab_load = H @ np.linalg.solve(space.fine_mass, gf)
    elif route == "kernel":
        xq = space.nodes.ravel()
        wq = np.tile(space.wq, space.n_elem)
        kern = orthogonal_greens(problem, 1.0, xq, xq, n_fine=n_fine).values
        Lstar_flat = Lstar.reshape(n_hat, -1)
        Ltrial_flat = Ltrial.reshape(n_hat, -1)
        stab_matrix = (Lstar_flat * wq) @ kern @ (Ltrial_flat * wq).T
        stab_load = (Lstar_flat * wq) @ kern @ (wq * f_vals.ravel())
    else:
        raise ValueError(f"unknown assembly route {route!r}")

    return A - tau * stab_matrix, load - tau * stab_load


def steady_tau_model_solve(
    problem: SteadyProblem, tau: float, n_fine: int, route: str = "projection"
) -> np.ndarray:
    """Steady memory-closure solve; direct solve of the stabilized system."""
    A, load = tau_model_system(problem, tau, n_fine, route)
    try:
        return np.linalg.solve(A, load)
    except np.linalg.LinAlgError as exc:
        raise ValueError(f"steady closure matrix is singular: {exc}") from exc
