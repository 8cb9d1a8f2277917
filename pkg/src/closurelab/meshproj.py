"""1D meshes, hierarchical coarse/fine scale splits, and L2 projectors.

The split is hierarchical: on a Legendre split the coarse space is spanned by
degrees 0..p per element and the fine space by everything L2-orthogonal to it.
Projection onto the fine scales never needs fine basis functions (residual
minus its coarse projection); an explicit fine truncation enters only where a
fine basis is unavoidable (the tabulated projection kernel, endpoint sums,
and the truncated-system oracles).
"""

from __future__ import annotations

import functools
from dataclasses import dataclass

import numpy as np

from .basis import FourierBasis, LegendreBasis, gauss_rule

LEGENDRE = "legendre"
FOURIER = "fourier"


@dataclass(frozen=True)
class Mesh1D:
    """Uniform partition of [a, b] into n_elem non-overlapping elements."""

    a: float
    b: float
    n_elem: int
    periodic: bool = True

    def __post_init__(self):
        if not self.b > self.a:
            raise ValueError("mesh requires b > a")
        if self.n_elem < 1:
            raise ValueError("mesh requires n_elem >= 1")

    @property
    def h(self) -> float:
        return (self.b - self.a) / self.n_elem

    def edges(self) -> np.ndarray:
        return np.linspace(self.a, self.b, self.n_elem + 1)

    def centers(self) -> np.ndarray:
        e = self.edges()
        return 0.5 * (e[:-1] + e[1:])

    def locate(self, x) -> np.ndarray:
        """Element index of each point (right endpoint belongs to the last)."""
        x = np.asarray(x, dtype=float)
        k = np.floor((x - self.a) / self.h).astype(int)
        return np.clip(k, 0, self.n_elem - 1)

    def to_reference(self, x, k) -> np.ndarray:
        return (np.asarray(x) - self.centers()[k]) / (0.5 * self.h)


@dataclass(frozen=True)
class ScaleSplit:
    """Hierarchical coarse/fine decomposition of the trial space.

    Legendre: coarse_degree is the per-element coarse polynomial degree p,
    fine_max_degree N > p is the truncation used wherever an explicit fine
    basis is required. Fourier: the two fields are wavenumber cutoffs
    (coarse modes k <= coarse_degree, grid capacity fine_max_degree).
    """

    kind: str
    coarse_degree: int
    fine_max_degree: int

    def __post_init__(self):
        if self.kind not in (LEGENDRE, FOURIER):
            raise ValueError(f"unknown split kind {self.kind!r}")
        if self.coarse_degree < 0:
            raise ValueError("coarse_degree must be >= 0")
        if self.fine_max_degree <= self.coarse_degree:
            raise ValueError("fine_max_degree must exceed coarse_degree")

    @property
    def n_coarse(self) -> int:
        if self.kind == LEGENDRE:
            return self.coarse_degree + 1
        return 2 * self.coarse_degree + 1

    @property
    def fine_degrees(self) -> np.ndarray:
        return np.arange(self.coarse_degree + 1, self.fine_max_degree + 1)


@dataclass(frozen=True)
class CoarseState:
    """Coarse modal coefficients, layout [element][mode], at time t."""

    coeffs: np.ndarray
    t: float = 0.0

    def copy_with(self, coeffs=None, t=None) -> "CoarseState":
        return CoarseState(
            coeffs=self.coeffs if coeffs is None else coeffs,
            t=self.t if t is None else t,
        )


@dataclass(frozen=True)
class FineState:
    """Fine modal coefficients (degrees p+1..N), layout [element][mode]."""

    coeffs: np.ndarray
    t: float = 0.0


def split_full_state(split: ScaleSplit, full_coeffs, t: float = 0.0):
    """Partition a full hierarchical state into coarse and fine parts."""
    full = np.atleast_2d(np.asarray(full_coeffs, dtype=float))
    nc = split.n_coarse
    return CoarseState(coeffs=full[:, :nc], t=t), FineState(coeffs=full[:, nc:], t=t)


class LegendreMeshSpace:
    """Cached quadrature/basis tables for a Legendre split on a mesh.

    The rule has 2N+2 points per element, so any product of two functions of
    degree <= N (and the quadratic flux) is integrated exactly. Full-degree
    modal transforms (degrees 0..2N+1) are exact on the grid's polynomial
    space, which is what makes the projection identity usable for residuals.
    """

    def __init__(self, mesh: Mesh1D, split: ScaleSplit):
        if split.kind != LEGENDRE:
            raise ValueError("LegendreMeshSpace requires a legendre split")
        self.mesh = mesh
        self.split = split
        self.n_q = 2 * split.fine_max_degree + 2
        self.rule = gauss_rule(self.n_q)
        self.full_degree = self.n_q - 1
        self.basis = LegendreBasis(self.full_degree)
        xi = self.rule.nodes_array()
        self.ref_nodes = xi
        self.ref_weights = self.rule.weights_array()
        self.V = self.basis.values(xi)              # (full+1, n_q)
        self.Vd = self.basis.derivatives(xi)        # d/dxi
        self.ref_masses = self.basis.reference_masses()
        self.masses = 0.5 * mesh.h * self.ref_masses
        self.jacobian = 0.5 * mesh.h
        # to-modal operator: c_j = sum_q (2j+1)/2 w_q P_j(xi_q) g_q
        self.analysis = ((2 * np.arange(self.full_degree + 1) + 1) / 2.0)[:, None] * (
            self.V * self.ref_weights
        )
        self.modal_dx = self.basis.modal_derivative_matrix() * (2.0 / mesh.h)
        self.end_plus = self.basis.endpoint_values(+1)
        self.end_minus = self.basis.endpoint_values(-1)
        self.nodes = mesh.centers()[:, None] + self.jacobian * xi[None, :]
        self.phys_weights = self.jacobian * self.ref_weights

    # -- modal transforms (full grid degree) --

    def to_modal(self, g: np.ndarray) -> np.ndarray:
        return np.asarray(g) @ self.analysis.T

    def from_modal(self, c: np.ndarray) -> np.ndarray:
        return np.asarray(c) @ self.V

    def dx(self, g: np.ndarray) -> np.ndarray:
        return self.from_modal(self.to_modal(g) @ self.modal_dx.T)

    def dxx(self, g: np.ndarray) -> np.ndarray:
        c = self.to_modal(g) @ self.modal_dx.T @ self.modal_dx.T
        return self.from_modal(c)

    def traces_from_modal(self, c: np.ndarray):
        """(left, right) endpoint values of each element's modal polynomial."""
        return c @ self.end_minus[: c.shape[1]], c @ self.end_plus[: c.shape[1]]

    def inner(self, f: np.ndarray, g: np.ndarray) -> float:
        return float(np.sum((np.asarray(f) * np.asarray(g)) @ self.phys_weights))

    def test_inner(self, degrees, g: np.ndarray) -> np.ndarray:
        """(w_j, g) per element for the requested degrees, shape (n_elem, len)."""
        W = self.V[degrees] * self.ref_weights
        return self.jacobian * (np.asarray(g) @ W.T)


class FourierSpace:
    """Cached grid/basis tables for a global Fourier split on [0, 2pi).

    Uniform grid with 3K+4 points: trapezoid quadrature is exact through
    trigonometric degree 3K+3, which covers the quadratic flux tested
    against any basis function (the padded-rule analog of the 3/2 rule), so
    no modal dealiasing step is needed anywhere.
    """

    def __init__(self, mesh: Mesh1D, split: ScaleSplit):
        if split.kind != FOURIER:
            raise ValueError("FourierSpace requires a fourier split")
        if not mesh.periodic or mesh.n_elem != 1:
            raise ValueError("fourier split requires a single periodic element")
        if abs(mesh.a) > 1e-14 or abs(mesh.b - 2 * np.pi) > 1e-12:
            raise ValueError("fourier split is defined on [0, 2pi)")
        self.mesh = mesh
        self.split = split
        self.basis = FourierBasis(split.fine_max_degree)
        self.n_q = 3 * split.fine_max_degree + 4
        x, w = self.basis.quadrature_grid(self.n_q)
        self.nodes = x[None, :]
        self.phys_weights = w
        self.V = self.basis.values(x)
        self.Vd = self.basis.derivatives(x)
        self.ref_masses = self.basis.reference_masses()
        self.masses = self.ref_masses
        self.analysis = (self.V * w) / self.masses[:, None]
        self.wavenumbers = self.basis.wavenumbers()

    def to_modal(self, g: np.ndarray) -> np.ndarray:
        return np.asarray(g) @ self.analysis.T

    def from_modal(self, c: np.ndarray) -> np.ndarray:
        return np.asarray(c) @ self.V

    def dx(self, g: np.ndarray) -> np.ndarray:
        gh = np.fft.rfft(np.asarray(g), axis=-1)
        k = np.arange(gh.shape[-1])
        gh = gh * (1j * k)
        gh[..., -1] = 0.0  # Nyquist mode has no odd-derivative representation
        return np.fft.irfft(gh, n=self.n_q, axis=-1)

    def dxx(self, g: np.ndarray) -> np.ndarray:
        gh = np.fft.rfft(np.asarray(g), axis=-1)
        k = np.arange(gh.shape[-1])
        gh = gh * -(k**2)
        return np.fft.irfft(gh, n=self.n_q, axis=-1)

    def inner(self, f: np.ndarray, g: np.ndarray) -> float:
        return float(np.sum((np.asarray(f) * np.asarray(g)) @ self.phys_weights))

    def test_inner(self, indices, g: np.ndarray) -> np.ndarray:
        W = self.V[indices] * self.phys_weights
        return np.asarray(g) @ W.T


@functools.lru_cache(maxsize=64)
def space_for(mesh: Mesh1D, split: ScaleSplit):
    if split.kind == LEGENDRE:
        return LegendreMeshSpace(mesh, split)
    return FourierSpace(mesh, split)


def _check_finite(g: np.ndarray):
    if not np.all(np.isfinite(g)):
        raise ValueError("grid function contains NaN/Inf; refusing to project")


def _coarse_indices(split: ScaleSplit) -> np.ndarray:
    if split.kind == LEGENDRE:
        return np.arange(split.coarse_degree + 1)
    return np.arange(2 * split.coarse_degree + 1)


def project_coarse(split: ScaleSplit, mesh: Mesh1D, g: np.ndarray, t: float = 0.0) -> CoarseState:
    """L2 projection of a grid function onto the coarse space."""
    g = np.atleast_2d(np.asarray(g, dtype=float))
    _check_finite(g)
    space = space_for(mesh, split)
    idx = _coarse_indices(split)
    coeffs = space.test_inner(idx, g) / space.masses[idx]
    return CoarseState(coeffs=coeffs, t=t)


def reconstruct(split: ScaleSplit, mesh: Mesh1D, state: CoarseState) -> np.ndarray:
    """Grid-function values of a coarse state on the mesh quadrature nodes."""
    space = space_for(mesh, split)
    idx = _coarse_indices(split)
    return np.asarray(state.coeffs) @ space.V[idx]


def project_fine_residual(split: ScaleSplit, mesh: Mesh1D, g: np.ndarray) -> np.ndarray:
    """Fine-scale part of g: g minus its coarse reconstruction.

    Needs only coarse information; the result is L2-orthogonal to every
    coarse basis function in the mesh inner product.
    """
    g = np.atleast_2d(np.asarray(g, dtype=float))
    _check_finite(g)
    return g - reconstruct(split, mesh, project_coarse(split, mesh, g))


def fine_projector_kernel(split: ScaleSplit, mesh: Mesh1D, x_grid, y_grid) -> np.ndarray:
    """Tabulated fine-projection kernel sum_j w'_j(x) w'_j(y) / m'_j.

    Block-diagonal for the Legendre split (zero when x and y lie in distinct
    elements); translation-invariant for the Fourier split. The fine family
    is truncated at split.fine_max_degree.
    """
    x = np.atleast_1d(np.asarray(x_grid, dtype=float))
    y = np.atleast_1d(np.asarray(y_grid, dtype=float))
    if split.fine_degrees.size == 0:
        raise ValueError("fine scale set is empty")
    if split.kind == LEGENDRE:
        basis = LegendreBasis(split.fine_max_degree)
        kx = mesh.locate(x)
        ky = mesh.locate(y)
        Vx = basis.values(mesh.to_reference(x, kx))
        Vy = basis.values(mesh.to_reference(y, ky))
        fine = split.fine_degrees
        m = 0.5 * mesh.h * basis.reference_masses()[fine]
        scale = 1.0 / np.sqrt(m)[:, None]  # split mass evenly so the table is
        table = np.einsum("jx,jy->xy", Vx[fine] * scale, Vy[fine] * scale)  # symmetric bitwise
        same = kx[:, None] == ky[None, :]
        return np.where(same, table, 0.0)
    basis = FourierBasis(split.fine_max_degree)
    Vx = basis.values(x)
    Vy = basis.values(y)
    fine = np.arange(2 * split.coarse_degree + 1, basis.n_funcs)
    m = basis.reference_masses()[fine]
    scale = 1.0 / np.sqrt(m)[:, None]
    return np.einsum("jx,jy->xy", Vx[fine] * scale, Vy[fine] * scale)


def save_kernel_csv(path, x_grid, y_grid, table: np.ndarray):
    """GreensField-style serialization: columns x, y, value."""
    x = np.asarray(x_grid)
    y = np.asarray(y_grid)
    with open(path, "w") as fh:
        fh.write("x,y,value\n")
        for i in range(x.size):
            for j in range(y.size):
                fh.write(f"{x[i]:.17g},{y[j]:.17g},{table[i, j]:.17g}\n")


def load_kernel_csv(path):
    data = np.loadtxt(path, delimiter=",", skiprows=1)
    x = np.unique(data[:, 0])
    y = np.unique(data[:, 1])
    table = data[:, 2].reshape(x.size, y.size)
    return x, y, table
