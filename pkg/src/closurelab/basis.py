"""Reference-element Legendre machinery, global trigonometric bases, and
Gauss-Legendre quadrature.

Everything downstream (projectors, residuals, kernels) reduces to weighted
sums over the rules built here, so nodes and weights are computed to full
double precision and endpoint values of the Legendre family are produced by
integer sign arithmetic, not by evaluating the recurrence at +-1.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np


def legendre_values(max_degree: int, points) -> np.ndarray:
    """Values of P_0..P_max_degree at the given points, shape (max_degree+1, n)."""
    x = np.atleast_1d(np.asarray(points, dtype=float))
    out = np.empty((max_degree + 1, x.size))
    out[0] = 1.0
    if max_degree >= 1:
        out[1] = x
    for j in range(2, max_degree + 1):
        # three-term recurrence: j P_j = (2j-1) x P_{j-1} - (j-1) P_{j-2}
        out[j] = ((2 * j - 1) * x * out[j - 1] - (j - 1) * out[j - 2]) / j
    return out


def legendre_derivatives(max_degree: int, points) -> np.ndarray:
    """Values of dP_j/dxi at the given points, shape (max_degree+1, n)."""
    x = np.atleast_1d(np.asarray(points, dtype=float))
    vals = legendre_values(max_degree, x)
    out = np.zeros((max_degree + 1, x.size))
    if max_degree >= 1:
        out[1] = 1.0
    for j in range(2, max_degree + 1):
        # P'_j = P'_{j-2} + (2j-1) P_{j-1}
        out[j] = out[j - 2] + (2 * j - 1) * vals[j - 1]
    return out


@dataclass(frozen=True)
class QuadratureRule:
    """Gauss-Legendre rule on [-1, 1]; exact through degree 2*n_nodes - 1."""

    nodes: tuple
    weights: tuple

    @property
    def n_nodes(self) -> int:
        return len(self.nodes)

    def nodes_array(self) -> np.ndarray:
        return np.asarray(self.nodes)

    def weights_array(self) -> np.ndarray:
        return np.asarray(self.weights)

    def integrate(self, values) -> float:
        return float(np.dot(self.weights_array(), np.asarray(values)))


def gauss_rule(n: int) -> QuadratureRule:
    """n-point Gauss-Legendre rule on [-1, 1].

    Nodes are Newton-refined roots of P_n (tolerance 1e-15, 100 iteration cap)
    started from the Chebyshev-angle estimates; weights are 2/((1-x^2) P_n'^2).
    The rule is symmetrized so paired nodes mirror exactly.
    """
    if n < 1:
        raise ValueError(f"gauss_rule requires n >= 1, got {n}")
    if n == 1:
        return QuadratureRule(nodes=(0.0,), weights=(2.0,))

    half = (n + 1) // 2
    nodes = np.zeros(n)
    weights = np.zeros(n)
    for i in range(half):
        x = np.cos(np.pi * (i + 0.75) / (n + 0.5))
        for _ in range(100):
            p = legendre_values(n, x)[:, 0]
            dp = n * (x * p[n] - p[n - 1]) / (x * x - 1.0)
            dx = p[n] / dp
            x -= dx
            if abs(dx) < 1e-15:
                break
        p = legendre_values(n, x)[:, 0]
        dp = n * (x * p[n] - p[n - 1]) / (x * x - 1.0)
        w = 2.0 / ((1.0 - x * x) * dp * dp)
        # Chebyshev guesses above enumerate the negative half in this ordering.
        nodes[i], weights[i] = x, w
        nodes[n - 1 - i], weights[n - 1 - i] = -x, w
    if n % 2 == 1:
        nodes[half - 1] = 0.0
        p = legendre_values(n, 0.0)[:, 0]
        dp = n * (0.0 - p[n - 1]) / (-1.0)
        weights[half - 1] = 2.0 / (dp * dp)
    order = np.argsort(nodes)
    return QuadratureRule(nodes=tuple(nodes[order]), weights=tuple(weights[order]))


@dataclass(frozen=True)
class LegendreBasis:
    """Unnormalized Legendre family P_0..P_max_degree on [-1, 1].

    Mass matrices are retained (reference mass of P_j is 2/(2j+1)) rather than
    orthonormalizing, so endpoint algebra stays in integer arithmetic.
    """

    max_degree: int

    def __post_init__(self):
        if self.max_degree < 0:
            raise ValueError("max_degree must be >= 0")

    @property
    def n_funcs(self) -> int:
        return self.max_degree + 1

    def values(self, points) -> np.ndarray:
        return legendre_values(self.max_degree, points)

    def derivatives(self, points) -> np.ndarray:
        return legendre_derivatives(self.max_degree, points)

    def endpoint_values(self, side: int) -> np.ndarray:
        """P_j(+1) or P_j(-1) exactly: 1 and (-1)^j."""
        if side not in (+1, -1):
            raise ValueError("side must be +1 or -1")
        j = np.arange(self.max_degree + 1)
        if side == +1:
            return np.ones(self.max_degree + 1)
        return np.where(j % 2 == 0, 1.0, -1.0)

    def reference_masses(self) -> np.ndarray:
        """(P_j, P_j) on [-1, 1]: 2/(2j+1)."""
        j = np.arange(self.max_degree + 1)
        return 2.0 / (2.0 * j + 1.0)

    def modal_derivative_matrix(self) -> np.ndarray:
        """Matrix D with (D c)_i = coefficients of d/dxi sum_j c_j P_j.

        D[i, j] = 2i+1 for j > i with j - i odd, else 0.
        """
        n = self.max_degree + 1
        i = np.arange(n)[:, None]
        j = np.arange(n)[None, :]
        return np.where((j > i) & ((j - i) % 2 == 1), 2.0 * i + 1.0, 0.0)


@dataclass(frozen=True)
class FourierBasis:
    """Real trigonometric family {1, cos kx, sin kx : k=1..max_mode} on [0, 2pi).

    Function index 0 is the constant; indices 2k-1 and 2k are cos(kx), sin(kx).
    """

    max_mode: int

    def __post_init__(self):
        if self.max_mode < 0:
            raise ValueError("max_mode must be >= 0")

    @property
    def n_funcs(self) -> int:
        return 2 * self.max_mode + 1

    def wavenumbers(self) -> np.ndarray:
        k = np.zeros(self.n_funcs, dtype=int)
        for m in range(1, self.max_mode + 1):
            k[2 * m - 1] = m
            k[2 * m] = m
        return k

    def values(self, points) -> np.ndarray:
        x = np.atleast_1d(np.asarray(points, dtype=float))
        out = np.empty((self.n_funcs, x.size))
        out[0] = 1.0
        for m in range(1, self.max_mode + 1):
            out[2 * m - 1] = np.cos(m * x)
            out[2 * m] = np.sin(m * x)
        return out

    def derivatives(self, points) -> np.ndarray:
        x = np.atleast_1d(np.asarray(points, dtype=float))
        out = np.zeros((self.n_funcs, x.size))
        for m in range(1, self.max_mode + 1):
            out[2 * m - 1] = -m * np.sin(m * x)
            out[2 * m] = m * np.cos(m * x)
        return out

    def reference_masses(self) -> np.ndarray:
        m = np.full(self.n_funcs, np.pi)
        m[0] = 2.0 * np.pi
        return m

    def quadrature_grid(self, n_points: int):
        """Uniform periodic grid with equal weights 2pi/n; exact for
        trigonometric polynomials of degree < n_points."""
        x = 2.0 * np.pi * np.arange(n_points) / n_points
        w = np.full(n_points, 2.0 * np.pi / n_points)
        return x, w


def eval_basis(basis, degrees, points):
    """Value and derivative matrices of the requested basis functions.

    Returns (values, derivatives) with shape (len(degrees), len(points)).
    Indices outside the basis raise ValueError.
    """
    degrees = np.atleast_1d(np.asarray(degrees, dtype=int))
    if degrees.size and (degrees.min() < 0 or degrees.max() >= basis.n_funcs):
        raise ValueError(
            f"basis function index out of range: have 0..{basis.n_funcs - 1}, "
            f"requested {degrees.min()}..{degrees.max()}"
        )
    return basis.values(points)[degrees], basis.derivatives(points)[degrees]


def mass_matrix(basis, degrees, jacobian: float) -> np.ndarray:
    """Diagonal of the mass matrix for the requested functions, scaled by the
    element half-width jacobian (off-diagonals are identically zero)."""
    if jacobian <= 0:
        raise ValueError(f"jacobian must be positive, got {jacobian}")
    degrees = np.atleast_1d(np.asarray(degrees, dtype=int))
    if degrees.size and (degrees.min() < 0 or degrees.max() >= basis.n_funcs):
        raise ValueError("basis function index out of range")
    if isinstance(basis, FourierBasis):
        # Global periodic basis: masses are 2pi / pi, no element scaling.
        return basis.reference_masses()[degrees]
    return jacobian * basis.reference_masses()[degrees]


def default_rule_for(max_degree: int) -> QuadratureRule:
    """Padded rule with 2N+2 points: exact for all quadratic-in-basis
    integrands (and the quadratic flux) up to degree N."""
    return gauss_rule(2 * max_degree + 2)
