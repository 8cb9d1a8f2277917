"""Independent oracles for the kernel and memory tests.

Everything here deliberately avoids the package's quadrature/projection
machinery: Legendre values come from numpy.polynomial.legendre, grids and
weights are assembled from scratch, and the instantaneous kernel is obtained
by numerically linearizing the truncated coupled system (the brute-force
phase-space route), not by the projection identity.
"""

import numpy as np
import numpy.polynomial.legendre as npleg


def _legendre_matrices(max_degree, x):
    V = npleg.legvander(x, max_degree).T  # (deg+1, n)
    Vd = np.zeros_like(V)
    for j in range(1, max_degree + 1):
        Vd[j] = npleg.legval(x, npleg.legder([0.0] * j + [1.0]))
    return V, Vd


def _fourier_matrices(max_mode, x):
    n = 2 * max_mode + 1
    V = np.empty((n, x.size))
    Vd = np.zeros((n, x.size))
    V[0] = 1.0
    for m in range(1, max_mode + 1):
        V[2 * m - 1] = np.cos(m * x)
        V[2 * m] = np.sin(m * x)
        Vd[2 * m - 1] = -m * np.sin(m * x)
        Vd[2 * m] = m * np.cos(m * x)
    return V, Vd


class TruncatedSpectralSystem:
    """Coupled coarse+fine Galerkin system at an explicit fine truncation.

    kind "fourier": trial family {1, cos kx, sin kx} to wavenumber n_max on
    [0, 2pi). kind "legendre": P_0..P_{n_max} on [-1, 1]. Physics: Burgers
    (quadratic flux) or linear advection-diffusion, strong residual form.
    """

    def __init__(self, kind, n_coarse_funcs, n_max, nu=0.0, c=None, forcing=None):
        self.kind = kind
        self.nu = nu
        self.c = c  # None selects the Burgers flux
        if kind == "fourier":
            n_pts = 4 * n_max + 6
            x = 2 * np.pi * np.arange(n_pts) / n_pts
            w = np.full(n_pts, 2 * np.pi / n_pts)
            V, Vd = _fourier_matrices(n_max, x)
            masses = np.full(2 * n_max + 1, np.pi)
            masses[0] = 2 * np.pi
        else:
            x, w = npleg.leggauss(2 * n_max + 6)
            V, Vd = _legendre_matrices(n_max, x)
            j = np.arange(n_max + 1)
            masses = 2.0 / (2 * j + 1)
        self.x, self.w, self.V, self.Vd = x, w, V, Vd
        self.masses = masses
        self.n_coarse = n_coarse_funcs
        self.f_grid = np.zeros_like(x) if forcing is None else forcing(x)
        self.Vd2 = None
        if nu > 0:
            if kind == "fourier":
                k = np.zeros(V.shape[0])
                for m in range(1, n_max + 1):
                    k[2 * m - 1] = m
                    k[2 * m] = m
                self.Vd2 = -(k**2)[:, None] * V
            else:
                self.Vd2 = np.zeros_like(V)
                for j in range(2, n_max + 1):
                    self.Vd2[j] = npleg.legval(
                        x, npleg.legder([0.0] * j + [1.0], m=2)
                    )

    def weighted_rhs(self, a):
        """(w_j, f - R(u)) for every trial function j."""
        u = self.V.T @ a
        ux = self.Vd.T @ a
        if self.c is None:
            res = u * ux
        else:
            res = self.c * ux
        if self.nu > 0:
            res = res - self.nu * (self.Vd2.T @ a)
        return (self.V * self.w) @ (self.f_grid - res)

    def kernel_weighted(self, a_coarse, eps=1e-4):
        """Brute-force weighted kernel at s=0.

        Form the coupled RHS at the resolved state, take its fine part as the
        linearization direction, and centrally difference the coarse rows.
        """
        n_total = self.V.shape[0]
        a = np.zeros(n_total)
        a[: self.n_coarse] = a_coarse
        v = self.weighted_rhs(a) / self.masses
        v_fine = np.zeros(n_total)
        v_fine[self.n_coarse :] = v[self.n_coarse :]
        plus = self.weighted_rhs(a + eps * v_fine)[: self.n_coarse]
        minus = self.weighted_rhs(a - eps * v_fine)[: self.n_coarse]
        # sign: the kernel adds to the RHS of M da/dt, and weighted_rhs holds
        # (w, f - R); the fine-direction derivative of -(w, R(u)) is the
        # kernel, so difference the rows directly
        return (plus - minus) / (2 * eps)


def dg_kernel_surface_oracle(c, h, p, n, coeffs, flux="central"):
    """S1/S2 surface algebra for the DG linear-advection kernel.

    Traces and endpoint sums are evaluated with numpy's legval; S1/S2 come
    from a dense fine mass solve. Returns the weighted kernel per element
    and coarse mode, S2 terms retained. flux selects the interface flux the
    defects and the outer linearized flux are built from.
    """
    n_elem = coeffs.shape[0]
    fine = np.arange(p + 1, n + 1)
    wR = np.array([npleg.legval(1.0, [0.0] * j + [1.0]) for j in fine])
    wL = np.array([npleg.legval(-1.0, [0.0] * j + [1.0]) for j in fine])
    M_fine = np.diag(h / (2 * fine + 1))
    s1 = wR @ np.linalg.solve(M_fine, wR)
    s2 = wR @ np.linalg.solve(M_fine, wL)

    if flux == "central":
        def fstar(left_state, right_state):
            return 0.5 * c * (left_state + right_state)
    else:
        def fstar(left_state, right_state):
            return 0.5 * c * (left_state + right_state) - 0.5 * abs(c) * (
                right_state - left_state
            )

    uL = np.array([npleg.legval(-1.0, coeffs[k]) for k in range(n_elem)])
    uR = np.array([npleg.legval(1.0, coeffs[k]) for k in range(n_elem)])
    dfR = c * uR - fstar(uR, np.roll(uL, -1))
    dfL = c * uL - fstar(np.roll(uR, 1), uL)

    wR_coarse = np.array([npleg.legval(1.0, [0.0] * j + [1.0]) for j in range(p + 1)])
    wL_coarse = np.array([npleg.legval(-1.0, [0.0] * j + [1.0]) for j in range(p + 1)])
    out = np.zeros((n_elem, p + 1))
    for k in range(n_elem):
        kp = (k + 1) % n_elem
        km = (k - 1) % n_elem
        right = fstar(s1 * dfR[k] - s2 * dfL[k], s2 * dfR[kp] - s1 * dfL[kp])
        left = fstar(s1 * dfR[km] - s2 * dfL[km], s2 * dfR[k] - s1 * dfL[k])
        out[k] = -wR_coarse * right + wL_coarse * left
    return out


def expm_taylor(A, terms=30):
    """Plain Taylor series; reference for small-norm matrix exponentials."""
    out = np.eye(A.shape[0])
    term = np.eye(A.shape[0])
    for k in range(1, terms + 1):
        term = term @ A / k
        out = out + term
    return out
