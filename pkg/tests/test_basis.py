import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from closurelab.basis import (
    FourierBasis,
    LegendreBasis,
    default_rule_for,
    eval_basis,
    gauss_rule,
    mass_matrix,
)


def test_gauss_rule_rejects_zero_points():
    with pytest.raises(ValueError):
        gauss_rule(0)


def test_one_point_rule_is_midpoint():
    rule = gauss_rule(1)
    assert rule.nodes == (0.0,)
    assert rule.weights == (2.0,)


def test_two_point_rule_matches_analytic_solution():
    # Solving the 2-point Gauss conditions by hand gives nodes +-1/sqrt(3),
    # weights 1, 1.
    rule = gauss_rule(2)
    assert np.allclose(rule.nodes_array(), [-1 / np.sqrt(3), 1 / np.sqrt(3)], atol=1e-15)
    assert np.allclose(rule.weights_array(), [1.0, 1.0], atol=1e-15)


def test_five_point_rule_integrates_x8():
    rule = gauss_rule(5)
    val = rule.integrate(rule.nodes_array() ** 8)
    assert abs(val - 2.0 / 9.0) < 1e-13


@given(n=st.integers(min_value=1, max_value=24))
@settings(max_examples=24, deadline=None)
def test_weights_sum_to_interval_length(n):
    rule = gauss_rule(n)
    assert abs(sum(rule.weights) - 2.0) < 1e-13
    assert min(rule.weights) > 0.0


@given(n=st.integers(min_value=1, max_value=16))
@settings(max_examples=16, deadline=None)
def test_monomial_exactness_through_degree_2n_minus_1(n):
    rule = gauss_rule(n)
    x = rule.nodes_array()
    for k in range(2 * n):
        exact = 0.0 if k % 2 == 1 else 2.0 / (k + 1)
        approx = rule.integrate(x**k)
        if exact == 0.0:
            assert abs(approx) < 1e-12
        else:
            assert abs(approx - exact) / abs(exact) < 1e-12


@pytest.mark.parametrize("max_degree", [0, 1, 3, 7, 12])
def test_legendre_quadrature_orthogonality(max_degree):
    basis = LegendreBasis(max_degree)
    rule = gauss_rule(max_degree + 1)
    V = basis.values(rule.nodes_array())
    gram = (V * rule.weights_array()) @ V.T
    off = gram - np.diag(np.diag(gram))
    assert np.max(np.abs(off)) < 1e-12
    assert np.allclose(np.diag(gram), basis.reference_masses(), atol=1e-12)


def test_legendre_endpoint_values_exact():
    basis = LegendreBasis(9)
    j = np.arange(10)
    assert np.array_equal(basis.endpoint_values(+1), np.ones(10))
    assert np.array_equal(basis.endpoint_values(-1), (-1.0) ** j)


def test_eval_basis_values_and_derivatives():
    basis = LegendreBasis(4)
    pts = np.linspace(-1, 1, 7)
    V, D = eval_basis(basis, [0, 1, 2], pts)
    assert np.allclose(V[0], 1.0)
    assert np.allclose(D[1], 1.0)  # P_1 = xi
    # P_2 at xi = 1 must land exactly on 1 (endpoint algebra downstream
    # assumes P_j(1) = 1).
    V1, _ = eval_basis(basis, [2], [1.0])
    assert V1[0, 0] == pytest.approx(1.0, abs=1e-14)


def test_eval_basis_rejects_out_of_range_index():
    with pytest.raises(ValueError):
        eval_basis(LegendreBasis(2), [3], [0.0])


def test_derivative_matrix_consistent_with_values():
    # Finite differences of the value rows reproduce the derivative rows.
    basis = LegendreBasis(6)
    pts = np.linspace(-0.9, 0.9, 11)
    eps = 1e-6
    D = basis.derivatives(pts)
    fd = (basis.values(pts + eps) - basis.values(pts - eps)) / (2 * eps)
    assert np.max(np.abs(D - fd)) < 1e-7


def test_mass_matrix_legendre():
    basis = LegendreBasis(3)
    # h = 2 (jacobian 1): constant mode mass is the element length.
    assert mass_matrix(basis, [0], 1.0)[0] == pytest.approx(2.0, abs=1e-14)
    # h = 1 (jacobian 1/2), j = 3: (1/2) * 2/7 = 1/7; cross-check against
    # quadrature of P_3^2.
    entry = mass_matrix(basis, [3], 0.5)[0]
    assert entry == pytest.approx(1.0 / 7.0, abs=1e-14)
    rule = gauss_rule(6)
    quad = 0.5 * rule.integrate(basis.values(rule.nodes_array())[3] ** 2)
    assert entry == pytest.approx(quad, abs=1e-13)


def test_mass_matrix_rejects_nonpositive_jacobian():
    with pytest.raises(ValueError):
        mass_matrix(LegendreBasis(2), [0], 0.0)


def test_fourier_masses_and_orthogonality():
    basis = FourierBasis(4)
    assert mass_matrix(basis, [0], 1.0)[0] == pytest.approx(2 * np.pi, abs=1e-13)
    x, w = basis.quadrature_grid(2 * 4 + 2)
    V = basis.values(x)
    gram = (V * w) @ V.T
    off = gram - np.diag(np.diag(gram))
    assert np.max(np.abs(off)) < 1e-12
    assert np.allclose(np.diag(gram), basis.reference_masses(), atol=1e-12)


def test_default_rule_padding():
    # 2N+2 points integrate products of two degree-N functions times the
    # quadratic flux exactly.
    rule = default_rule_for(3)
    assert rule.n_nodes == 8
    x = rule.nodes_array()
    assert abs(rule.integrate(x**14) - 2.0 / 15.0) < 1e-13
