import numpy as np
import numpy.polynomial.legendre as npleg
import pytest

from closurelab.basis import LegendreBasis
from closurelab.meshproj import (
    CoarseState,
    Mesh1D,
    ScaleSplit,
    fine_projector_kernel,
    load_kernel_csv,
    project_coarse,
    project_fine_residual,
    reconstruct,
    save_kernel_csv,
    space_for,
)

RNG = np.random.default_rng(1234)


def legendre_split(p=1, n=4, n_elem=3, periodic=True, a=0.0, b=3.0):
    mesh = Mesh1D(a=a, b=b, n_elem=n_elem, periodic=periodic)
    split = ScaleSplit(kind="legendre", coarse_degree=p, fine_max_degree=n)
    return mesh, split


def fourier_split(kc=2, k=6):
    mesh = Mesh1D(a=0.0, b=2 * np.pi, n_elem=1, periodic=True)
    split = ScaleSplit(kind="fourier", coarse_degree=kc, fine_max_degree=k)
    return mesh, split


def test_mesh_validation():
    with pytest.raises(ValueError):
        Mesh1D(a=1.0, b=0.0, n_elem=4)
    with pytest.raises(ValueError):
        Mesh1D(a=0.0, b=1.0, n_elem=0)
    with pytest.raises(ValueError):
        ScaleSplit(kind="legendre", coarse_degree=2, fine_max_degree=2)


def test_mesh_tiles_domain():
    mesh = Mesh1D(a=-1.0, b=2.0, n_elem=6)
    e = mesh.edges()
    assert e[0] == -1.0 and e[-1] == 2.0
    assert np.all(np.diff(e) > 0)
    assert np.allclose(np.diff(e), mesh.h)


def test_project_reproduces_coarse_member():
    mesh, split = legendre_split(p=2, n=5)
    space = space_for(mesh, split)
    g = np.tile(space.V[2], (mesh.n_elem, 1))  # P_2 on every element
    state = project_coarse(split, mesh, g)
    expected = np.zeros((mesh.n_elem, 3))
    expected[:, 2] = 1.0
    assert np.allclose(state.coeffs, expected, atol=1e-13)


def test_project_annihilates_fine_member():
    mesh, split = legendre_split(p=1, n=4)
    space = space_for(mesh, split)
    g = np.tile(space.V[3], (mesh.n_elem, 1))  # fine mode P_3
    state = project_coarse(split, mesh, g)
    assert np.max(np.abs(state.coeffs)) < 1e-12


def test_project_matches_dense_normal_equations():
    # Independent oracle: weighted least squares on the quadrature grid.
    mesh, split = legendre_split(p=1, n=3, n_elem=1, a=-1.0, b=1.0, periodic=False)
    space = space_for(mesh, split)
    g = space.nodes**2
    state = project_coarse(split, mesh, g)
    A = space.V[:2].T  # columns P_0, P_1 at the nodes
    W = np.diag(space.phys_weights)
    normal = A.T @ W @ A
    rhs = A.T @ W @ g[0]
    oracle = np.linalg.solve(normal, rhs)
    assert np.allclose(state.coeffs[0], oracle, atol=1e-12)


def test_fine_residual_annihilates_coarse_and_keeps_fine():
    mesh, split = legendre_split(p=1, n=4)
    space = space_for(mesh, split)
    coarse = 0.7 * space.V[0] + 0.3 * space.V[1]
    g = np.tile(coarse, (mesh.n_elem, 1))
    assert np.max(np.abs(project_fine_residual(split, mesh, g))) < 1e-12
    fine = np.tile(space.V[3], (mesh.n_elem, 1))
    assert np.max(np.abs(project_fine_residual(split, mesh, fine) - fine)) < 1e-12


def test_fine_residual_matches_gram_oracle():
    # exp(x) on [-1, 1], coarse degree 1; oracle uses numpy's own
    # Gauss-Legendre nodes as an independent quadrature.
    mesh, split = legendre_split(p=1, n=6, n_elem=1, a=-1.0, b=1.0, periodic=False)
    space = space_for(mesh, split)
    g = np.exp(space.nodes)
    got = project_fine_residual(split, mesh, g)
    xg, wg = npleg.leggauss(60)
    basis = LegendreBasis(1)
    Vg = basis.values(xg)
    coeffs = [(wg * np.exp(xg) * Vg[j]).sum() * (2 * j + 1) / 2.0 for j in range(2)]
    V = basis.values(space.ref_nodes)
    oracle = np.exp(space.ref_nodes) - coeffs[0] * V[0] - coeffs[1] * V[1]
    assert np.max(np.abs(got[0] - oracle)) < 1e-12


def test_projection_rejects_nonfinite_input():
    mesh, split = legendre_split()
    space = space_for(mesh, split)
    g = np.zeros_like(space.nodes)
    g[0, 0] = np.nan
    with pytest.raises(ValueError):
        project_coarse(split, mesh, g)
    with pytest.raises(ValueError):
        project_fine_residual(split, mesh, g)


@pytest.mark.parametrize("maker", [legendre_split, fourier_split])
def test_projector_suite_randomized(maker):
    # Idempotence, complementarity, and cross-orthogonality on random data.
    mesh, split = maker()
    space = space_for(mesh, split)
    for _ in range(20):
        g = RNG.normal(size=space.nodes.shape)
        state = project_coarse(split, mesh, g)
        recon = reconstruct(split, mesh, state)
        again = project_coarse(split, mesh, recon)
        assert np.max(np.abs(again.coeffs - state.coeffs)) < 1e-12
        resid = project_fine_residual(split, mesh, g)
        assert np.max(np.abs(recon + resid - g)) < 1e-11
        assert abs(space.inner(recon, resid)) < 1e-11


def test_fourier_coarse_fine_orthogonality():
    mesh, split = fourier_split(kc=2, k=5)
    space = space_for(mesh, split)
    for i in range(2 * split.coarse_degree + 1):
        for j in range(2 * split.coarse_degree + 1, space.basis.n_funcs):
            assert abs(space.inner(space.V[i], space.V[j])) < 1e-12


def test_kernel_symmetry_and_coarse_orthogonality():
    mesh, split = legendre_split(p=1, n=4, n_elem=2, a=0.0, b=2.0)
    space = space_for(mesh, split)
    pts = space.nodes.ravel()
    table = fine_projector_kernel(split, mesh, pts, pts)
    assert np.max(np.abs(table - table.T)) == 0.0
    # integral over y of the kernel against each coarse function vanishes
    w = np.tile(space.phys_weights, mesh.n_elem)
    for i in range(split.coarse_degree + 1):
        wcoarse = np.concatenate([space.V[i] for _ in range(mesh.n_elem)])
        res = table @ (w * wcoarse)
        assert np.max(np.abs(res)) < 1e-11


def test_kernel_blocks_vanish_across_elements():
    mesh, split = legendre_split(p=0, n=2, n_elem=2, a=0.0, b=2.0)
    x_in_0 = np.array([0.3])
    y_in_1 = np.array([1.7])
    table = fine_projector_kernel(split, mesh, x_in_0, y_in_1)
    assert table[0, 0] == 0.0


def test_kernel_single_fine_mode_closed_form():
    # N = p+1: kernel is P_N(xi_x) P_N(xi_y) / m_N.
    mesh = Mesh1D(a=-1.0, b=1.0, n_elem=1, periodic=False)
    split = ScaleSplit(kind="legendre", coarse_degree=1, fine_max_degree=2)
    x = np.array([-0.4, 0.1])
    y = np.array([0.25, 0.9])
    table = fine_projector_kernel(split, mesh, x, y)
    basis = LegendreBasis(2)
    m2 = 2.0 / 5.0
    expected = np.outer(basis.values(x)[2], basis.values(y)[2]) / m2
    assert np.allclose(table, expected, atol=1e-13)


def test_kernel_requires_fine_modes():
    mesh, split = legendre_split()
    bad = ScaleSplit(kind="legendre", coarse_degree=1, fine_max_degree=2)
    object.__setattr__(bad, "fine_max_degree", 1)  # bypass ctor check
    with pytest.raises(ValueError):
        fine_projector_kernel(bad, mesh, [0.1], [0.2])


def test_kernel_consistency_with_projection():
    # Applying the tabulated kernel by quadrature equals the fine residual
    # restricted to degrees <= N.
    mesh, split = legendre_split(p=1, n=4, n_elem=3, a=0.0, b=3.0)
    space = space_for(mesh, split)
    g = np.sin(2.0 * space.nodes) + space.nodes**2
    pts = space.nodes.ravel()
    w = np.tile(space.phys_weights, mesh.n_elem)
    table = fine_projector_kernel(split, mesh, pts, pts)
    applied = (table * w[None, :]) @ g.ravel()
    p = project_fine_residual(split, mesh, g)
    c = space.to_modal(p)
    c[:, split.fine_max_degree + 1 :] = 0.0
    truncated = space.from_modal(c)
    assert np.max(np.abs(applied - truncated.ravel())) < 1e-10


def test_kernel_csv_roundtrip(tmp_path):
    mesh, split = legendre_split(p=0, n=2, n_elem=2, a=0.0, b=2.0)
    x = np.linspace(0.05, 1.95, 8)
    table = fine_projector_kernel(split, mesh, x, x)
    path = tmp_path / "kernel.csv"
    save_kernel_csv(path, x, x, table)
    x2, y2, table2 = load_kernel_csv(path)
    assert np.allclose(x2, x) and np.allclose(y2, x)
    assert np.array_equal(table2, table)


def test_split_full_state_partition():
    from closurelab.meshproj import split_full_state

    split = ScaleSplit(kind="legendre", coarse_degree=1, fine_max_degree=4)
    full = np.arange(10.0).reshape(2, 5)
    coarse, fine = split_full_state(split, full, t=0.7)
    assert coarse.coeffs.shape == (2, 2) and fine.coeffs.shape == (2, 3)
    assert coarse.t == 0.7 and fine.t == 0.7
    assert np.array_equal(np.hstack([coarse.coeffs, fine.coeffs]), full)


def test_reconstruct_layout():
    mesh, split = legendre_split(p=1, n=3, n_elem=2, a=0.0, b=2.0)
    coeffs = np.array([[1.0, 0.5], [2.0, -0.25]])
    g = reconstruct(split, mesh, CoarseState(coeffs=coeffs))
    space = space_for(mesh, split)
    assert g.shape == space.nodes.shape
    assert np.allclose(g[0], coeffs[0, 0] + coeffs[0, 1] * space.ref_nodes)
