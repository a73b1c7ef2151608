import math

import numpy as np
import pytest
from scipy.linalg import cholesky_banded

from gpvortex.spectral import (
    BandedMatrix,
    BasisFamily,
    SpectralField,
    banded_combine,
    banded_solve,
    centrifugal_matrix,
    field_operator_matrix,
    galerkin_matrix_oracle,
    gauss_lobatto,
    legendre_eval,
    load_vector,
    mass_matrix,
    nodal_values,
    stiffness_matrix,
)

BUILDERS = {
    "stiffness": stiffness_matrix,
    "centrifugal": centrifugal_matrix,
    "mass": mass_matrix,
    "field_operator": field_operator_matrix,
}


def test_legendre_values():
    assert legendre_eval(0, 0.3) == 1.0
    assert legendre_eval(1, 0.5) == 0.5
    assert legendre_eval(2, 1.0) == pytest.approx(1.0, abs=1e-15)
    for n in range(21):
        assert abs(abs(legendre_eval(n, 1.0)) - 1.0) < 1e-13
        assert abs(abs(legendre_eval(n, -1.0)) - 1.0) < 1e-13


def test_lobatto_two_and_three_points():
    g2 = gauss_lobatto(2)
    np.testing.assert_allclose(g2.nodes, [-1.0, 1.0], atol=0)
    np.testing.assert_allclose(g2.weights, [1.0, 1.0], atol=0)
    g3 = gauss_lobatto(3)
    np.testing.assert_allclose(g3.nodes, [-1.0, 0.0, 1.0], atol=1e-15)
    np.testing.assert_allclose(g3.weights, [1 / 3, 4 / 3, 1 / 3], atol=1e-15)


def test_lobatto_monomial_exactness():
    for p in range(4, 41):
        g = gauss_lobatto(p)
        assert np.all(np.diff(g.nodes) > 0)
        assert g.nodes[0] == -1.0 and g.nodes[-1] == 1.0
        assert np.all(g.weights > 0)
        assert abs(g.weights.sum() - 2.0) < 1e-13
        for k in range(0, 2 * p - 2):
            approx = float(g.weights @ g.nodes**k)
            exact = 2.0 / (k + 1) if k % 2 == 0 else 0.0
            if exact:
                assert abs(approx - exact) / exact < 1e-13
            else:
                assert abs(approx) < 1e-13


def test_x6_with_eight_points():
    g = gauss_lobatto(8)
    assert abs(float(g.weights @ g.nodes**6) - 2 / 7) < 1e-13


@pytest.mark.parametrize("radius", [math.e, 16.0, 20.0])
def test_basis_boundary_conditions(radius):
    ends = np.array([-1.0, 1.0])
    both = BasisFamily.dirichlet_both(63)
    assert np.abs(both.eval_matrix(ends)).max() < 1e-12
    right = BasisFamily.dirichlet_right(64)
    assert np.abs(right.eval_matrix(ends)[1]).max() < 1e-12
    robin = BasisFamily.robin(63, radius)
    dv = robin.deriv_matrix(ends)
    v1 = robin.eval_matrix(np.array([1.0]))[0]
    assert np.abs(dv[0]).max() < 1e-11
    assert np.abs(dv[1] - v1 / (2 * math.log(radius))).max() < 1e-11


def test_closed_form_spot_values():
    both = BasisFamily.dirichlet_both(14)
    A = stiffness_matrix(both)
    assert A.entry(0, 0) == 6.0 and A.entry(0, 1) == 4.0
    B = centrifugal_matrix(both)
    assert B.entry(0, 0) == pytest.approx(3.0, abs=1e-15)
    assert B.entry(0, 1) == pytest.approx(-1.0, abs=1e-15)
    C = mass_matrix(both)
    assert C.entry(0, 0) == pytest.approx(12 / 5, abs=1e-15)

    right = BasisFamily.dirichlet_right(14)
    Ar = stiffness_matrix(right)
    assert Ar.entry(0, 0) == 2.0 and Ar.entry(0, 1) == 0.0 and Ar.halfbw == 0
    Cr = mass_matrix(right)
    assert Cr.entry(0, 0) == pytest.approx(4 / 3, abs=1e-15)


def test_robin_coefficients_closed_form():
    rb = BasisFamily.robin(8, math.e)
    assert rb.robin_a[0] == pytest.approx(3 / 8, abs=1e-15)
    assert rb.robin_b[0] == pytest.approx(1 / 8, abs=1e-15)
    ln20 = math.log(20.0)
    rb20 = BasisFamily.robin(8, 20.0)
    a0 = 3 / (4 * (3 * ln20 - 1))
    b0 = 1 / (4 * (3 * ln20 - 1))
    assert rb20.robin_a[0] == pytest.approx(a0, rel=1e-14)
    assert rb20.robin_b[0] == pytest.approx(b0, rel=1e-14)
    h = field_operator_matrix(rb20)
    assert h.entry(0, 0) == pytest.approx(2 * a0 + 6 * b0 + 4 * a0 * b0, rel=1e-13)
    assert h.entry(0, 0) == pytest.approx(0.38735746, abs=5e-8)
    assert h.entry(0, 1) == h.entry(1, 0)


def test_robin_errors():
    with pytest.raises(ValueError):
        BasisFamily.robin(8, 0.9)
    # log(R) (i+1)(i+3) = 1 exactly at i=0 for R = e^(1/3)
    with pytest.raises(ValueError):
        BasisFamily.robin(8, math.exp(1 / 3))


@pytest.mark.parametrize("dim", [7, 15])
@pytest.mark.parametrize(
    "kind,forms",
    [
        ("dirichlet_both", ("stiffness", "centrifugal", "mass")),
        ("dirichlet_right", ("stiffness", "mass")),
        ("robin", ("field_operator",)),
    ],
)
def test_matrices_match_quadrature_oracle(dim, kind, forms):
    for radius in ((math.e, 16.0, 20.0) if kind == "robin" else (None,)):
        if kind == "dirichlet_both":
            basis = BasisFamily.dirichlet_both(dim)
        elif kind == "dirichlet_right":
            basis = BasisFamily.dirichlet_right(dim)
        else:
            basis = BasisFamily.robin(dim, radius)
        for form in forms:
            built = BUILDERS[form](basis)
            oracle = galerkin_matrix_oracle(basis, form)
            tol = 1e-9 if form == "field_operator" else 1e-10
            assert np.abs(built.dense() - oracle).max() < tol
            assert np.abs(built.dense() - built.dense().T).max() == 0.0


def test_mass_matrix_positive_definite():
    for dim in (8, 16, 32, 64):
        for basis in (BasisFamily.dirichlet_both(dim), BasisFamily.dirichlet_right(dim)):
            cholesky_banded(mass_matrix(basis).ab, lower=False)  # raises if not SPD


def test_banded_matvec_and_solve_match_dense():
    rng = np.random.default_rng(0)
    diags = [rng.standard_normal(20) + 5.0, rng.standard_normal(19), rng.standard_normal(18)]
    m = BandedMatrix.from_diagonals(diags)
    dense = m.dense()
    x = rng.standard_normal(20)
    np.testing.assert_allclose(m.matvec(x), dense @ x, atol=1e-13)
    b = rng.standard_normal(20)
    np.testing.assert_allclose(banded_solve(m, b), np.linalg.solve(dense, b), atol=1e-10)
    comb = banded_combine([(2.0, m), (-0.5, BandedMatrix.from_diagonals([np.ones(20)]))])
    np.testing.assert_allclose(comb.dense(), 2 * dense - 0.5 * np.eye(20), atol=1e-14)


def test_nodal_values_and_roundtrip():
    basis = BasisFamily.dirichlet_both(30)
    grid = gauss_lobatto(basis.max_degree + 4)
    zero = SpectralField(basis, np.zeros(30))
    assert np.all(nodal_values(zero, grid) == 0)

    e0 = np.zeros(30)
    e0[0] = 1.0
    vals = nodal_values(SpectralField(basis, e0), grid)
    x = grid.nodes
    np.testing.assert_allclose(vals, 1.0 - (3 * x**2 - 1) / 2, atol=1e-13)

    rng = np.random.default_rng(3)
    coeffs = rng.standard_normal(30)
    f = SpectralField(basis, coeffs)
    v = nodal_values(f, grid)
    assert abs((basis.eval_matrix(np.array([1.0])) @ coeffs)[0]) < 1e-11
    load = load_vector(v, grid, basis)
    C = mass_matrix(basis)
    from gpvortex.spectral import BandedCholesky

    back = BandedCholesky(C).solve(load)
    np.testing.assert_allclose(back, coeffs, atol=1e-11)


def test_load_vector_against_analytic_moments():
    basis = BasisFamily.dirichlet_right(12)
    grid = gauss_lobatto(basis.max_degree + 4)
    lv = load_vector(grid.nodes + 1.0, grid, basis)
    # integral (x+1)^2 (L_i - L_{i+1}) dx: 4/3, 16/15, 4/15, then zero
    expected = np.zeros(12)
    expected[:3] = [4 / 3, 16 / 15, 4 / 15]
    np.testing.assert_allclose(lv, expected, atol=1e-13)

    C = mass_matrix(basis)
    chi0 = basis.eval_matrix(grid.nodes)[:, 0]
    col0 = load_vector(chi0, grid, basis)
    np.testing.assert_allclose(col0, C.dense()[:, 0], atol=1e-13)

    assert np.all(load_vector(np.zeros(grid.num_points), grid, basis) == 0)
    with pytest.raises(ValueError):
        load_vector(np.zeros(grid.num_points - 1), grid, basis)
