"""Univariate spline spaces, quadrature, and Galerkin matrices."""

import numpy as np
import pytest
import scipy.linalg

from lriga.bsplines import (
    BC_DIRICHLET,
    BC_NEUMANN,
    SplineSpace1D,
    assemble_pencil,
    assemble_weighted_matrix,
    assemble_weighted_rhs,
    gauss_rule,
    open_uniform_knots,
)

NN = (BC_NEUMANN, BC_NEUMANN)
DD = (BC_DIRICHLET, BC_DIRICHLET)


def test_knots_and_dimensions():
    space = SplineSpace1D(3, 8)
    assert len(space.knots) == 8 + 2 * 3 + 1
    assert space.knots[0] == 0.0 and space.knots[-1] == 1.0
    assert space.full_dim == 11
    assert space.n == 9  # double Dirichlet: n_el + p - 2
    assert SplineSpace1D(3, 8, NN).n == 11
    assert SplineSpace1D(3, 8, (BC_NEUMANN, BC_DIRICHLET)).n == 10


def test_partition_of_unity_and_nonnegativity():
    rng = np.random.default_rng(20)
    for p in range(1, 6):
        space = SplineSpace1D(p, 8, NN)
        for eta in rng.uniform(0, 1, 2000):
            idx, vals = space.eval_basis(eta)
            assert np.all(vals >= -1e-14)
            assert np.isclose(vals.sum(), 1.0, atol=1e-12)
            assert len(idx) <= p + 1


def test_derivative_sums_to_zero_inside():
    rng = np.random.default_rng(21)
    for p in (2, 4):
        space = SplineSpace1D(p, 8, NN)
        for eta in rng.uniform(0.05, 0.95, 200):
            _, dvals = space.eval_basis(eta, deriv=1)
            assert np.isclose(dvals.sum(), 0.0, atol=1e-10)


def test_hat_function_values():
    space = SplineSpace1D(1, 2, NN)
    idx, vals = space.eval_basis(0.25)
    assert idx.tolist() == [0, 1]
    assert np.allclose(vals, [0.5, 0.5])


def test_eval_outside_domain_raises():
    space = SplineSpace1D(2, 4)
    with pytest.raises(ValueError):
        space.eval_basis(1.5)


def test_gauss_rule_exactness():
    for q in (2, 4, 7):
        rule = gauss_rule(3, q)
        deg = 2 * q - 1
        # integral of x^deg over [0,1]
        approx = float(np.sum(rule.weights * rule.points ** deg))
        assert np.isclose(approx, 1.0 / (deg + 1), rtol=1e-13)


def test_hat_pencil_stencils():
    space = SplineSpace1D(1, 4, DD)
    pencil = assemble_pencil(space)
    h = 0.25
    M = pencil.M.toarray()
    K = pencil.K.toarray()
    assert np.allclose(np.diag(M), 4 * h / 6)
    assert np.allclose(np.diag(M, 1), h / 6)
    assert np.allclose(np.diag(K), 2 / h)
    assert np.allclose(np.diag(K, 1), -1 / h)


def test_total_mass_is_one():
    for p in (1, 2, 3):
        space = SplineSpace1D(p, 8, NN)
        M_full = assemble_weighted_matrix(
            space, space, 0, 0, reduced_row=False, reduced_col=False
        )
        assert np.isclose(M_full.sum(), 1.0, atol=1e-13)
        f = assemble_weighted_rhs(space, reduced=False)
        assert np.isclose(f.sum(), 1.0, atol=1e-13)


def test_pencil_symmetry_and_bandwidth():
    for p in (2, 3, 5):
        space = SplineSpace1D(p, 8)
        pencil = assemble_pencil(space)
        for A in (pencil.M.toarray(), pencil.K.toarray()):
            assert np.allclose(A, A.T, atol=1e-14)
            n = A.shape[0]
            for i in range(n):
                for j in range(n):
                    if abs(i - j) > p:
                        assert A[i, j] == 0.0
            # the band is actually full at distance p somewhere
            assert np.any(np.abs(np.diag(A, p)) > 1e-12)


def test_pencil_spectrum():
    space = SplineSpace1D(3, 32, DD)
    pencil = assemble_pencil(space)
    w = scipy.linalg.eigh(
        pencil.K.toarray(), pencil.M.toarray(), eigvals_only=True
    )
    assert np.all(w > 0)
    assert abs(w[0] - np.pi ** 2) < 0.05 * np.pi ** 2


def test_weighted_matrix_unit_weight_identical():
    space = SplineSpace1D(3, 6)
    pencil = assemble_pencil(space)
    M1 = assemble_weighted_matrix(space, space, 0, 0, w_cheb=[1.0])
    K1 = assemble_weighted_matrix(space, space, 1, 1, w_cheb=[1.0])
    assert (M1 != pencil.M).nnz == 0
    assert (K1 != pencil.K).nnz == 0


def quad_oracle_matrix(space, dr, dc, wfun, q=20):
    """Pointwise quadrature using the one-point evaluator only."""
    rule = gauss_rule(space.n_el, q)
    A = np.zeros((space.n, space.n))
    for e in range(space.n_el):
        for k in range(rule.q):
            eta, wt = rule.points[e, k], rule.weights[e, k]
            ir, vr = space.eval_basis(eta, deriv=dr)
            ic, vc = space.eval_basis(eta, deriv=dc)
            A[np.ix_(ir, ic)] += wt * wfun(eta) * np.outer(vr, vc)
    return A


def test_weighted_matrix_linear_weight_vs_oracle():
    space = SplineSpace1D(2, 4)
    # w(eta) = eta expressed in Chebyshev form on [0,1]
    A = assemble_weighted_matrix(space, space, 0, 0, w_cheb=[0.5, 0.5])
    ref = quad_oracle_matrix(space, 0, 0, lambda eta: eta)
    assert np.max(np.abs(A.toarray() - ref)) < 1e-13

    B = assemble_weighted_matrix(space, space, 1, 0, w_cheb=[0.5, 0.5])
    refB = quad_oracle_matrix(space, 1, 0, lambda eta: eta)
    assert np.max(np.abs(B.toarray() - refB)) < 1e-13


def test_weighted_rhs_vs_oracle():
    space = SplineSpace1D(3, 5, NN)
    # w = T_2(2 eta - 1)
    f = assemble_weighted_rhs(space, w_cheb=[0.0, 0.0, 1.0])
    rule = gauss_rule(space.n_el, 20)
    ref = np.zeros(space.n)
    for e in range(space.n_el):
        for k in range(rule.q):
            eta, wt = rule.points[e, k], rule.weights[e, k]
            idx, vals = space.eval_basis(eta)
            x = 2 * eta - 1
            ref[idx] += wt * (2 * x * x - 1) * vals
    assert np.max(np.abs(f - ref)) < 1e-13
    assert np.all(assemble_weighted_rhs(space, w_cheb=[0.0]) == 0.0)


def test_collocation_matrix_matches_eval():
    space = SplineSpace1D(3, 6)
    etas = np.linspace(0, 1, 17)
    C = space.collocation_matrix(etas, deriv=1).toarray()
    for i, eta in enumerate(etas):
        idx, vals = space.eval_basis(eta, deriv=1)
        row = np.zeros(space.n)
        row[idx] = vals
        assert np.allclose(C[i], row, atol=1e-14)


def test_mixed_bc_weighted_matrix_shape():
    row = SplineSpace1D(2, 4, DD)
    col = SplineSpace1D(2, 4, NN)
    A = assemble_weighted_matrix(row, col, 0, 0)
    assert A.shape == (row.n, col.n)
    # the full-basis matrix restricted by hand must agree
    F = assemble_weighted_matrix(
        row, col, 0, 0, reduced_row=False, reduced_col=False
    ).toarray()
    assert np.allclose(A.toarray(), F[1:-1, :], atol=0)
