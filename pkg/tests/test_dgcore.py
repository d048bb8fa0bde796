import numpy as np
import pytest

from hypgrav.dgcore import (
    interpolate_nodal,
    lgl_basis,
    transfer_operators,
)


@pytest.mark.parametrize("N", range(1, 11))
def test_nodes_sorted_with_endpoints(N):
    b = lgl_basis(N)
    assert b.nodes[0] == -1.0 and b.nodes[-1] == 1.0
    assert np.all(np.diff(b.nodes) > 0)
    assert np.all(b.weights > 0)


def test_degree_zero_rejected():
    with pytest.raises(ValueError):
        lgl_basis(0)


def test_known_low_order_nodes_weights():
    b1 = lgl_basis(1)
    np.testing.assert_allclose(b1.nodes, [-1.0, 1.0], atol=1e-15)
    np.testing.assert_allclose(b1.weights, [1.0, 1.0], atol=1e-15)
    b2 = lgl_basis(2)
    np.testing.assert_allclose(b2.nodes, [-1.0, 0.0, 1.0], atol=1e-15)
    np.testing.assert_allclose(b2.weights, [1 / 3, 4 / 3, 1 / 3], atol=1e-14)
    b3 = lgl_basis(3)
    s5 = 1.0 / np.sqrt(5.0)
    np.testing.assert_allclose(b3.nodes, [-1.0, -s5, s5, 1.0], atol=1e-14)
    np.testing.assert_allclose(b3.weights, [1 / 6, 5 / 6, 5 / 6, 1 / 6], atol=1e-14)


@pytest.mark.parametrize("N", range(1, 9))
def test_quadrature_exact_to_2N_minus_1(N):
    b = lgl_basis(N)
    for k in range(2 * N):
        exact = 0.0 if k % 2 else 2.0 / (k + 1)
        assert abs(np.dot(b.weights, b.nodes**k) - exact) < 1e-13


@pytest.mark.parametrize("N", range(1, 9))
def test_diff_matrix_annihilates_constants(N):
    b = lgl_basis(N)
    assert np.max(np.abs(b.diff @ np.ones(N + 1))) < 1e-13


@pytest.mark.parametrize("N", range(1, 9))
def test_diff_matrix_exact_on_monomials(N):
    b = lgl_basis(N)
    for k in range(1, N + 1):
        err = b.diff @ b.nodes**k - k * b.nodes ** (k - 1)
        assert np.max(np.abs(err)) < 1e-12


@pytest.mark.parametrize("N", range(1, 9))
def test_sbp_identity(N):
    b = lgl_basis(N)
    Q = np.diag(b.weights) @ b.diff
    B = np.zeros((N + 1, N + 1))
    B[0, 0], B[-1, -1] = -1.0, 1.0
    np.testing.assert_allclose(Q + Q.T, B, atol=1e-13)


@pytest.mark.parametrize("N", range(1, 9))
def test_weak_strong_volume_matrices_consistent(N):
    # DW = M^{-1} B - D follows from summation by parts
    b = lgl_basis(N)
    M = np.diag(b.weights)
    B = np.zeros((N + 1, N + 1))
    B[0, 0], B[-1, -1] = -1.0, 1.0
    np.testing.assert_allclose(b.diff_weak, np.linalg.solve(M, B) - b.diff, atol=1e-13)


def test_lagrange_cardinality():
    b = lgl_basis(5)
    vals = interpolate_nodal(np.eye(6), b.nodes, b.nodes)
    np.testing.assert_allclose(vals, np.eye(6), atol=1e-13)


def test_interpolation_polynomial_exactness():
    b2 = lgl_basis(2)
    v = interpolate_nodal(b2.nodes**2, b2.nodes, [0.5])
    assert abs(v[0] - 0.25) < 1e-14
    b3 = lgl_basis(3)
    v = interpolate_nodal(b3.nodes**3, b3.nodes, [-0.3])
    assert abs(v[0] - (-0.027)) < 1e-14
    const = interpolate_nodal(np.full(4, 7.5), b3.nodes, [-1.0, 0.2, 1.0])
    np.testing.assert_allclose(const, 7.5, atol=1e-14)


def test_interpolation_rejects_outside_targets():
    b = lgl_basis(3)
    with pytest.raises(ValueError):
        interpolate_nodal(np.ones(4), b.nodes, [1.5])
    with pytest.raises(ValueError):
        interpolate_nodal(np.ones(4), b.nodes, [])


@pytest.mark.parametrize("N", range(1, 8))
def test_mortar_forward_reverse_identity(N):
    rng = np.random.default_rng(17 + N)
    b = lgl_basis(N)
    t = transfer_operators(N)
    for _ in range(20):
        coeffs = rng.standard_normal(N + 1)
        f = np.polynomial.polynomial.polyval(b.nodes, coeffs)
        back = t.reverse_lower @ (t.forward_lower @ f) + t.reverse_upper @ (
            t.forward_upper @ f
        )
        np.testing.assert_allclose(back, f, atol=1e-13 * max(1, np.max(np.abs(f))))


@pytest.mark.parametrize("N", range(1, 8))
def test_mortar_constant_preserved(N):
    t = transfer_operators(N)
    ones = np.ones(N + 1)
    np.testing.assert_allclose(t.forward_lower @ ones, ones, atol=1e-14)
    np.testing.assert_allclose(t.forward_upper @ ones, ones, atol=1e-14)
    np.testing.assert_allclose(
        t.reverse_lower @ ones + t.reverse_upper @ ones, ones, atol=1e-13
    )


@pytest.mark.parametrize("N", range(1, 8))
def test_reverse_projection_conserves_face_integral(N):
    # quadrature of the projected data equals the sum of half-face quadratures
    rng = np.random.default_rng(3 + N)
    b = lgl_basis(N)
    t = transfer_operators(N)
    for _ in range(20):
        f_lo = rng.standard_normal(N + 1)
        f_hi = rng.standard_normal(N + 1)
        proj = t.reverse_lower @ f_lo + t.reverse_upper @ f_hi
        total = np.dot(b.weights, proj)
        halves = 0.5 * (np.dot(b.weights, f_lo) + np.dot(b.weights, f_hi))
        assert abs(total - halves) < 1e-13


@pytest.mark.parametrize("N", range(1, 7))
def test_refine_coarsen_round_trip(N):
    rng = np.random.default_rng(29 + N)
    t = transfer_operators(N)
    b = lgl_basis(N)
    # random 2D polynomial of degree <= N per direction
    coeffs = rng.standard_normal((N + 1, N + 1))
    vals = np.polynomial.polynomial.polyval2d(*np.meshgrid(b.nodes, b.nodes, indexing="ij"), coeffs)
    children = t.refine_nodal(vals)
    back = t.coarsen_nodal(children)
    np.testing.assert_allclose(back, vals, atol=1e-12)


@pytest.mark.parametrize("N", range(1, 7))
def test_refinement_preserves_element_integral(N):
    rng = np.random.default_rng(41 + N)
    b = lgl_basis(N)
    t = transfer_operators(N)
    w2 = np.outer(b.weights, b.weights)
    vals = rng.standard_normal((N + 1, N + 1))
    children = t.refine_nodal(vals)
    parent_int = np.sum(w2 * vals)
    # each child covers a quarter of the parent in reference measure
    child_int = 0.25 * sum(np.sum(w2 * c) for c in children)
    assert abs(parent_int - child_int) < 1e-12
    back = t.coarsen_nodal(children)
    assert abs(np.sum(w2 * back) - child_int) < 1e-12
