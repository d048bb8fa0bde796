"""Legendre-Gauss-Lobatto spectral operators.

Nodes, quadrature weights, differentiation matrices, and the transfer
operators needed on locally refined meshes: interpolation of a face
polynomial onto its two half-faces (and back by L2 projection), plus the
tensor-product variants that move element data between a coarse cell and
its four children.
"""

from dataclasses import dataclass
from functools import lru_cache

import numpy as np


def legendre_with_derivs(x, degree):
    """Evaluate P_N, P'_N and P''_N at x (scalar or array) by recurrence."""
    x = np.asarray(x, dtype=float)
    p_prev = np.ones_like(x)
    p = x.copy()
    if degree == 0:
        return p_prev, np.zeros_like(x), np.zeros_like(x)
    for k in range(1, degree):
        p_next = ((2 * k + 1) * x * p - k * p_prev) / (k + 1)
        p_prev, p = p, p_next
    # (1-x^2) P'_N = N (P_{N-1} - x P_N); endpoints handled via known values
    with np.errstate(divide="ignore", invalid="ignore"):
        dp = degree * (p_prev - x * p) / (1.0 - x * x)
        ddp = (2.0 * x * dp - degree * (degree + 1) * p) / (1.0 - x * x)
    endpoint = np.abs(np.abs(x) - 1.0) < 1e-14
    if np.any(endpoint):
        sgn = np.sign(x)
        dp_end = sgn ** (degree + 1) * degree * (degree + 1) / 2.0
        dp = np.where(endpoint, dp_end, dp)
        ddp = np.where(endpoint, np.nan, ddp)  # not needed at endpoints
    return p, dp, ddp


def gauss_lobatto(n_nodes):
    """Return the n_nodes Legendre-Gauss-Lobatto nodes and weights on [-1, 1]."""
    if n_nodes < 2:
        raise ValueError("need at least two Lobatto nodes")
    degree = n_nodes - 1
    nodes = np.empty(n_nodes)
    nodes[0], nodes[-1] = -1.0, 1.0
    if n_nodes > 2:
        # interior nodes are the roots of P'_N; Newton from Chebyshev-Lobatto
        x = -np.cos(np.pi * np.arange(1, degree) / degree)
        for _ in range(100):
            _, dp, ddp = legendre_with_derivs(x, degree)
            dx = dp / ddp
            x -= dx
            if np.max(np.abs(dx)) < 1e-15:
                break
        nodes[1:-1] = x
    p, _, _ = legendre_with_derivs(nodes, degree)
    weights = 2.0 / (degree * (degree + 1) * p**2)
    return nodes, weights


def barycentric_weights(nodes):
    n = len(nodes)
    w = np.ones(n)
    for j in range(n):
        for k in range(n):
            if k != j:
                w[j] /= nodes[j] - nodes[k]
    return w


def lagrange_eval_matrix(nodes, targets):
    """Matrix L with L[m, j] = l_j(targets[m]) for the Lagrange basis on nodes."""
    nodes = np.asarray(nodes, dtype=float)
    targets = np.atleast_1d(np.asarray(targets, dtype=float))
    bw = barycentric_weights(nodes)
    L = np.zeros((len(targets), len(nodes)))
    for m, x in enumerate(targets):
        diff = x - nodes
        hit = np.abs(diff) < 1e-14
        if np.any(hit):
            L[m, np.argmax(hit)] = 1.0
        else:
            terms = bw / diff
            L[m] = terms / terms.sum()
    return L


def differentiation_matrix(nodes):
    """Collocation derivative matrix D[i, j] = l'_j(nodes[i])."""
    n = len(nodes)
    bw = barycentric_weights(nodes)
    D = np.zeros((n, n))
    for i in range(n):
        for j in range(n):
            if i != j:
                D[i, j] = (bw[j] / bw[i]) / (nodes[i] - nodes[j])
        D[i, i] = -np.sum(D[i, np.arange(n) != i])
    return D


def _legendre_vandermonde(nodes):
    """Vandermonde of L2-orthonormal Legendre polynomials at the nodes."""
    n = len(nodes)
    V = np.empty((n, n))
    p_prev = np.ones(n)
    p = nodes.copy()
    V[:, 0] = p_prev * np.sqrt(0.5)
    if n > 1:
        V[:, 1] = p * np.sqrt(1.5)
    for k in range(1, n - 1):
        p_next = ((2 * k + 1) * nodes * p - k * p_prev) / (k + 1)
        p_prev, p = p, p_next
        V[:, k + 1] = p * np.sqrt(k + 1.5)
    return V


@dataclass(frozen=True)
class BasisOperators:
    """Collocated LGL interpolation/quadrature operators for one degree."""

    degree: int
    nodes: np.ndarray
    weights: np.ndarray
    diff: np.ndarray          # strong-form derivative matrix D
    diff_weak: np.ndarray     # weak-form volume matrix, DW[i,k] = w_k D[k,i] / w_i
    vandermonde_inv: np.ndarray  # nodal -> orthonormal-Legendre modal

    @property
    def n_nodes(self):
        return self.degree + 1

    @property
    def boundary_left(self):
        """Interpolation vector to xi = -1 (unit vector for Lobatto nodes)."""
        v = np.zeros(self.n_nodes)
        v[0] = 1.0
        return v

    @property
    def boundary_right(self):
        v = np.zeros(self.n_nodes)
        v[-1] = 1.0
        return v


@lru_cache(maxsize=None)
def lgl_basis(degree):
    """Build the degree-N LGL basis operators. Requires N >= 1."""
    if degree < 1:
        raise ValueError("polynomial degree must be at least 1")
    nodes, weights = gauss_lobatto(degree + 1)
    D = differentiation_matrix(nodes)
    DW = (weights[None, :] * D.T) / weights[:, None]
    Vinv = np.linalg.inv(_legendre_vandermonde(nodes))
    for arr in (nodes, weights, D, DW, Vinv):
        arr.setflags(write=False)
    return BasisOperators(degree, nodes, weights, D, DW, Vinv)


def _half_interval_projection(basis):
    """Exact L2 projection matrices from half-interval nodal data to the parent.

    Parent data p and half data (f_lo, f_hi) satisfy, for the projection
    R_lo f_lo + R_hi f_hi, the moment conditions
        int_{-1}^{1} (R f) l_i = int_{-1}^{0} f_lo l_i + int_{0}^{1} f_hi l_i,
    with all integrals evaluated exactly by Gauss quadrature.
    """
    n = basis.n_nodes
    gx, gw = np.polynomial.legendre.leggauss(n)  # exact through degree 2N+1
    L_g = lagrange_eval_matrix(basis.nodes, gx)  # basis at Gauss nodes
    gram = L_g.T @ (gw[:, None] * L_g)
    # lower half: zeta = (s - 1)/2 maps Gauss nodes s to [-1, 0]
    L_lo = lagrange_eval_matrix(basis.nodes, (gx - 1.0) / 2.0)
    L_hi = lagrange_eval_matrix(basis.nodes, (gx + 1.0) / 2.0)
    B_lo = 0.5 * L_lo.T @ (gw[:, None] * L_g)
    B_hi = 0.5 * L_hi.T @ (gw[:, None] * L_g)
    R_lo = np.linalg.solve(gram, B_lo)
    R_hi = np.linalg.solve(gram, B_hi)
    return R_lo, R_hi


@dataclass(frozen=True)
class TransferOperators:
    """Forward interpolation / reverse projection between a parent interval
    and its two halves, used for both mortar faces and mesh adaptation."""

    forward_lower: np.ndarray
    forward_upper: np.ndarray
    reverse_lower: np.ndarray
    reverse_upper: np.ndarray

    def refine_nodal(self, values):
        """Interpolate element data (..., n, n) onto the 4 children.

        Children are ordered c = cx + 2*cy with 0 = lower half per axis.
        """
        fwd = (self.forward_lower, self.forward_upper)
        return [
            np.einsum("ai,bj,...ij->...ab", fwd[cx], fwd[cy], values)
            for cy in (0, 1)
            for cx in (0, 1)
        ]

    def coarsen_nodal(self, children):
        """Project 4 children (same ordering as refine_nodal) onto the parent."""
        rev = (self.reverse_lower, self.reverse_upper)
        out = None
        idx = 0
        for cy in (0, 1):
            for cx in (0, 1):
                term = np.einsum("ia,jb,...ab->...ij", rev[cx], rev[cy], children[idx])
                out = term if out is None else out + term
                idx += 1
        return out


@lru_cache(maxsize=None)
def transfer_operators(degree):
    """Transfer operators for the degree-N LGL basis (cached per degree)."""
    basis = lgl_basis(degree)
    fwd_lo = lagrange_eval_matrix(basis.nodes, (basis.nodes - 1.0) / 2.0)
    fwd_hi = lagrange_eval_matrix(basis.nodes, (basis.nodes + 1.0) / 2.0)
    rev_lo, rev_hi = _half_interval_projection(basis)
    for arr in (fwd_lo, fwd_hi, rev_lo, rev_hi):
        arr.setflags(write=False)
    return TransferOperators(fwd_lo, fwd_hi, rev_lo, rev_hi)


def interpolate_nodal(values, nodes, targets):
    """Evaluate the interpolating polynomial of nodal `values` at `targets`.

    `values` may carry leading axes; interpolation acts on the last axis.
    Targets must lie in the reference interval [-1, 1].
    """
    targets = np.atleast_1d(np.asarray(targets, dtype=float))
    if targets.size < 1:
        raise ValueError("need at least one target point")
    if np.any(targets < -1.0 - 1e-12) or np.any(targets > 1.0 + 1e-12):
        raise ValueError("interpolation targets must lie in [-1, 1]")
    L = lagrange_eval_matrix(nodes, targets)
    return np.einsum("mj,...j->...m", L, np.asarray(values, dtype=float))
