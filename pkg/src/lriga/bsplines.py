"""Univariate B-spline spaces on [0,1]: open uniform knots, basis and
derivative evaluation, Gauss quadrature, and weighted Galerkin matrices.

Basis functions follow the Cox-De Boor recursion (0/0 = 0 convention).
Weight functions for the weighted matrices are univariate polynomials given
by Chebyshev coefficients on [0,1] via the affine pullback T_k(2*eta - 1).
"""

import math
from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp
from numpy.polynomial.chebyshev import chebval

BC_DIRICHLET = "dirichlet"
BC_NEUMANN = "neumann"


def open_uniform_knots(p, n_el):
    """Open (clamped) uniform knot vector on [0,1] with ``n_el`` spans."""
    interior = np.linspace(0.0, 1.0, n_el + 1)[1:-1]
    return np.concatenate([np.zeros(p + 1), interior, np.ones(p + 1)])


def find_span(p, n_el, eta):
    """Index of the knot span containing ``eta`` (clamped at the right end)."""
    return min(int(eta * n_el), n_el - 1) + p


def basis_funs_all_ders(knots, p, eta, span, n_ders):
    """Values and derivatives of the p+1 basis functions active on a span.

    Standard triangular-table algorithm; returns an array of shape
    ``(n_ders+1, p+1)`` whose row k holds the k-th derivatives.
    """
    left = np.empty(p)
    right = np.empty(p)
    ndu = np.empty((p + 1, p + 1))
    a = np.empty((2, p + 1))
    ders = np.zeros((n_ders + 1, p + 1))

    ndu[0, 0] = 1.0
    for j in range(p):
        left[j] = eta - knots[span - j]
        right[j] = knots[span + 1 + j] - eta
        saved = 0.0
        for r in range(j + 1):
            ndu[j + 1, r] = right[r] + left[j - r]
            temp = ndu[r, j] / ndu[j + 1, r]
            ndu[r, j + 1] = saved + right[r] * temp
            saved = left[j - r] * temp
        ndu[j + 1, j + 1] = saved

    ders[0, :] = ndu[:, p]
    ne = min(n_ders, p)
    for r in range(p + 1):
        s1, s2 = 0, 1
        a[0, 0] = 1.0
        for k in range(1, ne + 1):
            d = 0.0
            rk = r - k
            pk = p - k
            if r >= k:
                a[s2, 0] = a[s1, 0] / ndu[pk + 1, rk]
                d = a[s2, 0] * ndu[rk, pk]
            j1 = 1 if rk >= -1 else -rk
            j2 = k - 1 if r - 1 <= pk else p - r
            for j in range(j1, j2 + 1):
                a[s2, j] = (a[s1, j] - a[s1, j - 1]) / ndu[pk + 1, rk + j]
                d += a[s2, j] * ndu[rk + j, pk]
            if r <= pk:
                a[s2, k] = -a[s1, k - 1] / ndu[pk + 1, r]
                d += a[s2, k] * ndu[r, pk]
            ders[k, r] = d
            s1, s2 = s2, s1

    fac = float(p)
    for k in range(1, ne + 1):
        ders[k, :] *= fac
        fac *= p - k
    return ders


class SplineSpace1D:
    """B-spline space of degree p on n_el uniform spans of [0,1].

    Boundary conditions remove the first/last basis function for a
    Dirichlet end; ``n`` is the dimension after removal and indices in
    "reduced" numbering refer to the remaining functions in order.
    """

    def __init__(self, p, n_el, bc=(BC_DIRICHLET, BC_DIRICHLET)):
        assert p >= 1 and n_el >= 1
        assert all(b in (BC_DIRICHLET, BC_NEUMANN) for b in bc) and len(bc) == 2
        self.p = p
        self.n_el = n_el
        self.bc = tuple(bc)
        self.knots = open_uniform_knots(p, n_el)
        self.h = 1.0 / n_el
        self.full_dim = n_el + p
        self.trim = (
            1 if bc[0] == BC_DIRICHLET else 0,
            1 if bc[1] == BC_DIRICHLET else 0,
        )
        self.n = self.full_dim - self.trim[0] - self.trim[1]
        self._basis_cache = {}

    def __repr__(self):
        return "SplineSpace1D(p=%d, n_el=%d, bc=%s)" % (self.p, self.n_el, self.bc)

    def breakpoints(self):
        return np.linspace(0.0, 1.0, self.n_el + 1)

    def midpoints(self):
        b = self.breakpoints()
        return 0.5 * (b[:-1] + b[1:])

    def eval_basis(self, eta, deriv=0, reduced=True):
        """Nonzero basis values at a point.

        Returns:
            (indices, values): global indices (reduced numbering when
            ``reduced``) and the corresponding basis values; at most p+1
            entries, fewer when constrained functions are dropped.
        """
        if not 0.0 <= eta <= 1.0:
            raise ValueError("evaluation point %g outside [0, 1]" % eta)
        span = find_span(self.p, self.n_el, eta)
        ders = basis_funs_all_ders(self.knots, self.p, eta, span, deriv)
        first = span - self.p
        idx = np.arange(first, first + self.p + 1)
        vals = ders[deriv]
        if reduced:
            keep = (idx >= self.trim[0]) & (idx < self.full_dim - self.trim[1])
            idx, vals = idx[keep] - self.trim[0], vals[keep]
        return idx, vals

    def collocation_matrix(self, etas, deriv=0, reduced=True):
        """Sparse matrix of basis (derivative) values at many points."""
        etas = np.atleast_1d(np.asarray(etas, dtype=float))
        rows, cols, vals = [], [], []
        for i, eta in enumerate(etas):
            idx, v = self.eval_basis(eta, deriv=deriv, reduced=reduced)
            rows.extend([i] * len(idx))
            cols.extend(idx.tolist())
            vals.extend(v.tolist())
        ncols = self.n if reduced else self.full_dim
        return sp.csr_matrix(
            (vals, (rows, cols)), shape=(len(etas), ncols)
        )

    def element_basis(self, rule, deriv):
        """Basis values at the rule's points, per element.

        Returns:
            ndarray of shape (n_el, q, p+1): values of the p+1 active
            functions (full numbering, starting at element index).
        """
        n_el, q = rule.points.shape
        assert n_el == self.n_el
        key = (q, deriv, float(rule.points[0, 0]), float(rule.points[-1, -1]))
        cached = self._basis_cache.get(key)
        if cached is not None:
            return cached
        out = np.empty((n_el, q, self.p + 1))
        for e in range(n_el):
            span = e + self.p
            for j in range(q):
                ders = basis_funs_all_ders(
                    self.knots, self.p, rule.points[e, j], span, deriv
                )
                out[e, j] = ders[deriv]
        self._basis_cache[key] = out
        return out


@dataclass(frozen=True)
class QuadratureRule1D:
    """Per-span Gauss points/weights; exact for degree <= 2q-1 per span."""

    points: np.ndarray  # (n_el, q)
    weights: np.ndarray  # (n_el, q)

    @property
    def q(self):
        return self.points.shape[1]


def gauss_rule(n_el, q):
    """Gauss-Legendre rule with q points on each of n_el uniform spans."""
    x, w = np.polynomial.legendre.leggauss(q)
    h = 1.0 / n_el
    starts = np.linspace(0.0, 1.0, n_el + 1)[:-1]
    pts = starts[:, None] + (x[None, :] + 1.0) * (h / 2.0)
    wts = np.tile(w * (h / 2.0), (n_el, 1))
    return QuadratureRule1D(pts, wts)


@dataclass(frozen=True)
class UnivariatePencil:
    """Univariate mass/stiffness pair (sparse, bandwidth p, symmetric)."""

    M: sp.csr_matrix
    K: sp.csr_matrix


def _weight_values(rule, w_cheb):
    if w_cheb is None:
        return np.ones_like(rule.points)
    return chebval(2.0 * rule.points - 1.0, np.asarray(w_cheb, dtype=float))


def assemble_weighted_matrix(
    space_row,
    space_col,
    deriv_row,
    deriv_col,
    w_cheb=None,
    reduced_row=True,
    reduced_col=True,
):
    """Galerkin matrix with a polynomial weight:

        A[i,j] = int_0^1 w(eta) * D^{dr} b_i(eta) * D^{dc} b_j(eta) deta

    Row/column spaces must share degree and mesh (they may differ in
    boundary conditions).  Quadrature order is chosen exact for the
    polynomial integrand.
    """
    assert space_row.p == space_col.p and space_row.n_el == space_col.n_el
    p, n_el = space_row.p, space_row.n_el
    t_max = 0 if w_cheb is None else max(len(np.atleast_1d(w_cheb)) - 1, 0)
    q = p + 1 + math.ceil(t_max / 2)
    rule = gauss_rule(n_el, q)

    Br = space_row.element_basis(rule, deriv_row)
    Bc = space_col.element_basis(rule, deriv_col)
    wv = _weight_values(rule, w_cheb)
    local = np.einsum("eqi,eqj,eq,eq->eij", Br, Bc, wv, rule.weights)

    e = np.arange(n_el)[:, None, None]
    i = np.arange(p + 1)
    rows = np.broadcast_to(e + i[None, :, None], local.shape)
    cols = np.broadcast_to(e + i[None, None, :], local.shape)
    full = space_row.full_dim
    A = sp.coo_matrix(
        (local.ravel(), (rows.ravel(), cols.ravel())), shape=(full, full)
    ).tocsr()

    r0, r1 = space_row.trim if reduced_row else (0, 0)
    c0, c1 = space_col.trim if reduced_col else (0, 0)
    return A[r0 : full - r1, c0 : full - c1]


def assemble_weighted_rhs(space, w_cheb=None, reduced=True):
    """Load vector f[i] = int_0^1 w(eta) b_i(eta) deta."""
    p, n_el = space.p, space.n_el
    t_max = 0 if w_cheb is None else max(len(np.atleast_1d(w_cheb)) - 1, 0)
    q = p + 1 + math.ceil(t_max / 2)
    rule = gauss_rule(n_el, q)
    B = space.element_basis(rule, 0)
    wv = _weight_values(rule, w_cheb)
    local = np.einsum("eqi,eq,eq->ei", B, wv, rule.weights)
    f = np.zeros(space.full_dim)
    for e in range(n_el):
        f[e : e + p + 1] += local[e]
    if reduced:
        f = f[space.trim[0] : space.full_dim - space.trim[1]]
    return f


def assemble_pencil(space):
    """Mass and stiffness matrices of the (reduced) space."""
    M = assemble_weighted_matrix(space, space, 0, 0)
    K = assemble_weighted_matrix(space, space, 1, 1)
    return UnivariatePencil(M, K)
