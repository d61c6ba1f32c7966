"""Fast-diagonalization preconditioners for Kronecker-sum Laplacians.

The exact version diagonalizes the three univariate pencils and inverts
the eigenvalue sums directly; it serves as the oracle path and as the
preconditioner at trivially small sizes.  The low-rank version replaces
1/(lam1+lam2+lam3) by an exponential sum, which turns the inverse into a
short sum of Kronecker products: applied to a Tucker tensor it multiplies
each factor by a block row of eigenvector transforms and scales the core,
growing each rank by exactly the number of exponential terms.
"""

import numpy as np

from .eigen import exact_eigen
from .expsum import build_exp_sum
from .tucker import TuckerTensor3, mode_product, from_dense, to_dense

# refuse to densify anything beyond this many entries in the oracle path
_EXACT_GUARD = 2 ** 24


class FastDiagError(RuntimeError):
    """Raised when a fast-diagonalization setup is inconsistent."""


class ExactFD:
    """Exact inverse of the Kronecker sum K1 (x) M2 (x) M3 + ... (dense path)."""

    def __init__(self, eigs):
        self.eigs = eigs
        lam = [np.asarray(e.lambdas) for e in eigs]
        self.denom = (lam[0][:, None, None] + lam[1][None, :, None]
                      + lam[2][None, None, :])
        if np.min(self.denom) <= 0.0:
            raise FastDiagError("eigenvalue sums must be positive")

    @property
    def dims(self):
        return tuple(e.n for e in self.eigs)

    def apply_array(self, S):
        """Inverse applied to a dense coefficient array of shape dims."""
        S = np.asarray(S, dtype=float)
        if S.shape != self.dims:
            raise ValueError("expected shape %s, got %s" % (self.dims, S.shape))
        T = S
        for k, e in enumerate(self.eigs):
            T = mode_product(T, k, np.asarray(e.apply(np.eye(e.n), transpose=True)))
        T = T / self.denom
        for k, e in enumerate(self.eigs):
            T = mode_product(T, k, np.asarray(e.apply(np.eye(e.n))))
        return T

    def apply(self, s):
        """Inverse applied to a Tucker tensor; returns a full-rank Tucker tensor."""
        if int(np.prod(s.dims)) > _EXACT_GUARD:
            raise FastDiagError("exact fast diagonalization limited to small problems")
        return from_dense(self.apply_array(to_dense(s)))


def exact_fd(pencils):
    """Exact fast-diagonalization applicator from three univariate pencils."""
    return ExactFD([exact_eigen(pc) for pc in pencils])


class LowRankFD:
    """Exponential-sum fast-diagonalization preconditioner in Tucker form.

    Attributes:
        eigs: per-direction eigendecomposition applicators.
        expsum: ExpSum approximating 1/lambda on [1, lam_max/lam_min].
        lam_min, lam_max: extreme eigenvalue sums (after direction weights).
        diag: diag[i][j] = exp(-(alpha_j/lam_min) * Lambda_i), shape (R, n_i).
        core: diagonal (R, R, R) core with entries omega_j / lam_min.
    """

    def __init__(self, eigs, expsum, lam_min, lam_max, diag, core):
        self.eigs = eigs
        self.expsum = expsum
        self.lam_min = lam_min
        self.lam_max = lam_max
        self.diag = diag
        self.core = core

    @property
    def R(self):
        return self.expsum.R

    @property
    def dims(self):
        return tuple(e.n for e in self.eigs)

    def diagnostics(self):
        return {
            "M_P": self.expsum.M,
            "R_P": self.expsum.R,
            "expsum_error": self.expsum.error,
            "lam_min": self.lam_min,
            "lam_max": self.lam_max,
        }

    def apply(self, s):
        return apply_lowrank_fd(self, s)


def build_lowrank_fd(eigs, eps_rel, weights=None, r_cap=128):
    """Low-rank fast-diagonalization preconditioner from three eigendecompositions.

    Args:
        eigs: three applicators with .lambdas, .n and .apply(B, transpose).
        eps_rel: relative accuracy of the exponential-sum inverse.
        weights: optional positive per-direction scalings of the eigenvalues
            (the separable-coefficient case, e.g. elasticity diagonal blocks).
        r_cap: largest admissible number of exponential terms.
    """
    if weights is None:
        weights = (1.0, 1.0, 1.0)
    lam = [w * np.asarray(e.lambdas, dtype=float) for w, e in zip(weights, eigs)]
    for v in lam:
        if np.min(v) < -1e-12 * max(np.max(v), 1.0):
            raise FastDiagError("negative eigenvalue in a direction pencil")
    lam_min = sum(float(np.min(v)) for v in lam)
    lam_max = sum(float(np.max(v)) for v in lam)
    if lam_min <= 0.0:
        raise FastDiagError("eigenvalue sums must be positive")
    es = build_exp_sum(lam_min, lam_max, eps_rel, r_cap=r_cap)
    diag = [np.exp(-np.outer(es.exponents, v) / lam_min) for v in lam]
    R = es.R
    core = np.zeros((R, R, R))
    core[np.arange(R), np.arange(R), np.arange(R)] = es.weights / lam_min
    return LowRankFD(list(eigs), es, lam_min, lam_max, diag, core)


def apply_lowrank_fd(P, s):
    """Preconditioner applied to a Tucker tensor.

    Output rank is exactly (R * r1, R * r2, R * r3): each factor becomes the
    R scaled eigenvector transforms side by side (term index slow), and the
    core is the Kronecker product of the diagonal core with the input core.
    """
    if not isinstance(s, TuckerTensor3):
        raise TypeError("expected a TuckerTensor3")
    if s.dims != P.dims:
        raise ValueError("dims %s do not match preconditioner %s" % (s.dims, P.dims))
    factors = []
    for i, e in enumerate(P.eigs):
        Z = np.asarray(e.apply(s.factors[i], transpose=True))
        blocks = [P.diag[i][j][:, None] * Z for j in range(P.R)]
        factors.append(np.asarray(e.apply(np.hstack(blocks))))
    core = np.kron(P.core, s.core)
    return TuckerTensor3(core, tuple(factors))
