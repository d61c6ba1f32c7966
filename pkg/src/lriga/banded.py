"""LU factorization that exploits band structure, with a dense fallback.

Collocation and Gram matrices of univariate splines are banded with
bandwidth about the polynomial degree; factoring them inside the band is
cheap and enough at the problem sizes this package targets.  When the band
covers most of the matrix anyway, or when the banded factorization hits a
relatively tiny pivot, a dense partial-pivoting factorization takes over
behind the same interface.
"""

import numpy as np
import scipy.linalg as sla
from scipy.linalg import lapack

# relative pivot threshold below which the banded factorization is not trusted
_PIVOT_RTOL = 1e-12


class BandedLU:
    """One-shot LU of a square matrix; solves with the matrix or its transpose."""

    def __init__(self, A):
        A = np.asarray(A, dtype=float)
        if A.ndim != 2 or A.shape[0] != A.shape[1]:
            raise ValueError("BandedLU needs a square matrix")
        n = A.shape[0]
        self.n = n
        self._band = None
        self._dense = None

        rows, cols = np.nonzero(A)
        if len(rows) == 0:
            raise np.linalg.LinAlgError("matrix is identically zero")
        kl = max(int(np.max(rows - cols)), 0)
        ku = max(int(np.max(cols - rows)), 0)
        self.bandwidth = (kl, ku)
        if kl + ku + 1 >= n:
            # band as wide as the matrix: nothing to exploit
            self._dense = sla.lu_factor(A)
            return

        ab = np.zeros((2 * kl + ku + 1, n))
        for j in range(n):
            i0 = max(0, j - ku)
            i1 = min(n, j + kl + 1)
            ab[kl + ku + np.arange(i0, i1) - j, j] = A[i0:i1, j]
        gbtrf, = lapack.get_lapack_funcs(("gbtrf",), (ab,))
        lu, ipiv, info = gbtrf(ab, kl, ku)
        diag = np.abs(lu[kl + ku, :])
        if info != 0 or np.min(diag) <= _PIVOT_RTOL * np.max(diag):
            self._dense = sla.lu_factor(A)
        else:
            self._band = (lu, ipiv, kl, ku)

    def solve(self, b, trans=False):
        """Solve A x = b, or A^T x = b when trans is set; b may be a matrix."""
        b = np.asarray(b, dtype=float)
        if b.shape[0] != self.n:
            raise ValueError("right-hand side has %d rows, expected %d" % (b.shape[0], self.n))
        if self._dense is not None:
            return sla.lu_solve(self._dense, b, trans=1 if trans else 0)
        lu, ipiv, kl, ku = self._band
        gbtrs, = lapack.get_lapack_funcs(("gbtrs",), (lu,))
        flat = b.ndim == 1
        B = b.reshape(self.n, 1) if flat else b
        x, info = gbtrs(lu, kl, ku, B, ipiv, trans=1 if trans else 0)
        if info != 0:
            raise np.linalg.LinAlgError("banded solve failed with info=%d" % info)
        return x[:, 0] if flat else x
