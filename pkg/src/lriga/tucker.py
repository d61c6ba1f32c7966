"""Tucker-format tensors and Kronecker-structured operators in three dimensions.

Conventions used throughout the package:

* Dense three-way tensors are plain ``numpy.ndarray`` objects of shape
  ``(n1, n2, n3)``.
* The vectorization ``vec(X)`` orders entries colexicographically (first
  index fastest), i.e. ``X.ravel(order='F')``.  With this layout,

      (J3 kron J2 kron J1) @ vec(X) == vec(X x1 J1 x2 J2 x3 J3)

  where ``xk`` denotes the mode-k product.
* A Tucker tensor is a small core tensor multiplied along each mode by a
  factor matrix; its multilinear rank is the tuple of core dimensions.
"""

from dataclasses import dataclass

import numpy as np

#: Refuse to densify tensors with more entries than this (2**27 doubles = 1 GiB).
DENSE_GUARD = 2 ** 27


class MemoryGuardError(RuntimeError):
    """Raised when an operation would materialize an oversized dense tensor."""


def vec(X):
    """Colexicographic vectorization of a dense tensor."""
    return np.asarray(X).ravel(order="F")


def unvec(x, dims):
    """Inverse of :func:`vec` for the given ``(n1, n2, n3)``."""
    return np.asarray(x).reshape(dims, order="F")


def mode_product(X, axis, J):
    """Multiply the dense tensor ``X`` along ``axis`` by the matrix ``J``.

    ``J`` has shape ``(m, n_axis)``; the result has the same shape as ``X``
    except that dimension ``axis`` becomes ``m``.  Entrywise,
    ``out[..., i, ...] = sum_j X[..., j, ...] * J[i, j]``.
    """
    Y = np.tensordot(np.asarray(J), np.asarray(X), axes=([1], [axis]))
    return np.moveaxis(Y, 0, axis)


def multi_mode_product(X, mats):
    """Apply a mode-k product for every non-``None`` entry of ``mats``."""
    Y = np.asarray(X)
    for k, J in enumerate(mats):
        if J is not None:
            Y = mode_product(Y, k, J)
    return Y


@dataclass(frozen=True)
class TuckerTensor3:
    """A three-way tensor in Tucker format.

    Attributes:
        core: ndarray of shape ``(r1, r2, r3)``.
        factors: tuple of three factor matrices of shapes ``(nk, rk)``.
    """

    core: np.ndarray
    factors: tuple

    def __post_init__(self):
        assert self.core.ndim == 3
        assert len(self.factors) == 3
        for k in range(3):
            assert self.factors[k].shape[1] == self.core.shape[k], (
                "factor %d has %d columns, core expects %d"
                % (k, self.factors[k].shape[1], self.core.shape[k])
            )

    @property
    def dims(self):
        return tuple(U.shape[0] for U in self.factors)

    @property
    def rank(self):
        return self.core.shape

    def norm(self):
        """Frobenius norm (equals the 2-norm of the vectorization)."""
        return np.sqrt(max(tucker_inner(self, self), 0.0))

    def __add__(self, other):
        return tucker_add(self, other)

    def __sub__(self, other):
        return tucker_add(self, tucker_scale(other, -1.0))

    def __rmul__(self, a):
        return tucker_scale(self, a)


def from_dense(X):
    """Wrap a dense tensor as a full-rank Tucker tensor (identity factors)."""
    X = np.asarray(X, dtype=float)
    assert X.ndim == 3
    return TuckerTensor3(X.copy(), tuple(np.eye(n) for n in X.shape))


def to_dense(x, guard=DENSE_GUARD):
    """Expand a Tucker tensor to a dense ndarray.

    Raises:
        MemoryGuardError: if the dense tensor would exceed ``guard`` entries.
    """
    n1, n2, n3 = x.dims
    if n1 * n2 * n3 > guard:
        raise MemoryGuardError(
            "dense expansion of size %d x %d x %d exceeds guard %d" % (n1, n2, n3, guard)
        )
    return multi_mode_product(x.core, x.factors)


def tucker_zero(dims):
    """The canonical rank-(1,1,1) zero tensor of the given dimensions."""
    factors = []
    for n in dims:
        e = np.zeros((n, 1))
        e[0, 0] = 1.0
        factors.append(e)
    return TuckerTensor3(np.zeros((1, 1, 1)), tuple(factors))


def tucker_scale(x, a):
    """Scale a Tucker tensor by the scalar ``a`` (rank unchanged)."""
    return TuckerTensor3(float(a) * x.core, x.factors)


def tucker_add(x, y):
    """Sum of two Tucker tensors; ranks add componentwise.

    The factor matrices are concatenated and the cores are embedded in the
    two diagonal blocks of an enlarged core.
    """
    assert x.dims == y.dims, "dimension mismatch: %s vs %s" % (x.dims, y.dims)
    rx, ry = x.rank, y.rank
    core = np.zeros((rx[0] + ry[0], rx[1] + ry[1], rx[2] + ry[2]))
    core[: rx[0], : rx[1], : rx[2]] = x.core
    core[rx[0] :, rx[1] :, rx[2] :] = y.core
    factors = tuple(
        np.hstack([x.factors[k], y.factors[k]]) for k in range(3)
    )
    return TuckerTensor3(core, factors)


def tucker_inner(x, y):
    """Frobenius inner product of two Tucker tensors.

    Computed by contracting the small Gram matrices ``Xk^T Yk`` against the
    cores, never forming dense tensors.
    """
    assert x.dims == y.dims
    grams = [x.factors[k].T @ y.factors[k] for k in range(3)]
    return float(np.dot(vec(x.core), vec(multi_mode_product(y.core, grams))))


def tucker_norm(x):
    return x.norm()


@dataclass(frozen=True)
class TuckerOperator3:
    """A linear operator in Tucker-matrix (Kronecker-structured) format.

    Attributes:
        core: ndarray of shape ``(R1, R2, R3)``.
        factors: tuple of three sequences of matrices; ``factors[k][i]`` maps
            the k-th direction and may be dense, sparse, or any object
            supporting ``@`` with a dense matrix.

    Acting on ``vec(x)``, the operator equals
    ``sum_{i1,i2,i3} core[i1,i2,i3] * (C3_{i3} kron C2_{i2} kron C1_{i1})``.
    """

    core: np.ndarray
    factors: tuple

    def __post_init__(self):
        assert self.core.ndim == 3
        for k in range(3):
            assert len(self.factors[k]) == self.core.shape[k]

    @property
    def rank(self):
        return self.core.shape

    @property
    def dims_out(self):
        return tuple(self.factors[k][0].shape[0] for k in range(3))

    def matvec(self, x):
        return tucker_matvec(self, x)


def tucker_matvec(op, x):
    """Apply a Tucker-format operator to a Tucker tensor.

    The result has factor matrices ``[Ck_1 Xk, ..., Ck_Rk Xk]`` (operator
    slot slowest) and core ``kron(op.core, x.core)``, so its multilinear
    rank is ``(R1 r1, R2 r2, R3 r3)``.
    """
    factors = []
    for k in range(3):
        blocks = [np.asarray(C @ x.factors[k]) for C in op.factors[k]]
        factors.append(np.hstack(blocks))
    core = np.kron(op.core, x.core)
    return TuckerTensor3(core, tuple(factors))


def operator_sum(ops):
    """Exact sum of Tucker-format operators (cores block-embedded)."""
    ops = list(ops)
    R = [sum(op.rank[k] for op in ops) for k in range(3)]
    core = np.zeros(tuple(R))
    off = [0, 0, 0]
    factors = ([], [], [])
    for op in ops:
        r = op.rank
        core[off[0] : off[0] + r[0], off[1] : off[1] + r[1], off[2] : off[2] + r[2]] = op.core
        for k in range(3):
            factors[k].extend(op.factors[k])
            off[k] += r[k]
    return TuckerOperator3(core, tuple(tuple(f) for f in factors))


def compression_percent(x):
    """Storage of the Tucker representation relative to dense, in percent.

    ``100 * (r1 r2 r3 + sum_k rk nk) / (n1 n2 n3)``
    """
    n = x.dims
    r = x.rank
    stored = r[0] * r[1] * r[2] + sum(r[k] * n[k] for k in range(3))
    return 100.0 * stored / (n[0] * n[1] * n[2])


def save_tucker(path, x):
    """Serialize a Tucker tensor to ``.npz``.

    Layout: ``core`` (3-way array) and ``factor0..factor2`` (row-major
    payloads with their natural shapes).  Intended for debugging and test
    goldens, not as an interchange format.
    """
    np.savez(path, core=x.core, factor0=x.factors[0], factor1=x.factors[1],
             factor2=x.factors[2])


def load_tucker(path):
    with np.load(path) as data:
        return TuckerTensor3(
            data["core"], (data["factor0"], data["factor1"], data["factor2"])
        )
