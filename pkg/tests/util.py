"""Shared helpers for building random low-rank test instances."""

import numpy as np

from lriga.tucker import TuckerOperator3, TuckerTensor3


def random_tucker(rng, dims, ranks):
    core = rng.standard_normal(ranks)
    factors = tuple(rng.standard_normal((n, r)) for n, r in zip(dims, ranks))
    return TuckerTensor3(core, factors)


def random_operator(rng, dims, ranks, dims_in=None):
    """Random Tucker-format operator; square per direction unless dims_in given."""
    dims_in = dims if dims_in is None else dims_in
    core = rng.standard_normal(ranks)
    factors = tuple(
        tuple(rng.standard_normal((m, n)) for _ in range(R))
        for m, n, R in zip(dims, dims_in, ranks)
    )
    return TuckerOperator3(core, factors)


def densify_apply(apply_one, dims):
    """Dense matrix of a Tucker-tensor-to-Tucker-tensor linear map."""
    from lriga.tucker import to_dense, vec

    N = int(np.prod(dims))
    out = np.zeros((N, N))
    col = 0
    for k in range(dims[2]):
        for j in range(dims[1]):
            for i in range(dims[0]):
                factors = []
                for n, idx in zip(dims, (i, j, k)):
                    e = np.zeros((n, 1))
                    e[idx, 0] = 1.0
                    factors.append(e)
                unit = TuckerTensor3(np.ones((1, 1, 1)), tuple(factors))
                out[:, col] = vec(to_dense(apply_one(unit)))
                col += 1
    return out


def dense_kron_sum(spaces, weights):
    """Weighted Kronecker-sum matrix (stiffness in one slot, mass elsewhere)."""
    from lriga.bsplines import assemble_pencil
    from lriga.oracle import kron3

    pencils = [assemble_pencil(s) for s in spaces]
    M = [p.M.toarray() for p in pencils]
    K = [p.K.toarray() for p in pencils]
    D = np.zeros((int(np.prod([s.n for s in spaces])),) * 2)
    for d, w in enumerate(weights):
        mats = [K[t] if t == d else M[t] for t in range(3)]
        D = D + w * kron3(*mats)
    return D
