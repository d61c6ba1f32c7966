"""Error-bound and rank behaviour of the truncation operators."""

import numpy as np

from lriga.truncation import sthosvd, truncate_dynamic, truncate_rel
from lriga.tucker import (
    from_dense,
    to_dense,
    tucker_add,
    tucker_norm,
    tucker_scale,
    tucker_zero,
    vec,
)

from util import random_tucker


def _orthonormal(U):
    return np.allclose(U.T @ U, np.eye(U.shape[1]), atol=1e-12)


def test_sthosvd_error_bound():
    rng = np.random.default_rng(10)
    for _ in range(25):
        X = rng.standard_normal((8, 9, 7))
        for eps in (0.5, 1e-1, 1e-3, 1e-8):
            t = sthosvd(X, eps)
            err = np.linalg.norm(to_dense(t) - X)
            assert err <= eps * np.linalg.norm(X) * (1 + 1e-12)
            assert all(_orthonormal(U) for U in t.factors)


def test_sthosvd_eps_zero_is_exact_full_rank():
    rng = np.random.default_rng(11)
    X = rng.standard_normal((5, 4, 6))
    t = sthosvd(X, 0.0)
    assert t.rank == (5, 4, 6)
    assert np.allclose(to_dense(t), X, atol=1e-12)


def test_sthosvd_zero_tensor():
    t = sthosvd(np.zeros((4, 5, 6)), 1e-3)
    assert t.rank == (1, 1, 1)
    assert np.all(to_dense(t) == 0.0)


def test_sthosvd_recovers_exact_low_rank():
    rng = np.random.default_rng(12)
    x = random_tucker(rng, (12, 11, 10), (3, 2, 4))
    t = sthosvd(to_dense(x), 1e-10)
    assert t.rank == (3, 2, 4)


def test_truncate_rel_error_bound():
    rng = np.random.default_rng(13)
    for _ in range(60):
        dims = tuple(rng.integers(3, 13, 3))
        ranks = tuple(rng.integers(1, 6, 3))
        y = random_tucker(rng, dims, ranks)
        nrm = tucker_norm(y)
        for eps in (1e-1, 1e-3, 1e-6):
            t = truncate_rel(y, eps)
            err = np.linalg.norm(to_dense(t) - to_dense(y))
            assert err <= eps * nrm * (1 + 1e-10)
            assert all(_orthonormal(U) for U in t.factors)


def test_truncate_rel_rank_exceeding_dims():
    # nominal rank above the mode sizes must be handled (and reduced)
    rng = np.random.default_rng(14)
    y = random_tucker(rng, (5, 4, 3), (8, 9, 7))
    t = truncate_rel(y, 1e-12)
    assert all(r <= n for r, n in zip(t.rank, t.dims))
    assert np.allclose(to_dense(t), to_dense(y), atol=1e-10)


def test_truncate_rel_compresses_redundant_sum():
    rng = np.random.default_rng(15)
    x = random_tucker(rng, (9, 8, 7), (2, 3, 2))
    doubled = tucker_add(x, x)  # rank doubles, same tensor up to scale
    t = truncate_rel(doubled, 1e-12)
    assert t.rank == (2, 3, 2)
    assert np.allclose(to_dense(t), 2.0 * to_dense(x), atol=1e-9)


def test_truncate_rel_zero():
    t = truncate_rel(tucker_zero((4, 4, 4)), 1e-2)
    assert t.rank == (1, 1, 1)
    assert np.all(to_dense(t) == 0.0)


def test_truncate_dynamic_accepts_clean_proposal():
    # proposal is exactly low rank, just stored redundantly: the first
    # truncation reproduces it and must be accepted at the initial tolerance
    rng = np.random.default_rng(16)
    prev = random_tucker(rng, (8, 8, 8), (2, 2, 2))
    step = random_tucker(rng, (8, 8, 8), (1, 1, 1))
    prop = tucker_add(prev, step)
    y, eps_new = truncate_dynamic(prev, prop, 1e-1, 0.5, 1e-6, 1e-3)
    assert eps_new == 1e-1
    assert np.allclose(to_dense(y), to_dense(prop), atol=1e-8)


def test_truncate_dynamic_stagnant_proposal():
    # an exactly-zero update must be accepted as-is (no division by zero in v)
    prev = tucker_zero((6, 6, 6))
    prop = tucker_zero((6, 6, 6))
    y, eps_new = truncate_dynamic(prev, prop, 1e-2, 0.5, 1e-8, 1e-3)
    assert eps_new == 1e-2
    assert np.all(to_dense(y) == 0.0)

    # a proposal differing from the previous iterate only by roundoff is
    # still legal input: the result must satisfy the documented invariants
    rng = np.random.default_rng(17)
    prev = random_tucker(rng, (6, 6, 6), (2, 2, 2))
    prop = tucker_add(prev, tucker_scale(prev, 0.0))
    y, eps_new = truncate_dynamic(prev, prop, 1e-2, 0.5, 1e-8, 1e-3)
    assert 0.5 * 1e-8 <= eps_new <= 1e-2
    assert np.allclose(to_dense(y), to_dense(prev), atol=1e-10)


def test_truncate_dynamic_runs_to_floor():
    # delta = 0 makes acceptance impossible, so the tolerance walks down by
    # factors of alpha and stops just above the floor
    rng = np.random.default_rng(18)
    prev = tucker_zero((7, 7, 7))
    prop = from_dense(rng.standard_normal((7, 7, 7)))
    eps, alpha, eps_min = 1e-1, 0.5, 1e-3
    y, eps_new = truncate_dynamic(prev, prop, eps, alpha, eps_min, 0.0)
    assert eps_min < eps_new <= eps
    assert alpha * eps_new <= eps_min
    m = round(np.log(eps_new / eps) / np.log(alpha))
    assert np.isclose(eps_new, eps * alpha ** m, rtol=1e-12)
    # the accepted iterate is the truncation at the returned tolerance
    err = np.linalg.norm(to_dense(y) - to_dense(prop))
    assert err <= eps_new * tucker_norm(prop) * (1 + 1e-10)


def test_truncate_dynamic_floor_blocks_reduction():
    # alpha * eps already below the floor: no reduction is permitted even
    # for a hopeless proposal, and the input tolerance comes back
    rng = np.random.default_rng(19)
    prev = tucker_zero((6, 6, 6))
    prop = from_dense(rng.standard_normal((6, 6, 6)))
    y, eps_new = truncate_dynamic(prev, prop, 0.5, 0.5, 0.4, 0.0)
    assert eps_new == 0.5
