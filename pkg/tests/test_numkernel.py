"""Dense numerical kernel against the numpy.linalg reference routines."""

import numpy as np
import pytest

from latdec.errors import (
    NotPositiveDefinite,
    NotSymmetric,
    RankDeficient,
    SingularTriangular,
)
from latdec.numkernel import (
    as_matrix,
    as_vector,
    cholesky_upper,
    condition_number_2norm,
    qr_decompose,
    qr_decompose_full,
    singular_values,
    solve_lower_triangular,
    solve_upper_triangular,
)


def random_spd(rng, n):
    m = rng.standard_normal((n, n))
    return m @ m.T + n * np.eye(n)


def test_as_matrix_rejects_bad_input():
    with pytest.raises(ValueError):
        as_matrix(np.array([1.0, 2.0]), "m")
    with pytest.raises(ValueError):
        as_matrix(np.array([[1.0, np.nan]]), "m")
    with pytest.raises(ValueError):
        as_matrix(np.array([[np.inf]]), "m")
    out = as_matrix([[1, 2], [3, 4]], "m")
    assert out.dtype == np.float64
    assert out.shape == (2, 2)


def test_as_vector_rejects_bad_input():
    with pytest.raises(ValueError):
        as_vector(np.eye(2), "v")
    with pytest.raises(ValueError):
        as_vector([1.0, np.nan], "v")
    assert as_vector([1, 2, 3], "v").shape == (3,)


def test_cholesky_frozen_2x2():
    # A = [[4, 2], [2, 3]] factors by hand: U = [[2, 1], [0, sqrt(2)]].
    a = np.array([[4.0, 2.0], [2.0, 3.0]])
    u = cholesky_upper(a)
    assert u[1, 0] == 0.0
    assert abs(u[0, 0] - 2.0) < 1e-14
    assert abs(u[0, 1] - 1.0) < 1e-14
    assert abs(u[1, 1] - 1.4142135623730951) < 1e-14
    assert np.max(np.abs(u.T @ u - a)) < 1e-14


def test_cholesky_matches_numpy():
    rng = np.random.default_rng(101)
    for _ in range(200):
        n = int(rng.integers(1, 9))
        a = random_spd(rng, n)
        u = cholesky_upper(a)
        ref = np.linalg.cholesky(a)          # lower-triangular reference
        assert np.allclose(u.T, ref, rtol=1e-10, atol=1e-10)
        assert np.allclose(u.T @ u, a, rtol=1e-12, atol=1e-12)
        assert np.all(np.diag(u) > 0)


def test_cholesky_rejects_asymmetric():
    with pytest.raises(NotSymmetric):
        cholesky_upper(np.array([[1.0, 2.0], [0.0, 1.0]]))


def test_cholesky_rejects_indefinite():
    with pytest.raises(NotPositiveDefinite):
        cholesky_upper(np.array([[1.0, 2.0], [2.0, 1.0]]))
    with pytest.raises(NotPositiveDefinite):
        cholesky_upper(np.array([[0.0, 0.0], [0.0, 1.0]]))


def test_qr_matches_numpy():
    rng = np.random.default_rng(202)
    for _ in range(200):
        m = int(rng.integers(1, 9))
        n = int(rng.integers(1, m + 1))
        a = rng.standard_normal((m, n))
        q, r = qr_decompose(a)
        assert q.shape == (m, n)
        assert r.shape == (n, n)
        assert np.allclose(q @ r, a, rtol=1e-10, atol=1e-12)
        assert np.allclose(q.T @ q, np.eye(n), atol=1e-10)
        assert np.all(np.diag(r) > 0)
        # Same triangle as the reference once signs are aligned.
        r_ref = np.linalg.qr(a, mode="r")
        signs = np.sign(np.diag(r_ref))
        assert np.allclose(signs[:, None] * r_ref, r, rtol=1e-9, atol=1e-10)


def test_qr_rank_deficient():
    a = np.array([[1.0, 2.0], [2.0, 4.0], [3.0, 6.0]])
    with pytest.raises(RankDeficient):
        qr_decompose(a)


def test_qr_full_shapes():
    rng = np.random.default_rng(303)
    a = rng.standard_normal((6, 3))
    q, r = qr_decompose_full(a)
    assert q.shape == (6, 6)
    assert r.shape == (6, 3)
    assert np.allclose(q @ r, a, atol=1e-12)
    assert np.allclose(q.T @ q, np.eye(6), atol=1e-12)


def test_singular_values_frozen():
    # A = [[3, 0], [4, 5]]: A^T A has eigenvalues 45 and 5.
    sv = singular_values(np.array([[3.0, 0.0], [4.0, 5.0]]))
    assert abs(sv[0] - 6.708203932499369) < 1e-12
    assert abs(sv[1] - 2.23606797749979) < 1e-12


def test_singular_values_match_numpy():
    rng = np.random.default_rng(404)
    for _ in range(200):
        n = int(rng.integers(1, 8))
        a = rng.standard_normal((n, n))
        sv = singular_values(a)
        ref = np.linalg.svd(a, compute_uv=False)
        assert sv.shape == ref.shape
        assert np.all(np.diff(sv) <= 1e-12)       # sorted descending
        assert np.allclose(sv, ref, rtol=1e-9, atol=1e-11)


def test_condition_number():
    a = np.diag([10.0, 1.0, 0.1])
    assert abs(condition_number_2norm(a) - 100.0) < 1e-9
    assert condition_number_2norm(np.zeros((2, 2))) == np.inf


def test_triangular_solves():
    rng = np.random.default_rng(505)
    for _ in range(200):
        n = int(rng.integers(1, 9))
        u = np.triu(rng.standard_normal((n, n)))
        u[np.diag_indices(n)] = rng.uniform(0.5, 2.0, n) * np.where(
            rng.random(n) < 0.5, -1.0, 1.0)
        b = rng.standard_normal(n)
        x = solve_upper_triangular(u, b)
        assert np.allclose(u @ x, b, rtol=1e-9, atol=1e-9)
        low = u.T
        y = solve_lower_triangular(low, b)
        assert np.allclose(low @ y, b, rtol=1e-9, atol=1e-9)


def test_triangular_singular_raises():
    u = np.array([[1.0, 1.0], [0.0, 0.0]])
    with pytest.raises(SingularTriangular):
        solve_upper_triangular(u, np.ones(2))
    with pytest.raises(SingularTriangular):
        solve_lower_triangular(u.T, np.ones(2))
