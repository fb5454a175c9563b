import numpy as np
import pytest
from hypothesis import given, strategies as st

from flatmagic.eig import (canonical_order, eigenvalues, logderiv_trace, sigma_min, sigma_min_upper,
                           singular_values, smallest_singular_values)
from flatmagic.errors import EigenSolverError, NearSingular


def cofactor_charpoly(A):
    """Coefficients (e1, e2, e3) of det(lam - A) = lam^3 - e1 lam^2 + e2 lam - e3."""
    e1 = np.trace(A)
    e2 = sum(A[i, i] * A[j, j] - A[i, j] * A[j, i] for i, j in ((0, 1), (0, 2), (1, 2)))
    e3 = (A[0, 0] * (A[1, 1] * A[2, 2] - A[1, 2] * A[2, 1])
          - A[0, 1] * (A[1, 0] * A[2, 2] - A[1, 2] * A[2, 0])
          + A[0, 2] * (A[1, 0] * A[2, 1] - A[1, 1] * A[2, 0]))
    return e1, e2, e3


def complex_matrix(seed, n):
    r = np.random.default_rng(seed)
    return r.standard_normal((n, n)) + 1j * r.standard_normal((n, n))


@given(seed=st.integers(0, 10_000))
def test_charpoly_oracle_3x3(seed):
    A = complex_matrix(seed, 3)
    lam = eigenvalues(A).eigenvalues
    e1, e2, e3 = cofactor_charpoly(A)
    assert abs(lam.sum() - e1) < 1e-9 * (1 + abs(e1))
    assert abs(lam[0] * lam[1] + lam[0] * lam[2] + lam[1] * lam[2] - e2) < 1e-9 * (1 + abs(e2))
    assert abs(lam.prod() - e3) < 1e-9 * (1 + abs(e3))


@given(seed=st.integers(0, 10_000))
def test_permutation_similarity(seed):
    A = complex_matrix(seed, 9)
    P = np.eye(9)[np.random.default_rng(seed + 1).permutation(9)]
    a = eigenvalues(A).eigenvalues
    b = eigenvalues(P @ A @ P.T).eigenvalues
    assert np.allclose(a, b, atol=1e-9)


def test_canonical_order():
    vals = np.array([1, -2, 2, 1j, 3])
    assert list(vals[canonical_order(vals)]) == [3, 2, -2, 1, 1j]


def test_eigenvectors_and_residuals():
    A = complex_matrix(5, 6)
    res = eigenvalues(A, vectors=True)
    assert res.residuals.max() < 1e-12
    assert np.allclose(A @ res.vectors, res.vectors * res.eigenvalues)


def test_triangular_exact():
    A = np.triu(complex_matrix(3, 5))
    lam = eigenvalues(A).eigenvalues
    assert np.allclose(np.sort_complex(lam), np.sort_complex(np.diag(A)), atol=1e-12)


def test_non_finite_rejected():
    A = np.eye(3, dtype=complex)
    A[0, 1] = np.nan
    with pytest.raises(EigenSolverError):
        eigenvalues(A)
    with pytest.raises(ValueError):
        eigenvalues(np.ones((2, 3)))


def test_empty_matrix():
    assert len(eigenvalues(np.zeros((0, 0)))) == 0


def test_singular_values_ascending():
    A = np.diag([3.0, 1.0, 2.0])
    assert np.allclose(singular_values(A), [1, 2, 3])
    assert smallest_singular_values(A, 2) == pytest.approx([1, 2])
    assert sigma_min(A) == pytest.approx(1)
    with pytest.raises(ValueError):
        smallest_singular_values(A, 4)


@given(seed=st.integers(0, 10_000))
def test_logderiv_matches_explicit_inverse(seed):
    A = complex_matrix(seed, 6) + 4 * np.eye(6)
    dA = complex_matrix(seed + 7, 6)
    assert logderiv_trace(A, dA) == pytest.approx(np.trace(np.linalg.inv(A) @ dA), rel=1e-10)


def test_logderiv_near_singular():
    A = np.diag([1.0, 1e-15, 1.0]).astype(complex)
    with pytest.raises(NearSingular):
        logderiv_trace(A, np.eye(3))
    with pytest.raises(NearSingular):
        logderiv_trace(np.zeros((2, 2)), np.eye(2))


@given(seed=st.integers(0, 10_000))
def test_sigma_min_upper_is_upper_bound(seed):
    A = complex_matrix(seed, 8)
    exact = sigma_min(A)
    up = sigma_min_upper(A, iters=8)
    assert up >= exact * (1 - 1e-12)


def test_sigma_min_upper_tight_when_separated():
    A = np.diag([1e-9, 1.0, 2.0, 3.0]).astype(complex)
    Q = np.linalg.qr(complex_matrix(2, 4))[0]
    assert sigma_min_upper(Q @ A @ Q.conj().T) == pytest.approx(1e-9, rel=1e-6)
