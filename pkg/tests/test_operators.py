import numpy as np
import pytest

from flatmagic.acceptance import _p_factorization_error
from flatmagic.eig import eigenvalues
from flatmagic.errors import SingularShift
from flatmagic.lattice import DUAL_LENGTH, LAMBDA_STAR, OMEGA, ModeIndex, mode_to_point, rotate_mode
from flatmagic.operators import (assemble_chiral_D, assemble_chiral_D_dzeta, assemble_P,
                                 assemble_scalar_Q, assemble_scalar_Q_dzeta, assemble_T_chiral,
                                 assemble_T_scalar, chiral_windows, multiplication_matrix, scalar_V,
                                 window)
from flatmagic.potential import bm_potential_U, bm_V, reflect

R = 5 * DUAL_LENGTH
U = bm_potential_U()
V = bm_V()


def test_scalar_V_matches_bm_V():
    assert scalar_V().allclose(V)


def test_free_Q_is_diagonal():
    k = 0.4 + 0.1j
    w = window(LAMBDA_STAR, R, k)
    Q = assemble_scalar_Q(0.0, k, w).entries
    assert np.array_equal(Q, np.diag((w.points + k) ** 2))


def test_multiplication_matrix_brute_force():
    w = window(LAMBDA_STAR, 3 * DUAL_LENGTH, 0.2j)
    M = multiplication_matrix(V, w)
    for i, a in enumerate(w.modes):
        for j, b in enumerate(w.modes):
            assert M[i, j] == V[(a.m - b.m, a.n - b.n)]


def test_dQ_dzeta_finite_difference():
    w = window(LAMBDA_STAR, R, 0.3j)
    zeta, h, alpha = 0.3j + 0.1, 1e-4, 1.2 - 0.3j
    fd = (assemble_scalar_Q(alpha, zeta + h, w).entries
          - assemble_scalar_Q(alpha, zeta - h, w).entries) / (2 * h)
    exact = assemble_scalar_Q_dzeta(zeta, w).entries
    assert np.max(np.abs(fd - exact)) < 1e-6 * np.max(np.abs(exact))
    w1, w2 = chiral_windows(R, 0.3j)
    fd = (assemble_chiral_D(alpha, zeta + h, w1, w2).entries
          - assemble_chiral_D(alpha, zeta - h, w1, w2).entries) / (2 * h)
    assert np.allclose(fd, assemble_chiral_D_dzeta(w1, w2).entries, atol=1e-8)


def test_T_scalar_definition():
    k = 1j
    w = window(LAMBDA_STAR, R, k)
    T = assemble_T_scalar(k, w).entries
    d = w.points + k
    assert np.allclose(T, np.diag(d ** -2) @ multiplication_matrix(V, w), rtol=1e-14, atol=0)


def test_T_singular_shift():
    with pytest.raises(SingularShift):
        assemble_T_scalar(0j, window(LAMBDA_STAR, R))
    w1, w2 = chiral_windows(R)
    with pytest.raises(SingularShift):
        assemble_T_chiral(0j, w1, w2)


def test_T_chiral_is_elimination():
    """alpha^-2 in Spec T_chiral iff D(alpha) + k is singular (on the same windows)."""
    k = 1j
    w1, w2 = chiral_windows(R, k)
    lam = eigenvalues(assemble_T_chiral(k, w1, w2)).eigenvalues[0]
    alpha = 1 / np.sqrt(lam)
    D = assemble_chiral_D(alpha, k, w1, w2).entries
    s = np.linalg.svd(D, compute_uv=False)
    assert s[-1] < 1e-10 * s[0]


def test_chiral_block_is_a_subspectrum():
    k = 0.7 + 0.2j
    r = 4 * DUAL_LENGTH
    full_w, _ = chiral_windows(r, k, reduced=False)
    w1, w2 = chiral_windows(r, k)
    full = eigenvalues(assemble_T_chiral(k, full_w, full_w)).eigenvalues
    red = eigenvalues(assemble_T_chiral(k, w1, w2)).eigenvalues[:10]
    for x in red:
        assert np.min(np.abs(full - x)) < 1e-9 * abs(x)


def _perm(src, dst, fn):
    look = dst.index()
    return np.array([look[fn(q)] for q in src.modes])


def test_translation_covariance_exact():
    k = 0.6 + 0.3j
    g = (1, -2)
    gamma = mode_to_point(LAMBDA_STAR, g)
    w0 = window(LAMBDA_STAR, R, k)
    w1 = window(LAMBDA_STAR, R, k + gamma)
    T0 = assemble_T_scalar(k, w0).entries
    T1 = assemble_T_scalar(k + gamma, w1).entries
    p = _perm(w0, w1, lambda q: ModeIndex(q.m - g[0], q.n - g[1]))
    assert np.allclose(T1[np.ix_(p, p)], T0, rtol=1e-12, atol=0)


def test_rotation_covariance_exact():
    k = 0.6 + 0.3j
    w0 = window(LAMBDA_STAR, R, k)
    w1 = window(LAMBDA_STAR, R, OMEGA * k)
    T0 = assemble_T_scalar(k, w0).entries
    T1 = assemble_T_scalar(OMEGA * k, w1).entries
    p = _perm(w0, w1, lambda q: rotate_mode(LAMBDA_STAR, q, 1))
    assert np.max(np.abs(T1[np.ix_(p, p)] - T0)) < 1e-12 * np.max(np.abs(T0))


@pytest.mark.parametrize("alpha,k", [(0.7, 0.3 + 0.2j), (1.3 - 0.4j, -0.5 + 0.9j), (2.0j, 1.0)])
def test_P_factorisation_band_limited(alpha, k):
    assert _p_factorization_error(alpha, k, 3 * DUAL_LENGTH) < 1e-12


def test_P_diagonal_blocks_are_Q():
    k, alpha = 0.2 + 0.1j, 0.9
    w, _ = chiral_windows(3 * DUAL_LENGTH, k, reduced=False)
    P = assemble_P(alpha, k, w).entries
    n = len(w)
    Q = assemble_scalar_Q(alpha, k, w, scalar_V(U)).entries
    assert np.allclose(P[:n, :n], Q) and np.allclose(P[n:, n:], Q)


def test_chiral_D_blocks():
    k, alpha = 0.5j, 0.8
    w1, w2 = chiral_windows(R, k)
    D = assemble_chiral_D(alpha, k, w1, w2).entries
    n = len(w1)
    assert np.allclose(D[:n, n:], alpha * multiplication_matrix(U, w1, w2))
    assert np.allclose(D[n:, :n], alpha * multiplication_matrix(reflect(U), w2, w1))


def test_window_description():
    w = window(LAMBDA_STAR, R, 1j)
    d = w.describe()
    assert d["lattice"] == "LambdaStar" and d["size"] == len(w) and d["shift_im"] == 1.0
    with pytest.raises(ValueError):
        window(LAMBDA_STAR, 1e-3, 1 + 1j)
