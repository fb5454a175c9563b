"""Dense linear algebra: nonsymmetric eigenvalues, small singular values, log-derivative traces.

The heavy lifting is LAPACK through scipy (``zgeev`` for eigenvalues,
``zgesdd`` for singular values, ``zgetrf``/``zgecon`` for solves); this
module fixes the sorting, residual reporting and failure semantics.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.linalg as sl

from .errors import EigenSolverError, NearSingular

COND_MAX = 1e13


@dataclass(frozen=True)
class SpectrumResult:
    eigenvalues: np.ndarray
    residuals: np.ndarray | None = None
    vectors: np.ndarray | None = None

    def __len__(self):
        return len(self.eigenvalues)


def _raw(A) -> np.ndarray:
    a = getattr(A, "entries", A)
    a = np.asarray(a, dtype=complex)
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise ValueError(f"expected a square matrix, got shape {a.shape}")
    return a


def canonical_order(values) -> np.ndarray:
    """Indices sorting by descending modulus, then descending real part."""
    values = np.asarray(values)
    return np.lexsort((-values.real, -np.abs(values)))


def eigenvalues(A, vectors: bool = False) -> SpectrumResult:
    """All eigenvalues of a dense complex matrix.

    With ``vectors=True`` the right eigenvectors are returned too, along with
    the relative residuals ``||(A - lam) v|| / (||A|| ||v||)``.
    """
    a = _raw(A)
    if not np.all(np.isfinite(a)):
        raise EigenSolverError("matrix has non-finite entries")
    if a.shape[0] == 0:
        return SpectrumResult(np.zeros(0, complex), np.zeros(0) if vectors else None)
    try:
        if vectors:
            lam, v = sl.eig(a, check_finite=False)
        else:
            lam, v = sl.eigvals(a, check_finite=False), None
    except (np.linalg.LinAlgError, ValueError) as exc:
        raise EigenSolverError(f"eigenvalue iteration failed: {exc}") from exc
    if not np.all(np.isfinite(lam)):
        raise EigenSolverError("eigenvalue iteration returned non-finite values")
    order = canonical_order(lam)
    lam = lam[order]
    res = None
    if vectors:
        v = v[:, order]
        norm = max(np.linalg.norm(a, 2), np.finfo(float).tiny)
        res = np.linalg.norm(a @ v - v * lam, axis=0) / (norm * np.linalg.norm(v, axis=0))
    return SpectrumResult(lam, res, v)


def singular_values(A) -> np.ndarray:
    """All singular values in ascending order."""
    return sl.svdvals(_raw(A), check_finite=False)[::-1]


def smallest_singular_values(A, count: int = 1) -> np.ndarray:
    a = _raw(A)
    if count > a.shape[0]:
        raise ValueError(f"asked for {count} singular values of a {a.shape[0]}-dimensional matrix")
    return singular_values(a)[:count]


def sigma_min(A) -> float:
    return float(smallest_singular_values(A, 1)[0])


def logderiv_trace(A, dA, cond_max: float = COND_MAX) -> complex:
    """``tr(A^{-1} dA)`` from one LU factorisation.

    Raises
    ------
    NearSingular
        If the 1-norm condition estimate of ``A`` exceeds ``cond_max``.
    """
    a, da = _raw(A), _raw(dA)
    anorm = np.abs(a).sum(axis=0).max()
    lu, piv, info = sl.lapack.zgetrf(a)
    if info > 0:
        raise NearSingular("exactly singular matrix")
    rcond, _ = sl.lapack.zgecon(lu, anorm, norm="1")
    if rcond * cond_max < 1:
        raise NearSingular(f"condition estimate {1 / max(rcond, 1e-300):.3g} exceeds {cond_max:.3g}")
    x = sl.lu_solve((lu, piv), da, check_finite=False)
    return complex(np.trace(x))


def sigma_min_upper(A, iters: int = 4, seed: int = 0) -> float:
    """Upper bound ``||A x|| / ||x||`` on ``sigma_min`` from inverse iteration.

    One LU factorisation, then ``iters`` steps of ``x <- (A^H A)^{-1} x``.
    Converges quickly when the smallest singular value is well separated,
    which is the case of interest (certifying a near kernel).
    """
    a = _raw(A)
    lu_piv = sl.lu_factor(a, check_finite=False)
    rng = np.random.default_rng(seed)
    x = rng.standard_normal(a.shape[0]) + 1j * rng.standard_normal(a.shape[0])
    best = np.inf
    for _ in range(iters):
        y = sl.lu_solve(lu_piv, x, trans=2, check_finite=False)
        x = sl.lu_solve(lu_piv, y, check_finite=False)
        nx = np.linalg.norm(x)
        if not np.isfinite(nx) or nx == 0:
            return 0.0
        x = x / nx
        best = min(best, float(np.linalg.norm(a @ x)))
    return best
