"""Fourier-truncated matrices of the scalar and chiral operators.

All operators are Galerkin compressions onto a :class:`BasisWindow`, a disc
of dual-lattice modes.  In the plane-wave basis ``exp(i <z, gamma>)`` the
Bloch derivative ``2 D_zbar + k`` is diagonal with entries ``gamma + k`` and
a multiplication operator ``f`` has entries ``f_hat(gamma - gamma')``.

Matrices
--------
ScalarQ      ``(2 D_zbar + k)^2 - alpha^2 V``                 on LAMBDA_STAR
ScalarQdZeta ``d/dzeta`` of the above, ``2 (gamma + zeta)``
ChiralD      ``D(alpha) + k = [[2D_zbar + k, alpha U], [alpha U(-z), 2D_zbar + k]]``
ProductP     ``(D(-alpha) + k)(D(alpha) + k)``                on GAMMA_STAR
TScalar      ``(2 D_zbar + k)^-2 V``
TChiral      ``(2 D_zbar + k)^-1 U (2 D_zbar + k)^-1 U(-z)``

The chiral operators take two windows, one per spinor component.  Passing
the same full GAMMA_STAR window twice gives the plain Gamma-periodic
discretisation.  Because ``U`` shifts modes by ``K`` modulo LAMBDA_STAR,
that discretisation splits into nine blocks with (up to truncation) equal
spectra, so :func:`chiral_windows` offers the single block where the first
component lives on LAMBDA_STAR and the second on ``-K + LAMBDA_STAR``.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np

from .errors import SingularShift
from .lattice import (DUAL_LENGTH, GAMMA_STAR, K_POINT, LAMBDA_STAR, LatticeSpec, ModeIndex,
                      modes_to_points, point_to_mode, truncated_modes)
from .potential import (TrigPolynomial, apply_2Dzbar, bm_potential_U, coarsen, multiply,
                        refine, reflect)

QUICK_RADIUS = 8 * DUAL_LENGTH
ACCEPT_RADIUS = 16 * DUAL_LENGTH
# relative to the shortest dual vector
SHIFT_EPS = 1e-8


class Label(enum.Enum):
    SCALAR_Q = "ScalarQ"
    SCALAR_Q_DZETA = "ScalarQdZeta"
    CHIRAL_D = "ChiralD"
    PRODUCT_P = "ProductP"
    T_SCALAR = "TScalar"
    T_CHIRAL = "TChiral"


@dataclass(frozen=True, eq=False)
class BasisWindow:
    lattice: LatticeSpec
    shift: complex
    radius: float
    modes: tuple[ModeIndex, ...]
    coset: tuple[int, int] | None = None
    m: np.ndarray = field(repr=False, default=None)
    n: np.ndarray = field(repr=False, default=None)
    points: np.ndarray = field(repr=False, default=None)

    def __post_init__(self):
        if not self.modes:
            raise ValueError("basis window is empty; increase the radius")
        m = np.array([q.m for q in self.modes], dtype=np.int64)
        n = np.array([q.n for q in self.modes], dtype=np.int64)
        object.__setattr__(self, "m", m)
        object.__setattr__(self, "n", n)
        object.__setattr__(self, "points", modes_to_points(self.lattice, m, n))

    def __len__(self):
        return len(self.modes)

    def index(self) -> dict[ModeIndex, int]:
        return _index(self.modes)

    def describe(self) -> dict:
        return {
            "lattice": self.lattice.kind.value,
            "shift_re": float(np.real(self.shift)),
            "shift_im": float(np.imag(self.shift)),
            "radius": float(self.radius),
            "size": len(self),
            "coset": list(self.coset) if self.coset is not None else None,
        }


@lru_cache(maxsize=64)
def _index(modes):
    return {q: i for i, q in enumerate(modes)}


def window(lattice: LatticeSpec, radius: float, shift: complex = 0j,
           coset: tuple[int, int] | None = None) -> BasisWindow:
    """Modes ``gamma`` of ``lattice`` with ``|gamma + shift| <= radius``."""
    shift = complex(shift)
    return BasisWindow(lattice, shift, float(radius),
                       tuple(truncated_modes(lattice, radius, shift, coset)), coset)


def chiral_windows(radius: float, shift: complex = 0j, reduced: bool = True):
    """Window pair ``(first component, second component)`` for chiral operators.

    ``reduced=False`` returns the full GAMMA_STAR window twice.
    """
    if not reduced:
        w = window(GAMMA_STAR, radius, shift)
        return w, w
    kidx = point_to_mode(GAMMA_STAR, K_POINT)
    first = window(GAMMA_STAR, radius, shift, coset=(0, 0))
    second = window(GAMMA_STAR, radius, shift, coset=(-kidx.m % 3, -kidx.n % 3))
    return first, second


@dataclass(frozen=True, eq=False)
class OperatorMatrix:
    label: Label
    windows: tuple[BasisWindow, ...]
    entries: np.ndarray

    @property
    def shape(self):
        return self.entries.shape

    def __array__(self, dtype=None, copy=None):
        return self.entries if dtype is None else self.entries.astype(dtype)


def multiplication_matrix(f: TrigPolynomial, rows: BasisWindow, cols: BasisWindow | None = None) -> np.ndarray:
    """Compression of multiplication by ``f``: entry ``[i, j] = f_hat(row_i - col_j)``."""
    cols = rows if cols is None else cols
    f = refine(f, rows.lattice)
    out = np.zeros((len(rows), len(cols)), dtype=complex)
    if not len(f):
        return out
    lookup = rows.index()
    for q, c in f:
        for j, (cm, cn) in enumerate(zip(cols.m, cols.n)):
            i = lookup.get(ModeIndex(int(cm) + q.m, int(cn) + q.n))
            if i is not None:
                out[i, j] += c
    return out


def _bloch(w: BasisWindow, k: complex) -> np.ndarray:
    return w.points + k


def _checked_bloch(w: BasisWindow, k: complex, eps: float | None) -> np.ndarray:
    d = _bloch(w, k)
    eps = SHIFT_EPS * w.lattice.shortest if eps is None else eps
    if np.min(np.abs(d)) < eps:
        raise SingularShift(f"k = {k} lies on the dual lattice (|gamma + k| < {eps:.3g})")
    return d


def scalar_V(U: TrigPolynomial | None = None) -> TrigPolynomial:
    """``V(z) = U(z) U(-z)`` on LAMBDA_STAR (BM potential by default)."""
    U = bm_potential_U() if U is None else U
    return coarsen(multiply(U, reflect(U)), LAMBDA_STAR)


@lru_cache(maxsize=1)
def _default_V():
    return scalar_V()


def assemble_scalar_Q(alpha: complex, k: complex, w: BasisWindow, V: TrigPolynomial | None = None) -> OperatorMatrix:
    """``Q(alpha, k) = (2 D_zbar + k)^2 - alpha^2 V`` on ``w``."""
    V = _default_V() if V is None else V
    mat = -(alpha * alpha) * multiplication_matrix(V, w)
    mat[np.diag_indices_from(mat)] += _bloch(w, k) ** 2
    return OperatorMatrix(Label.SCALAR_Q, (w,), mat)


def assemble_scalar_Q_dzeta(k: complex, w: BasisWindow) -> OperatorMatrix:
    return OperatorMatrix(Label.SCALAR_Q_DZETA, (w,), np.diag(2 * _bloch(w, k)))


def assemble_chiral_D(alpha: complex, k: complex, w: BasisWindow, w2: BasisWindow | None = None,
                      U: TrigPolynomial | None = None) -> OperatorMatrix:
    """``D(alpha) + k`` as a 2x2 block matrix over the windows ``(w, w2)``."""
    w2 = w if w2 is None else w2
    U = bm_potential_U() if U is None else U
    n1 = len(w)
    mat = np.zeros((n1 + len(w2),) * 2, dtype=complex)
    mat[:n1, n1:] = alpha * multiplication_matrix(U, w, w2)
    mat[n1:, :n1] = alpha * multiplication_matrix(reflect(U), w2, w)
    idx = np.arange(len(mat))
    mat[idx, idx] = np.concatenate([_bloch(w, k), _bloch(w2, k)])
    return OperatorMatrix(Label.CHIRAL_D, (w, w2), mat)


def assemble_chiral_D_dzeta(w: BasisWindow, w2: BasisWindow | None = None) -> OperatorMatrix:
    w2 = w if w2 is None else w2
    return OperatorMatrix(Label.CHIRAL_D, (w, w2), np.eye(len(w) + len(w2), dtype=complex))


def assemble_P(alpha: complex, k: complex, w: BasisWindow, U: TrigPolynomial | None = None) -> OperatorMatrix:
    """``P(alpha, k) = (D(-alpha) + k)(D(alpha) + k)`` on ``w`` (both components).

    Expanding the product gives ``Q(alpha, k)`` on the diagonal and
    ``alpha V_1``, ``-alpha V_1(-z)`` off the diagonal, ``V_1 = 2 D_zbar U``.
    """
    U = bm_potential_U() if U is None else U
    V = multiply(U, reflect(U))
    V1 = apply_2Dzbar(U)
    n = len(w)
    diag = -(alpha * alpha) * multiplication_matrix(V, w)
    diag[np.diag_indices_from(diag)] += _bloch(w, k) ** 2
    mat = np.zeros((2 * n, 2 * n), dtype=complex)
    mat[:n, :n] = diag
    mat[n:, n:] = diag
    mat[:n, n:] = alpha * multiplication_matrix(V1, w)
    mat[n:, :n] = -alpha * multiplication_matrix(reflect(V1), w)
    return OperatorMatrix(Label.PRODUCT_P, (w, w), mat)


def assemble_T_scalar(k: complex, w: BasisWindow, V: TrigPolynomial | None = None,
                      eps: float | None = None) -> OperatorMatrix:
    """Birman-Schwinger matrix ``(2 D_zbar + k)^-2 V``.

    Raises
    ------
    SingularShift
        If ``|gamma + k|`` is below ``eps`` for some mode of the window.
    """
    V = _default_V() if V is None else V
    d = _checked_bloch(w, k, eps)
    return OperatorMatrix(Label.T_SCALAR, (w,), multiplication_matrix(V, w) / (d * d)[:, None])


def assemble_T_chiral(k: complex, w: BasisWindow, w2: BasisWindow | None = None,
                      U: TrigPolynomial | None = None, eps: float | None = None) -> OperatorMatrix:
    """``(2D_zbar + k)^-1 U (2D_zbar + k)^-1 U(-z)`` acting on the first component.

    Eliminating the second component from ``(D(alpha) + k) u = 0`` leaves
    ``T u_1 = alpha^-2 u_1``; ``w2`` is the window of the eliminated component.
    """
    w2 = w if w2 is None else w2
    U = bm_potential_U() if U is None else U
    d1 = _checked_bloch(w, k, eps)
    d2 = _checked_bloch(w2, k, eps)
    right = multiplication_matrix(reflect(U), w2, w) / d2[:, None]
    left = multiplication_matrix(U, w, w2) / d1[:, None]
    return OperatorMatrix(Label.T_CHIRAL, (w, w2), left @ right)
