"""Gohberg-Sigal multiplicities by the argument principle.

For a holomorphic matrix family ``zeta -> Q(zeta)`` the multiplicity at ``k``
is ``(1 / 2 pi i) tr \\oint Q(zeta)^{-1} Q'(zeta) dzeta`` over a small circle
around ``k``.  The truncated families here are polynomial in ``zeta``, so
the integral counts zeros only; there are no poles to subtract.

The integrand is periodic and analytic in the contour angle, so the
trapezoidal rule converges geometrically.  The node count is doubled until
two successive values agree.

A magic ``alpha`` gives ``m = infinity`` for every ``k``: the family is
singular everywhere.  Numerically that shows up as every contour running
through a zero.  :func:`multiplicity` reports :data:`INFINITE` when that
persists over four radius halvings *and* ``Q(alpha, k)`` is numerically
singular at an unrelated generic ``k``.  This is an operational criterion,
not a theorem.
"""

from __future__ import annotations

import enum
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .eig import COND_MAX, logderiv_trace, sigma_min
from .errors import ContourThroughZero, FlatMagicError, NearSingular, NonInteger
from .lattice import GAMMA_STAR, LAMBDA_STAR, LatticeSpec, neighbor_distances
from .operators import (QUICK_RADIUS, BasisWindow, assemble_chiral_D, assemble_chiral_D_dzeta,
                        assemble_scalar_Q, assemble_scalar_Q_dzeta, chiral_windows, window,
                        _default_V)
from .potential import bm_potential_U

INTEGER_TOL = 0.05
CONTOUR_TOL = 1e-8
GENERIC_K = 0.3 + 0.55j


class Infinite(enum.Enum):
    INFINITE = "infinite"

    def __repr__(self):
        return "INFINITE"


INFINITE = Infinite.INFINITE


@dataclass
class Family:
    """A holomorphic matrix family ``zeta -> (Q(zeta), dQ/dzeta(zeta))``."""

    name: str
    build: Callable[[complex], tuple[np.ndarray, np.ndarray]]
    scale: float = 1.0
    lattice: LatticeSpec | None = None
    windows: tuple[BasisWindow, ...] = ()

    def __call__(self, zeta):
        return self.build(zeta)


def scalar_family(alpha: complex, w: BasisWindow | None = None, V=None,
                  radius: float = QUICK_RADIUS, center: complex = 0j) -> Family:
    """``zeta -> (2 D_zbar + zeta)^2 - alpha^2 V`` on a fixed window."""
    V = _default_V() if V is None else V
    w = window(LAMBDA_STAR, radius, center) if w is None else w

    def build(zeta):
        return assemble_scalar_Q(alpha, zeta, w, V).entries, assemble_scalar_Q_dzeta(zeta, w).entries

    scale = abs(alpha) ** 2 * V.l2_norm() + LAMBDA_STAR.shortest ** 2
    return Family("scalar", build, scale, LAMBDA_STAR, (w,))


def chiral_family(alpha: complex, windows=None, U=None, radius: float = QUICK_RADIUS / 2,
                  center: complex = 0j, reduced: bool = False) -> Family:
    """``zeta -> D(alpha) + zeta``; the derivative is the identity."""
    U = bm_potential_U() if U is None else U
    w1, w2 = chiral_windows(radius, center, reduced) if windows is None else windows
    dq = assemble_chiral_D_dzeta(w1, w2).entries

    def build(zeta):
        return assemble_chiral_D(alpha, zeta, w1, w2, U).entries, dq

    scale = abs(alpha) * U.l2_norm() + GAMMA_STAR.shortest
    return Family("chiral", build, scale, GAMMA_STAR, (w1, w2))


def custom_family(f: Callable[[complex], complex], df: Callable[[complex], complex],
                  name: str = "custom") -> Family:
    """A 1x1 family from scalar callables."""
    return Family(name, lambda z: (np.array([[f(z)]], complex), np.array([[df(z)]], complex)))


@dataclass
class MultiplicityResult:
    m: int | Infinite
    raw: complex
    center: complex
    radius: float
    n_quad: int
    window: list = field(default_factory=list)
    notes: list[str] = field(default_factory=list)

    @property
    def infinite(self) -> bool:
        return self.m is INFINITE

    def to_dict(self) -> dict:
        return {
            "m": "infinite" if self.infinite else int(self.m),
            "raw_re": float(np.real(self.raw)) if not self.infinite else None,
            "raw_im": float(np.imag(self.raw)) if not self.infinite else None,
            "k_re": float(np.real(self.center)),
            "k_im": float(np.imag(self.center)),
            "contour_radius": float(self.radius),
            "n_quad": int(self.n_quad),
            "window": self.window,
            "notes": list(self.notes),
        }


def default_contour_radius(k: complex, lattice: LatticeSpec | None) -> float:
    """A quarter of the distance from ``k`` to the nearest *other* dual lattice point.

    Capped at a quarter of the shortest GAMMA_STAR vector.
    """
    cap = 0.25 * GAMMA_STAR.shortest
    if lattice is None:
        return min(0.1, cap)
    dists = [d for d in neighbor_distances(k, lattice) if d > 1e-9 * lattice.shortest]
    other = min(dists)
    return min(0.25 * other, cap)


def _node_values(family, k, r, thetas, contour_tol, cond_max, workers):
    def one(theta):
        zeta = k + r * np.exp(1j * theta)
        A, dA = family(zeta)
        smin = sigma_min(A)
        if smin < contour_tol * family.scale:
            raise ContourThroughZero(
                f"sigma_min = {smin:.3g} at zeta = {zeta:.6g} on |zeta - {k}| = {r:.4g}")
        try:
            return logderiv_trace(A, dA, cond_max) * r * np.exp(1j * theta)
        except NearSingular as exc:
            raise ContourThroughZero(str(exc)) from exc

    if workers and workers > 1:
        with ThreadPoolExecutor(workers) as pool:
            return np.array(list(pool.map(one, thetas)))
    return np.array([one(t) for t in thetas])


def gohberg_sigal_m(family: Family, k: complex, r: float | None = None, n_quad: int = 64,
                    contour_tol: float = CONTOUR_TOL, max_quad: int = 1024,
                    agree_tol: float = 1e-3, cond_max: float = COND_MAX,
                    workers: int | None = None) -> MultiplicityResult:
    """Multiplicity of the family at ``k`` from a trapezoidal contour integral.

    Parameters
    ----------
    family : Family
    k : complex
        Centre of the contour.
    r : float, optional
        Contour radius; see :func:`default_contour_radius`.
    n_quad : int
        Initial node count, doubled until two successive values agree to
        ``agree_tol`` (at most ``max_quad`` nodes).

    Raises
    ------
    ContourThroughZero
        ``sigma_min`` on the contour fell below ``contour_tol * family.scale``.
    NonInteger
        The converged integral is not within 0.05 of an integer.
    """
    r = default_contour_radius(k, family.lattice) if r is None else float(r)
    n = int(n_quad)
    vals = _node_values(family, k, r, 2 * np.pi * np.arange(n) / n, contour_tol, cond_max, workers)
    raw = vals.mean()
    while True:
        if 2 * n > max_quad:
            break
        mids = 2 * np.pi * (np.arange(n) + 0.5) / n
        new = _node_values(family, k, r, mids, contour_tol, cond_max, workers)
        merged = np.empty(2 * n, complex)
        merged[0::2], merged[1::2] = vals, new
        vals, n, prev = merged, 2 * n, raw
        raw = vals.mean()
        if abs(raw - prev) < agree_tol:
            break
    m = int(round(raw.real))
    if abs(raw - m) >= INTEGER_TOL:
        raise NonInteger(raw)
    return MultiplicityResult(m, complex(raw), complex(k), r, n,
                              [w.describe() for w in family.windows])


def is_numerically_flat(family: Family, k: complex = GENERIC_K, tol: float = CONTOUR_TOL) -> bool:
    A, _ = family(k)
    return sigma_min(A) < tol * family.scale


def multiplicity(family: Family, k: complex, r: float | None = None, halvings: int = 4,
                 generic_k: complex = GENERIC_K, **kwargs) -> MultiplicityResult:
    """:func:`gohberg_sigal_m` with the ``m = infinity`` dichotomy handled.

    Shrinks the contour up to ``halvings`` times when it hits a zero.  If
    every contour fails and the family is also singular at ``generic_k``,
    the result is :data:`INFINITE`.
    """
    r = default_contour_radius(k, family.lattice) if r is None else float(r)
    radius = r
    last = None
    for _ in range(halvings + 1):
        try:
            res = gohberg_sigal_m(family, k, radius, **kwargs)
            if radius != r:
                res.notes.append(f"contour radius shrunk from {r:.4g} to {radius:.4g}")
            return res
        except ContourThroughZero as exc:
            last = exc
            radius /= 2
    if is_numerically_flat(family, generic_k, kwargs.get("contour_tol", CONTOUR_TOL)):
        return MultiplicityResult(INFINITE, complex(np.nan, np.nan), complex(k), r, 0,
                                  [w.describe() for w in family.windows],
                                  [f"singular on every contour and at k = {generic_k}"])
    raise last


def protected_multiplicity_scalar(alpha: complex, w: BasisWindow | None = None,
                                  radius: float = QUICK_RADIUS, V=None, **kwargs) -> MultiplicityResult:
    """Multiplicity of the scalar family at ``k = 0``.

    Every ``alpha`` is expected to give ``m >= 2`` and ``m = 2 mod 3``;
    violations are appended to ``notes`` as findings instead of raising.
    """
    family = scalar_family(alpha, w, V, radius)
    res = multiplicity(family, 0j, **kwargs)
    if not res.infinite:
        if res.m < 2:
            res.notes.append(f"finding: m(alpha, 0) = {res.m} < 2")
        if res.m % 3 != 2:
            res.notes.append(f"finding: m(alpha, 0) = {res.m} is not 2 mod 3")
    return res


def multiplicity_profile(alpha: complex, k_list, w: BasisWindow | None = None,
                         radius: float = QUICK_RADIUS, model: str = "scalar",
                         **kwargs) -> list[MultiplicityResult | FlatMagicError]:
    """Multiplicities at several ``k`` on one shared window.

    Failures are returned in place of the corresponding result.
    """
    if model == "scalar":
        family = scalar_family(alpha, w, radius=radius)
    else:
        family = chiral_family(alpha, radius=radius)
    out = []
    for k in k_list:
        try:
            out.append(multiplicity(family, complex(k), **kwargs))
        except FlatMagicError as exc:
            out.append(exc)
    return out
