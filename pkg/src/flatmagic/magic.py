"""Magic parameters from Birman-Schwinger spectra.

``alpha`` is magic exactly when ``alpha^-2`` is an eigenvalue of ``T_k`` for
some (equivalently every) ``k`` off the dual lattice.  The truncated
``T_k`` is not normal.  Its large-``|alpha|`` (small ``lambda``) eigenvalues
are unreliable, so every candidate is checked three ways:

* across a ladder of truncation radii (:func:`radius_ladder`),
* against the spectrum at a second, unrelated ``k`` (:func:`cross_validate`),
* by the smallest singular value of ``Q(alpha, k')`` at that second ``k``.
"""

from __future__ import annotations

import enum
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace

import numpy as np

from .eig import eigenvalues, sigma_min_upper
from .lattice import GAMMA_STAR, LAMBDA_STAR, nearest_dual_point
from .operators import (ACCEPT_RADIUS, assemble_chiral_D, assemble_scalar_Q, assemble_T_chiral,
                        assemble_T_scalar, chiral_windows, scalar_V, window)
from .potential import TrigPolynomial, bm_potential_U
from .errors import SingularShift

CLUSTER_TOL = 1e-6
CROSS_TOL = 1e-6
MATCH_TOL = 1e-3
RESIDUAL_TOL = 1e-6
DEFAULT_MAX_ALPHA = {"scalar": 8.0, "chiral": 10.0}
DEFAULT_RADII = (0.875 * ACCEPT_RADIUS, ACCEPT_RADIUS)


class Model(str, enum.Enum):
    SCALAR = "scalar"
    CHIRAL = "chiral"


@dataclass
class MagicCandidate:
    alpha: complex
    lam: complex
    model: Model
    radius: float
    k: complex
    multiplicity: int = 1
    residual: float = math.nan
    cross_k_delta: float = math.nan
    ladder_deltas: list[float] = field(default_factory=list)
    converged: bool = False
    unreliable: bool = True

    @property
    def is_real(self) -> bool:
        return abs(self.alpha.imag) < 1e-6

    def to_dict(self) -> dict:
        def num(x):
            return None if x is None or (isinstance(x, float) and math.isnan(x)) else float(x)

        return {
            "alpha_re": float(self.alpha.real),
            "alpha_im": float(self.alpha.imag),
            "lambda_re": float(self.lam.real),
            "lambda_im": float(self.lam.imag),
            "multiplicity": int(self.multiplicity),
            "residual": num(self.residual),
            "cross_k_delta": num(self.cross_k_delta),
            "ladder_delta": num(self.ladder_deltas[-1]) if self.ladder_deltas else None,
            "radius": float(self.radius),
            "converged": bool(self.converged),
            "unreliable": bool(self.unreliable),
        }


def canonical_alpha(lam: complex) -> complex:
    """The square root ``alpha`` of ``1 / lam`` with ``Re alpha >= 0``.

    On the imaginary axis the root with ``Im alpha >= 0`` is taken.
    """
    alpha = 1 / np.sqrt(complex(lam))
    if abs(alpha.real) <= 1e-12 * abs(alpha):
        return complex(abs(alpha.real), abs(alpha.imag))
    return -alpha if alpha.real < 0 else alpha


def _resolve_model(model) -> Model:
    return model if isinstance(model, Model) else Model(str(model).lower())


def _check_shift(model, k):
    lattice = LAMBDA_STAR if model is Model.SCALAR else GAMMA_STAR
    _, dist = nearest_dual_point(k, lattice)
    if dist < 1e-8 * lattice.shortest:
        raise SingularShift(f"k = {k} is on the dual lattice {lattice}")


def birman_schwinger(model, k: complex, radius: float = ACCEPT_RADIUS, U: TrigPolynomial | None = None):
    """Truncated ``T_k`` for either model.

    The chiral operator uses the single-coset window pair from
    :func:`~flatmagic.operators.chiral_windows`.
    """
    model = _resolve_model(model)
    _check_shift(model, k)
    if model is Model.SCALAR:
        V = scalar_V(U)
        return assemble_T_scalar(k, window(LAMBDA_STAR, radius, k), V)
    w1, w2 = chiral_windows(radius, k)
    return assemble_T_chiral(k, w1, w2, bm_potential_U() if U is None else U)


def cluster(values, tol: float = CLUSTER_TOL) -> list[list[int]]:
    """Group indices of values within relative distance ``tol`` of a seed value."""
    values = np.asarray(values)
    left = list(range(len(values)))
    groups = []
    while left:
        seed = left[0]
        group = [i for i in left if abs(values[i] - values[seed]) <= tol * abs(values[seed])]
        groups.append(group)
        left = [i for i in left if i not in group]
    return groups


def magics_from_spectrum(lams, model, k, radius, max_abs_alpha, cluster_tol=CLUSTER_TOL):
    lams = np.asarray(lams)
    keep = lams[(np.abs(lams) > 0) & (np.abs(lams) >= max_abs_alpha ** -2)]
    out = []
    for group in cluster(keep, cluster_tol):
        lam = complex(keep[group].mean())
        out.append(MagicCandidate(canonical_alpha(lam), lam, model, radius, complex(k), len(group)))
    out.sort(key=lambda c: (c.alpha.real, c.alpha.imag))
    return out


def magics_from_T(model, k: complex, radius: float = ACCEPT_RADIUS, max_abs_alpha: float | None = None,
                  U: TrigPolynomial | None = None, cluster_tol: float = CLUSTER_TOL) -> list[MagicCandidate]:
    """Candidates ``alpha = lambda^-1/2`` for every eigenvalue with ``|alpha| <= max_abs_alpha``.

    Eigenvalues within ``cluster_tol`` (relative) are merged into one
    candidate whose ``multiplicity`` is the cluster size.
    """
    model = _resolve_model(model)
    max_abs_alpha = DEFAULT_MAX_ALPHA[model.value] if max_abs_alpha is None else max_abs_alpha
    T = birman_schwinger(model, k, radius, U)
    lams = eigenvalues(T).eigenvalues
    return magics_from_spectrum(lams, model, k, radius, max_abs_alpha, cluster_tol)


def q_residual(model, alpha: complex, k: complex, radius: float, U: TrigPolynomial | None = None) -> float:
    """``sigma_min`` of ``Q(alpha, k)`` (scalar) or ``D(alpha) + k`` (chiral), normalised.

    The scale is ``|alpha|^2 ||V||_2 + |dual|^2`` for the scalar model and
    ``|alpha| ||U||_2 + |dual|`` for the chiral one.
    """
    model = _resolve_model(model)
    U = bm_potential_U() if U is None else U
    if model is Model.SCALAR:
        V = scalar_V(U)
        A = assemble_scalar_Q(alpha, k, window(LAMBDA_STAR, radius, k), V)
        scale = abs(alpha) ** 2 * V.l2_norm() + LAMBDA_STAR.shortest ** 2
    else:
        w1, w2 = chiral_windows(radius, k)
        A = assemble_chiral_D(alpha, k, w1, w2, U)
        scale = abs(alpha) * U.l2_norm() + LAMBDA_STAR.shortest
    return sigma_min_upper(A) / scale


def cross_validate(cands: list[MagicCandidate], k2: complex, radius: float | None = None,
                   U: TrigPolynomial | None = None, cross_tol: float = CROSS_TOL,
                   residual_tol: float = RESIDUAL_TOL, residuals: bool = True) -> list[MagicCandidate]:
    """Check candidates against the spectrum of ``T_{k2}``.

    Sets ``cross_k_delta`` (relative distance of ``lambda`` to that
    spectrum) and, if ``residuals``, the normalised ``sigma_min`` of the
    operator at ``k2``.  A candidate stays converged only if both are below
    tolerance (and the radius ladder, when it ran, agreed).
    """
    if not cands:
        return []
    model = cands[0].model
    radius = cands[0].radius if radius is None else radius
    for c in cands:
        if abs(c.k - k2) < 1e-12 or any(abs(c.k * w - k2) < 1e-12 for w in (np.exp(2j * np.pi / 3), np.exp(-2j * np.pi / 3))):
            raise ValueError("k2 must differ from k and its rotations by omega")
    mu = eigenvalues(birman_schwinger(model, k2, radius, U)).eigenvalues
    out = []
    for c in cands:
        delta = float(np.min(np.abs(mu - c.lam)) / abs(c.lam))
        res = q_residual(model, c.alpha, k2, radius, U) if residuals else math.nan
        ok = delta < cross_tol and (not residuals or res < residual_tol)
        ladder_ok = c.converged if c.ladder_deltas else True
        conv = ok and ladder_ok
        out.append(replace(c, cross_k_delta=delta, residual=res, converged=conv, unreliable=not conv))
    return out


def ladder_tolerance(abs_alpha: float, max_abs_alpha: float) -> float:
    """``1e-8`` for small ``|alpha|``, rising geometrically to ``1e-5`` at ``max_abs_alpha``."""
    t = min(abs_alpha / max_abs_alpha, 1.0)
    return 1e-8 * 1e3 ** t


def _match(prev: list[MagicCandidate], cur: list[MagicCandidate], tol: float):
    """Greedy nearest-alpha matching; returns ``{index in cur: index in prev}``."""
    pairs = sorted(
        (abs(c.alpha - p.alpha), i, j)
        for i, c in enumerate(cur) for j, p in enumerate(prev)
        if abs(c.alpha - p.alpha) < tol
    )
    used_i, used_j, out = set(), set(), {}
    for _, i, j in pairs:
        if i not in used_i and j not in used_j:
            out[i] = j
            used_i.add(i)
            used_j.add(j)
    return out


def radius_ladder(model, k: complex, radii, max_abs_alpha: float | None = None,
                  U: TrigPolynomial | None = None, match_tol: float = MATCH_TOL,
                  cluster_tol: float = CLUSTER_TOL, workers: int | None = None) -> list[MagicCandidate]:
    """Candidates at the largest radius, tracked down the ladder of ``radii``.

    Each returned candidate carries the successive ``|alpha|`` changes in
    ``ladder_deltas``.  It is converged when the last change is below
    :func:`ladder_tolerance`; unmatched candidates are unreliable.
    """
    radii = sorted(float(r) for r in radii)
    if len(radii) < 2:
        raise ValueError("radius_ladder needs at least two radii")
    model = _resolve_model(model)
    max_abs_alpha = DEFAULT_MAX_ALPHA[model.value] if max_abs_alpha is None else max_abs_alpha

    def run(r):
        return magics_from_T(model, k, r, max_abs_alpha, U, cluster_tol)

    if workers and workers > 1:
        with ThreadPoolExecutor(workers) as pool:
            levels = list(pool.map(run, radii))
    else:
        levels = [run(r) for r in radii]

    # chains[i] holds the alpha history of candidate i at the current level
    chains = [[c.alpha] for c in levels[0]]
    for prev, cur in zip(levels, levels[1:]):
        m = _match(prev, cur, match_tol)
        chains = [chains[m[i]] + [c.alpha] if i in m else [c.alpha] for i, c in enumerate(cur)]
    out = []
    for c, chain in zip(levels[-1], chains):
        deltas = [float(abs(b - a)) for a, b in zip(chain, chain[1:])]
        ok = len(chain) == len(radii) and deltas[-1] < ladder_tolerance(abs(c.alpha), max_abs_alpha)
        out.append(replace(c, ladder_deltas=deltas if deltas else [math.inf], converged=ok, unreliable=not ok))
    return out


def find_magics(model, k: complex = 1j, k2: complex = 1 + 0.5j, radii=None,
                max_abs_alpha: float | None = None, U: TrigPolynomial | None = None,
                residuals: bool = True, workers: int | None = None) -> list[MagicCandidate]:
    """Radius ladder at ``k`` followed by cross validation at ``k2``."""
    radii = DEFAULT_RADII if radii is None else radii
    cands = radius_ladder(model, k, radii, max_abs_alpha, U, workers=workers)
    return cross_validate(cands, k2, max(radii), U, residuals=residuals)


def real_magic_spacings(cands: list[MagicCandidate], imag_tol: float = 1e-6,
                        converged_only: bool = True) -> list[tuple[float, float]]:
    """``(alpha_j, alpha_{j+1} - alpha_j)`` over the sorted real magics."""
    reals = sorted(c.alpha.real for c in cands
                   if abs(c.alpha.imag) < imag_tol and (c.converged or not converged_only))
    return [(a, b - a) for a, b in zip(reals, reals[1:])]
