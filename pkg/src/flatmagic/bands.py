"""Bloch bands of the antidiagonal Hamiltonians and flat band certification.

``H(alpha, k) = [[0, Q*], [Q, 0]]`` has spectrum ``+-sigma_j(Q(alpha, k))``,
so bands are computed as singular values of ``Q`` (half the dimension of
``H`` and a cleaner zero test).
"""

from __future__ import annotations

import csv
import enum
import json
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import NamedTuple

import numpy as np

from .eig import singular_values
from .lattice import K_POINT, LAMBDA_STAR, LatticeSpec, nearest_dual_point
from .operators import (QUICK_RADIUS, assemble_chiral_D, assemble_scalar_Q, chiral_windows,
                        scalar_V, window)
from .potential import TrigPolynomial, bm_potential_U

FLAT_TOL = 1e-6


class KSetKind(enum.Enum):
    GRID = "Grid"
    PATH = "Path"


@dataclass(frozen=True, eq=False)
class KSet:
    kind: KSetKind
    points: np.ndarray
    n: int = 0
    waypoints: tuple = ()

    def __post_init__(self):
        if len(self.points) == 0:
            raise ValueError("empty k set")

    def __len__(self):
        return len(self.points)

    def describe(self) -> dict:
        out = {"kind": self.kind.value, "size": len(self)}
        if self.kind is KSetKind.GRID:
            out["n"] = self.n
        else:
            out["waypoints"] = [[float(np.real(w)), float(np.imag(w))] for w in self.waypoints]
            out["samples_per_segment"] = self.n
        return out


def grid(n: int, lattice: LatticeSpec = LAMBDA_STAR) -> KSet:
    """``n x n`` points ``(i b1 + j b2) / n`` covering one fundamental cell."""
    i, j = np.meshgrid(np.arange(n), np.arange(n), indexing="ij")
    pts = (i.ravel() * lattice.b1 + j.ravel() * lattice.b2) / n
    return KSet(KSetKind.GRID, pts, n)


def path(waypoints, samples_per_segment: int = 48) -> KSet:
    """Straight segments through ``waypoints``; the last waypoint is included."""
    wps = [complex(w) for w in waypoints]
    if len(wps) < 2:
        raise ValueError("a path needs at least two waypoints")
    t = np.arange(samples_per_segment) / samples_per_segment
    pts = [a + (b - a) * t for a, b in zip(wps, wps[1:])]
    pts.append(np.array([wps[-1]]))
    return KSet(KSetKind.PATH, np.concatenate(pts), samples_per_segment, tuple(wps))


def default_path(samples_per_segment: int = 48, lattice: LatticeSpec = LAMBDA_STAR) -> KSet:
    """Gamma -> K -> M -> Gamma in the zone of ``lattice``.

    ``K = (b1 + 2 b2) / 3`` is the zone corner (for LAMBDA_STAR it is the
    point ``4 pi / 3`` up to a lattice vector) and ``M = b2 / 2``.
    """
    k_corner = (lattice.b1 + 2 * lattice.b2) / 3
    return path([0, k_corner, lattice.b2 / 2, 0], samples_per_segment)


@dataclass(eq=False)
class BandSweep:
    alpha: complex
    kset: KSet
    energies: np.ndarray
    model: str = "scalar"
    windows: list = field(default_factory=list)

    @property
    def lowest(self) -> np.ndarray:
        return self.energies[:, 0]

    def to_rows(self):
        for k, row in zip(self.kset.points, self.energies):
            for b, e in enumerate(row):
                yield float(k.real), float(k.imag), b, float(e)

    def write_csv(self, fh) -> None:
        writer = csv.writer(fh)
        writer.writerow(["k_re", "k_im", "band_index", "energy"])
        writer.writerows(self.to_rows())

    def to_dict(self) -> dict:
        return {
            "alpha_re": float(np.real(self.alpha)),
            "alpha_im": float(np.imag(self.alpha)),
            "model": self.model,
            "kset": self.kset.describe(),
            "k_re": self.kset.points.real.tolist(),
            "k_im": self.kset.points.imag.tolist(),
            "energies": self.energies.tolist(),
            "windows": self.windows,
            "lowest_band_min": float(self.lowest.min()),
            "lowest_band_max": float(self.lowest.max()),
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2)


def _operator(alpha, k, radius, model, U):
    if model == "scalar":
        w = window(LAMBDA_STAR, radius, k)
        return assemble_scalar_Q(alpha, k, w, scalar_V(U)), [w.describe()]
    w1, w2 = chiral_windows(radius, k)
    return assemble_chiral_D(alpha, k, w1, w2, U), [w1.describe(), w2.describe()]


def band_scale(alpha: complex, model: str = "scalar", U: TrigPolynomial | None = None) -> float:
    """Energy scale ``|alpha|^2 ||V||_2 + |dual|^2`` (chiral: ``|alpha| ||U||_2 + |dual|``).

    ``||.||_2`` is the Euclidean norm of the Fourier coefficients.
    """
    U = bm_potential_U() if U is None else U
    if model == "scalar":
        return abs(alpha) ** 2 * scalar_V(U).l2_norm() + LAMBDA_STAR.shortest ** 2
    return abs(alpha) * U.l2_norm() + LAMBDA_STAR.shortest


def band_sweep(alpha: complex, kset: KSet, n_bands: int = 4, radius: float = QUICK_RADIUS,
               model: str = "scalar", U: TrigPolynomial | None = None,
               workers: int | None = None) -> BandSweep:
    """The ``n_bands`` lowest nonnegative energies at every ``k`` of ``kset``.

    The window is re-centred at each ``k`` so that the small ``|gamma + k|``
    modes are always inside it.
    """
    U = bm_potential_U() if U is None else U

    def one(k):
        A, desc = _operator(alpha, k, radius, model, U)
        if n_bands > A.shape[0]:
            raise ValueError(f"n_bands = {n_bands} exceeds the window size {A.shape[0]}")
        return singular_values(A)[:n_bands], desc

    if workers and workers > 1:
        with ThreadPoolExecutor(workers) as pool:
            results = list(pool.map(one, kset.points))
    else:
        results = [one(k) for k in kset.points]
    energies = np.array([r[0] for r in results])
    return BandSweep(complex(alpha), kset, energies, model, results[0][1])


class FlatBandResult(NamedTuple):
    is_flat: bool
    max_sigma_min: float
    argmax_k: complex
    scale: float


def flat_band_check(alpha: complex, kgrid: KSet | None = None, tol: float = FLAT_TOL,
                    radius: float = QUICK_RADIUS, model: str = "scalar",
                    U: TrigPolynomial | None = None, workers: int | None = None) -> FlatBandResult:
    """Is the lowest band identically zero on ``kgrid`` (to ``tol * scale``)?"""
    kgrid = grid(12) if kgrid is None else kgrid
    if kgrid.kind is not KSetKind.GRID:
        raise ValueError("flat_band_check needs a Grid k set")
    sweep = band_sweep(alpha, kgrid, 1, radius, model, U, workers)
    i = int(np.argmax(sweep.lowest))
    scale = band_scale(alpha, model, U)
    top = float(sweep.lowest[i])
    return FlatBandResult(top < tol * scale, top, complex(kgrid.points[i]), scale)


@dataclass(frozen=True)
class OneKReport:
    sigma_k0: float
    grid_max: float
    threshold: float
    single_below: bool
    grid_below: bool

    @property
    def consistent(self) -> bool:
        return self.single_below == self.grid_below


def one_k_equivalence(alpha: complex, k0: complex = 1j, kgrid: KSet | None = None,
                      tol: float = FLAT_TOL, radius: float = QUICK_RADIUS, model: str = "scalar",
                      U: TrigPolynomial | None = None) -> OneKReport:
    """Compare the zero test at a single ``k0`` with the whole grid.

    A kernel at one ``k`` off the dual lattice should imply a kernel at
    every ``k``; the report is consistent when both tests agree.
    """
    _, dist = nearest_dual_point(k0, LAMBDA_STAR)
    if dist < 1e-8 * LAMBDA_STAR.shortest:
        raise ValueError("k0 must lie off the dual lattice")
    U = bm_potential_U() if U is None else U
    single = band_sweep(alpha, KSet(KSetKind.PATH, np.array([complex(k0)])), 1, radius, model, U)
    flat = flat_band_check(alpha, kgrid, tol, radius, model, U)
    thr = tol * flat.scale
    s0 = float(single.lowest[0])
    return OneKReport(s0, flat.max_sigma_min, thr, s0 < thr, flat.max_sigma_min < thr)


__all__ = ["KSet", "KSetKind", "BandSweep", "FlatBandResult", "OneKReport", "grid", "path",
           "default_path", "band_sweep", "band_scale", "flat_band_check", "one_k_equivalence",
           "K_POINT"]
