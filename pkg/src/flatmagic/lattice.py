"""Hexagonal lattices used by the flat band models.

Every lattice here has the form ``scale * (m * omega + n)`` with integer
``(m, n)`` and ``omega = exp(2 pi i / 3)``:

===========  ========================  ==============================
kind         scale                     role
===========  ========================  ==============================
LAMBDA       1                         periods of the scalar potential
GAMMA        3                         periods of the chiral model
LAMBDA_STAR  4 pi i / sqrt(3)          Fourier modes of the scalar model
GAMMA_STAR   4 pi i / (3 sqrt(3))      Fourier modes of the chiral model
===========  ========================  ==============================

The pairing is ``<z, w> = Re(z conj(w))``; with that convention the two
star lattices are exactly dual to ``LAMBDA`` and ``GAMMA``.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

OMEGA = complex(np.exp(2j * np.pi / 3))
# length of the shortest nonzero vector of LAMBDA_STAR
DUAL_LENGTH = 4 * np.pi / np.sqrt(3)
# the K point: in GAMMA_STAR, not in LAMBDA_STAR
K_POINT = 4 * np.pi / 3

# tolerance (relative to the lattice constant) for point -> index recovery
_SNAP_TOL = 1e-9


class LatticeKind(enum.Enum):
    LAMBDA = "Lambda"
    GAMMA = "Gamma3Lambda"
    LAMBDA_STAR = "LambdaStar"
    GAMMA_STAR = "GammaStar"


_SCALES = {
    LatticeKind.LAMBDA: 1.0 + 0j,
    LatticeKind.GAMMA: 3.0 + 0j,
    LatticeKind.LAMBDA_STAR: 1j * DUAL_LENGTH,
    LatticeKind.GAMMA_STAR: 1j * DUAL_LENGTH / 3,
}

_DUALS = {
    LatticeKind.LAMBDA: LatticeKind.LAMBDA_STAR,
    LatticeKind.GAMMA: LatticeKind.GAMMA_STAR,
    LatticeKind.LAMBDA_STAR: LatticeKind.LAMBDA,
    LatticeKind.GAMMA_STAR: LatticeKind.GAMMA,
}


class ModeIndex(NamedTuple):
    """Integer coordinates ``(m, n)`` of the point ``scale * (m * omega + n)``."""

    m: int
    n: int


@dataclass(frozen=True)
class LatticeSpec:
    kind: LatticeKind

    @property
    def scale(self) -> complex:
        return _SCALES[self.kind]

    @property
    def b1(self) -> complex:
        return self.scale * OMEGA

    @property
    def b2(self) -> complex:
        return self.scale

    @property
    def shortest(self) -> float:
        """Length of the shortest nonzero lattice vector."""
        return abs(self.scale)

    @property
    def cell_area(self) -> float:
        return abs((self.b1.conjugate() * self.b2).imag)

    @property
    def is_dual(self) -> bool:
        return self.kind in (LatticeKind.LAMBDA_STAR, LatticeKind.GAMMA_STAR)

    def dual(self) -> "LatticeSpec":
        return LatticeSpec(_DUALS[self.kind])

    def __repr__(self):
        return f"LatticeSpec({self.kind.value})"


LAMBDA = LatticeSpec(LatticeKind.LAMBDA)
GAMMA = LatticeSpec(LatticeKind.GAMMA)
LAMBDA_STAR = LatticeSpec(LatticeKind.LAMBDA_STAR)
GAMMA_STAR = LatticeSpec(LatticeKind.GAMMA_STAR)


def canonical_key(idx) -> tuple[int, int, int]:
    """Sort key: squared length in lattice units, then ``(m, n)``.

    ``|m omega + n|^2 = m^2 - m n + n^2`` is an integer, so the order is exact.
    """
    m, n = int(idx[0]), int(idx[1])
    return (m * m - m * n + n * n, m, n)


def mode_to_point(spec: LatticeSpec, idx) -> complex:
    m, n = idx
    return spec.scale * (m * OMEGA + n)


def modes_to_points(spec: LatticeSpec, m, n) -> np.ndarray:
    """Vectorised :func:`mode_to_point` for integer arrays ``m`` and ``n``."""
    return spec.scale * (np.asarray(m) * OMEGA + np.asarray(n))


def lattice_coordinates(spec: LatticeSpec, z: complex) -> tuple[float, float]:
    """Real coordinates ``(x, y)`` with ``z = scale * (x * omega + y)``."""
    w = z / spec.scale
    x = w.imag / (np.sqrt(3) / 2)
    y = w.real + x / 2
    return x, y


def point_to_mode(spec: LatticeSpec, z: complex) -> ModeIndex | None:
    """Index of the lattice point ``z``, or ``None`` if ``z`` is not on the lattice."""
    x, y = lattice_coordinates(spec, z)
    m, n = int(round(x)), int(round(y))
    if abs(mode_to_point(spec, (m, n)) - z) > _SNAP_TOL * spec.shortest:
        return None
    return ModeIndex(m, n)


def pairing(z: complex, w: complex) -> float:
    """The real pairing ``<z, w> = Re(z conj(w))``."""
    return (z * np.conj(w)).real


def truncated_modes(spec: LatticeSpec, radius: float, shift: complex = 0j,
                    coset: tuple[int, int] | None = None) -> list[ModeIndex]:
    """All modes with ``|point + shift| <= radius`` in canonical order.

    Parameters
    ----------
    spec : LatticeSpec
        Lattice to enumerate.
    radius : float
        Truncation radius (same units as the lattice).
    shift : complex
        The window is the disc of the given radius centred at ``-shift``.
    coset : (int, int), optional
        Keep only ``(m, n)`` congruent to ``coset`` modulo 3. On
        ``GAMMA_STAR`` this selects one ``LAMBDA_STAR`` coset.

    Returns
    -------
    list of ModeIndex
        Possibly empty.
    """
    if radius <= 0:
        raise ValueError("radius must be positive")
    m, n = _disc_indices(spec, radius, shift)
    if coset is not None:
        keep = ((m - coset[0]) % 3 == 0) & ((n - coset[1]) % 3 == 0)
        m, n = m[keep], n[keep]
    modes = [ModeIndex(int(a), int(b)) for a, b in zip(m, n)]
    modes.sort(key=canonical_key)
    return modes


def _disc_indices(spec, radius, shift):
    cx, cy = lattice_coordinates(spec, -shift)
    # |x| * (sqrt(3)/2) * |scale| <= radius bounds both coordinates
    h = radius / (spec.shortest * np.sqrt(3) / 2) + 2
    ms = np.arange(int(np.floor(cx - h)), int(np.ceil(cx + h)) + 1)
    ns = np.arange(int(np.floor(cy - h)), int(np.ceil(cy + h)) + 1)
    m, n = np.meshgrid(ms, ns, indexing="ij")
    m, n = m.ravel(), n.ravel()
    dist = np.abs(modes_to_points(spec, m, n) + shift)
    # boundary points are kept stably despite rounding of the radius
    keep = dist <= radius * (1 + 1e-12)
    return m[keep], n[keep]


def nearest_dual_point(k: complex, spec: LatticeSpec = LAMBDA_STAR) -> tuple[ModeIndex, float]:
    """Closest lattice point to ``k`` and its distance.

    Ties are broken by the canonical mode order.
    """
    x, y = lattice_coordinates(spec, k)
    best = None
    for m in range(int(np.floor(x)) - 1, int(np.floor(x)) + 3):
        for n in range(int(np.floor(y)) - 1, int(np.floor(y)) + 3):
            d = abs(mode_to_point(spec, (m, n)) - k)
            key = (d, canonical_key((m, n)))
            if best is None or key < best[0]:
                best = (key, ModeIndex(m, n))
    (dist, _), idx = best
    return idx, float(dist)


def rotate_mode(spec: LatticeSpec, idx, power: int = 1) -> ModeIndex:
    """Index of ``omega**power * point(idx)``.

    ``omega * (m omega + n) = (n - m) omega - m`` since ``omega^2 = -1 - omega``.
    """
    m, n = int(idx[0]), int(idx[1])
    for _ in range(power % 3):
        m, n = n - m, -m
    return ModeIndex(m, n)


def rotate_indices(m, n, power: int = 1):
    """Vectorised :func:`rotate_mode` on integer arrays."""
    m, n = np.asarray(m), np.asarray(n)
    for _ in range(power % 3):
        m, n = n - m, -m
    return m, n


def refine_index(coarse: LatticeSpec, fine: LatticeSpec, idx) -> ModeIndex:
    """Re-express a point of ``coarse`` in the coordinates of ``fine``."""
    ratio = coarse.scale / fine.scale
    r = int(round(ratio.real))
    if abs(ratio - r) > 1e-12:
        raise ValueError(f"{coarse} does not embed into {fine}")
    return ModeIndex(r * int(idx[0]), r * int(idx[1]))


def neighbor_distances(k: complex, spec: LatticeSpec) -> list[float]:
    """Sorted distances from ``k`` to the lattice points around it.

    Covers the 4x4 block of cells around ``k``, which always contains the
    two nearest lattice points.
    """
    x, y = lattice_coordinates(spec, k)
    m, n = np.meshgrid(np.arange(int(np.floor(x)) - 1, int(np.floor(x)) + 3),
                       np.arange(int(np.floor(y)) - 1, int(np.floor(y)) + 3), indexing="ij")
    return sorted(np.abs(modes_to_points(spec, m.ravel(), n.ravel()) - k).tolist())
