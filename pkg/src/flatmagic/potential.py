"""Trigonometric polynomials on the hexagonal dual lattices.

A :class:`TrigPolynomial` stores ``f(z) = sum_q c_q exp(i <z, q>)`` as a map
from :class:`~flatmagic.lattice.ModeIndex` to complex coefficients.  The
algebra (products, reflection, rotation, the derivative ``2 D_zbar``) is done
on coefficients, so the Fourier data of ``U``, ``V`` and ``V_1`` is exact up
to the rounding of the input constants.
"""

from __future__ import annotations

import hashlib
import math
import warnings
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .errors import LatticeMismatch
from .lattice import (GAMMA_STAR, K_POINT, LAMBDA_STAR, OMEGA, LatticeKind, LatticeSpec,
                      ModeIndex, canonical_key, mode_to_point, pairing, point_to_mode,
                      refine_index, rotate_mode)

# omega**l with omega**2 taken as conj(omega) so that powers are exact conjugates
OMEGA_POWERS = (1.0 + 0j, OMEGA, OMEGA.conjugate())

# a convolution sum is treated as an exact zero when it cancels to this
# multiple of machine epsilon relative to the magnitude of its terms
_CANCEL = 16 * np.finfo(float).eps


@dataclass(frozen=True)
class TrigPolynomial:
    lattice: LatticeSpec
    coeffs: dict = field(default_factory=dict)

    def __post_init__(self):
        clean = {ModeIndex(int(k[0]), int(k[1])): complex(v)
                 for k, v in self.coeffs.items() if v != 0}
        object.__setattr__(self, "coeffs", dict(sorted(clean.items(), key=lambda kv: canonical_key(kv[0]))))

    def __getitem__(self, idx) -> complex:
        return self.coeffs.get(ModeIndex(*idx), 0j)

    def __len__(self):
        return len(self.coeffs)

    def __iter__(self):
        return iter(self.coeffs.items())

    @property
    def support(self) -> list[ModeIndex]:
        return list(self.coeffs)

    def frequency(self, idx) -> complex:
        return mode_to_point(self.lattice, idx)

    def scaled(self, factor: complex) -> "TrigPolynomial":
        return TrigPolynomial(self.lattice, {q: factor * c for q, c in self})

    def __add__(self, other: "TrigPolynomial") -> "TrigPolynomial":
        f, g = _common(self, other)
        out = dict(f.coeffs)
        for q, c in g:
            out[q] = out.get(q, 0j) + c
        return TrigPolynomial(f.lattice, out)

    def l1_norm(self) -> float:
        """Sum of coefficient moduli; bounds the multiplication operator norm."""
        return math.fsum(abs(c) for c in self.coeffs.values())

    def l2_norm(self) -> float:
        """Euclidean norm of the coefficients, i.e. the L2 cell average of ``f`` (Parseval)."""
        return math.sqrt(math.fsum(abs(c) ** 2 for c in self.coeffs.values()))

    def max_abs(self) -> float:
        return max((abs(c) for c in self.coeffs.values()), default=0.0)

    def allclose(self, other: "TrigPolynomial", rtol: float = 1e-14) -> bool:
        """Coefficient equality up to a few ulps of the largest coefficient."""
        f, g = _common(self, other)
        scale = max(f.max_abs(), g.max_abs(), 1e-300)
        keys = set(f.coeffs) | set(g.coeffs)
        return all(abs(f[q] - g[q]) <= rtol * scale for q in keys)

    def fingerprint(self) -> str:
        """Stable hash of the (lattice, coefficient list) pair."""
        h = hashlib.sha256(self.lattice.kind.value.encode())
        for q, c in self:
            h.update(f"{q.m} {q.n} {c.real!r} {c.imag!r}\n".encode())
        return h.hexdigest()[:16]


def constant(value: complex = 1.0, lattice: LatticeSpec = GAMMA_STAR) -> TrigPolynomial:
    return TrigPolynomial(lattice, {ModeIndex(0, 0): value})


def zero(lattice: LatticeSpec = LAMBDA_STAR) -> TrigPolynomial:
    return TrigPolynomial(lattice, {})


def refine(f: TrigPolynomial, lattice: LatticeSpec) -> TrigPolynomial:
    """Re-express ``f`` on a finer dual lattice (e.g. LAMBDA_STAR -> GAMMA_STAR)."""
    if f.lattice == lattice:
        return f
    try:
        return TrigPolynomial(lattice, {refine_index(f.lattice, lattice, q): c for q, c in f})
    except ValueError as exc:
        raise LatticeMismatch(str(exc)) from None


def coarsen(f: TrigPolynomial, lattice: LatticeSpec) -> TrigPolynomial:
    """Re-express ``f`` on a coarser dual lattice; every mode must land on it."""
    if f.lattice == lattice:
        return f
    out = {}
    for q, c in f:
        idx = point_to_mode(lattice, f.frequency(q))
        if idx is None:
            raise LatticeMismatch(f"mode {tuple(q)} of {f.lattice} is not on {lattice}")
        out[idx] = c
    return TrigPolynomial(lattice, out)


def _common(f, g):
    if f.lattice == g.lattice:
        return f, g
    for fine in (f.lattice, g.lattice):
        try:
            return refine(f, fine), refine(g, fine)
        except LatticeMismatch:
            continue
    raise LatticeMismatch(f"{f.lattice} and {g.lattice} have no common refinement here")


def bm_potential_U() -> TrigPolynomial:
    """The Bistritzer-MacDonald tunnelling potential on GAMMA_STAR.

    ``U(z) = -(4/3) pi i sum_l omega^l exp(i <z, omega^l K>)`` with ``K = 4 pi / 3``.
    """
    coeffs = {}
    for ell in range(3):
        idx = point_to_mode(GAMMA_STAR, OMEGA_POWERS[ell] * K_POINT)
        coeffs[idx] = -(4 / 3) * np.pi * 1j * OMEGA_POWERS[ell]
    return TrigPolynomial(GAMMA_STAR, coeffs)


def multiply(f: TrigPolynomial, g: TrigPolynomial) -> TrigPolynomial:
    """Product of two trigonometric polynomials (coefficient convolution).

    Sums that cancel to rounding level are stored as exact zeros.
    """
    f, g = _common(f, g)
    terms: dict[ModeIndex, list[complex]] = {}
    for p, a in f:
        for q, b in g:
            terms.setdefault(ModeIndex(p.m + q.m, p.n + q.n), []).append(a * b)
    out = {}
    for idx, ts in terms.items():
        s = complex(math.fsum(t.real for t in ts), math.fsum(t.imag for t in ts))
        if abs(s) > _CANCEL * sum(abs(t) for t in ts):
            out[idx] = s
    return TrigPolynomial(f.lattice, out)


def reflect(f: TrigPolynomial) -> TrigPolynomial:
    """Coefficients of ``z -> f(-z)``."""
    return TrigPolynomial(f.lattice, {ModeIndex(-q.m, -q.n): c for q, c in f})


def rotate(f: TrigPolynomial, power: int = 1) -> TrigPolynomial:
    """Coefficients of ``z -> f(omega**power * z)``.

    ``exp(i <omega z, q>) = exp(i <z, conj(omega) q>)``, so the coefficient
    at ``p`` of the rotated function is the coefficient of ``f`` at ``omega**power p``.
    """
    return TrigPolynomial(f.lattice, {rotate_mode(f.lattice, q, -power): c for q, c in f})


def apply_2Dzbar(f: TrigPolynomial) -> TrigPolynomial:
    """Apply ``2 D_zbar = -i (d/dx1 + i d/dx2)``: multiplies ``c_q`` by ``q``."""
    return TrigPolynomial(f.lattice, {q: f.frequency(q) * c for q, c in f})


def conjugate_reflect(f: TrigPolynomial) -> TrigPolynomial:
    """Coefficients of ``z -> conj(f(conj(z)))``: mode ``-conj(q)`` carries ``conj(c_q)``."""
    out = {}
    for q, c in f:
        out[point_to_mode(f.lattice, -np.conj(f.frequency(q)))] = np.conj(c)
    return TrigPolynomial(f.lattice, out)


def evaluate(f: TrigPolynomial, z) -> complex | np.ndarray:
    """Direct summation of ``sum_q c_q exp(i <z, q>)`` (scalar or array ``z``)."""
    z = np.asarray(z, dtype=complex)
    total = np.zeros(z.shape, dtype=complex)
    for q, c in f:
        total = total + c * np.exp(1j * pairing(z, f.frequency(q)))
    return total[()] if total.ndim == 0 else total


def bm_V(lattice: LatticeSpec = LAMBDA_STAR) -> TrigPolynomial:
    """``V(z) = U(z) U(-z)`` for the BM potential.

    Built on GAMMA_STAR and moved to ``lattice``; failure to land on
    LAMBDA_STAR would mean a broken potential and raises.
    """
    u = bm_potential_U()
    v = multiply(u, reflect(u))
    return coarsen(v, lattice) if lattice == LAMBDA_STAR else refine(v, lattice)


def bm_V1() -> TrigPolynomial:
    """``V_1 = 2 D_zbar U`` on GAMMA_STAR."""
    return apply_2Dzbar(bm_potential_U())


@dataclass(frozen=True)
class SymmetryReport:
    translation: bool
    rotation: bool
    conjugation: bool

    @property
    def ok(self) -> bool:
        return self.translation and self.rotation and self.conjugation


def check_U_symmetries(f: TrigPolynomial, rtol: float = 1e-14) -> SymmetryReport:
    """Test the three identities required of a tunnelling potential ``U``.

    * translation: ``U(z + g) = exp(i <g, K>) U(z)`` for ``g`` in Lambda,
      equivalently every mode lies in ``K + LAMBDA_STAR``;
    * rotation: ``U(omega z) = omega U(z)``;
    * conjugation: ``conj(U(conj z)) = -U(-z)``.
    """
    f = refine(f, GAMMA_STAR)
    k_idx = point_to_mode(GAMMA_STAR, K_POINT)
    translation = all((q.m - k_idx.m) % 3 == 0 and (q.n - k_idx.n) % 3 == 0 for q in f.support)
    rotation = rotate(f, 1).allclose(f.scaled(OMEGA), rtol)
    conjugation = conjugate_reflect(f).allclose(reflect(f).scaled(-1), rtol)
    return SymmetryReport(translation, rotation, conjugation)


def load_potential(path, lattice: LatticeSpec | None = None) -> TrigPolynomial:
    """Read a potential file.

    Each non-comment line holds ``m n re im``; ``#`` starts a comment.  A
    line ``# lattice: LambdaStar`` (or ``GammaStar``) declares the lattice,
    which otherwise defaults to GAMMA_STAR.  Duplicate modes are an error.
    """
    declared = None
    coeffs = {}
    for lineno, raw in enumerate(Path(path).read_text().splitlines(), 1):
        line, _, comment = raw.partition("#")
        comment = comment.strip()
        if comment.lower().startswith("lattice:"):
            name = comment.split(":", 1)[1].strip()
            declared = LatticeSpec(LatticeKind(name))
        if not line.strip():
            continue
        parts = line.split()
        if len(parts) != 4:
            raise ValueError(f"{path}:{lineno}: expected 'm n re im', got {line.strip()!r}")
        idx = ModeIndex(int(parts[0]), int(parts[1]))
        if idx in coeffs:
            raise ValueError(f"{path}:{lineno}: duplicate mode {tuple(idx)}")
        coeffs[idx] = complex(float(parts[2]), float(parts[3]))
    spec = lattice or declared or GAMMA_STAR
    if spec not in (LAMBDA_STAR, GAMMA_STAR):
        raise ValueError(f"potential must live on LambdaStar or GammaStar, not {spec}")
    return TrigPolynomial(spec, coeffs)


def save_potential(f: TrigPolynomial, path) -> None:
    lines = [f"# lattice: {f.lattice.kind.value}"]
    lines += [f"{q.m} {q.n} {c.real!r} {c.imag!r}" for q, c in f]
    Path(path).write_text("\n".join(lines) + "\n")


def validate_U(f: TrigPolynomial) -> SymmetryReport:
    """Symmetry check for a user potential; failures only warn."""
    report = check_U_symmetries(f)
    if not report.ok:
        failed = [name for name in ("translation", "rotation", "conjugation") if not getattr(report, name)]
        warnings.warn(f"potential violates the U symmetries: {', '.join(failed)}", stacklevel=2)
    return report
