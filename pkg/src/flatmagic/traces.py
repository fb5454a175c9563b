"""Traces of powers of the Birman-Schwinger operator.

Two independent routes to ``tr T_k^p``:

* :func:`trace_power_lattice` walks closed loops on the mode lattice,
  multiplying the entries ``(gamma + k)^-2 V_hat(gamma - gamma')`` along
  the way.  Nothing is assembled into a matrix.
* :func:`trace_power_eig` sums ``lambda^p`` over the eigenvalues of the
  assembled matrix.

``tr T_k^p`` is independent of ``k`` (the spectrum is), and for ``p >= 2``
the loop sum converges absolutely, so the two routes and two values of
``k`` must agree up to truncation.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np

from .eig import eigenvalues
from .errors import SingularShift
from .lattice import LAMBDA_STAR, ModeIndex
from .magic import MagicCandidate, Model, _check_shift, _resolve_model, birman_schwinger
from .operators import ACCEPT_RADIUS, SHIFT_EPS, chiral_windows, scalar_V, window
from .potential import TrigPolynomial, bm_potential_U, refine, reflect

MAX_POWER = 4
PROBE_TOL = 1e-6
TRACE_UNIT = np.pi / np.sqrt(3)


class TraceMethod(enum.Enum):
    LATTICE_SUM = "LatticeSum"
    EIGEN_SUM = "EigenSum"


@dataclass(frozen=True)
class TraceResult:
    p: int
    k: complex
    value: complex
    tail_bound: float
    method: TraceMethod
    radius: float = math.nan

    def to_dict(self) -> dict:
        return {
            "p": self.p,
            "k_re": float(self.k.real),
            "k_im": float(self.k.imag),
            "value_re": float(self.value.real),
            "value_im": float(self.value.imag),
            "tail_bound": float(self.tail_bound),
            "method": self.method.value,
            "radius": float(self.radius),
        }


def _steps(model: Model, k: complex, radius: float, U: TrigPolynomial):
    """One period of the loop walk: ``[(window, power, f), ...]``.

    A step from mode ``x`` of ``window`` multiplies by ``(x + k)**power *
    f_hat(q)`` and moves to ``x - q`` in the window of the next step.
    """
    if model is Model.SCALAR:
        w = window(LAMBDA_STAR, radius, k)
        return [(w, -2, scalar_V(U))]
    w1, w2 = chiral_windows(radius, k)
    return [(w1, -1, U), (w2, -1, reflect(U))]


def _walk(steps, k, p, eps):
    """Loop sums per starting mode, compensated."""
    prepared = []
    for w, power, f in steps:
        f = refine(f, w.lattice)
        lookup = w.index()
        d = w.points + k
        if np.min(np.abs(d)) < eps:
            raise SingularShift(f"k = {k} lies on the dual lattice")
        prepared.append((w.modes, lookup, d ** power, list(f)))
    period = len(prepared)
    n_steps = p * period
    first_modes = prepared[0][0]
    re_parts, im_parts = [], []
    for start in first_modes:
        amps = {start: 1.0 + 0j}
        for s in range(n_steps):
            _, lookup, weight, coeffs = prepared[s % period]
            nxt_lookup = prepared[(s + 1) % period][1]
            new: dict[ModeIndex, complex] = {}
            for x, a in amps.items():
                ax = a * weight[lookup[x]]
                for q, c in coeffs:
                    y = ModeIndex(x.m - q.m, x.n - q.n)
                    if y in nxt_lookup:
                        new[y] = new.get(y, 0j) + ax * c
            amps = new
            if not amps:
                break
        v = amps.get(start, 0j)
        re_parts.append(v.real)
        im_parts.append(v.imag)
    return complex(math.fsum(re_parts), math.fsum(im_parts))


def tail_bound(model, p: int, radius: float, U: TrigPolynomial | None = None) -> float:
    """Crude envelope of the loops leaving the disc of ``radius``.

    ``sup|f_hat|^(p * period) * 6^(p-1) * sum_{|gamma| > R} |gamma|^(-2p)``,
    the lattice sum replaced by its integral ``2 pi R^(2-2p) / ((2p-2) A)``
    with ``A`` the cell area.  Deliberately an overestimate.
    """
    model = _resolve_model(model)
    U = bm_potential_U() if U is None else U
    if model is Model.SCALAR:
        V = scalar_V(U)
        sup = V.max_abs() ** p if len(V) else 0.0
        n_support = max(len(V), 1)
    else:
        sup = U.max_abs() ** (2 * p) if len(U) else 0.0
        n_support = max(len(U), 1) ** 2
    if p < 2:
        return math.inf if sup else 0.0
    area = LAMBDA_STAR.cell_area
    tail = 2 * np.pi * radius ** (2 - 2 * p) / ((2 * p - 2) * area)
    return float(sup * n_support ** (p - 1) * tail)


def trace_power_lattice(model, k: complex, p: int, radius: float = ACCEPT_RADIUS,
                        U: TrigPolynomial | None = None, max_power: int = MAX_POWER) -> TraceResult:
    """``tr T_k^p`` as a sum over closed loops of modes within ``radius``.

    ``p = 1`` is accepted for testing (it is zero whenever ``V_hat(0) = 0``
    for the scalar model) but its tail bound is infinite.

    Raises
    ------
    SingularShift
        If ``k`` is on the dual lattice.
    """
    model = _resolve_model(model)
    if p < 1:
        raise ValueError("p must be at least 1")
    if p > max_power:
        raise ValueError(f"p = {p} exceeds the cap {max_power}")
    U = bm_potential_U() if U is None else U
    _check_shift(model, k)
    steps = _steps(model, k, radius, U)
    eps = SHIFT_EPS * steps[0][0].lattice.shortest
    value = _walk(steps, complex(k), p, eps)
    return TraceResult(p, complex(k), value, tail_bound(model, p, radius, U),
                       TraceMethod.LATTICE_SUM, float(radius))


def trace_power_eig(model, k: complex, p: int, radius: float = ACCEPT_RADIUS,
                    U: TrigPolynomial | None = None) -> TraceResult:
    """``sum lambda^p`` over the eigenvalues of the truncated ``T_k``."""
    model = _resolve_model(model)
    U = bm_potential_U() if U is None else U
    lams = eigenvalues(birman_schwinger(model, k, radius, U)).eigenvalues
    powers = lams ** p
    value = complex(math.fsum(powers.real), math.fsum(powers.imag))
    return TraceResult(p, complex(k), value, tail_bound(model, p, radius, U),
                       TraceMethod.EIGEN_SUM, float(radius))


def rational_probe(x: float, unit: float = TRACE_UNIT, max_den: int = 1000,
                   tol: float = PROBE_TOL) -> tuple[int, int] | None:
    """Best rational ``p/q`` (``q <= max_den``) for ``x / unit``, if within ``tol``."""
    if max_den < 1:
        raise ValueError("max_den must be at least 1")
    ratio = x / unit
    frac = Fraction(ratio).limit_denominator(max_den)
    if abs(ratio - frac) < tol:
        return frac.numerator, frac.denominator
    return None


@dataclass(frozen=True)
class ProbeFinding:
    value: float
    ratio: float
    fraction: tuple[int, int] | None
    residual: float

    def to_dict(self) -> dict:
        return {"value": self.value, "ratio": self.ratio,
                "numerator": self.fraction[0] if self.fraction else None,
                "denominator": self.fraction[1] if self.fraction else None,
                "residual": self.residual}


def probe_finding(x: float, unit: float = TRACE_UNIT, max_den: int = 1000) -> ProbeFinding:
    """:func:`rational_probe` plus the distance to the best fraction, for reporting."""
    ratio = x / unit
    best = Fraction(ratio).limit_denominator(max_den)
    hit = rational_probe(x, unit, max_den)
    return ProbeFinding(float(x), float(ratio), hit, float(abs(ratio - best)))


@dataclass
class SumRuleReport:
    trace: complex
    converged_sum: complex
    unconverged_sum: complex
    gap: float
    n_converged: int
    notes: list[str] = field(default_factory=list)

    def to_dict(self) -> dict:
        return {
            "trace_re": self.trace.real, "trace_im": self.trace.imag,
            "converged_sum_re": self.converged_sum.real, "converged_sum_im": self.converged_sum.imag,
            "unconverged_sum_re": self.unconverged_sum.real,
            "unconverged_sum_im": self.unconverged_sum.imag,
            "gap": self.gap, "n_converged": self.n_converged, "notes": self.notes,
        }


def sum_rule_check(cands: list[MagicCandidate], model, k: complex = 1j, radius: float = ACCEPT_RADIUS,
                   U: TrigPolynomial | None = None) -> SumRuleReport:
    """Spectral weight ``sum mult * lambda^2`` of the converged magics versus ``tr T_k^2``.

    ``gap = |tr T^2 - converged sum| / |tr T^2|`` bounds the weight carried
    by magics that were not resolved.  The unconverged part of the
    truncated spectrum is reported alongside.
    """
    model = _resolve_model(model)
    U = bm_potential_U() if U is None else U
    lams = eigenvalues(birman_schwinger(model, k, radius, U)).eigenvalues
    trace = complex(math.fsum((lams ** 2).real), math.fsum((lams ** 2).imag))
    good = [c for c in cands if c.converged]
    terms = [c.multiplicity * c.lam ** 2 for c in good]
    conv = complex(math.fsum(t.real for t in terms), math.fsum(t.imag for t in terms))
    # the truncated eigenvalues not claimed by a converged cluster
    used = np.zeros(len(lams), bool)
    for c in good:
        d = np.abs(lams - c.lam)
        d[used] = np.inf
        for i in np.argsort(d)[:c.multiplicity]:
            used[i] = True
    rest = lams[~used] ** 2
    unconv = complex(math.fsum(rest.real), math.fsum(rest.imag))
    notes = []
    if abs(trace) == 0:
        gap = 0.0 if abs(conv) == 0 else math.inf
        notes.append("tr T^2 vanishes")
    else:
        gap = float(abs(trace - conv) / abs(trace))
    return SumRuleReport(trace, conv, unconv, gap, len(good), notes)


__all__ = ["TraceMethod", "TraceResult", "ProbeFinding", "SumRuleReport", "trace_power_lattice",
           "trace_power_eig", "tail_bound", "rational_probe", "probe_finding", "sum_rule_check",
           "TRACE_UNIT", "MAX_POWER"]
