"""Acceptance checks, runnable from the test suite or ``flatmagic validate``.

Each ``criterion_N`` returns a :class:`CriterionResult`; :func:`run_all`
runs them in order.  ``quick=True`` shrinks radii so the whole suite fits
a few minutes; the tolerances never change.
"""

from __future__ import annotations

import time
from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np

from . import bands, magic, multiplicity as mult, traces
from .eig import eigenvalues
from .errors import FlatMagicError
from .lattice import DUAL_LENGTH, LAMBDA_STAR, OMEGA, mode_to_point
from .operators import (ACCEPT_RADIUS, QUICK_RADIUS, assemble_chiral_D, assemble_P, chiral_windows,
                        scalar_V)
from .potential import bm_potential_U, check_U_symmetries, reflect

CHIRAL_SPACING = 1.515
SCALAR_SPACING = 3.03


@dataclass
class CriterionResult:
    number: int
    title: str
    status: str  # "PASS", "FAIL" or "WARN"
    detail: str
    elapsed: float = 0.0
    data: dict = field(default_factory=dict)

    @property
    def passed(self) -> bool:
        return self.status != "FAIL"

    def line(self) -> str:
        return f"criterion {self.number} [{self.status}] {self.title}: {self.detail} ({self.elapsed:.1f} s)"

    def to_dict(self) -> dict:
        return {"number": self.number, "title": self.title, "status": self.status,
                "detail": self.detail, "elapsed": self.elapsed, "data": self.data}


def _timed(number, title):
    def wrap(fn):
        def run(*args, **kwargs):
            t0 = time.perf_counter()
            try:
                status, detail, data = fn(*args, **kwargs)
            except FlatMagicError as exc:
                status, detail, data = "FAIL", f"{type(exc).__name__}: {exc}", {}
            return CriterionResult(number, title, status, detail, time.perf_counter() - t0, data)
        run.__name__ = fn.__name__
        run.__doc__ = fn.__doc__
        return run
    return wrap


def _status(ok: bool) -> str:
    return "PASS" if ok else "FAIL"


@lru_cache(maxsize=4)
def magic_run(model: str, quick: bool = False):
    """Shared :func:`~flatmagic.magic.find_magics` run for criteria 5 to 7."""
    # the scalar ladder is cheap; only the chiral one is shortened in quick mode
    quick_chiral = quick and model == "chiral"
    radii = (12 * DUAL_LENGTH, 14 * DUAL_LENGTH) if quick_chiral else magic.DEFAULT_RADII
    return tuple(magic.find_magics(model, radii=radii))


FREE_KS = (0j, 1j * DUAL_LENGTH, 1j * DUAL_LENGTH * OMEGA, 1j, 1 + 1j, 2.3 - 0.4j)


@_timed(1, "free multiplicity formula")
def criterion_1(quick: bool = False):
    t0 = time.perf_counter()
    res = mult.multiplicity_profile(0.0, FREE_KS, radius=QUICK_RADIUS)
    elapsed = time.perf_counter() - t0
    ms, ok = [], elapsed < 30
    for r in res:
        if isinstance(r, Exception):
            ms.append(type(r).__name__)
            ok = False
        else:
            ms.append(r.m)
            ok &= abs(r.raw - r.m) < mult.INTEGER_TOL
    ok &= ms == [2, 2, 2, 0, 0, 0]
    return _status(ok), f"m = {ms}, {elapsed:.1f} s", {"m": [str(m) for m in ms]}


@_timed(2, "counterexample family 1 - 2 zeta")
def criterion_2(quick: bool = False):
    fam = mult.custom_family(lambda z: 1 - 2 * z, lambda z: -2 + 0 * z)
    a = mult.gohberg_sigal_m(fam, 0.5, 0.1)
    b = mult.gohberg_sigal_m(fam, 0.0, 0.1)
    ok = a.m == 1 and b.m == 0
    return _status(ok), f"m(0.5) = {a.m}, m(0) = {b.m}", {"m_half": a.m, "m_zero": b.m}


PROTECTED_ALPHAS = (0.3, 0.5, 1.0, 1.7, 2.6)


@_timed(3, "protected states at k = 0")
def criterion_3(quick: bool = False):
    ok, parts = True, []
    for a in PROTECTED_ALPHAS:
        res_q = magic.q_residual("scalar", a, 1j, QUICK_RADIUS)
        if res_q < magic.RESIDUAL_TOL:
            parts.append(f"{a}: skipped (magic, residual {res_q:.1e})")
            continue
        r = mult.protected_multiplicity_scalar(a)
        good = (not r.infinite) and r.m == 2 and abs(r.raw - 2) < mult.INTEGER_TOL
        ok &= good
        parts.append(f"{a}: m = {r.m}")
    return _status(ok), ", ".join(parts), {}


@_timed(4, "k-independence of Spec T_k")
def criterion_4(quick: bool = False):
    radius = QUICK_RADIUS if quick else ACCEPT_RADIUS
    ok, parts, data = True, [], {}
    for model in ("scalar", "chiral"):
        top = []
        for k in (1j, 1 + 0.5j):
            lam = eigenvalues(magic.birman_schwinger(model, k, radius)).eigenvalues
            top.append(leading(lam, 12))
        worst = multiset_distance(top[0], top[1]) if len(top[0]) == len(top[1]) else np.inf
        ok &= worst < 1e-6
        data[model] = worst
        parts.append(f"{model} max rel mismatch {worst:.1e}")
    return _status(ok), ", ".join(parts), data


def leading(lam, count: int, tol: float = 1e-6) -> np.ndarray:
    """The ``count`` largest-modulus eigenvalues, extended to close a modulus tie.

    Conjugate pairs and degenerate clusters share a modulus, so a plain cut
    after ``count`` values can split a group arbitrarily; the cut is moved
    past every value whose modulus is within ``tol`` (relative) of the last one.
    """
    lam = np.asarray(lam)
    lam = lam[np.argsort(-np.abs(lam), kind="stable")]
    if len(lam) <= count:
        return lam
    edge = abs(lam[count - 1])
    n = count
    while n < len(lam) and abs(abs(lam[n]) - edge) <= tol * edge:
        n += 1
    return lam[:n]


def multiset_distance(a, b) -> float:
    """Largest relative distance in a greedy nearest pairing of two equal-size multisets."""
    b = list(b)
    worst = 0.0
    for x in sorted(a, key=lambda z: -abs(z)):
        j = int(np.argmin([abs(x - y) for y in b]))
        worst = max(worst, abs(x - b[j]) / abs(x))
        b.pop(j)
    return worst


def _real_converged(cands):
    return sorted(c.alpha.real for c in cands if c.converged and c.is_real)


@_timed(5, "flat band certification")
def criterion_5(quick: bool = False):
    reals = _real_converged(magic_run("scalar", quick))
    if len(reals) < 2:
        return "FAIL", f"need two converged real magics, found {len(reals)}", {}
    a1, a2 = reals[0], reals[1]
    kgrid = bands.grid(12)
    flat = bands.flat_band_check(a1, kgrid)
    report = bands.one_k_equivalence(a1, 1j, kgrid)
    probe = a1 + 0.3 * (a2 - a1)
    off = bands.flat_band_check(probe, kgrid)
    ratio = off.max_sigma_min / off.scale
    ok = flat.is_flat and report.consistent and ratio > 1e-2
    detail = (f"alpha1 = {a1:.6f}: max sigma_min/scale = {flat.max_sigma_min / flat.scale:.1e}, "
              f"one-k consistent = {report.consistent}; alpha = {probe:.4f}: ratio {ratio:.4f}")
    return _status(ok), detail, {"alpha1": a1, "probe": probe, "probe_ratio": ratio}


@_timed(6, "real spacing laws")
def criterion_6(quick: bool = False):
    ch = magic.real_magic_spacings(list(magic_run("chiral", quick)))
    sc = magic.real_magic_spacings(list(magic_run("scalar", quick)))
    ch_gaps = [float(g) for _, g in ch[:3]]
    sc_gaps = [float(g) for _, g in sc[:3]]
    later = [round(float(g), 4) for _, g in ch[3:6]]
    ch_ok = len(ch_gaps) == 3 and all(abs(g - CHIRAL_SPACING) < 0.05 for g in ch_gaps)
    sc_ok = len(sc_gaps) >= 2 and all(abs(g - SCALAR_SPACING) < 0.15 for g in sc_gaps)
    detail = (f"chiral gaps {[round(g, 4) for g in ch_gaps]} (target {CHIRAL_SPACING} +- 0.05), "
              f"scalar gaps {[round(g, 4) for g in sc_gaps]} (target {SCALAR_SPACING} +- 0.15); "
              f"later chiral gaps {later}")
    return _status(ch_ok and sc_ok), detail, {"chiral": ch_gaps, "scalar": sc_gaps,
                                               "chiral_ok": ch_ok, "scalar_ok": sc_ok,
                                               "chiral_later": later}


@_timed(7, "multiplicity two of real scalar magics")
def criterion_7(quick: bool = False):
    reals = [c for c in magic_run("scalar", quick) if c.converged and c.is_real]
    sizes = [c.multiplicity for c in sorted(reals, key=lambda c: c.alpha.real)]
    ok = bool(sizes) and all(s == 2 for s in sizes)
    # a failure here is a finding about the model, reported as a warning
    status = "PASS" if ok else "WARN"
    return status, f"cluster sizes {sizes} at alphas {[round(float(c.alpha.real), 6) for c in reals]}", {"sizes": sizes}


@_timed(8, "trace oracle")
def criterion_8(quick: bool = False):
    radius = QUICK_RADIUS if quick else ACCEPT_RADIUS
    lat = [traces.trace_power_lattice("scalar", k, 2, radius) for k in (1j, 1 + 0.5j)]
    eig = [traces.trace_power_eig("scalar", k, 2, radius) for k in (1j, 1 + 0.5j)]
    route = max(abs(a.value - b.value) / abs(b.value) for a, b in zip(lat, eig))
    k_gap = abs(lat[0].value - lat[1].value)
    k_ok = k_gap <= lat[0].tail_bound + lat[1].tail_bound
    im = max(abs(t.value.imag) / abs(t.value) for t in lat)
    finding = traces.probe_finding(lat[0].value.real)
    ok = route < 1e-4 and k_ok and im < 1e-6
    detail = (f"route mismatch {route:.1e}, k gap {k_gap:.1e} vs tail {lat[0].tail_bound:.1e}, "
              f"Im/|tr| {im:.1e}; probe tr/(pi/sqrt3) = {finding.ratio:.8f} -> {finding.fraction}")
    return _status(ok), detail, {"probe": finding.to_dict()}


def _p_factorization_error(alpha, k, radius) -> float:
    """Max entry error of ``D(-alpha) D(alpha)`` against ``assemble_P`` on an inner window.

    The outer window is padded by the support radius of ``U`` so that every
    product entry indexed by inner modes is complete.
    """
    U = bm_potential_U()
    pad = max(abs(U.frequency(q)) for q, _ in U) * 1.01
    inner, _ = chiral_windows(radius, k, reduced=False)
    outer, _ = chiral_windows(radius + pad, k, reduced=False)
    dp = assemble_chiral_D(alpha, k, outer, outer, U).entries
    dm = assemble_chiral_D(-alpha, k, outer, outer, U).entries
    look = outer.index()
    pos = np.array([look[q] for q in inner.modes])
    n_out = len(outer)
    sel = np.concatenate([pos, pos + n_out])
    prod = dm[sel, :] @ dp[:, sel]
    P = assemble_P(alpha, k, inner, U).entries
    return float(np.max(np.abs(prod - P)))


def _spectrum_covariance(radius) -> dict:
    """Relative spectral mismatch of ``T_k`` under ``k -> k + gamma`` and ``k -> omega k``."""
    k = 0.7 + 0.45j
    base = eigenvalues(magic.birman_schwinger("scalar", k, radius)).eigenvalues
    gamma = mode_to_point(LAMBDA_STAR, (1, 2))
    shifted = eigenvalues(magic.birman_schwinger("scalar", k + gamma, radius)).eigenvalues
    rotated = eigenvalues(magic.birman_schwinger("scalar", OMEGA * k, radius)).eigenvalues
    a, b, c = (leading(x, 20) for x in (base, shifted, rotated))
    if not len(a) == len(b) == len(c):
        return {"translation": np.inf, "rotation": np.inf}
    return {"translation": multiset_distance(a, b), "rotation": multiset_distance(a, c)}


def _eig_oracles(seed=0) -> dict:
    rng = np.random.default_rng(seed)
    A = rng.standard_normal((3, 3)) + 1j * rng.standard_normal((3, 3))
    lam = eigenvalues(A).eigenvalues
    c2 = (A[0, 0] * A[1, 1] - A[0, 1] * A[1, 0] + A[0, 0] * A[2, 2] - A[0, 2] * A[2, 0]
          + A[1, 1] * A[2, 2] - A[1, 2] * A[2, 1])
    det = (A[0, 0] * (A[1, 1] * A[2, 2] - A[1, 2] * A[2, 1])
           - A[0, 1] * (A[1, 0] * A[2, 2] - A[1, 2] * A[2, 0])
           + A[0, 2] * (A[1, 0] * A[2, 1] - A[1, 1] * A[2, 0]))
    e1 = lam.sum()
    e2 = lam[0] * lam[1] + lam[0] * lam[2] + lam[1] * lam[2]
    e3 = lam.prod()
    charpoly = max(abs(e1 - np.trace(A)), abs(e2 - c2), abs(e3 - det))
    B = rng.standard_normal((12, 12)) + 1j * rng.standard_normal((12, 12))
    perm = rng.permutation(12)
    Pm = np.eye(12)[perm]
    sim = multiset_distance(eigenvalues(B).eigenvalues, eigenvalues(Pm @ B @ Pm.T).eigenvalues)
    return {"charpoly": float(charpoly), "permutation": float(sim)}


@_timed(9, "structural property suites")
def criterion_9(quick: bool = False):
    U = bm_potential_U()
    sym = check_U_symmetries(U)
    V = scalar_V(U)
    v_even = V.allclose(reflect(V))
    v_zero_mean = V[(0, 0)] == 0
    p_err = max(_p_factorization_error(a, k, QUICK_RADIUS / 2)
                for a, k in ((0.7, 0.3 + 0.2j), (1.3 - 0.4j, -0.5 + 0.9j)))
    cov = _spectrum_covariance(QUICK_RADIUS)
    orc = _eig_oracles()
    ok = (sym.ok and v_even and v_zero_mean and p_err < 1e-12
          and max(cov.values()) < 1e-8 and max(orc.values()) < 1e-9)
    detail = (f"U symmetries {sym.ok}, V even {v_even}, V_hat(0) = 0 {v_zero_mean}, "
              f"P factorisation {p_err:.1e}, covariance {max(cov.values()):.1e}, "
              f"eig oracles {max(orc.values()):.1e}")
    return _status(ok), detail, {"p_error": p_err, **cov, **orc}


CRITERIA = (criterion_1, criterion_2, criterion_3, criterion_4, criterion_5,
            criterion_6, criterion_7, criterion_8, criterion_9)


def run_all(quick: bool = False, echo=print) -> list[CriterionResult]:
    out = []
    for crit in CRITERIA:
        res = crit(quick)
        if echo is not None:
            echo(res.line())
        out.append(res)
    return out


__all__ = ["CriterionResult", "CRITERIA", "run_all", "magic_run", "leading", "multiset_distance"] + [
    f"criterion_{i}" for i in range(1, 10)]
