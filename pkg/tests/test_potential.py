import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from flatmagic.errors import LatticeMismatch
from flatmagic.lattice import (GAMMA_STAR, K_POINT, LAMBDA, LAMBDA_STAR, OMEGA, ModeIndex,
                               mode_to_point, point_to_mode)
from flatmagic.potential import (TrigPolynomial, apply_2Dzbar, bm_potential_U, bm_V, bm_V1,
                                 check_U_symmetries, coarsen, conjugate_reflect, constant, evaluate,
                                 load_potential, multiply, reflect, refine, rotate, save_potential,
                                 validate_U, zero)

U = bm_potential_U()
V = bm_V()


def random_poly(draw_coeffs, lattice=GAMMA_STAR):
    return TrigPolynomial(lattice, {ModeIndex(m, n): complex(a, b) for (m, n, a, b) in draw_coeffs})


coeff = st.tuples(st.integers(-3, 3), st.integers(-3, 3),
                  st.floats(-2, 2, allow_nan=False), st.floats(-2, 2, allow_nan=False))
polys = st.lists(coeff, min_size=0, max_size=5).map(random_poly)


def test_U_coefficients():
    assert len(U) == 3
    for ell in range(3):
        idx = point_to_mode(GAMMA_STAR, OMEGA ** ell * K_POINT)
        assert U[idx] == pytest.approx(-(4 / 3) * math.pi * 1j * OMEGA ** ell, rel=1e-15)


def test_U_symmetries_hold_exactly():
    rep = check_U_symmetries(U)
    assert rep.translation and rep.rotation and rep.conjugation


def test_symmetry_check_detects_violation():
    bad = U + TrigPolynomial(GAMMA_STAR, {ModeIndex(0, 1): 0.1})
    assert not check_U_symmetries(bad).ok
    with pytest.warns(UserWarning):
        validate_U(bad)


def test_U_pointwise_identities(rng):
    z = rng.standard_normal(20) + 1j * rng.standard_normal(20)
    u = evaluate(U, z)
    assert np.allclose(evaluate(U, OMEGA * z), OMEGA * u, atol=1e-12)
    assert np.allclose(np.conj(evaluate(U, np.conj(z))), -evaluate(U, -z), atol=1e-12)
    # U(z + gamma) = exp(i <gamma, K>) U(z) for gamma in LAMBDA
    for g in (mode_to_point(LAMBDA, (1, 0)), mode_to_point(LAMBDA, (0, 1))):
        phase = np.exp(1j * (g * np.conj(K_POINT)).real)
        assert np.allclose(evaluate(U, z + g), phase * u, atol=1e-12)


def test_V_structure():
    assert V.lattice == LAMBDA_STAR
    assert len(V) == 6
    assert V[(0, 0)] == 0
    assert all(abs(q.m * OMEGA + q.n) == pytest.approx(1) for q in V.support)
    assert all(abs(c) == pytest.approx(16 * math.pi ** 2 / 9) for _, c in V)
    assert V.allclose(reflect(V))


def test_V_is_pointwise_product(rng):
    z = rng.standard_normal(15) * 2 + 1j * rng.standard_normal(15)
    assert np.allclose(evaluate(V, z), evaluate(U, z) * evaluate(U, -z), atol=1e-11)


def test_V_is_gamma_periodic_with_lambda_periods(rng):
    z = rng.standard_normal(5) + 1j * rng.standard_normal(5)
    assert np.allclose(evaluate(V, z + 1), evaluate(V, z), atol=1e-11)


def test_V1_is_2dzbar_U():
    assert bm_V1().allclose(apply_2Dzbar(U))
    h = 1e-6
    z = 0.3 + 0.2j
    # 2 D_zbar = -i (d/dx + i d/dy)
    dx = (evaluate(U, z + h) - evaluate(U, z - h)) / (2 * h)
    dy = (evaluate(U, z + 1j * h) - evaluate(U, z - 1j * h)) / (2 * h)
    assert evaluate(bm_V1(), z) == pytest.approx(-1j * (dx + 1j * dy), rel=1e-6)


@given(f=polys, g=polys)
def test_multiply_commutes(f, g):
    assert multiply(f, g).allclose(multiply(g, f), rtol=1e-13)


@given(f=polys, g=polys, h=polys)
def test_multiply_associates(f, g, h):
    a = multiply(multiply(f, g), h)
    b = multiply(f, multiply(g, h))
    scale = max(a.max_abs(), b.max_abs(), 1.0)
    assert all(abs(a[q] - b[q]) < 1e-12 * scale for q in set(a.support) | set(b.support))


@given(f=polys, g=polys)
def test_leibniz_rule(f, g):
    lhs = apply_2Dzbar(multiply(f, g))
    rhs = multiply(apply_2Dzbar(f), g) + multiply(f, apply_2Dzbar(g))
    scale = max(lhs.max_abs(), rhs.max_abs(), 1.0)
    assert all(abs(lhs[q] - rhs[q]) < 1e-11 * scale for q in set(lhs.support) | set(rhs.support))


@given(f=polys)
def test_multiply_matches_pointwise(f):
    z = np.array([0.1 + 0.7j, -1.3 + 0.2j])
    g = U
    assert np.allclose(evaluate(multiply(f, g), z), evaluate(f, z) * evaluate(g, z), atol=1e-10)


@given(f=polys, p=st.integers(0, 2))
def test_rotate_pointwise(f, p):
    z = np.array([0.4 - 0.3j, 1.1 + 0.9j])
    assert np.allclose(evaluate(rotate(f, p), z), evaluate(f, OMEGA ** p * z), atol=1e-10)


@given(f=polys)
def test_conjugate_reflect_pointwise(f):
    z = np.array([0.4 - 0.3j, 1.1 + 0.9j])
    assert np.allclose(evaluate(conjugate_reflect(f), z), np.conj(evaluate(f, np.conj(z))), atol=1e-10)


def test_multiply_cancels_to_exact_zero():
    f = TrigPolynomial(LAMBDA_STAR, {(1, 0): 1.0, (-1, 0): 1.0})
    g = TrigPolynomial(LAMBDA_STAR, {(1, 0): 1.0, (-1, 0): -1.0})
    assert multiply(f, g)[(0, 0)] == 0


def test_refine_and_coarsen():
    f = TrigPolynomial(LAMBDA_STAR, {(1, 2): 2.0})
    fine = refine(f, GAMMA_STAR)
    assert fine[(3, 6)] == 2.0
    assert coarsen(fine, LAMBDA_STAR).allclose(f)
    with pytest.raises(LatticeMismatch):
        coarsen(U, LAMBDA_STAR)


def test_zero_and_constant():
    assert len(zero()) == 0
    assert multiply(constant(2.0), U).allclose(U.scaled(2.0))


def test_norms():
    assert U.l1_norm() == pytest.approx(4 * math.pi)
    assert U.l2_norm() == pytest.approx(4 * math.pi / math.sqrt(3))


def test_fingerprint_is_stable():
    assert bm_potential_U().fingerprint() == U.fingerprint()
    assert U.fingerprint() != V.fingerprint()


def test_save_load_roundtrip(tmp_path):
    path = tmp_path / "u.txt"
    save_potential(U, path)
    back = load_potential(path)
    assert back.lattice == GAMMA_STAR and back.allclose(U, rtol=0)
    save_potential(V, path)
    assert load_potential(path).lattice == LAMBDA_STAR


def test_load_errors(tmp_path):
    p = tmp_path / "dup.txt"
    p.write_text("1 0 1.0 0.0\n1 0 2.0 0.0\n")
    with pytest.raises(ValueError, match="duplicate"):
        load_potential(p)
    p.write_text("1 0 1.0\n")
    with pytest.raises(ValueError):
        load_potential(p)
    p.write_text("# lattice: Lambda\n1 0 1.0 0.0\n")
    with pytest.raises(ValueError):
        load_potential(p)


def test_load_empty_file_gives_zero(tmp_path):
    p = tmp_path / "zero.txt"
    p.write_text("# nothing here\n")
    assert len(load_potential(p)) == 0
