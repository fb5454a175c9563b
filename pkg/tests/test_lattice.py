import itertools
import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from flatmagic.lattice import (DUAL_LENGTH, GAMMA, GAMMA_STAR, K_POINT, LAMBDA, LAMBDA_STAR, OMEGA,
                               ModeIndex, canonical_key, mode_to_point, nearest_dual_point,
                               neighbor_distances, pairing, point_to_mode, refine_index,
                               rotate_indices, rotate_mode, truncated_modes)

ints = st.integers(-40, 40)
ALL = [LAMBDA, GAMMA, LAMBDA_STAR, GAMMA_STAR]


def test_scales():
    assert LAMBDA_STAR.shortest == pytest.approx(4 * math.pi / math.sqrt(3))
    assert GAMMA_STAR.shortest == pytest.approx(DUAL_LENGTH / 3)
    assert GAMMA.shortest == 3.0


@pytest.mark.parametrize("spec", [LAMBDA, GAMMA])
def test_cell_areas_are_dual(spec):
    assert spec.cell_area * spec.dual().cell_area == pytest.approx(4 * math.pi ** 2)


@pytest.mark.parametrize("spec", [LAMBDA, GAMMA])
@given(a=ints, b=ints, c=ints, d=ints)
def test_pairing_lands_in_2pi_integers(spec, a, b, c, d):
    x = pairing(mode_to_point(spec, (a, b)), mode_to_point(spec.dual(), (c, d)))
    assert abs(x / (2 * math.pi) - round(x / (2 * math.pi))) < 1e-9


@pytest.mark.parametrize("spec", ALL)
@given(m=ints, n=ints)
def test_point_roundtrip(spec, m, n):
    assert point_to_mode(spec, mode_to_point(spec, (m, n))) == (m, n)


def test_point_off_lattice():
    assert point_to_mode(LAMBDA_STAR, 1j) is None


@given(m=ints, n=ints)
def test_canonical_key_is_squared_length(m, n):
    z = m * OMEGA + n
    assert canonical_key((m, n))[0] == round(abs(z) ** 2)


@pytest.mark.parametrize("spec", ALL)
@given(m=ints, n=ints, p=st.integers(-4, 4))
def test_rotation_is_multiplication_by_omega(spec, m, n, p):
    z = mode_to_point(spec, (m, n))
    assert abs(mode_to_point(spec, rotate_mode(spec, (m, n), p)) - OMEGA ** p * z) < 1e-9 * (1 + abs(z))


def test_rotate_indices_vectorised():
    m, n = np.arange(-3, 4), np.arange(2, 9)
    rm, rn = rotate_indices(m, n, 2)
    assert [rotate_mode(LAMBDA, q, 2) for q in zip(m, n)] == list(zip(rm.tolist(), rn.tolist()))


def test_K_point_in_gamma_star_only():
    assert point_to_mode(GAMMA_STAR, K_POINT) is not None
    assert point_to_mode(LAMBDA_STAR, K_POINT) is None
    assert abs(K_POINT) < LAMBDA_STAR.shortest


def brute_force(spec, radius, shift):
    out = []
    for m, n in itertools.product(range(-60, 61), repeat=2):
        if abs(mode_to_point(spec, (m, n)) + shift) <= radius:
            out.append((m, n))
    return sorted(out, key=canonical_key)


@pytest.mark.parametrize("spec,radius,shift", [
    (LAMBDA_STAR, 30.0, 0j), (LAMBDA_STAR, 41.0, 1 + 0.5j), (GAMMA_STAR, 12.5, -3 + 2j),
    (LAMBDA, 7.3, 0.2j),
])
def test_truncated_modes_match_brute_force(spec, radius, shift):
    assert truncated_modes(spec, radius, shift) == brute_force(spec, radius, shift)


def test_truncated_modes_coset():
    modes = truncated_modes(GAMMA_STAR, 20.0, coset=(0, 0))
    coarse = truncated_modes(LAMBDA_STAR, 20.0)
    assert sorted(refine_index(LAMBDA_STAR, GAMMA_STAR, q) for q in coarse) == sorted(modes)


def test_truncated_modes_rejects_bad_radius():
    with pytest.raises(ValueError):
        truncated_modes(LAMBDA_STAR, 0.0)


def test_shell_counts_are_hexagonal():
    # 1 origin + 6 shortest vectors
    assert len(truncated_modes(LAMBDA_STAR, LAMBDA_STAR.shortest)) == 7


@given(x=st.floats(-30, 30), y=st.floats(-30, 30))
def test_nearest_dual_point(x, y):
    k = complex(x, y)
    idx, dist = nearest_dual_point(k)
    assert dist == pytest.approx(abs(mode_to_point(LAMBDA_STAR, idx) - k))
    assert dist <= min(neighbor_distances(k, LAMBDA_STAR)) + 1e-12
    assert dist <= LAMBDA_STAR.shortest / math.sqrt(3) + 1e-9


def test_refine_index_rejects_non_embedding():
    with pytest.raises(ValueError):
        refine_index(GAMMA_STAR, LAMBDA_STAR, (1, 0))
    assert refine_index(LAMBDA_STAR, GAMMA_STAR, (1, -2)) == ModeIndex(3, -6)
