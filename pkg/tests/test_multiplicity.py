import numpy as np
import pytest

from flatmagic.errors import ContourThroughZero, NonInteger
from flatmagic.lattice import DUAL_LENGTH, GAMMA_STAR, K_POINT, LAMBDA_STAR, OMEGA
from flatmagic.multiplicity import (INFINITE, chiral_family, custom_family, default_contour_radius,
                                    gohberg_sigal_m, multiplicity, multiplicity_profile,
                                    protected_multiplicity_scalar, scalar_family)

SCALAR_ALPHA1 = 1.4690811  # independent sigma_min minimisation, see test_magic


def test_counterexample_family():
    fam = custom_family(lambda z: 1 - 2 * z, lambda z: -2 + 0 * z)
    assert gohberg_sigal_m(fam, 0.5, 0.1).m == 1
    assert gohberg_sigal_m(fam, 0.0, 0.1).m == 0


def test_double_zero_counts_two():
    fam = custom_family(lambda z: (z - 0.3) ** 2 * (z + 2), lambda z: 2 * (z - 0.3) * (z + 2) + (z - 0.3) ** 2)
    res = gohberg_sigal_m(fam, 0.3, 0.5)
    assert res.m == 2 and abs(res.raw - 2) < 1e-10


def test_contour_through_zero():
    fam = custom_family(lambda z: 1 - 2 * z, lambda z: -2 + 0 * z)
    with pytest.raises(ContourThroughZero):
        gohberg_sigal_m(fam, 0.0, 0.5)


def test_non_integer_detected():
    # a wrong derivative makes the integral count half a zero
    fam = custom_family(lambda z: z, lambda z: 0.5 + 0 * z)
    with pytest.raises(NonInteger) as exc:
        gohberg_sigal_m(fam, 0.0, 0.1)
    assert abs(exc.value.raw - 0.5) < 1e-8


def test_multiplicity_shrinks_contour():
    fam = custom_family(lambda z: 1 - 2 * z, lambda z: -2 + 0 * z)
    res = multiplicity(fam, 0.0, 0.5)
    assert res.m == 0 and any("shrunk" in n for n in res.notes)


def test_default_contour_radius():
    assert default_contour_radius(0j, LAMBDA_STAR) == pytest.approx(0.25 * GAMMA_STAR.shortest)
    assert default_contour_radius(0j, None) == pytest.approx(0.1)
    k = 0.5 * DUAL_LENGTH * 1j
    assert default_contour_radius(k, LAMBDA_STAR) <= 0.25 * 0.5 * DUAL_LENGTH + 1e-12


def test_free_profile():
    ks = [0, 1j * DUAL_LENGTH, 1j * DUAL_LENGTH * OMEGA, 1j, 1 + 1j, 2.3 - 0.4j]
    res = multiplicity_profile(0.0, ks, radius=4 * DUAL_LENGTH)
    assert [r.m for r in res] == [2, 2, 2, 0, 0, 0]
    assert all(abs(r.raw - r.m) < 0.05 for r in res)


def test_free_chiral_counts_gamma_star():
    # D(0) + k has a two-dimensional kernel exactly at Gamma* points
    fam = chiral_family(0.0, radius=2 * DUAL_LENGTH)
    assert multiplicity(fam, 0j).m == 2
    assert multiplicity(fam, K_POINT).m == 2
    assert multiplicity(fam, 0.3 + 0.4j).m == 0


@pytest.mark.parametrize("alpha", [0.5, 1.0, 2.6])
def test_protected_states(alpha):
    res = protected_multiplicity_scalar(alpha, radius=6 * DUAL_LENGTH)
    assert res.m == 2
    assert not [n for n in res.notes if n.startswith("finding")]


def test_magic_alpha_is_infinite():
    fam = scalar_family(SCALAR_ALPHA1, radius=6 * DUAL_LENGTH)
    res = multiplicity(fam, 1j, contour_tol=1e-5)
    assert res.m is INFINITE and res.infinite
    assert res.to_dict()["m"] == "infinite"


def test_result_serialises():
    fam = custom_family(lambda z: z, lambda z: 1 + 0 * z)
    d = gohberg_sigal_m(fam, 0.0, 0.1).to_dict()
    assert d["m"] == 1 and d["raw_re"] == pytest.approx(1) and d["n_quad"] >= 64


def test_quadrature_converges_geometrically():
    fam = custom_family(lambda z: np.exp(z) - 1.1, lambda z: np.exp(z))
    res = gohberg_sigal_m(fam, 0.0, 0.2)
    assert res.m == 1 and abs(res.raw - 1) < 1e-12
