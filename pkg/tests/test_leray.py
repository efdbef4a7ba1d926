import numpy as np
import pytest

from dbarlab.cfkernels import random_pairs
from dbarlab.geometry import DomainSpec, regularize_defining
from dbarlab.leray import (LeviData, ball_map, bm_map, check_regularized_growth,
                           choose_levi_sign, convex_leray, dbar_g_residual, holomorphy_residual,
                           levi_map, levi_pairs, levi_polynomial, make_map, min_phi_on_shell,
                           real_hessian_floor)

BALL2 = DomainSpec("unit-ball", 2)
ELL = DomainSpec("ellipsoid", 2, (1.0, 0.5))


def test_bm_diagonal_and_unit():
    z = np.array([[0.3, 0.1j]])
    assert np.allclose(bm_map(2).evaluate(z, z), 0)
    lm = bm_map(1)
    assert lm.evaluate(np.array([[0.0]]), np.array([[1.0]]))[0, 0] == 1
    assert lm.phi_values(np.array([[0.0]]), np.array([[1.0]]))[0] == 1


def test_bm_swap_symmetry():
    z, ze = random_pairs(2, 50, seed=0)
    assert np.allclose(bm_map(2).evaluate(z, ze), -np.conj(np.conj(bm_map(2).evaluate(ze, z))))


def test_ball_map_values():
    ze = np.array([[0.7 + 0.1j, 0.8j]])
    assert np.allclose(ball_map(2).evaluate(np.zeros((1, 2)), ze), np.conj(ze))
    assert np.isclose(ball_map(2).phi_values(np.zeros((1, 2)), ze)[0], np.sum(np.abs(ze) ** 2))


def test_convex_map_ellipsoid():
    ze = np.array([[0.5 + 0.5j, 0.3 - 0.2j]])
    W = convex_leray(ELL).evaluate(np.zeros((1, 2)), ze)
    assert np.allclose(W, [np.conj(ze[0, 0]), 4 * np.conj(ze[0, 1])])
    phi = convex_leray(ELL).phi_values(np.zeros((1, 2)), ze)[0]
    assert np.isclose(phi, abs(ze[0, 0]) ** 2 + 4 * abs(ze[0, 1]) ** 2)


@pytest.mark.parametrize("lm", [ball_map(2), convex_leray(ELL), levi_map(BALL2)])
def test_holomorphic_in_z(lm):
    z, ze = random_pairs(2, 100, seed=1)
    assert holomorphy_residual(lm, z, ze) <= 1e-12


@pytest.mark.parametrize("lm", [bm_map(2), ball_map(2), convex_leray(ELL)])
def test_analytic_dbar_matches_jets(lm):
    z, ze = random_pairs(2, 50, seed=2)
    assert dbar_g_residual(lm, z, ze) <= 1e-12


def test_phi_nonvanishing_on_shell():
    assert min_phi_on_shell(convex_leray(ELL), ELL, nz=50, nzeta=10000) > 0
    assert min_phi_on_shell(ball_map(2), BALL2, nz=50, nzeta=10000) > 0


def test_convexity_floor():
    assert real_hessian_floor(ELL) > 0


def test_make_map_validation():
    with pytest.raises(ValueError):
        make_map("ball", ELL)
    with pytest.raises(ValueError):
        make_map("henkin", BALL2)
    assert make_map("convex", ELL).name == "convex"


def test_levi_vanishes_on_diagonal():
    z = np.array([[0.5, 0.2j]])
    assert levi_polynomial(BALL2, z, z)[0] == 0


def test_levi_leading_term_matches_convex():
    # near the diagonal F agrees with 2 L0 e^{L0 rho0} rho0-gradient pairing to first order
    z, ze = levi_pairs(BALL2, 1000, seed=3, eps=1e-3)
    F = levi_polynomial(BALL2, z, ze)
    conv = convex_leray(BALL2).phi_values(z, ze)
    factor = 2 * np.exp(np.sum(np.abs(ze) ** 2, axis=1) - 1)
    w2 = np.sum(np.abs(ze - z) ** 2, axis=1)
    assert np.max(np.abs(F - factor * conv) / w2) < 10


@pytest.mark.parametrize("spec", [BALL2, ELL])
def test_levi_sign_and_lower_bound(spec):
    sign, margins = choose_levi_sign(spec, 2000)
    assert sign == -1 and margins[-1] > 0 and margins[1] < margins[-1]


def test_levi_radial_sweep():
    zeta0 = np.array([1.0, 0.0])
    data = LeviData(BALL2)
    ds = np.linspace(0.001, 0.05, 30)
    z = (1 - ds)[:, None] * zeta0
    ze = (1 + ds / 2)[:, None] * zeta0
    assert np.all(data.lower_bound_margin(z, ze) > 0)


def test_ball_map_growth_bounded():
    # W = conj(zeta): first derivatives constant, higher ones identically zero
    slopes, rows = check_regularized_growth(ball_map(2), BALL2, orders=(1,))
    assert abs(slopes[1]) <= 1e-9
    assert np.ptp([r[2] for r in rows]) <= 1e-12


def test_regularized_rho_growth():
    spec = DomainSpec("graph-perturbation", 1, (0.02, 2.0))
    slopes, _ = check_regularized_growth(regularize_defining(spec), spec, orders=(1, 2),
                                         npoints=120)
    assert slopes[1] >= -0.15 and slopes[2] >= -1.15
