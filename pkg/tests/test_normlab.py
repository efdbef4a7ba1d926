import numpy as np
import pytest
from hypothesis import given, strategies as st
from sklearn.exceptions import NotFittedError

from dbarlab.normlab import (
    ExponentFit, GridSamples, boundary_exponent_fit, dyadic_decompose, holder_norm,
    lipschitz_seminorm,
)


def grid(f, lo=-1.0, hi=1.0, num=2001):
    return GridSamples.from_function(f, lo, hi, num)


CUSP = grid(lambda x: np.sqrt(np.abs(x[..., 0])))
SMOOTH = grid(lambda x: np.exp(-8 * x[..., 0] ** 2))


def test_cusp_holder_ratio():
    # |x|^(1/2): the Hoelder-1/2 quotient is 1, attained at pairs (0, y)
    e = holder_norm(CUSP, 0.5)
    assert abs(e.parts["ratio"] - 1.0) <= 0.15
    assert e.method == "divided-diff"


def test_constant_has_zero_seminorm():
    e = holder_norm(grid(lambda x: 2.0 + 0 * x[..., 0], num=101), 0.5)
    assert e.parts["ratio"] == 0.0 and e.parts["sup_d0"] == 2.0


def test_linear_function_parts():
    e = holder_norm(grid(lambda x: x[..., 0], num=201), 1)
    assert e.parts["derivative"] == pytest.approx(1.0)
    assert e.parts["ratio"] < 1e-12


def test_second_difference_kills_affine():
    g = GridSamples.from_function(lambda x: 2 * x[..., 0] - x[..., 1] + 3, [-1, -1], [1, 1], 101)
    assert lipschitz_seminorm(g, 1.0).value < 1e-10


def test_abs_kink():
    assert lipschitz_seminorm(grid(lambda x: np.abs(x[..., 0])), 1.0).value == pytest.approx(2.0)


def test_square_bounded_by_closed_form():
    # Delta^2_y x^2 = 2 y^2, so the r = 1 quotient is 2|y| <= 2 for |y| <= 1
    v = lipschitz_seminorm(grid(lambda x: x[..., 0] ** 2), 1.0, max_offset=1.0).value
    assert 1.0 <= v <= 2.0 + 1e-9


def test_lipschitz_r_range():
    with pytest.raises(ValueError):
        lipschitz_seminorm(CUSP, 2.0)


@pytest.mark.parametrize("r", [0.5, 1.25])
@pytest.mark.parametrize("g", [SMOOTH, CUSP], ids=["smooth", "cusp"])
def test_norm_equivalence(g, r):
    a, b = holder_norm(g, r).value, lipschitz_seminorm(g, r).value
    assert 1 / 8 <= a / b <= 8


def test_seed_reproducible():
    a = holder_norm(CUSP, 0.5, budget=5000, seed=7)
    b = holder_norm(CUSP, 0.5, budget=5000, seed=7)
    assert a.value == b.value
    assert lipschitz_seminorm(SMOOTH, 0.5, 5000, 7).value == lipschitz_seminorm(SMOOTH, 0.5, 5000, 7).value


@given(st.integers(0, 1000), st.integers(1, 20))
def test_budget_monotone(seed, k):
    small = holder_norm(CUSP, 0.5, budget=1000 * k, seed=seed).value
    large = holder_norm(CUSP, 0.5, budget=1000 * (k + 3), seed=seed).value
    assert large >= small


def test_dyadic_zero():
    d = dyadic_decompose(GridSamples(np.zeros(50), 0.1), 0.5, 3)
    assert all(np.all(p == 0) for p in d.pieces) and d.A == 0.0


def test_dyadic_reassembles():
    d = dyadic_decompose(SMOOTH, 0.5, 6)
    assert np.max(np.abs(np.sum(d.pieces, axis=0) - SMOOTH.values)) <= 1e-6
    assert len(d.pieces) == 8


def test_dyadic_smooth_decay():
    d = dyadic_decompose(SMOOTH, 0.5, 8)
    ks = np.arange(3, 9)
    slope = np.polyfit(ks, np.log2(d.norms[ks, 0]), 1)[0]
    assert slope <= -0.5


def test_dyadic_cusp_two_exponents():
    # |x|^(1/2) is Lambda_(1/2): A stays put for r = 1/2 and grows for r = 0.8
    A_half = [dyadic_decompose(CUSP, 0.5, K).A for K in (4, 6, 8)]
    A_08 = [dyadic_decompose(CUSP, 0.8, K).A for K in (4, 6, 8)]
    assert max(A_half) / min(A_half) < 1.01
    assert A_08[0] < A_08[1] < A_08[2]


def test_dyadic_drift_error():
    with pytest.raises(ValueError, match="drift"):
        dyadic_decompose(SMOOTH, 0.5, 3, tol=-1.0)


@pytest.mark.parametrize("gamma", [0.25, 0.5, 1.0, 1.5])
def test_synthetic_exponent_recovery(gamma):
    d = 2.0 ** -np.arange(3, 10)
    rng = np.random.default_rng(0)
    vals = 3.0 * d ** gamma * (1 + 0.01 * rng.standard_normal(len(d)))
    fit = boundary_exponent_fit(d, vals, k=0)
    assert abs(fit.slope_ - gamma) <= 0.05
    assert fit.certify(gamma)


def test_boundary_fit_takes_sup_over_rays():
    d = 2.0 ** -np.arange(3, 10)
    rays = np.stack([d ** 0.5, 0.5 * d ** 0.5])
    assert boundary_exponent_fit(d, rays, k=2).slope_ == pytest.approx(0.5)


def test_boundary_fit_needs_scales():
    with pytest.raises(ValueError):
        boundary_exponent_fit([0.1, 0.05, 0.025], [1, 2, 3])
    # values under the floor do not count as scales
    with pytest.raises(ValueError):
        boundary_exponent_fit(2.0 ** -np.arange(3, 10), [1, 1, 0, 0, 0, 0, 0], floor=1e-3)


def test_exponent_fit_api():
    d = 2.0 ** -np.arange(2, 8)
    fit = ExponentFit().fit(d, 2 * d ** -1.0)
    assert fit.slope_ == pytest.approx(-1.0) and fit.residual_ < 1e-12
    assert np.allclose(fit.predict(d), 2 / d)
    assert fit.certify(-1.05, side="above") and not fit.certify(-0.8, side="above")
    assert fit.certify(-1.05, side="below")
    assert fit.to_csv().splitlines()[0] == "scale,value,slope,residual"
    assert len(fit.to_csv().splitlines()) == 7
    with pytest.raises(NotFittedError):
        ExponentFit().predict(d)
