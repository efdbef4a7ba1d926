import warnings

import numpy as np
import pytest
from hypothesis import given, strategies as st

from dbarlab.geometry import (DomainSpec, TubeRegion, build_charts, distance_and_region,
                              eval_defining, gauge, levi_check, radial_function,
                              regularize_defining, signed_distance)
from dbarlab.normlab import ExponentFit

BALL2 = DomainSpec("unit-ball", 2)
ELL = DomainSpec("ellipsoid", 2, (1.0, 0.5))


def test_ball_centre():
    r, d, L = eval_defining(BALL2, [0, 0])
    assert r == -1
    assert np.allclose(d, 0) and np.allclose(L, np.eye(2))


def test_ball_boundary_gradient():
    r, d, L = eval_defining(BALL2, [1, 0])
    assert r == 0
    assert np.allclose(d, [1, 0]) and np.allclose(L, np.eye(2))


def test_ellipsoid_values():
    r, d, L = eval_defining(ELL, [0, 0.5])
    assert abs(r) < 1e-15
    assert np.allclose(d, [0, 2]) and np.allclose(L, np.diag([1, 4]))


def test_non_finite_rejected():
    with pytest.raises(ValueError, match="non-finite"):
        eval_defining(BALL2, [np.nan, 0])


def test_invalid_specs():
    with pytest.raises(ValueError):
        DomainSpec("ellipsoid", 2, (1.0, -1.0))
    with pytest.raises(ValueError):
        DomainSpec("torus", 2)


def test_spec_json_round_trip():
    assert DomainSpec.from_json(ELL.to_json()) == ELL


def test_ball_distances():
    d, f = distance_and_region(BALL2, np.array([[0.5, 0]]), 0.2)
    assert d[0] == pytest.approx(0.5) and f["inside"][0]
    assert TubeRegion(0.4, "inner").contains(BALL2, np.array([[0.5, 0]]))[0]
    d, f = distance_and_region(BALL2, np.array([[1.2, 0]]), 0.2)
    assert d[0] == pytest.approx(0.2)
    assert TubeRegion(0.3, "shell").contains(BALL2, np.array([[1.2, 0]]))[0]


def test_delta_out_of_range():
    with pytest.raises(ValueError):
        distance_and_region(BALL2, np.zeros((1, 2)), 0.5)


def test_ellipsoid_distance_matches_dense_sampling():
    spec = DomainSpec("ellipsoid", 2, (1.0, 0.5))
    z = np.array([[0, 0.6]])
    d = signed_distance(spec, z)[0]
    # the point lies in the slice (Re z1, Re z2); sample that ellipse densely
    s = np.linspace(0, 2 * np.pi, 2_000_001)
    brute = np.min(np.hypot(np.cos(s), 0.5 * np.sin(s) - 0.6))
    assert d == pytest.approx(brute, abs=1e-6)
    # and the full boundary never comes closer
    rng = np.random.default_rng(0)
    th = rng.normal(size=(100000, 2)) + 1j * rng.normal(size=(100000, 2))
    th /= np.linalg.norm(th, axis=1, keepdims=True)
    pts = radial_function(spec, th)[:, None] * th
    assert np.min(np.linalg.norm(pts - z, axis=1)) >= d - 1e-12


@pytest.mark.parametrize("z, d", [([0, 0], 0.5), ([0.3, 0], 0.5 * np.sqrt(1 - 0.3 ** 2 / 0.75)),
                                  ([0, 0.2], 0.3)])
def test_ellipsoid_interior_distance(z, d):
    # nearest points of x^2 + 4y^2 = 1 from interior points on the axes
    spec = DomainSpec("ellipsoid", 2, (1.0, 0.5))
    assert -signed_distance(spec, np.array([z]))[0] == pytest.approx(d, abs=1e-10)


@given(st.floats(-1.5, 1.5), st.floats(-1.5, 1.5), st.floats(-1.5, 1.5), st.floats(-1.5, 1.5))
def test_signed_distance_sign_matches_rho(a, b, c, e):
    z = np.array([[a + 1j * b, c + 1j * e]])
    sd = signed_distance(ELL, z)[0]
    r = eval_defining(ELL, z)[0][0]
    if abs(r) > 1e-9:
        assert (sd < 0) == (r < 0)


@given(st.floats(0.05, 1.9), st.floats(0, 2 * np.pi))
def test_gauge_is_radial_ratio(mu, ang):
    th = np.array([[np.cos(ang), 1j * np.sin(ang)]])
    for spec in (BALL2, ELL, DomainSpec("graph-perturbation", 2, (0.02, 2.0))):
        R = radial_function(spec, th)[0]
        assert gauge(spec, mu * R * th)[0] == pytest.approx(mu, rel=1e-9)


def test_levi_positive_on_models():
    assert levi_check(BALL2) > 0
    assert levi_check(ELL) > 0
    assert levi_check(DomainSpec("graph-perturbation", 2, (0.02, 2.0))) > 0


def test_regularized_equals_exp_inside():
    spec = DomainSpec("unit-ball", 1)
    rho = regularize_defining(spec)
    x = np.array([[0.0, 0.0], [0.3, -0.4], [0.7, 0.1]])
    r2 = np.sum(x ** 2, axis=1)
    assert np.allclose(rho(x), np.exp(r2 - 1) - 1, atol=1e-14, rtol=0)
    assert rho(x[:1])[0] == pytest.approx(np.exp(-1) - 1)


def test_regularized_third_derivative_growth():
    spec = DomainSpec("unit-ball", 1)
    rho = regularize_defining(spec)
    ds = 2.0 ** -np.arange(3, 9)
    U = np.random.default_rng(0).uniform(size=(600, 2))
    ang = 2 * np.pi * U[:, 1]
    dirs = [np.array([1.0, 0]), np.array([0, 1.0]), np.array([0.6, 0.8])]
    sups = []
    for d in ds:
        # the band d <= dist <= 2d; blending zones between cubes carry the sup
        x = (1 + d * (1 + U[:, :1])) * np.stack([np.cos(ang), np.sin(ang)], axis=1)
        sups.append(max(np.max(np.abs(rho.directional(x, v, 3))) for v in dirs))
    assert ExponentFit().fit(ds, sups).slope_ >= -1 - 0.15


def test_charts_cover_and_bound():
    z = 0.9 * np.array([1.0, 0.0])
    charts = build_charts(BALL2, z, samples=2000)
    assert len(charts) == 8
    assert all(ch.c_star > 0 for ch in charts)
    rng = np.random.default_rng(1)
    g = rng.normal(size=(500, 2)) + 1j * rng.normal(size=(500, 2))
    g /= np.linalg.norm(g, axis=1, keepdims=True)
    covered = np.any([ch.in_patch(g) for ch in charts], axis=0)
    assert covered.all()


def test_disk_chart_has_no_tangential_part():
    spec = DomainSpec("unit-ball", 1)
    charts = build_charts(spec, np.array([0.5]), samples=500)
    _, _, t = charts[0].coords(np.array([0.5]), np.array([[1.05]]))
    assert t.shape[-1] == 0
