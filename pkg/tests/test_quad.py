import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from dbarlab.geometry import DomainSpec
from dbarlab.quad import (
    ball_volume, boundary_mesh, build_mesh, cauchy_transform_disk, composite_gauss,
    fsum_complex, graded_panels, level_counts, point_graded_shell_mesh,
    projection_constant_growth, scaling_probe_interior, scaling_probe_projection,
    shell_mesh, singular_integrate, singular_stokes_check, sphere_area,
)

BALL2 = DomainSpec("unit-ball", 2)


def _r2(x):
    return np.sum(x * x, axis=-1)


@given(st.floats(0.0, 0.8), st.floats(0.0, 2 * np.pi))
def test_cauchy_transform_of_one_is_conj(r, a):
    z = r * np.exp(1j * a)
    assert abs(cauchy_transform_disk(z, level=4).value - np.conj(z)) <= 1e-3


def test_zero_density_integrates_to_zero():
    res = singular_integrate(lambda x: (1 / x[:, 0], x[:, 0]), 0.0, build_mesh("domain", 0.25))
    assert res.value == 0.0


def test_composite_gauss_polynomial_exact():
    x, w = composite_gauss(graded_panels(0.0, 1.0, 1e-3), 4)
    assert abs(np.sum(w * x ** 5) - 1 / 6) < 1e-14


def test_fsum_complex():
    assert fsum_complex([1e16, 1.0, -1e16]) == 1.0
    assert fsum_complex(np.array([1j, 2 + 0j])) == 2 + 1j


def test_sphere_and_boundary_measure():
    assert abs(boundary_mesh(BALL2, 16, 8).measure - 2 * np.pi ** 2) < 1e-10
    assert sphere_area(2) == pytest.approx(2 * np.pi ** 2)


def test_boundary_mesh_ellipsoid_area_positive():
    m = boundary_mesh(DomainSpec("ellipsoid", 2, (1.0, 0.75)), 16, 8)
    assert np.all(m.weights > 0)
    # the ellipsoid sits inside the unit ball, so its boundary is smaller
    assert m.measure < 2 * np.pi ** 2
    disk = boundary_mesh(DomainSpec("ellipsoid", 1, (0.5,)), 16, 8)
    assert disk.measure == pytest.approx(np.pi, rel=1e-12)


def test_shell_mesh_volume():
    m = shell_mesh(BALL2, 0.1, 16, 8, 4)
    assert m.measure == pytest.approx(ball_volume(2, 1.1) - ball_volume(2), rel=1e-12)


@pytest.mark.parametrize("n", [1, 2])
def test_point_graded_shell_volume(n):
    m = point_graded_shell_mesh(n, 0.1, 1e-3)
    assert m.measure == pytest.approx(ball_volume(n, 1.1) - ball_volume(n), rel=1e-10)


def test_point_graded_shell_rejects_n3():
    with pytest.raises(ValueError):
        point_graded_shell_mesh(3, 0.1, 1e-3)


def test_build_mesh_errors():
    with pytest.raises(ValueError):
        build_mesh("domain", 0.0)
    with pytest.raises(ValueError):
        build_mesh("domain", 2.0)
    with pytest.raises(ValueError):
        build_mesh("nowhere", 0.25)


def test_build_mesh_domain_volume():
    assert build_mesh("domain", 0.25).measure == pytest.approx(ball_volume(2), rel=1e-10)


def test_level_counts():
    assert level_counts(2) == {"angle": 12, "simplex": 6, "radial": 6}


@pytest.mark.parametrize("alpha,beta,target", [(0.0, 0.0, -0.5), (0.75, 1.0, -0.75)])
def test_interior_probe(alpha, beta, target):
    p = scaling_probe_interior(alpha, beta)
    assert p.target == target and p.ok
    assert p.constant == pytest.approx(p.oracle_constant, rel=0.1)


def test_band_probe():
    p = scaling_probe_interior(0.0, 0.0, band=True)
    assert p.target == 1.5 and p.ok


@pytest.mark.parametrize("alpha,n,target", [(0.5, 2, -0.5), (0.25, 3, -0.75)])
def test_projection_probe(alpha, n, target):
    p = scaling_probe_projection(alpha, n)
    assert p.target == target and p.ok
    assert "delta,I,slope" in p.to_csv()


def test_probe_argument_checks():
    with pytest.raises(ValueError):
        scaling_probe_interior(1.0, 0.0)
    with pytest.raises(ValueError):
        scaling_probe_projection(1.0, 2)
    with pytest.raises(ValueError):
        scaling_probe_projection(0.5, 1)


def test_projection_constant_grows():
    consts, scaled, ok = projection_constant_growth()
    assert ok
    # alpha = 1/2 constant against its closed form
    assert consts[0] == pytest.approx(math.pi / 16, rel=1e-5)


def test_stokes_smooth():
    S = lambda x: (1 - _r2(x)) * x[:, 0]
    B = lambda x: np.exp(x[:, 1])
    res, _ = singular_stokes_check(B, S, 1, 0)
    assert res <= 1e-4


def test_stokes_singular_b():
    S = lambda x: 1 - _r2(x)
    B = lambda x: (1 - _r2(x)) ** -0.5 * x[:, 0]
    res, _ = singular_stokes_check(B, S, 1, -0.5)
    assert res <= 1e-3


def test_stokes_rejects_bad_exponents():
    B = lambda x: (1 - _r2(x)) ** -0.5
    with pytest.raises(ValueError, match="m \\+ b"):
        singular_stokes_check(B, lambda x: np.sqrt(1 - _r2(x)), 0.5, -0.5)
    with pytest.raises(ValueError, match="vanish"):
        singular_stokes_check(B, lambda x: np.ones(len(x)), 1, -0.5)
