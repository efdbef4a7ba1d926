import itertools

import numpy as np
import pytest

from dbarlab.cfkernels import (bidegree_split, cf_form, cf_power, component, direct_omega,
                               kernel_components, koppelman_check, omega, omega01,
                               random_pairs)
from dbarlab.forms import FormExpr, ZETA, max_abs, max_abs_diff
from dbarlab.geometry import DomainSpec
from dbarlab.leray import LerayMap, ball_map, bm_map, convex_leray


def comps(z, zeta):
    n = z.shape[-1]
    zc = [z[..., j] for j in range(n)]
    ec = [zeta[..., j] for j in range(n)]
    return zc, [np.conj(c) for c in zc], ec, [np.conj(c) for c in ec]


def scaled(lmap, lam):
    return LerayMap(lmap.name, lmap.n, lambda *a: [lam * g for g in lmap.g(*a)],
                    lambda *a: tuple([[lam * c for c in row] for row in G] for G in lmap.dbar_g(*a)),
                    lmap.holomorphic_in_z)


def test_cauchy_form_n1():
    z, ze = np.array([0.2 + 0.1j]), np.array([0.9 - 0.3j])
    w = cf_form(bm_map(1), *comps(z[None], ze[None]))
    ((m, c),) = w.terms.items()
    w0 = ze[0] - z[0]
    expect = np.conj(w0) / abs(w0) ** 2 / (2j * np.pi)
    assert np.isclose(c[0], expect)


def test_ball_form_at_origin():
    ze = np.array([[0.6 + 0.2j, -0.5j]])
    w = cf_form(ball_map(2), *comps(np.zeros((1, 2)), ze))
    r2 = np.sum(np.abs(ze) ** 2)
    for j in range(2):
        assert np.isclose(w.terms[1 << (2 + j)][0], np.conj(ze[0, j]) / r2 / (2j * np.pi))


def test_power_zero_is_form():
    z, ze = random_pairs(2, 10, seed=1)
    a = cf_power(ball_map(2), 0, *comps(z, ze))
    b = cf_form(ball_map(2), *comps(z, ze))
    assert max_abs_diff(a, b) == 0


@pytest.mark.parametrize("n", [2, 3])
def test_closed_form_matches_direct_construction(n):
    z, ze = random_pairs(n, 100, seed=2)
    for lm in (bm_map(n), ball_map(n)):
        a = omega(lm, *comps(z, ze))
        b = direct_omega(lm, z, ze)
        scale = max_abs(a)
        assert max_abs_diff(a, b) <= 1e-10 * scale


@pytest.mark.parametrize("lam", [-2.0, 0.5, 3.0])
def test_homogeneity(lam):
    n = 2
    z, ze = random_pairs(n, 100, seed=3)
    for lm in (bm_map(n), ball_map(n), convex_leray(DomainSpec("ellipsoid", 2, (1, 0.5)))):
        a = omega(lm, *comps(z, ze))
        b = omega(scaled(lm, lam), *comps(z, ze))
        assert max_abs_diff(a, b) <= 1e-10 * max_abs(a)
        assert max_abs_diff(cf_form(lm, *comps(z, ze)),
                            cf_form(scaled(lm, lam), *comps(z, ze))) <= 1e-12 * max_abs(a)


def test_n1_kernel_is_form():
    z, ze = random_pairs(1, 10, seed=4)
    assert max_abs_diff(omega(bm_map(1), *comps(z, ze)), cf_form(bm_map(1), *comps(z, ze))) == 0


def test_omega01_small_n():
    z, ze = random_pairs(1, 5, seed=5)
    assert omega01(bm_map(1), ball_map(1), *comps(z, ze)).terms == {}
    z, ze = random_pairs(2, 5, seed=5)
    a = omega01(bm_map(2), ball_map(2), *comps(z, ze))
    head = cf_form(bm_map(2), *comps(z, ze)).wedge(cf_form(ball_map(2), *comps(z, ze)))
    assert max_abs_diff(a, head) <= 1e-12 * max_abs(head)


def _predicted_gradings(family, n):
    """Brute force: which (dzbar, dzeta, dzetabar) triples can occur."""
    out = set()
    if family == "omega01":
        total_bar = n - 2
    else:
        total_bar = n - 1
    for a in range(total_bar + 1):
        out.add((a, n, total_bar - a))
    return out


@pytest.mark.parametrize("n", [2, 3])
def test_grading_enumeration(n):
    z, ze = random_pairs(n, 3, seed=6)
    args = comps(z, ze)
    K = omega01(bm_map(n), ball_map(n), *args)
    got = {K.grading(m) for m in K.terms}
    assert got <= _predicted_gradings("omega01", n)
    K0 = omega(bm_map(n), *args)
    assert {K0.grading(m) for m in K0.terms} == _predicted_gradings("omega", n)


def test_ball_map_has_no_zbar_terms():
    z, ze = random_pairs(2, 5, seed=7)
    K = omega(ball_map(2), *comps(z, ze))
    split = bidegree_split(K)
    assert set(split) == {0}
    assert component(K, -1).terms == {}


def test_bm_components_present():
    z, ze = random_pairs(2, 5, seed=8)
    split = bidegree_split(omega(bm_map(2), *comps(z, ze)))
    assert set(split) == {0, 1}


def test_reassembly():
    z, ze = random_pairs(3, 100, seed=9)
    K = omega(bm_map(3), *comps(z, ze))
    total = FormExpr(3)
    for part in bidegree_split(K).values():
        total = total + part
    assert max_abs_diff(total, K) == 0


def test_component_grading_checks():
    z, ze = random_pairs(3, 4, seed=10)
    for kc in kernel_components(bm_map(3), ball_map(3), *comps(z, ze)):
        assert kc.check_grading()


def test_koppelman_n1_bm():
    z, ze = random_pairs(1, 100, seed=11)
    r1, r2 = koppelman_check(bm_map(1), bm_map(1), z, ze)
    assert max(r1.values()) <= 1e-8


@pytest.mark.parametrize("n", [1, 2, 3])
def test_koppelman_all_maps(n):
    ball = DomainSpec("unit-ball", n)
    ell = DomainSpec("ellipsoid", n, [1.0] + [0.75] * (n - 1))
    for spec, lm in ((ball, ball_map(n)), (ell, convex_leray(ell))):
        z, ze = random_pairs(spec, 100, seed=12)
        r1, r2 = koppelman_check(bm_map(n), lm, z, ze)
        assert max(r1.values()) <= 1e-6 and max(r2.values()) <= 1e-6


def test_koppelman_dual_matches_fd():
    z, ze = random_pairs(2, 20, seed=13)
    d1, d2 = koppelman_check(bm_map(2), ball_map(2), z, ze, mode="dual")
    f1, f2 = koppelman_check(bm_map(2), ball_map(2), z, ze, mode="fd")
    assert max(f2.values()) <= 1e-4 and max(d2.values()) <= 1e-10


def test_diagonal_rejected():
    z = np.array([[0.1, 0.2]])
    with pytest.raises(ValueError):
        koppelman_check(bm_map(2), ball_map(2), z, z.copy())
