import numpy as np
import pytest
from hypothesis import given, strategies as st

from conftest import interior_points
from dbarlab.geometry import DomainSpec
from dbarlab.homotopy import (
    HomotopySolver, MixedForm, StarBox, ZForm, canonical_index, cusp_form, dbar_of,
    insert_index, interior_mask, mesh_spacing, mixed_split, poincare_Rq, poincare_residual,
    solve_D_complex, solve_Hq, theta_rule, volume_constant,
)
from dbarlab.homotopy.rates import BoundaryRate

BALL2 = DomainSpec("unit-ball", 2)


@given(st.permutations([0, 1, 2, 3]))
def test_canonical_index_sign(perm):
    J, s = canonical_index(perm)
    assert J == (0, 1, 2, 3)
    inversions = sum(1 for a in range(4) for b in range(a + 1, 4) if perm[a] > perm[b])
    assert s == (-1) ** inversions


def test_canonical_index_repeat():
    assert canonical_index((1, 1))[1] == 0


def test_insert_index():
    assert insert_index(1, (0, 2)) == ((0, 1, 2), -1)
    assert insert_index(0, (1,)) == ((0, 1), 1)
    assert insert_index(1, (1,)) == (None, 0)


def test_zform_validation():
    with pytest.raises(ValueError):
        ZForm(2, 3, {})
    with pytest.raises(ValueError):
        ZForm(2, 1, {(2,): lambda z: z[..., 0]})
    with pytest.raises(ValueError):
        ZForm(2, 1, {(0, 1): lambda z: z[..., 0]})


def test_zform_canonicalizes_and_merges():
    one = lambda z: np.ones(z.shape[:-1])
    f = ZForm(2, 2, {(1, 0): one, (0, 1): one, (0, 0): one})
    Z = np.zeros((3, 2), dtype=complex)
    # dzbar_2 ^ dzbar_1 = -dzbar_1 ^ dzbar_2 cancels the other term
    assert np.allclose(f.evaluate(Z)[(0, 1)], 0.0)


def test_zform_dbar_fd_and_analytic():
    Z = interior_points(2, 5)
    f = ZForm(2, 0, {(): lambda z: np.conj(z[..., 0]) * z[..., 1]})
    d = f.dbar().evaluate(Z)
    assert np.allclose(d[(0,)], Z[:, 1], atol=1e-9)
    assert np.allclose(d[(1,)], 0.0, atol=1e-9)
    g = ZForm(2, 1, {(0,): lambda z: np.conj(z[..., 1])})
    # dzbar_2 ^ dzbar_1 = -dzbar_1 ^ dzbar_2
    assert np.allclose(g.dbar().evaluate(Z)[(0, 1)], -1.0, atol=1e-9)
    assert ZForm(2, 2, {}).dbar() is None


def test_zform_add_and_scale():
    Z = interior_points(2, 4)
    f = ZForm(2, 1, {(0,): lambda z: z[..., 0]})
    g = (f + f.scale(2.0)).evaluate(Z)[(0,)]
    assert np.allclose(g, 3 * Z[:, 0])
    with pytest.raises(ValueError):
        f + ZForm(2, 0, {})


def test_dbar_of():
    g = {(): np.array([[1.0, 2.0]])}
    assert dbar_of(g, 2) == {(0,): 1.0 * np.array([1.0]), (1,): np.array([2.0])}


def test_volume_constant():
    assert volume_constant(1) == -2j
    assert volume_constant(2) == pytest.approx(4.0)


def test_interior_mask_monotone_in_level():
    Z = np.array([[0.0, 0.0], [0.85, 0.0], [0.95, 0.0]], dtype=complex)
    assert mesh_spacing(2) == pytest.approx(1 / 6)
    m2, m4 = interior_mask(BALL2, Z, 2), interior_mask(BALL2, Z, 4)
    assert list(m2) == [True, False, False]
    assert np.all(m4 >= m2)


def test_mixed_form_degree_and_split():
    one = lambda z, t: np.ones(np.shape(z)[:-1])
    with pytest.raises(ValueError):
        MixedForm(2, 1, 2, {((0,), ()): one})
    with pytest.raises(ValueError):
        MixedForm(2, 1, 1, {((), (1,)): one})
    phi = MixedForm(2, 1, 1, {((0,), ()): one, ((), (0,)): one})
    parts = mixed_split(phi)
    assert [list(p.coeffs) for p in parts] == [[((), (0,))], [((0,), ())]]
    zf = phi.zform((), np.array([0.2]))
    assert zf.q == 1 and zf.indices == [(0,)]


def test_star_box():
    with pytest.raises(ValueError):
        StarBox((0.0,), (0.0,))
    with pytest.raises(ValueError):
        StarBox((0.1,), (1.0,)).check_star()
    S = StarBox.cube(2, 0.5)
    assert S.m == 2
    assert list(S.contains([[0.1, -0.4], [0.6, 0.0]])) == [True, False]


def test_theta_rule():
    with pytest.raises(ValueError):
        theta_rule(3)
    th, w = theta_rule(6)
    assert np.all((th > 0) & (th < 1))
    assert abs(np.sum(w * th ** 7) - 1 / 8) < 1e-14


def test_poincare_rq_of_exact_one_form():
    # R_1 of d(t1 t2) recovers t1 t2 since it vanishes at 0
    T = np.array([[0.3, -0.4], [0.7, 0.2]])
    coeffs = {(0,): lambda t: t[..., 1], (1,): lambda t: t[..., 0]}
    out = poincare_Rq(coeffs, 1, T)
    assert np.allclose(out[()], T[:, 0] * T[:, 1], atol=1e-14)
    with pytest.raises(ValueError):
        poincare_Rq(coeffs, 0, T)
    with pytest.raises(ValueError):
        poincare_Rq(coeffs, 2, T)


@given(st.lists(st.floats(-0.9, 0.9), min_size=3, max_size=3))
def test_poincare_identity(t):
    T = np.array([t])
    coeffs = {(0, 2): lambda s: s[..., 1] ** 2 + s[..., 0] * s[..., 2]}
    assert poincare_residual(coeffs, 2, 3, T) < 1e-9


def test_d_complex_argument_checks():
    one = lambda z, t: np.ones(np.shape(z)[:-1])
    phi = MixedForm(2, 1, 1, {((0,), ()): one}, smoothness=("C1",))
    Z = interior_points(2, 2)
    with pytest.raises(ValueError):
        solve_D_complex(phi, BALL2, Z, [[0.1]], variant="bogus")
    with pytest.raises(ValueError, match="C11"):
        solve_D_complex(phi, BALL2, Z, [[0.1]], variant="T")
    with pytest.raises(ValueError, match="outside"):
        solve_D_complex(phi, BALL2, Z, [[1.5]], variant="T-tilde")
    with pytest.raises(ValueError):
        solve_D_complex(phi, DomainSpec("unit-ball", 1), Z[:, :1], [[0.1]], variant="T-tilde")


def test_solver_argument_checks():
    f = ZForm(2, 0, {(): lambda z: z[..., 0]})
    with pytest.raises(ValueError):
        HomotopySolver(BALL2, operator="Hq").fit(f)
    with pytest.raises(ValueError):
        HomotopySolver(BALL2, operator="nope").fit(f)
    with pytest.raises(TypeError):
        HomotopySolver(BALL2).fit("not a form")
    with pytest.raises(ValueError):
        HomotopySolver(BALL2, operator="top").fit(ZForm(2, 1, {}))


def test_hq_solves_on_ball():
    # a dbar-exact input: dbar(conj(z1) z2) = z2 dzbar1
    u0 = ZForm(2, 0, {(): lambda z: np.conj(z[..., 0]) * z[..., 1]})
    rep = solve_Hq(u0.dbar(), BALL2, interior_points(2, 4, radius=0.4), level=3)
    assert rep.residual_max < 1e-2
    assert "re_z1" in rep.to_csv()


def test_cusp_form_partials():
    f = cusp_form(2, 1.25)
    Z = interior_points(2, 4)
    for k in range(2):
        fd = ZForm(2, 1, {(0,): f.coeffs[(0,)]}).partial((0,), k)(Z)
        assert np.allclose(f.partial((0,), k)(Z), fd, atol=1e-7)


def test_boundary_rate_argument_checks():
    with pytest.raises(ValueError):
        BoundaryRate("H0").fit(ZForm(2, 1, {}))
    with pytest.raises(ValueError):
        BoundaryRate("commutator").fit(ZForm(2, 0, {}))
    with pytest.raises(ValueError):
        BoundaryRate("H0", n=2).fit(ZForm(1, 0, {}))
