import itertools
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, strategies as st

from dbarlab import autodiff as ad
from dbarlab.forms import ZBAR, ZETA, ZETABAR, FormExpr, signed_pullback_rule, wedge_sign


def test_repeated_generator_vanishes():
    a = FormExpr.gen(2, ZBAR, 0)
    assert a.wedge(a).terms == {}


def test_anticommuting_generators():
    a, b = FormExpr.gen(2, ZBAR, 0), FormExpr.gen(2, ZBAR, 1)
    assert a.wedge(b).terms == (-b.wedge(a)).terms


def test_mixed_one_forms():
    f, g = 3.0, 5.0
    w = FormExpr.gen(1, ZETA, 0, f).wedge(FormExpr.gen(1, ZETABAR, 0, g))
    ((m, c),) = w.terms.items()
    assert c == f * g and w.grading(m) == (0, 1, 1)
    w2 = FormExpr.gen(1, ZETABAR, 0, g).wedge(FormExpr.gen(1, ZETA, 0, f))
    assert w2.terms[m] == -f * g


def rational_form(draw_coefs, n=2):
    return FormExpr(n, draw_coefs)


forms = st.dictionaries(st.integers(1, 2 ** 6 - 1),
                        st.fractions(min_value=-5, max_value=5, max_denominator=7),
                        max_size=4).map(lambda d: FormExpr(2, d))


def _eq(a, b):
    keys = set(a.terms) | set(b.terms)
    return all(a.terms.get(k, 0) == b.terms.get(k, 0) for k in keys)


@given(forms, forms, forms)
def test_wedge_associative(a, b, c):
    assert _eq(a.wedge(b).wedge(c), a.wedge(b.wedge(c)))


@given(forms, forms)
def test_graded_commutativity_on_homogeneous_parts(a, b):
    for ma, ca in a.terms.items():
        for mb, cb in b.terms.items():
            x, y = FormExpr(2, {ma: ca}), FormExpr(2, {mb: cb})
            p, q = bin(ma).count("1"), bin(mb).count("1")
            assert _eq(x.wedge(y), y.wedge(x).scale((-1) ** (p * q)))


def test_wedge_sign_brute_force():
    for a, b in itertools.product(range(16), repeat=2):
        if a & b:
            assert wedge_sign(a, b) == 0
            continue
        seq = [i for i in range(4) if a >> i & 1] + [i for i in range(4) if b >> i & 1]
        inv = sum(1 for i in range(len(seq)) for j in range(i + 1, len(seq)) if seq[i] > seq[j])
        assert wedge_sign(a, b) == (-1) ** inv


@pytest.mark.parametrize("dim, sign", [(4, 1), (3, -1), (5, -1), (1, -1)])
def test_pullback_sign(dim, sign):
    assert signed_pullback_rule(dim) == sign


def test_n_out_of_range():
    with pytest.raises(ValueError):
        FormExpr(5)


# autodiff

@given(st.complex_numbers(max_magnitude=2), st.complex_numbers(max_magnitude=2))
def test_jet_wirtinger_product(a, b):
    wj, wbj = ad.Jet.variables(np.array([a, b]))
    f = wj[0] * wbj[0] * wj[1] + ad.exp(wbj[1])
    # d/dw1 = wbar1 w2, d/dwbar1 = w1 w2, d/dw2 = |w1|^2, d/dwbar2 = exp(wbar2)
    expect = [np.conj(a) * b, a * np.conj(a), a * b, np.exp(np.conj(b))]
    assert np.allclose(f.der[[0, 1, 2, 3]], [expect[0], expect[1], expect[2], expect[3]])


def test_jet_reciprocal_and_conj():
    wj, wbj = ad.Jet.variables(np.array([0.3 + 0.4j]))
    r = wj[0].reciprocal()
    assert np.isclose(r.der[0], -1 / (0.3 + 0.4j) ** 2)
    c = ad.conj(wj[0])
    assert np.isclose(c.der[1], 1) and np.isclose(c.der[0], 0)


@given(st.floats(-1, 1), st.floats(0.1, 2))
def test_taylor_line_derivatives(x0, v):
    t = ad.Taylor.line(x0, v, 4)
    f = ad.exp(t) * ad.sin(t) + ad.sqrt(t * t + 1.0)
    # oracle: repeated differentiation of the closed form along x0 + s v
    s = 1e-3
    g = lambda u: np.exp(x0 + u * v) * np.sin(x0 + u * v) + np.sqrt((x0 + u * v) ** 2 + 1)
    d2 = (g(s) - 2 * g(0) + g(-s)) / s ** 2
    assert f.derivative(0) == pytest.approx(g(0))
    assert f.derivative(2) == pytest.approx(d2, rel=1e-4, abs=1e-4)


def test_taylor_log_exp_inverse():
    t = ad.Taylor.line(0.7, 1.3, 5)
    back = ad.log(ad.exp(t))
    assert np.allclose(back.coef, t.coef)


def test_fraction_coefficients_stay_exact():
    a = FormExpr.gen(2, ZBAR, 0, Fraction(1, 3))
    b = FormExpr.gen(2, ZETA, 1, Fraction(3, 2))
    assert list(a.wedge(b).terms.values()) == [Fraction(1, 2)]
