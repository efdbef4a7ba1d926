"""Poincare operator R_q on star-shaped S and the D = dbar + d_t solvers T and T-tilde."""

from __future__ import annotations

import time
from dataclasses import dataclass

import numpy as np
from numpy.polynomial import legendre

from .solver import HomotopySolver, SolveReport, interior_mask, _residual_stats
from .zform import FD_STENCIL, MixedForm, ZForm, canonical_index, insert_index

MIN_THETA = 4


@dataclass
class StarBox:
    """Box prod [lo_j, hi_j] in R^m; star-shaped about 0 iff it contains 0."""

    lo: tuple
    hi: tuple

    def __post_init__(self):
        self.lo = tuple(float(a) for a in self.lo)
        self.hi = tuple(float(b) for b in self.hi)
        if len(self.lo) != len(self.hi) or any(a >= b for a, b in zip(self.lo, self.hi)):
            raise ValueError("box bounds must satisfy lo < hi componentwise")

    @classmethod
    def cube(cls, m, half=1.0):
        return cls((-half,) * m, (half,) * m)

    @property
    def m(self):
        return len(self.lo)

    def check_star(self):
        if not all(a <= 0.0 <= b for a, b in zip(self.lo, self.hi)):
            raise ValueError("S is not star-shaped about 0 (theta S must lie in S)")

    def contains(self, T):
        T = np.asarray(T, dtype=float)
        return np.all((T >= np.array(self.lo)) & (T <= np.array(self.hi)), axis=-1)


def theta_rule(n_theta):
    if n_theta < MIN_THETA:
        raise ValueError(f"need at least {MIN_THETA} Gauss theta nodes")
    x, w = legendre.leggauss(n_theta)
    return 0.5 * (x + 1), 0.5 * w


def _contract(J, T):
    """sum_j (-1)^j t_{J_j} dt^{J minus J_j} as list of (J', sign, axis)."""
    out = []
    for j, idx in enumerate(J):
        out.append((J[:j] + J[j + 1:], (-1) ** j, idx))
    return out


def poincare_Rq(coeffs, q, T, S=None, n_theta=8):
    """R_q of the t-form sum_J f_J dt^J (|J| = q) at the rows of T.

    ``coeffs`` maps index tuples to callables f(t) with t of shape (..., m).
    Returns a dict J' -> values for the (q-1)-form.
    """
    if q < 1:
        raise ValueError("R_q needs q >= 1")
    T = np.atleast_2d(np.asarray(T, dtype=float))
    if S is not None:
        S.check_star()
    th, w = theta_rule(n_theta)
    out = {}
    for J, f in coeffs.items():
        J0 = tuple(J)
        J, s = canonical_index(J0)
        if s == 0:
            continue
        if len(J) != q:
            raise ValueError(f"index {J0} has degree {len(J)}, expected {q}")
        integral = sum(wk * tk ** (q - 1) * np.asarray(f(tk * T)) for tk, wk in zip(th, w))
        for Jp, sg, ax in _contract(J, T):
            out[Jp] = out.get(Jp, 0.0) + s * sg * T[:, ax] * integral
    return out


def d_t(coeffs, m, h=1e-3):
    """d^0 of a t-form given by callables: dict J -> callable (5-point stencil)."""
    out = {}
    for J, f in coeffs.items():
        for k in range(m):
            Jn, s = insert_index(k, tuple(J))
            if s == 0:
                continue

            def g(t, f=f, k=k, s=s):
                t = np.asarray(t, dtype=float)
                e = np.zeros(t.shape[-1])
                e[k] = h
                return s * sum(wt * np.asarray(f(t + st * e)) for st, wt in FD_STENCIL) / h

            out.setdefault(Jn, []).append(g)
    return {J: (lambda t, fs=fs: sum(g(t) for g in fs)) for J, fs in out.items()}


def poincare_residual(coeffs, q, m, T, n_theta=8, h=1e-3):
    """max |d R_q phi + R_{q+1} d phi - phi| at the rows of T."""
    T = np.atleast_2d(np.asarray(T, dtype=float))

    def R(t):
        return poincare_Rq(coeffs, q, t, n_theta=n_theta)

    keys = {}
    for J in poincare_Rq(coeffs, q, T[:1], n_theta=n_theta):
        keys[J] = (lambda t, J=J: R(t).get(J, np.zeros(len(np.atleast_2d(t)))))
    first = {J: v(T) for J, v in d_t(keys, m, h).items()}
    dphi = d_t(coeffs, m, h)
    second = poincare_Rq(dphi, q + 1, T, n_theta=n_theta) if dphi and q < m else {}
    worst = 0.0
    allJ = set(first) | set(second) | {canonical_index(J)[0] for J in coeffs}
    for J in allJ:
        ref = 0.0
        for J0, f in coeffs.items():
            Jc, s = canonical_index(J0)
            if Jc == J:
                ref = ref + s * np.asarray(f(T))
        r = first.get(J, 0.0) + second.get(J, 0.0) - ref
        worst = max(worst, float(np.max(np.abs(r))))
    return worst


# ---------------------------------------------------------------------------
# D-complex

def _dt_callable(f, k, h):
    def g(z, t):
        t = np.asarray(t, dtype=float)
        e = np.zeros(t.shape[-1])
        e[k] = h
        return sum(wt * np.asarray(f(z, t + st * e)) for st, wt in FD_STENCIL) / h
    return g


def _zform(phi: MixedForm, J, t, deriv=None):
    """z-form sum_I a_IJ(., t) dzbar^I, or its t_deriv-derivative."""
    coeffs = {}
    for (I, J2), f in phi.coeffs.items():
        if J2 != tuple(J):
            continue
        g = f if deriv is None else _dt_callable(f, deriv, phi.h_fd)
        coeffs[I] = (lambda z, g=g: g(z, np.broadcast_to(t, np.shape(z)[:-1] + t.shape)))
    return ZForm(phi.n, phi.k - len(J), coeffs, h_fd=phi.h_fd)


class _Hcache:
    """Apply H_i to z-forms at a fixed list of targets, memoized by key."""

    def __init__(self, spec, Z, level, leray):
        self.spec, self.Z, self.level, self.leray = spec, Z, level, leray
        self.memo = {}

    def __call__(self, key, form: ZForm):
        if key in self.memo:
            return self.memo[key]
        n = self.spec.n
        from itertools import combinations
        outdeg = max(form.q - 1, 0)
        idx = list(combinations(range(n), outdeg))
        N = len(self.Z)
        if not form.coeffs:
            res = ({I: np.zeros(N, dtype=complex) for I in idx},
                   {I: np.zeros((N, n), dtype=complex) for I in idx})
        else:
            op = "H0" if form.q == 0 else "Hq"
            s = HomotopySolver(self.spec, op, self.level, self.leray).fit(form)
            vals, grads, _, _ = s.solve(self.Z, deriv=True)
            res = (vals, grads)
        self.memo[key] = res
        return res


def _acc(store, key, shape):
    if key not in store:
        store[key] = np.zeros(shape, dtype=complex)
    return store[key]


def solve_D_complex(phi: MixedForm, spec, Z, T, variant="T", level=3, leray="auto", S=None,
                    n_theta=MIN_THETA, seed=0):
    """u = T_q phi or T-tilde_q phi on the product grid Z x T and the residual D u - phi.

    The residual is meaningful for D-closed phi.  z-derivatives of the H
    terms come from kernel differentiation, t-derivatives from applying
    H to central differences of the coefficients (H commutes with d/dt).
    """
    t0 = time.perf_counter()
    if variant not in ("T", "T-tilde"):
        raise ValueError("variant must be 'T' or 'T-tilde'")
    need = "C11" if variant == "T" else "C1"
    if need not in phi.smoothness:
        raise ValueError(f"variant {variant} needs smoothness tag {need!r} on the input")
    S = S or StarBox.cube(phi.m)
    S.check_star()
    if phi.n != spec.n:
        raise ValueError("form and domain dimensions differ")
    Z = np.atleast_2d(np.asarray(Z, dtype=complex))
    T = np.atleast_2d(np.asarray(T, dtype=float))
    if not np.all(S.contains(T)):
        raise ValueError("t points outside S")
    n, m, q = phi.n, phi.m, phi.k
    Nz, Nt = len(Z), len(T)
    shape = (Nz, Nt)
    th, wth = theta_rule(n_theta)
    H = _Hcache(spec, Z, level, leray)
    u, uz, ut = {}, {}, {}

    def add(I, J, sign, val, gz, gt):
        key = (tuple(I), tuple(J))
        _acc(u, key, shape)[...] += sign * val
        _acc(uz, key, shape + (n,))[...] += sign * gz
        _acc(ut, key, shape + (m,))[...] += sign * gt

    Js = sorted({J for (_, J) in phi.coeffs})
    if variant == "T":
        # sum_{i>0} H_i [phi]_i
        for J in Js:
            i = q - len(J)
            if i == 0 or i > n:
                continue
            for b, t in enumerate(T):
                tk = tuple(np.round(t, 15))
                vals, grads = H(("H", J, tk, None), _zform(phi, J, t))
                dts = [H(("H", J, tk, k), _zform(phi, J, t, k))[0] for k in range(m)]
                for I, v in vals.items():
                    gt = np.stack([d[I] for d in dts], axis=-1) if m else np.zeros((Nz, 0))
                    add(I, J, 1.0, _col(v, b, Nt), _col(grads[I], b, Nt), _col(gt, b, Nt))
        # R_q H_0 [phi]_0
        zeroJ = [J for J in Js if len(J) == q]
        for J in zeroJ:
            for b, t in enumerate(T):
                G = np.zeros(Nz, dtype=complex)
                Gz = np.zeros((Nz, n), dtype=complex)
                Gt = np.zeros((Nz, m), dtype=complex)
                for tk, wk in zip(th, wth):
                    s = tk * t
                    key = tuple(np.round(s, 15))
                    v, g = H(("H0", J, key, None), _zform(phi, J, s))
                    G += wk * tk ** (q - 1) * v[()]
                    Gz += wk * tk ** (q - 1) * g[()]
                    for k in range(m):
                        dv, _ = H(("H0", J, key, k), _zform(phi, J, s, k))
                        Gt[:, k] += wk * tk ** q * dv[()]
                for Jp, sg, ax in _contract(J, None):
                    gt = t[ax] * Gt
                    gt[:, ax] += G
                    add((), Jp, sg, _col(t[ax] * G, b, Nt), _col(t[ax] * Gz, b, Nt),
                        _col(gt, b, Nt))
    else:
        # H_q [phi]_q (., 0)
        if q <= n:
            t0v = np.zeros(m)
            vals, grads = H(("H", (), (0.0,) * m, None), _zform(phi, (), t0v))
            for I, v in vals.items():
                add(I, (), 1.0, _col(v, None, Nt), _col(grads[I], None, Nt),
                    np.zeros(shape + (m,)))
        # sum_{i<q} R_{q-i} [phi]_i, explicit in (z, t)
        for (I, J), f in phi.coeffs.items():
            if len(J) == 0:
                continue
            sgn_in = (-1) ** (len(I) * len(J))
            p = len(J)

            def R_val(zz, tt, f=f, p=p):
                return sum(wk * tk ** (p - 1) * np.asarray(f(zz, tk * tt), dtype=complex)
                           for tk, wk in zip(th, wth))

            for Jp, sg, ax in _contract(J, None):
                sgn_out = (-1) ** (len(I) * len(Jp))
                sign = sgn_in * sg * sgn_out

                def coef(zz, tt, ax=ax):
                    return tt[..., ax] * R_val(zz, tt)

                val, gz, gt = _explicit_derivs(coef, Z, T, n, m, phi.h_fd)
                add(I, Jp, sign, val, gz, gt)

    # D u = sum_k dzbar_k ^ d_k u + sum_m dt_m ^ d_m u
    Du = {}
    for (I, J), v in u.items():
        for k in range(n):
            I2, s = insert_index(k, I)
            if s:
                _acc(Du, (I2, J), shape)[...] += s * uz[(I, J)][..., k]
        for k in range(m):
            J2, s = insert_index(k, J)
            if s:
                _acc(Du, (I, J2), shape)[...] += s * (-1) ** len(I) * ut[(I, J)][..., k]
    ZZ = np.repeat(Z, Nt, axis=0)
    TT = np.tile(T, (Nz, 1))
    ref = {key: np.asarray(f(ZZ, TT), dtype=complex).reshape(shape) * np.ones(shape)
           for key, f in phi.coeffs.items()}
    res = {key: ref.get(key, 0.0) - Du.get(key, 0.0) for key in set(ref) | set(Du)}
    zmask = interior_mask(spec, Z, level)
    mask = np.repeat(zmask[:, None], Nt, axis=1)
    rmax, rl2 = _residual_stats(res, mask)
    rep = SolveReport(f"dcomplex-{variant}", Z, q - 1, {k: v for k, v in u.items()},
                      {k: v for k, v in Du.items()}, residual_max=rmax, residual_l2=rl2,
                      residual_points=int(np.sum(mask)))
    rep.metadata = {"operator": f"dcomplex-{variant}", "level": level, "n_theta": n_theta,
                    "t_points": T.tolist(), "S": {"lo": S.lo, "hi": S.hi}, "seed": seed,
                    "runtime_s": round(time.perf_counter() - t0, 3)}
    return rep


def _col(v, b, Nt):
    """Place per-z values into column b of a (Nz, Nt, ...) array (all columns if b is None)."""
    v = np.asarray(v)
    out = np.zeros((v.shape[0], Nt) + v.shape[1:], dtype=complex)
    if b is None:
        out[:] = v[:, None]
    else:
        out[:, b] = v
    return out


def _explicit_derivs(coef, Z, T, n, m, h):
    """Values, zbar- and t-derivatives of an explicit coefficient on the grid Z x T."""
    Nz, Nt = len(Z), len(T)
    ZZ = np.repeat(Z, Nt, axis=0)
    TT = np.tile(T, (Nz, 1))
    val = np.asarray(coef(ZZ, TT), dtype=complex).reshape(Nz, Nt)
    gz = np.zeros((Nz, Nt, n), dtype=complex)
    for k in range(n):
        e = np.zeros(n, dtype=complex)
        e[k] = h
        dx = sum(w * np.asarray(coef(ZZ + s * e, TT)) for s, w in FD_STENCIL) / h
        dy = sum(w * np.asarray(coef(ZZ + 1j * s * e, TT)) for s, w in FD_STENCIL) / h
        gz[..., k] = (0.5 * (dx + 1j * dy)).reshape(Nz, Nt)
    gt = np.zeros((Nz, Nt, m), dtype=complex)
    for k in range(m):
        e = np.zeros(m)
        e[k] = h
        gt[..., k] = (sum(w * np.asarray(coef(ZZ, TT + s * e)) for s, w in FD_STENCIL)
                      / h).reshape(Nz, Nt)
    return val, gz, gt
