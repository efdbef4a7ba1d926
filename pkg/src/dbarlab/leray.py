"""Leray maps W(z, zeta) and the Levi polynomial.

Every map exposes ``g(z, zb, ze, zeb)`` returning the n components of
W and ``dbar_g`` returning the matrices ``dW_j/dzbar_k`` and
``dW_j/dzetabar_k``.  Arguments are component lists, so jets and Taylor
series pass straight through.
"""

from __future__ import annotations

import csv
import io
from dataclasses import dataclass, field

import numpy as np

from . import autodiff as ad
from .geometry import DomainSpec, rho_parts, rho0_parts, eval_defining, radial_function

MAP_NAMES = ("bm", "convex", "ball", "levi")


@dataclass
class LerayMap:
    """A Leray map with analytic first derivatives."""

    name: str
    n: int
    g: callable = field(repr=False)
    dbar_g: callable = field(repr=False)
    holomorphic_in_z: bool = True
    local_only: bool = False
    spec: DomainSpec | None = None

    def phi(self, z, zb, ze, zeb):
        W = self.g(z, zb, ze, zeb)
        out = 0.0
        for j in range(self.n):
            out = W[j] * (ze[j] - z[j]) + out
        return out

    def evaluate(self, z, zeta):
        """W at points (arrays with last axis n)."""
        z = np.asarray(z, dtype=complex)
        zeta = np.asarray(zeta, dtype=complex)
        zc = [z[..., j] for j in range(self.n)]
        ec = [zeta[..., j] for j in range(self.n)]
        W = self.g(zc, [np.conj(c) for c in zc], ec, [np.conj(c) for c in ec])
        shape = np.broadcast(z[..., 0], zeta[..., 0]).shape
        return np.stack([np.broadcast_to(np.asarray(w, dtype=complex), shape) for w in W], axis=-1)

    def phi_values(self, z, zeta):
        W = self.evaluate(z, zeta)
        return np.sum(W * (np.asarray(zeta) - np.asarray(z)), axis=-1)


def _zero(n):
    return [[0.0] * n for _ in range(n)]


def bm_map(n):
    """Bochner-Martinelli map g = zetabar - zbar."""
    def g(z, zb, ze, zeb):
        return [zeb[j] - zb[j] for j in range(n)]

    def dbar_g(z, zb, ze, zeb):
        return ([[(-1.0 if j == k else 0.0) for k in range(n)] for j in range(n)],
                [[(1.0 if j == k else 0.0) for k in range(n)] for j in range(n)])

    return LerayMap("bm", n, g, dbar_g, holomorphic_in_z=False)


def ball_map(n):
    """W = zetabar for the unit ball."""
    def g(z, zb, ze, zeb):
        return [zeb[j] for j in range(n)]

    def dbar_g(z, zb, ze, zeb):
        return _zero(n), [[(1.0 if j == k else 0.0) for k in range(n)] for j in range(n)]

    return LerayMap("ball", n, g, dbar_g)


def convex_leray(spec: DomainSpec, regularized=False):
    """W = d rho/d zeta for a strictly convex model domain.

    With ``regularized`` the gradient of exp(L0 rho0) - 1 is used; it differs
    from the rho0 gradient by the positive factor L0 exp(L0 rho0), which
    does not change the kernels.
    """
    real_hessian_floor(spec)
    n = spec.n

    def g(z, zb, ze, zeb):
        return rho_parts(spec, ze, zeb, regularized)[1]

    def dbar_g(z, zb, ze, zeb):
        levi = rho_parts(spec, ze, zeb, regularized)[2]
        return _zero(n), levi

    return LerayMap("convex", n, g, dbar_g, spec=spec)


def real_hessian_floor(spec, samples=500, seed=0):
    """Smallest eigenvalue of the real Hessian of rho0 on a neighbourhood of the closure."""
    rng = np.random.default_rng(seed)
    x = rng.normal(size=(samples, spec.n)) + 1j * rng.normal(size=(samples, spec.n))
    x *= (rng.uniform(0, 1.0 + spec.delta_max, size=samples)
          / np.linalg.norm(x, axis=-1))[:, None]
    zc = [x[:, j] for j in range(spec.n)]
    _, _, levi, hh = rho0_parts(spec, zc, [np.conj(c) for c in zc])
    m = 2 * spec.n
    H = np.zeros((samples, m, m))
    # real Hessian from the complex second derivatives:
    # d2/dx dx = 2Re(h + l), d2/dy dy = 2Re(l - h), d2/dx dy = -2Im(h) + ...
    for j in range(spec.n):
        for k in range(spec.n):
            hjk = np.broadcast_to(np.asarray(hh[j][k], dtype=complex), (samples,))
            ljk = np.broadcast_to(np.asarray(levi[j][k], dtype=complex), (samples,))
            H[:, 2 * j, 2 * k] = 2 * np.real(hjk + ljk)
            H[:, 2 * j + 1, 2 * k + 1] = 2 * np.real(ljk - hjk)
            H[:, 2 * j, 2 * k + 1] = -2 * np.imag(hjk) + 2 * np.imag(ljk)
            H[:, 2 * j + 1, 2 * k] = -2 * np.imag(hjk) - 2 * np.imag(ljk)
    ev = np.linalg.eigvalsh(0.5 * (H + H.transpose(0, 2, 1)))[:, 0]
    if np.min(ev) <= 0:
        raise ValueError(f"convexity floor fails: min real-Hessian eigenvalue {np.min(ev):.3e}")
    return float(np.min(ev))


# ---------------------------------------------------------------------------
# Levi polynomial

@dataclass
class LeviData:
    """Levi polynomial F(z, zeta) = 2 drho(zeta).(zeta - z) + sign * a(zeta)[zeta - z]^2."""

    spec: DomainSpec
    sign: int = -1
    linear_factor: float = 2.0
    a_source: str = "exact"
    smoothing: float = 0.02
    regularized: bool = True
    local_only: bool = True
    epsilon: float = 0.3

    def __post_init__(self):
        # 0.3 x smallest curvature radius; for the model domains this is at
        # least 0.3 x min semi-axis^2 / max semi-axis
        s = self.spec.semi_axes
        self.epsilon = 0.3 * float(np.min(s) ** 2 / np.max(s))
        if self.spec.kind == "graph-perturbation":
            eps, om = self.spec.params
            self.epsilon = 0.3 / (1.0 + abs(eps) * om * om)

    def coefficients(self, ze, zeb):
        """a_jk(zeta): holomorphic Hessian of rho, optionally Gaussian-smoothed."""
        n = self.spec.n
        if self.a_source == "exact":
            return rho_parts(self.spec, ze, zeb, self.regularized)[3]
        # Gauss-Hermite average in each real direction (3 nodes each)
        x, w = np.polynomial.hermite_e.hermegauss(3)
        w = w / w.sum()
        acc = [[0.0] * n for _ in range(n)]
        grids = np.meshgrid(*([np.arange(3)] * (2 * n)), indexing="ij")
        for idx in zip(*[g.ravel() for g in grids]):
            wt = float(np.prod([w[i] for i in idx]))
            shift = [self.smoothing * (x[idx[2 * j]] + 1j * x[idx[2 * j + 1]]) for j in range(n)]
            zs = [ze[j] + shift[j] for j in range(n)]
            zsb = [zeb[j] + np.conj(shift[j]) for j in range(n)]
            h = rho_parts(self.spec, zs, zsb, self.regularized)[3]
            for j in range(n):
                for k in range(n):
                    acc[j][k] = h[j][k] * wt + acc[j][k]
        return acc

    def W(self, z, zb, ze, zeb):
        n = self.spec.n
        d = rho_parts(self.spec, ze, zeb, self.regularized)[1]
        a = self.coefficients(ze, zeb)
        out = []
        for j in range(n):
            wj = d[j] * self.linear_factor
            for k in range(n):
                wj = a[j][k] * (ze[k] - z[k]) * self.sign + wj
            out.append(wj)
        return out

    def F(self, z, zeta):
        z = np.asarray(z, dtype=complex)
        zeta = np.asarray(zeta, dtype=complex)
        n = self.spec.n
        zc = [z[..., j] for j in range(n)]
        ec = [zeta[..., j] for j in range(n)]
        W = self.W(zc, [np.conj(c) for c in zc], ec, [np.conj(c) for c in ec])
        return sum(W[j] * (ec[j] - zc[j]) for j in range(n))

    def lower_bound_margin(self, z, zeta):
        """(Re F - (rho(zeta) - rho(z))) / |zeta - z|^2 at sampled pairs."""
        rz = eval_defining(self.spec, z, regularized=self.regularized)[0]
        rze = eval_defining(self.spec, zeta, regularized=self.regularized)[0]
        w2 = np.sum(np.abs(np.asarray(zeta) - np.asarray(z)) ** 2, axis=-1)
        return (np.real(self.F(z, zeta)) - (rze - rz)) / w2


def levi_polynomial(spec, z, zeta, a_source="exact", sign=-1):
    """Value of the Levi polynomial at (z, zeta)."""
    return LeviData(spec, sign=sign, a_source=a_source).F(z, zeta)


def levi_pairs(spec, samples=2000, seed=0, eps=None):
    """Random collar pairs (z, zeta) with |zeta - z| < eps."""
    rng = np.random.default_rng(seed)
    n = spec.n
    eps = eps if eps is not None else LeviData(spec).epsilon
    th = rng.normal(size=(samples, n)) + 1j * rng.normal(size=(samples, n))
    th /= np.linalg.norm(th, axis=-1, keepdims=True)
    base = radial_function(spec, th)[:, None] * th
    zeta = base * (1 + 0.1 * eps * rng.uniform(-1, 1, size=samples))[:, None]
    dw = rng.normal(size=(samples, n)) + 1j * rng.normal(size=(samples, n))
    dw *= (eps * rng.uniform(0.01, 1, size=samples) / np.linalg.norm(dw, axis=-1))[:, None]
    return zeta + dw, zeta


def choose_levi_sign(spec, samples=2000, seed=0, a_source="exact"):
    """Return (sign, margins) with the sign whose lower bound holds on samples."""
    z, zeta = levi_pairs(spec, samples, seed)
    res = {}
    for s in (-1, +1):
        res[s] = float(np.min(LeviData(spec, sign=s, a_source=a_source).lower_bound_margin(z, zeta)))
    best = max(res, key=res.get)
    return best, res


def levi_map(spec, sign=-1, a_source="exact"):
    """Leray map from the Levi polynomial; valid only near the diagonal."""
    data = LeviData(spec, sign=sign, a_source=a_source)
    n = spec.n

    def dbar_g(z, zb, ze, zeb):
        # jets through W give both blocks; z-block vanishes (holomorphic in z)
        zj, zbj = ad.Jet.variables(np.stack([np.asarray(c, dtype=complex) for c in
                                             np.broadcast_arrays(*ze)]),
                                   np.stack([np.asarray(c, dtype=complex) for c in
                                             np.broadcast_arrays(*zeb)]))
        W = data.W(z, zb, zj, zbj)
        Gz = _zero(n)
        Gze = [[W[j].der[n + k] for k in range(n)] for j in range(n)]
        return Gz, Gze

    return LerayMap("levi", n, data.W, dbar_g, local_only=True, spec=spec)


def make_map(name, spec):
    if name not in MAP_NAMES:
        raise ValueError(f"unknown Leray map {name!r}; choose from {MAP_NAMES}")
    if name == "bm":
        return bm_map(spec.n)
    if name == "ball":
        if spec.kind != "unit-ball":
            raise ValueError("the 'ball' map needs a unit-ball domain")
        return ball_map(spec.n)
    if name == "convex":
        return convex_leray(spec)
    return levi_map(spec)


# ---------------------------------------------------------------------------
# checks

def holomorphy_residual(lmap, z, zeta):
    """max |dW/dzbar| at the given points (jets)."""
    n = lmap.n
    z = np.asarray(z, dtype=complex)
    zeta = np.asarray(zeta, dtype=complex)
    w = np.concatenate([np.moveaxis(z, -1, 0), np.moveaxis(zeta, -1, 0)])
    wj, wbj = ad.Jet.variables(w)
    W = lmap.g(wj[:n], wbj[:n], wj[n:], wbj[n:])
    worst = 0.0
    for Wj in W:
        if isinstance(Wj, ad.Jet):
            worst = max(worst, float(np.max(np.abs(Wj.der[2 * n:3 * n]))))
    return worst


def dbar_g_residual(lmap, z, zeta):
    """Compare the analytic dbar_g against jets of g."""
    n = lmap.n
    w = np.concatenate([np.moveaxis(np.asarray(z, complex), -1, 0),
                        np.moveaxis(np.asarray(zeta, complex), -1, 0)])
    wj, wbj = ad.Jet.variables(w)
    W = lmap.g(wj[:n], wbj[:n], wj[n:], wbj[n:])
    zc, zbc = list(w[:n]), [np.conj(c) for c in w[:n]]
    ec, ebc = list(w[n:]), [np.conj(c) for c in w[n:]]
    Gz, Gze = lmap.dbar_g(zc, zbc, ec, ebc)
    worst = 0.0
    for j in range(n):
        d = W[j].der if isinstance(W[j], ad.Jet) else np.zeros((4 * n,) + w.shape[1:])
        for k in range(n):
            worst = max(worst, float(np.max(np.abs(d[2 * n + k] - Gz[j][k]))),
                        float(np.max(np.abs(d[3 * n + k] - Gze[j][k]))))
    return worst


def min_phi_on_shell(lmap, spec, nz=200, nzeta=10000, seed=0):
    """min |Phi| over interior targets and shell sources."""
    rng = np.random.default_rng(seed)
    n = spec.n

    def sphere(m):
        t = rng.normal(size=(m, n)) + 1j * rng.normal(size=(m, n))
        return t / np.linalg.norm(t, axis=-1, keepdims=True)

    tz = sphere(nz)
    z = (radial_function(spec, tz) * rng.uniform(0, 0.999, nz))[:, None] * tz
    te = sphere(nzeta)
    zeta = (radial_function(spec, te) * (1 + spec.delta_max * rng.uniform(0, 1, nzeta)))[:, None] * te
    worst = np.inf
    for i in range(nz):
        worst = min(worst, float(np.min(np.abs(lmap.phi_values(z[i], zeta)))))
    return worst


def growth_report(derivative_sup, d_values, orders):
    """Slopes of log sup|d^i W| against log d for each order.

    ``derivative_sup(i, d)`` returns the measured sup at distance d.
    """
    from .normlab import ExponentFit

    rows = []
    slopes = {}
    for i in orders:
        vals = np.array([derivative_sup(i, d) for d in d_values])
        fit = ExponentFit(floor=1e-9).fit(d_values, vals)
        slopes[i] = fit.slope_
        for d, v in zip(d_values, vals):
            rows.append((i, d, v, fit.slope_))
    return slopes, rows


def check_regularized_growth(lmap_or_field, spec, orders=(1, 2, 3), d_values=None,
                             npoints=24, seed=0):
    """Fitted slopes of sup|d_zeta^i W| vs d(zeta) over the shell.

    ``lmap_or_field`` is either a :class:`LerayMap` (derivatives by Taylor
    series through ``g``) or an object with ``directional(x, v, order)``
    returning real directional derivatives of a regularized defining
    function, in which case W-derivatives of order i are read off
    derivatives of rho of order i + 1.
    """
    d_values = np.asarray(d_values if d_values is not None else 2.0 ** -np.arange(3, 9))
    rng = np.random.default_rng(seed)
    n = spec.n
    th = rng.normal(size=(npoints, n)) + 1j * rng.normal(size=(npoints, n))
    th /= np.linalg.norm(th, axis=-1, keepdims=True)
    dirs = rng.normal(size=(6, 2 * n))
    dirs /= np.linalg.norm(dirs, axis=-1, keepdims=True)
    # spread over the band [d, 2d] so transition layers of a partition are hit
    spread = 1.0 + rng.uniform(size=npoints)

    from .geometry import _to_complex

    def sup(i, d):
        base = radial_function(spec, th)[:, None] * th
        _, dd, _ = eval_defining(spec, base)
        nrm = np.conj(dd) / np.linalg.norm(dd, axis=-1, keepdims=True)
        pts = base + (d * spread)[:, None] * nrm
        best = 0.0
        for v in dirs:
            vc = _to_complex(v)
            if isinstance(lmap_or_field, LerayMap):
                K = i
                zt = [ad.Taylor.line(pts[:, j], 0 * vc[j], K) for j in range(n)]
                zbt = [ad.Taylor.line(np.conj(pts[:, j]), 0 * vc[j], K) for j in range(n)]
                et = [ad.Taylor.line(pts[:, j], vc[j], K) for j in range(n)]
                ebt = [ad.Taylor.line(np.conj(pts[:, j]), np.conj(vc[j]), K) for j in range(n)]
                W = lmap_or_field.g(zt, zbt, et, ebt)
                for w in W:
                    if isinstance(w, ad.Taylor):
                        best = max(best, float(np.max(np.abs(w.derivative(i)))))
            else:
                x = np.empty((len(pts), 2 * n))
                x[:, 0::2], x[:, 1::2] = pts.real, pts.imag
                dv = lmap_or_field.directional(x, v, i + 1)
                best = max(best, float(np.max(np.abs(dv))))
        return best

    return growth_report(sup, d_values, orders)


def report_csv(rows, header=("order", "d", "sup", "slope")):
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for r in rows:
        w.writerow([f"{x:.12e}" if isinstance(x, float) else x for x in r])
    return buf.getvalue()
