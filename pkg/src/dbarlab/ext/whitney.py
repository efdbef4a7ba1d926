"""Whitney cubes, the Whitney extension E_r, and the regularized defining function.

Cubes are dyadic: level k has side 2^-k and corners on the grid 2^-k Z^d.
A cube is admissible when the distance from its centre to F is at least
twice its diameter; the Whitney family is the set of maximal admissible
cubes.  Admissibility passes to children, so the family is a disjoint
cover of the complement of F, and every member satisfies

    1.5 diam Q <= dist(Q, F) <= 4.5 diam Q.

Everything is evaluated pointwise, so no global lattice is needed.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field

import numpy as np
from scipy.spatial import cKDTree
from sklearn.base import BaseEstimator, TransformerMixin
from sklearn.exceptions import NotFittedError

from .. import autodiff as ad
from ..geometry import boundary_projection, rho_parts, signed_distance
from .stein import smoothstep

EXPAND = 1.0 / 4
PLATEAU = 1.0 / (1.0 + EXPAND)


# ---------------------------------------------------------------------------
# closed sets F described by distance and nearest-point maps

class ClosedSet:
    dim: int

    def dist(self, x):
        raise NotImplementedError

    def project(self, x):
        raise NotImplementedError

    def box_dist(self, lo, hi):
        """Distance from the boxes [lo, hi] to F (lower bound exact for convex F)."""
        raise NotImplementedError


@dataclass
class BallSet(ClosedSet):
    dim: int = 2
    radius: float = 1.0

    def dist(self, x):
        return np.maximum(np.linalg.norm(x, axis=-1) - self.radius, 0.0)

    def project(self, x):
        r = np.linalg.norm(x, axis=-1, keepdims=True)
        return np.where(r > self.radius, x * self.radius / np.where(r > 0, r, 1.0), x)

    def box_dist(self, lo, hi):
        near = np.clip(0.0, lo, hi)
        return self.dist(near)


@dataclass
class HalfSpaceSet(ClosedSet):
    """F = {x_axis <= 0}."""

    dim: int = 2
    axis: int = 0

    def dist(self, x):
        return np.maximum(x[..., self.axis], 0.0)

    def project(self, x):
        p = np.array(x, dtype=float, copy=True)
        p[..., self.axis] = np.minimum(p[..., self.axis], 0.0)
        return p

    def box_dist(self, lo, hi):
        return np.maximum(lo[..., self.axis], 0.0)


class LatticeSet(ClosedSet):
    """F given by the True entries of a mask on the lattice origin + h * index."""

    def __init__(self, mask, h, origin):
        mask = np.asarray(mask, dtype=bool)
        self.dim = mask.ndim
        self.h = float(h)
        self.origin = np.asarray(origin, dtype=float)
        idx = np.argwhere(mask)
        if len(idx) == 0:
            raise ValueError("F is empty at this resolution")
        self.points = self.origin + self.h * idx
        self.tree = cKDTree(self.points)

    def dist(self, x):
        d, _ = self.tree.query(np.asarray(x, dtype=float))
        return d

    def project(self, x):
        _, i = self.tree.query(np.asarray(x, dtype=float))
        return self.points[i]

    def box_dist(self, lo, hi):
        out = np.empty(len(lo))
        centre = 0.5 * (lo + hi)
        reach = self.dist(centre)
        for i in range(len(lo)):
            cand = self.points[self.tree.query_ball_point(centre[i], reach[i] + 1e-12)]
            gap = np.maximum(np.maximum(lo[i] - cand, cand - hi[i]), 0.0)
            out[i] = np.min(np.linalg.norm(gap, axis=-1)) if len(cand) else reach[i]
        return out


class DomainSet(ClosedSet):
    """Closure of a model domain in R^{2n} (interleaved real coordinates)."""

    def __init__(self, spec):
        self.spec = spec
        self.dim = 2 * spec.n

    def _c(self, x):
        x = np.asarray(x, dtype=float)
        return x[..., 0::2] + 1j * x[..., 1::2]

    def dist(self, x):
        return np.maximum(signed_distance(self.spec, self._c(x)), 0.0)

    def project(self, x):
        z = self._c(x)
        p, _ = boundary_projection(self.spec, z)
        p = np.where((self.dist(x) > 0)[..., None], p, z)
        out = np.empty(np.shape(x))
        out[..., 0::2], out[..., 1::2] = p.real, p.imag
        return out

    def box_dist(self, lo, hi):
        # sampled lower estimate: corners and centre
        d = self.dim
        best = self.dist(0.5 * (lo + hi))
        for bits in itertools.product((0, 1), repeat=d):
            c = np.where(np.array(bits, dtype=bool), hi, lo)
            best = np.minimum(best, self.dist(c))
        return best


# ---------------------------------------------------------------------------
# cube bookkeeping

def _admissible(F, idx, k):
    side = 2.0 ** -k
    centre = (idx + 0.5) * side
    return F.dist(centre) >= 2.0 * side * math.sqrt(F.dim)


def _is_whitney(F, idx, k, kmin):
    ok = _admissible(F, idx, k)
    if k > kmin:
        ok &= ~_admissible(F, np.floor_divide(idx, 2), k - 1)
    return ok


def locate(F, x, kmin=0, kmax=48):
    """Level and integer index of the Whitney cube containing each row of x."""
    x = np.asarray(x, dtype=float)
    lev = np.full(len(x), -1, dtype=int)
    idx = np.zeros(x.shape, dtype=np.int64)
    todo = np.arange(len(x))
    for k in range(kmin, kmax + 1):
        if len(todo) == 0:
            break
        m = np.floor(x[todo] * 2.0 ** k).astype(np.int64)
        ok = _admissible(F, m, k)
        lev[todo[ok]] = k
        idx[todo[ok]] = m[ok]
        todo = todo[~ok]
    if len(todo):
        raise ValueError("points too close to F for the finest admissible level")
    return lev, idx


@dataclass
class WhitneyCubeSet:
    """Cubes as (level, integer index); side 2^-level, corner index * side."""

    F: ClosedSet
    levels: np.ndarray
    index: np.ndarray
    kmin: int = 0
    n_overlap: int = 0
    expand: float = EXPAND
    dists: np.ndarray = field(default=None, repr=False)

    @property
    def sides(self):
        return 2.0 ** -self.levels.astype(float)

    @property
    def corners(self):
        return self.index * self.sides[:, None]

    @property
    def centres(self):
        return (self.index + 0.5) * self.sides[:, None]

    @property
    def diams(self):
        return self.sides * math.sqrt(self.F.dim)

    @property
    def base_points(self):
        return self.F.project(self.centres)

    def __len__(self):
        return len(self.levels)

    def sandwich(self):
        """(dist / diam) for every cube; the contract is 0.5 <= ratio <= 5."""
        if self.dists is None:
            lo = self.corners
            self.dists = self.F.box_dist(lo, lo + self.sides[:, None])
        return self.dists / self.diams

    def overlap(self, x):
        """Number of expanded cubes of the Whitney family containing each x."""
        return np.sum([m for _, _, m in _candidates(self.F, x, self.kmin, self.expand)], axis=0)

    def partition_sum(self, x):
        tot = np.zeros(len(x))
        for k, idx, m in _candidates(self.F, x, self.kmin, self.expand):
            if np.any(m):
                tot[m] += _bump_value(x[m], idx[m], k, self.expand)
        return tot


def _candidates(F, x, kmin, expand):
    """Yield (level, index, mask) for Whitney cubes whose expansion holds x."""
    lev, _ = locate(F, x, kmin)
    offs = list(itertools.product((-1, 0, 1), repeat=F.dim))
    for dk in range(-2, 3):
        k = lev + dk
        valid = k >= kmin
        kk = np.where(valid, k, kmin)
        scale = 2.0 ** kk.astype(float)
        base = np.floor(x * scale[:, None]).astype(np.int64)
        for o in offs:
            idx = base + np.array(o)
            centre = (idx + 0.5) / scale[:, None]
            half = 0.5 * (1.0 + expand) / scale[:, None]
            m = valid & np.all(np.abs(x - centre) < half, axis=-1)
            if not np.any(m):
                continue
            sel = np.flatnonzero(m)
            ok = np.zeros(len(x), dtype=bool)
            for level in np.unique(kk[sel]):
                s = sel[kk[sel] == level]
                ok[s] = _is_whitney(F, idx[s], int(level), kmin)
            m &= ok
            # emit per level so callers see a scalar level
            for level in np.unique(kk[m]):
                mm = m & (kk == level)
                yield int(level), idx, mm


def _bump_value(x, idx, k, expand):
    side = 2.0 ** -k
    u = (x - (idx + 0.5) * side) / (0.5 * (1 + expand) * side)
    a = np.abs(u)
    p = 1.0 / (1.0 + expand)
    t = np.clip((1.0 - a) / (1.0 - p), 0.0, 1.0)
    return np.prod(smoothstep(t), axis=-1)


def whitney_decompose(F=None, x=None, *, mask=None, h=None, origin=None, kmin=0,
                      check=True):
    """Whitney cubes covering the exterior points ``x`` of F.

    With ``mask`` (and ``h``, ``origin``) F is the set of True lattice
    points and x defaults to the False ones.
    """
    if mask is not None:
        mask = np.asarray(mask, dtype=bool)
        F = LatticeSet(mask, h, origin)
        if x is None:
            x = F.origin + F.h * np.argwhere(~mask)
    x = np.asarray(x, dtype=float)
    x = x[F.dist(x) > 0]
    lev, idx = locate(F, x, kmin)
    key = np.concatenate([lev[:, None], idx], axis=1)
    key = np.unique(key, axis=0)
    cubes = WhitneyCubeSet(F, key[:, 0], key[:, 1:], kmin=kmin)
    if len(x):
        cubes.n_overlap = int(np.max(cubes.overlap(x)))
    if check and len(cubes):
        ratio = cubes.sandwich()
        bad = (ratio < 0.5) | ((ratio > 5.0) & (cubes.dists < 1.0))
        if np.any(bad):
            i = int(np.argmax(bad))
            msg = f"cube {key[i].tolist()} has dist/diam {ratio[i]:.3f}"
            if mask is not None:
                msg += "; resolution too coarse, use a smaller h"
            raise ValueError(msg)
    return cubes


# ---------------------------------------------------------------------------
# jets and the extension

@dataclass
class JetField:
    """Jets of order m = floor(r) on F.

    ``jets(p)`` returns ``[f, grad f, Hess f, ...]`` evaluated at rows of p,
    with shapes (P,), (P, d), (P, d, d), ...
    """

    r: float
    jets: callable
    dim: int = 2
    A: float = float("nan")

    @property
    def m(self):
        return int(math.floor(self.r))

    def taylor(self, x, p):
        """Taylor polynomial P(x, p) of order m; x may hold Taylor series."""
        J = self.jets(p)
        dx = [x[i] - p[:, i] for i in range(self.dim)]
        out = J[0] + 0.0 * dx[0]
        for order in range(1, self.m + 1):
            T = J[order]
            fact = math.factorial(order)
            for mi in itertools.product(range(self.dim), repeat=order):
                term = T[(slice(None),) + mi] / fact
                for i in mi:
                    term = dx[i] * term
                out = out + term
        return out

    def remainder_constant(self, F, samples=2000, seed=0):
        """Measured A in |R_alpha(x, p)| <= A |x - p|^(r - |alpha|) for alpha = 0."""
        rng = np.random.default_rng(seed)
        pts = F.project(rng.uniform(-1.5, 1.5, size=(samples, self.dim)))
        a, b = pts[: samples // 2], pts[samples // 2:]
        dist = np.linalg.norm(a - b, axis=-1)
        keep = dist > 1e-9
        xs = [a[keep, i] for i in range(self.dim)]
        R = self.jets(a[keep])[0] - self.taylor(xs, b[keep])
        self.A = float(np.max(np.abs(R) / dist[keep] ** self.r))
        return self.A


def _as_series(x, v, order):
    return [ad.Taylor.line(x[:, i], v[i], order) for i in range(x.shape[1])]


def _plateau_series(u, expand):
    """1 for |u| <= 1/(1+expand), smooth descent to 0 at |u| = 1."""
    u0 = np.real(u.coef[0])
    a = u * np.sign(u0)
    p = 1.0 / (1.0 + expand)
    band = (np.abs(u0) > p) & (np.abs(u0) < 1.0)
    t = (1.0 - a) * (1.0 / (1.0 - p))
    ts = ad.Taylor(np.where(band, t.coef, 0.5))
    e1 = ad.exp(ts.reciprocal() * -1.0)
    e2 = ad.exp((1.0 - ts).reciprocal() * -1.0)
    S = e1 / (e1 + e2)
    one = np.zeros_like(S.coef)
    one[0] = 1.0
    plateau = np.abs(u0) <= p
    return ad.Taylor(np.where(plateau, one, np.where(band, S.coef, 0.0)))


def _bump_series(xs, idx, k, expand):
    side = 2.0 ** -k
    out = None
    for i, xi in enumerate(xs):
        u = (xi - (idx[:, i] + 0.5) * side) * (1.0 / (0.5 * (1 + expand) * side))
        t = _plateau_series(u, expand)
        out = t if out is None else out * t
    return out


class WhitneyExtension(BaseEstimator, TransformerMixin):
    """E_r f = sum_k P(x, p_k) phi_k(x) on the complement of F.

    ``fit(jet_field)`` stores jets; ``transform(X)`` returns values and
    ``directional(X, v, order)`` the order-th derivative along v.
    """

    def __init__(self, F=None, kmin=0, expand=EXPAND, max_dist=1.0):
        self.F = F
        self.kmin = kmin
        self.expand = expand
        self.max_dist = max_dist

    def fit(self, jets: JetField, y=None):
        self.jets_ = jets
        return self

    def transform(self, X):
        return self.directional(X, np.zeros(np.shape(X)[-1]), 0)

    def _check(self):
        if not hasattr(self, "jets_"):
            raise NotFittedError("WhitneyExtension is not fitted")

    def series(self, X, v, order):
        """Taylor coefficients (order+1, P) of E_r f along x + s v."""
        self._check()
        X = np.asarray(X, dtype=float)
        v = np.asarray(v, dtype=float)
        F = self.F
        d = F.dist(X)
        out = np.zeros((order + 1, len(X)))
        inside = d <= 0
        if np.any(inside):
            xs = _as_series(X[inside], v, order)
            val = self.jets_.taylor(xs, X[inside])
            out[:, inside] = _coef(val, order, inside.sum())
        outside = ~inside
        if not np.any(outside):
            return out
        Xo = X[outside]
        num = np.zeros((order + 1, len(Xo)))
        den = np.zeros((order + 1, len(Xo)))
        for k, idx, m in _candidates(F, Xo, self.kmin, self.expand):
            if not np.any(m):
                continue
            xs = _as_series(Xo[m], v, order)
            b = _bump_series(xs, idx[m], k, self.expand)
            centre = (idx[m] + 0.5) * 2.0 ** -k
            if np.any(F.dist(centre) >= self.max_dist):
                far = F.dist(centre) >= self.max_dist
            else:
                far = None
            P = self.jets_.taylor(xs, F.project(centre))
            bp = b * P
            bc = _coef(bp, order, m.sum())
            if far is not None:
                bc[:, far] = 0.0
            num[:, m] += bc
            den[:, m] += _coef(b, order, m.sum())
        q = ad.Taylor(num) / ad.Taylor(den)
        out[:, outside] = q.coef
        return out

    def directional(self, X, v, order):
        c = self.series(X, v, order)
        return c[order] * math.factorial(order)


def _coef(t, order, npts):
    if isinstance(t, ad.Taylor):
        return np.array(np.real(np.broadcast_to(t.coef, (order + 1, npts))))
    out = np.zeros((order + 1, npts))
    out[0] = np.real(t)
    return out


def whitney_extend(jets: JetField, cubes_or_F, X):
    F = cubes_or_F.F if isinstance(cubes_or_F, WhitneyCubeSet) else cubes_or_F
    return WhitneyExtension(F).fit(jets).transform(X)


def taylor_remainder_bound(f, grad_fns, p, k, samples=4000, seed=0, radius=1.0):
    """Worst ratio |f(x) - P_{k-1}(x, p)| / (|x - p|^k sup|d^k f|) over a disk.

    ``grad_fns[j](x)`` returns the j-th derivative tensor at rows of x for
    j = 0..k; the sup in the denominator is sampled over the same disk.
    """
    rng = np.random.default_rng(seed)
    p = np.asarray(p, dtype=float)
    dim = p.shape[-1]
    x = rng.normal(size=(samples, dim))
    x *= (radius * rng.uniform(0, 1, samples) ** (1 / dim) / np.linalg.norm(x, axis=-1))[:, None]
    P = np.broadcast_to(p, x.shape)
    jf = JetField(r=k - 1, jets=lambda q: [g(q) for g in grad_fns[:k]], dim=dim)
    xs = [x[:, i] for i in range(dim)]
    R = np.abs(grad_fns[0](x) - jf.taylor(xs, P))
    Dk = grad_fns[k](x).reshape(samples, -1)
    sup = float(np.max(np.abs(Dk)))
    dist = np.linalg.norm(x - P, axis=-1)
    keep = dist > 1e-9
    if sup == 0.0:
        return 0.0 if float(np.max(R[keep])) < 1e-12 else float("inf")
    return float(np.max(R[keep] / (dist[keep] ** k * sup)))


# ---------------------------------------------------------------------------
# regularized defining function

def real_jets(spec, x, regularized=True):
    """Value, real gradient and real Hessian of rho (interleaved coordinates)."""
    x = np.asarray(x, dtype=float)
    n = spec.n
    z = [x[:, 2 * j] + 1j * x[:, 2 * j + 1] for j in range(n)]
    zb = [np.conj(c) for c in z]
    r, d, levi, hh = rho_parts(spec, z, zb, regularized)
    P = len(x)
    g = np.empty((P, 2 * n))
    H = np.empty((P, 2 * n, 2 * n))
    for j in range(n):
        dj = np.broadcast_to(np.asarray(d[j], dtype=complex), (P,))
        g[:, 2 * j] = 2 * dj.real
        g[:, 2 * j + 1] = -2 * dj.imag
        for k in range(n):
            h = np.broadcast_to(np.asarray(hh[j][k], dtype=complex), (P,))
            l = np.broadcast_to(np.asarray(levi[j][k], dtype=complex), (P,))
            H[:, 2 * j, 2 * k] = 2 * np.real(h + l)
            H[:, 2 * j + 1, 2 * k + 1] = 2 * np.real(l - h)
            H[:, 2 * j, 2 * k + 1] = -2 * np.imag(h) + 2 * np.imag(l)
            H[:, 2 * j + 1, 2 * k] = -2 * np.imag(h) - 2 * np.imag(l)
    return [np.real(np.broadcast_to(r, (P,))).astype(float), g, H]


class RegularizedDefining:
    """rho~ = E_2(exp(L0 rho0) - 1): exact on the closure, Whitney outside.

    ``directional(x, v, order)`` gives real directional derivatives, used
    to certify the growth |d^i rho~| <~ d^(2-i).
    """

    def __init__(self, spec, h=None, kmin=0):
        self.spec = spec
        self.h = h
        self.F = DomainSet(spec)
        self.jets = JetField(r=2.0, jets=lambda p: real_jets(spec, p), dim=2 * spec.n)
        self.ext = WhitneyExtension(self.F, kmin=kmin).fit(self.jets)

    def __call__(self, x):
        return self.ext.transform(x)

    def directional(self, x, v, order):
        return self.ext.directional(x, v, order)


__all__ = [
    "BallSet", "HalfSpaceSet", "LatticeSet", "DomainSet", "WhitneyCubeSet", "JetField",
    "WhitneyExtension", "RegularizedDefining", "whitney_decompose", "whitney_extend",
    "taylor_remainder_bound", "locate", "real_jets",
]
