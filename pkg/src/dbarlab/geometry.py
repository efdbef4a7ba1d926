"""Model strictly pseudoconvex domains and their boundary geometry.

Points are complex arrays with the component axis last, shape ``(..., n)``.
Internally the defining functions are written against component lists
``z[j]`` / ``zb[j]`` so the same code runs on arrays and on jets.
"""

from __future__ import annotations

import json
import warnings
from dataclasses import dataclass, field, asdict

import numpy as np

from . import autodiff as ad

KINDS = ("unit-ball", "ellipsoid", "graph-perturbation")


@dataclass(frozen=True)
class DomainSpec:
    """A model domain.

    ``params``: semi-axes for an ellipsoid (one per complex coordinate),
    ``(amplitude, frequency)`` for a graph perturbation, empty for the ball.
    """

    kind: str
    n: int
    params: tuple = ()
    L0: float = 1.0

    def __post_init__(self):
        object.__setattr__(self, "params", tuple(float(p) for p in self.params))
        validate_spec(self)

    @property
    def semi_axes(self):
        if self.kind == "ellipsoid":
            return np.asarray(self.params, dtype=float)
        return np.ones(self.n)

    @property
    def weights(self):
        """Coefficients a_j of sum a_j |z_j|^2 (ones off the ellipsoid)."""
        return 1.0 / self.semi_axes ** 2

    @property
    def delta_max(self):
        return 0.2 * float(np.min(self.semi_axes))

    def to_json(self):
        return json.dumps({"kind": self.kind, "n": self.n, "params": list(self.params),
                           "L0": self.L0}, sort_keys=True)

    @classmethod
    def from_dict(cls, d):
        unknown = set(d) - {"kind", "n", "params", "L0"}
        if unknown:
            raise ValueError(f"unknown domain keys: {sorted(unknown)}")
        return cls(kind=d["kind"], n=int(d["n"]), params=tuple(d.get("params", ())),
                   L0=float(d.get("L0", 1.0)))

    @classmethod
    def from_json(cls, text):
        return cls.from_dict(json.loads(text))


def spec_violations(spec):
    errs = []
    if spec.kind not in KINDS:
        errs.append(f"kind must be one of {KINDS}, got {spec.kind!r}")
        return errs
    if not 1 <= spec.n <= 4:
        errs.append(f"n must be in 1..4, got {spec.n}")
    if spec.L0 <= 0:
        errs.append("L0 must be positive")
    if spec.kind == "ellipsoid":
        if len(spec.params) != spec.n:
            errs.append(f"ellipsoid needs {spec.n} semi-axes, got {len(spec.params)}")
        elif min(spec.params) <= 0:
            errs.append("ellipsoid semi-axes must be strictly positive")
    if spec.kind == "graph-perturbation":
        if len(spec.params) != 2:
            errs.append("graph-perturbation needs params (amplitude, frequency)")
        else:
            eps, om = spec.params
            # real Hessian of eps*cos(om x) is bounded by eps*om^2; keep 2 - eps*om^2 >= 1
            if abs(eps) * om * om > 1.0:
                errs.append(f"perturbation too large: |eps|*om^2 = {abs(eps) * om * om:.3g} > 1 "
                            "breaks the plurisubharmonicity margin")
    return errs


def validate_spec(spec):
    errs = spec_violations(spec)
    if errs:
        raise ValueError("; ".join(errs))


# ---------------------------------------------------------------------------
# defining functions on component lists

def _xy(zj, zbj):
    return (zj + zbj) * 0.5, (zj - zbj) * (-0.5j)


def rho0_parts(spec, z, zb):
    """(rho0, d rho0/dz_j, Levi rho0_{j kbar}, rho0_{jk}) for component lists."""
    n = spec.n
    if spec.kind in ("unit-ball", "ellipsoid"):
        a = spec.weights
        r = -1.0
        for j in range(n):
            r = z[j] * zb[j] * a[j] + r
        d = [zb[j] * a[j] for j in range(n)]
        levi = [[(a[j] if j == k else 0.0) for k in range(n)] for j in range(n)]
        hh = [[0.0] * n for _ in range(n)]
        return r, d, levi, hh
    eps, om = spec.params
    r = -1.0
    d, levi, hh = [], [[0.0] * n for _ in range(n)], [[0.0] * n for _ in range(n)]
    for j in range(n):
        x, y = _xy(z[j], zb[j])
        cx, cy = ad.cos(x * om), ad.cos(y * om)
        sx, sy = ad.sin(x * om), ad.sin(y * om)
        r = z[j] * zb[j] + (cx + cy) * eps + r
        d.append(zb[j] - (sx - sy * 1j) * (eps * om * 0.5))
        levi[j][j] = 1.0 - (cx + cy) * (eps * om * om * 0.25)
        hh[j][j] = -(cx - cy) * (eps * om * om * 0.25)
    return r, d, levi, hh


def rho_parts(spec, z, zb, regularized=True):
    """Same as :func:`rho0_parts` for rho = exp(L0 rho0) - 1 (or rho0)."""
    r0, d0, l0, h0 = rho0_parts(spec, z, zb)
    if not regularized:
        return r0, d0, l0, h0
    L = spec.L0
    e = ad.exp(r0 * L)
    n = spec.n
    d = [d0[j] * e * L for j in range(n)]
    db0 = [_dzbar_rho0(spec, z, zb, k) for k in range(n)]
    levi, hh = [], []
    for j in range(n):
        lrow, hrow = [], []
        for k in range(n):
            lrow.append((l0[j][k] + d0[j] * db0[k] * L) * e * L)
            hrow.append((h0[j][k] + d0[j] * d0[k] * L) * e * L)
        levi.append(lrow)
        hh.append(hrow)
    return e - 1.0, d, levi, hh


def _dzbar_rho0(spec, z, zb, k):
    if spec.kind in ("unit-ball", "ellipsoid"):
        return z[k] * spec.weights[k]
    eps, om = spec.params
    x, y = _xy(z[k], zb[k])
    return z[k] - (ad.sin(x * om) + ad.sin(y * om) * 1j) * (eps * om * 0.5)


def _components(z):
    z = np.asarray(z, dtype=complex)
    return [z[..., j] for j in range(z.shape[-1])]


def eval_defining(spec: DomainSpec, z, regularized=False):
    """(rho, d rho, Levi matrix) at ``z`` of shape ``(n,)`` or ``(..., n)``."""
    z = np.asarray(z, dtype=complex)
    if z.shape[-1] != spec.n:
        raise ValueError(f"expected last axis of length {spec.n}")
    if not np.all(np.isfinite(z)):
        raise ValueError("domain error: non-finite point")
    zc = _components(z)
    zbc = [np.conj(c) for c in zc]
    r, d, levi, _ = rho_parts(spec, zc, zbc, regularized)
    shape = z.shape[:-1]
    r = np.real(np.broadcast_to(r, shape)).astype(float)
    d = np.stack([np.broadcast_to(np.asarray(c, dtype=complex), shape) for c in d], axis=-1)
    L = np.empty(shape + (spec.n, spec.n), dtype=complex)
    for j in range(spec.n):
        for k in range(spec.n):
            L[..., j, k] = levi[j][k]
    return r, d, L


def rho0(spec, z):
    return eval_defining(spec, z)[0]


# ---------------------------------------------------------------------------
# star-shaped description: zeta = mu * R(theta) * theta

def radial_function(spec, theta, tol=1e-14):
    """Boundary radius R(theta) for unit vectors ``theta`` (shape (..., n))."""
    theta = np.asarray(theta, dtype=complex)
    if spec.kind == "unit-ball":
        return np.ones(theta.shape[:-1])
    a = spec.weights
    base = 1.0 / np.sqrt(np.sum(a * np.abs(theta) ** 2, axis=-1))
    if spec.kind == "ellipsoid":
        return base
    R = base.copy()
    for _ in range(50):
        r, d, _ = eval_defining(spec, R[..., None] * theta)
        # d/dR rho(R theta) = 2 Re(sum d_j theta_j)
        slope = 2.0 * np.real(np.sum(d * theta, axis=-1))
        step = r / slope
        R = R - step
        if np.max(np.abs(step)) < tol:
            break
    return R


def gauge(spec, z):
    """Minkowski-type gauge mu with D = {mu < 1}."""
    z = np.asarray(z, dtype=complex)
    if spec.kind == "unit-ball":
        return np.linalg.norm(z, axis=-1)
    if spec.kind == "ellipsoid":
        return np.sqrt(np.sum(spec.weights * np.abs(z) ** 2, axis=-1))
    r = np.linalg.norm(z, axis=-1)
    safe = np.where(r > 0, r, 1.0)
    th = z / safe[..., None]
    return np.where(r > 0, r / radial_function(spec, th), 0.0)


def gauge_gradient(spec, z, h=1e-6):
    """Wirtinger derivatives (d mu/dz_j, d mu/dzbar_j) of the gauge."""
    z = np.asarray(z, dtype=complex)
    n = spec.n
    dz = np.empty(z.shape, dtype=complex)
    dzb = np.empty(z.shape, dtype=complex)
    for j in range(n):
        e = np.zeros(n, dtype=complex)
        e[j] = h
        gx = (gauge(spec, z + e) - gauge(spec, z - e)) / (2 * h)
        gy = (gauge(spec, z + 1j * e) - gauge(spec, z - 1j * e)) / (2 * h)
        dz[..., j] = 0.5 * (gx - 1j * gy)
        dzb[..., j] = 0.5 * (gx + 1j * gy)
    return dz, dzb


# ---------------------------------------------------------------------------
# distance

def _to_real(z):
    z = np.asarray(z, dtype=complex)
    out = np.empty(z.shape[:-1] + (2 * z.shape[-1],))
    out[..., 0::2] = z.real
    out[..., 1::2] = z.imag
    return out


def _to_complex(x):
    return x[..., 0::2] + 1j * x[..., 1::2]


def _ellipsoid_project(a, x, tol=1e-13, maxit=200):
    """Nearest point on sum a_i x_i^2 = 1 via Newton in the Lagrange multiplier."""
    a = np.broadcast_to(a, x.shape)
    lam = np.zeros(x.shape[:-1])
    lo = -1.0 / np.max(a, axis=-1) + 1e-15
    hi = np.full(x.shape[:-1], np.inf)
    ok = np.zeros(x.shape[:-1], dtype=bool)
    for _ in range(maxit):
        den = 1.0 + lam[..., None] * a
        F = np.sum(a * x * x / den ** 2, axis=-1) - 1.0
        dF = -2.0 * np.sum(a * a * x * x / den ** 3, axis=-1)
        # F is decreasing in lambda; maintain a bracket
        hi = np.where(F < 0, np.minimum(hi, lam), hi)
        lo = np.where(F > 0, np.maximum(lo, lam), lo)
        with np.errstate(divide="ignore", invalid="ignore"):
            new = lam - F / dF
        bad = ~np.isfinite(new) | (new <= lo) | (new >= hi)
        mid = np.where(np.isfinite(hi), 0.5 * (lo + hi), np.maximum(2 * np.abs(lam), 1.0))
        new = np.where(bad, mid, new)
        done = np.abs(new - lam) <= tol * (1 + np.abs(lam))
        lam = new
        ok |= done
        if np.all(ok):
            break
    p = x / (1.0 + lam[..., None] * a)
    # degenerate case: x has no component along the most curved axes and the
    # multiplier sits at -1/a_max; the nearest point then leaves the x-plane
    amax = np.max(a, axis=-1, keepdims=True)
    top = a >= amax * (1 - 1e-12)
    if np.any(top):
        with np.errstate(divide="ignore", invalid="ignore"):
            rest = np.where(top, 0.0, x / (1.0 - a / amax))
        mass = np.sum(a * rest * rest, axis=-1)
        flat = np.all(np.where(top, np.abs(x) <= 1e-14, True), axis=-1) & (mass < 1.0)
        if np.any(flat):
            first = np.argmax(top, axis=-1)
            fill = np.sqrt((1.0 - mass) / amax[..., 0])
            q = rest.copy()
            np.put_along_axis(q, first[..., None], fill[..., None], axis=-1)
            p = np.where(flat[..., None], q, p)
            ok = ok | flat
    return p, ok


def boundary_projection(spec, z):
    """Nearest boundary point and its distance."""
    z = np.asarray(z, dtype=complex)
    if spec.kind == "unit-ball":
        r = np.linalg.norm(z, axis=-1)
        safe = np.where(r > 0, r, 1.0)
        p = np.where(r[..., None] > 0, z / safe[..., None], 0)
        if np.any(r == 0):
            p = p.copy()
            p[r == 0, 0] = 1.0
        return p, np.abs(r - 1.0)
    x = _to_real(z)
    if spec.kind == "ellipsoid":
        a = np.repeat(spec.weights, 2)
        p, ok = _ellipsoid_project(a, x)
        if not np.all(ok):
            warnings.warn("Newton projection did not converge; falling back to sampling")
            p = _fallback(spec, x, p, ok)
        return _to_complex(p), np.linalg.norm(x - p, axis=-1)
    p = _perturbed_project(spec, x)
    return _to_complex(p), np.linalg.norm(x - p, axis=-1)


def _fallback(spec, x, p, ok):
    p = p.copy()
    idx = np.argwhere(~ok)
    for i in map(tuple, idx):
        p[i] = _sampled_projection(spec, x[i])
    return p


def _sampled_projection(spec, x, m=20000, seed=0):
    rng = np.random.default_rng(seed)
    th = rng.normal(size=(m, x.shape[-1]))
    th /= np.linalg.norm(th, axis=-1, keepdims=True)
    thc = _to_complex(th)
    pts = radial_function(spec, thc)[:, None] * th
    return pts[np.argmin(np.linalg.norm(pts - x, axis=-1))]


def _perturbed_project(spec, x, iters=60):
    """Nearest point on rho0 = 0 by Newton on the Lagrange system from the radial guess."""
    x = np.asarray(x, dtype=float)
    flat = x.reshape(-1, x.shape[-1])
    m = flat.shape[-1]
    r = np.linalg.norm(flat, axis=-1)
    th = flat / np.where(r > 0, r, 1)[:, None]
    th[r == 0] = np.eye(m)[0]
    p = radial_function(spec, _to_complex(th))[:, None] * th
    lam = np.zeros(len(flat))
    eps, om = spec.params
    for _ in range(iters):
        g = 2 * p - eps * om * np.sin(om * p)
        H = np.zeros((len(flat), m, m))
        H[:, range(m), range(m)] = 2 - eps * om * om * np.cos(om * p)
        val = np.sum(p * p, axis=-1) - 1 + eps * np.sum(np.cos(om * p), axis=-1)
        # F(p, lam) = [p - x + lam g ; rho(p)]
        F = np.concatenate([p - flat + lam[:, None] * g, val[:, None]], axis=-1)
        J = np.zeros((len(flat), m + 1, m + 1))
        J[:, :m, :m] = np.eye(m) + lam[:, None, None] * H
        J[:, :m, m] = g
        J[:, m, :m] = g
        step = np.linalg.solve(J, F[..., None])[..., 0]
        p = p - step[:, :m]
        lam = lam - step[:, m]
        if np.max(np.abs(step)) < 1e-14:
            break
    return p.reshape(x.shape)


def signed_distance(spec, z):
    """Negative inside D, positive outside."""
    _, d = boundary_projection(spec, z)
    inside = rho0(spec, z) < 0
    return np.where(inside, -d, d)


@dataclass(frozen=True)
class TubeRegion:
    delta: float
    kind: str  # outer | inner | shell | boundary

    def contains(self, spec, z, tol=1e-12):
        sd = signed_distance(spec, z)
        if self.kind == "outer":
            return sd < self.delta
        if self.kind == "inner":
            return sd < -self.delta
        if self.kind == "shell":
            return (sd >= 0) & (sd < self.delta)
        if self.kind == "boundary":
            return np.abs(sd) <= tol
        raise ValueError(f"unknown tube kind {self.kind}")


def distance_and_region(spec, z, delta):
    """(d, flags) with d = distance to the boundary and tube memberships."""
    if not 0 < delta <= spec.delta_max:
        raise ValueError(f"delta must lie in (0, {spec.delta_max}]")
    sd = signed_distance(spec, z)
    d = np.abs(sd)
    flags = {
        "inside": sd < 0,
        "outer": sd < delta,
        "inner": sd < -delta,
        "shell": (sd >= 0) & (sd < delta),
    }
    return d, flags


# ---------------------------------------------------------------------------
# boundary charts

@dataclass
class BoundaryChart:
    """Chart near ``base`` with coordinates (s1, s2, t) relative to a target z."""

    spec: DomainSpec
    base: np.ndarray
    radius: float
    frame: np.ndarray = field(repr=False, default=None)
    c_star: float = float("nan")
    c_star_plus: float = float("nan")

    def __post_init__(self):
        _, d, _ = eval_defining(self.spec, self.base)
        nu = np.conj(d) / np.linalg.norm(d)
        M = np.column_stack([nu] + [np.eye(self.spec.n)[k] for k in range(self.spec.n)])
        Q, _ = np.linalg.qr(M)
        Q[:, 0] = nu
        self.frame = Q[:, 1:self.spec.n]
        self._dbase = d

    def in_patch(self, zeta):
        zeta = np.asarray(zeta, dtype=complex)
        r = np.linalg.norm(zeta, axis=-1)
        th = zeta / np.where(r > 0, r, 1)[..., None]
        b = self.base / np.linalg.norm(self.base)
        return np.linalg.norm(th - b, axis=-1) < self.radius

    def coords(self, z, zeta):
        zeta = np.asarray(zeta, dtype=complex)
        w = zeta - np.asarray(z, dtype=complex)
        s1 = rho0(self.spec, zeta)
        s2 = np.imag(np.sum(self._dbase * w, axis=-1))
        tc = w @ np.conj(self.frame)
        t = np.concatenate([tc.real, tc.imag], axis=-1)
        return s1, s2, t


def chart_centers(n):
    """Plus/minus real and imaginary coordinate directions (4n points)."""
    out = []
    for j in range(n):
        for v in (1, -1, 1j, -1j):
            e = np.zeros(n, dtype=complex)
            e[j] = v
            out.append(e)
    return np.array(out)


def build_charts(spec, z, samples=10000, seed=0, radius=None, phi=None):
    """Charts covering the boundary, with measured lower-bound constants.

    ``phi(z, zeta)`` defaults to the convex Leray function
    ``d rho0(zeta) . (zeta - z)``.  Raises if a measured constant is not
    positive.
    """
    z = np.asarray(z, dtype=complex)
    if phi is None:
        def phi(zz, ze):
            _, d, _ = eval_defining(spec, ze)
            return np.sum(d * (ze - zz), axis=-1)
    radius = radius if radius is not None else (1.05 if spec.n > 1 else 0.8)
    rng = np.random.default_rng(seed)
    dz = float(boundary_projection(spec, z[None])[1][0])
    charts = []
    for c in chart_centers(spec.n):
        th = c / np.linalg.norm(c)
        base = radial_function(spec, th[None])[0] * th
        ch = BoundaryChart(spec, base, radius)
        # sample shell points whose direction lies in the patch
        g = rng.normal(size=(samples, spec.n)) + 1j * rng.normal(size=(samples, spec.n))
        g /= np.linalg.norm(g, axis=-1, keepdims=True)
        u = rng.uniform(0, 1, size=samples) ** 2
        dirs = th + ch.radius * 0.999 * u[:, None] * g
        dirs /= np.linalg.norm(dirs, axis=-1, keepdims=True)
        dirs = dirs[ch.in_patch(dirs)]
        mu = 1.0 + spec.delta_max * rng.uniform(0, 1, size=len(dirs)) ** 3
        zeta = (mu * radial_function(spec, dirs))[:, None] * dirs
        s1, s2, t = ch.coords(z, zeta)
        ph = np.abs(phi(z, zeta))
        lower = dz + s1 + np.abs(s2) + np.sum(t * t, axis=-1)
        ratio = ph / lower
        w = np.linalg.norm(zeta - z, axis=-1)
        plus = np.minimum(ph / w ** 2, w / np.sqrt(s2 ** 2 + np.sum(t * t, axis=-1) + 1e-300))
        ch.c_star = float(np.min(ratio))
        ch.c_star_plus = float(np.min(plus))
        if not ch.c_star > 0:
            i = int(np.argmin(ratio))
            raise ValueError(f"chart lower bound fails at z={z}, zeta={zeta[i]}")
        ch.samples = (zeta, s1, s2, t, ph, ratio)
        charts.append(ch)
    return charts


def chart_csv_rows(chart):
    zeta, s1, s2, t, ph, ratio = chart.samples
    rows = ["zeta_index,s1,s2,t_norm,phi_abs,bound_ratio"]
    tn = np.linalg.norm(t, axis=-1)
    for i in range(len(zeta)):
        rows.append(f"{i},{s1[i]:.12e},{s2[i]:.12e},{tn[i]:.12e},{ph[i]:.12e},{ratio[i]:.12e}")
    return "\n".join(rows) + "\n"


def levi_check(spec, samples=2000, seed=0, regularized=True):
    """Smallest eigenvalue of the Levi matrix over boundary samples.

    Raises with the offending point when it is not positive.
    """
    rng = np.random.default_rng(seed)
    th = rng.normal(size=(samples, spec.n)) + 1j * rng.normal(size=(samples, spec.n))
    th /= np.linalg.norm(th, axis=-1, keepdims=True)
    pts = radial_function(spec, th)[:, None] * th
    _, _, L = eval_defining(spec, pts, regularized=regularized)
    ev = np.linalg.eigvalsh(L)[:, 0]
    i = int(np.argmin(ev))
    if ev[i] <= 0:
        raise ValueError(f"Levi form not positive at {pts[i]}: eigenvalue {ev[i]:.3e}")
    return float(ev[i])


def regularize_defining(spec, h=None, check=True):
    """Whitney-regularized defining function E_2(exp(L0 rho0) - 1).

    Returns a :class:`dbarlab.ext.RegularizedDefining` evaluator.
    """
    from .ext import RegularizedDefining

    if check:
        levi_check(spec)
    return RegularizedDefining(spec, h=h)


__all__ = [
    "DomainSpec", "TubeRegion", "BoundaryChart", "eval_defining", "regularize_defining",
    "distance_and_region", "build_charts", "gauge", "radial_function", "boundary_projection",
    "signed_distance", "levi_check", "rho_parts", "rho0_parts", "chart_csv_rows",
]
