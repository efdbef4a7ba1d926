"""Quadrature over D, the shell, the boundary and target-centred balls.

All meshes come from a star-shaped description: a direction rule on the
unit sphere of C^n times a radial Gauss rule.  Sums are compensated
(math.fsum on real and imaginary parts) so results are deterministic and
independent of summation order.
"""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass, field

import numpy as np
from numpy.polynomial import legendre
from scipy.special import beta as beta_fn

from .geometry import DomainSpec, eval_defining, gauge, radial_function, rho0

SINGULAR_FLOOR = 1e-14


# ---------------------------------------------------------------------------
# one-dimensional rules

def gauss(a, b, m):
    x, w = legendre.leggauss(m)
    return 0.5 * (b - a) * x + 0.5 * (b + a), 0.5 * (b - a) * w


def graded_panels(a, b, first, ratio=2.0):
    """Break points a, a+first, a+first*ratio, ... , b (geometric toward a)."""
    pts = [a]
    step = first
    while pts[-1] + step < b - 1e-15 * abs(b):
        pts.append(pts[-1] + step)
        step *= ratio
    pts.append(b)
    return np.array(pts)


def composite_gauss(breaks, m):
    xs, ws = [], []
    for a, b in zip(breaks[:-1], breaks[1:]):
        x, w = gauss(a, b, m)
        xs.append(x)
        ws.append(w)
    return np.concatenate(xs), np.concatenate(ws)


def fsum_complex(values):
    v = np.asarray(values).ravel()
    if np.iscomplexobj(v):
        return complex(math.fsum(v.real), math.fsum(v.imag))
    return math.fsum(v)


# ---------------------------------------------------------------------------
# unit sphere of C^n:  theta_j = sqrt(p_j) e^{i a_j}, p on the simplex,
# d sigma = 2^{1-n} dp_1 .. dp_{n-1} da_1 .. da_n

@dataclass
class SphereRule:
    n: int
    theta: np.ndarray    # (M, n)
    weights: np.ndarray  # (M,)


def level_counts(level):
    """Angular, simplex and radial node counts for a refinement level."""
    return {"angle": 4 + 4 * level, "simplex": 2 + 2 * level, "radial": 2 + 2 * level}


def sphere_rule(n, n_angle, n_simplex):
    a = 2 * np.pi * np.arange(n_angle) / n_angle
    wa = np.full(n_angle, 2 * np.pi / n_angle)
    if n == 1:
        return SphereRule(1, np.exp(1j * a)[:, None], wa)
    if n == 2:
        p, wp = gauss(0.0, 1.0, n_simplex)
        P = [p, 1 - p]
        Wp = wp * 0.5
    elif n == 3:
        u, wu = gauss(0.0, 1.0, n_simplex)
        v, wv = gauss(0.0, 1.0, n_simplex)
        U, V = np.meshgrid(u, v, indexing="ij")
        WU, WV = np.meshgrid(wu, wv, indexing="ij")
        p1 = U.ravel()
        p2 = ((1 - U) * V).ravel()
        P = [p1, p2, 1 - p1 - p2]
        Wp = (WU * WV * (1 - U)).ravel() * 0.25
    else:
        raise ValueError("sphere rules implemented for n <= 3")
    grids = np.meshgrid(np.arange(len(Wp)), *([np.arange(n_angle)] * n), indexing="ij")
    ip = grids[0].ravel()
    theta = np.empty((ip.size, n), dtype=complex)
    w = Wp[ip].copy()
    for j in range(n):
        ia = grids[j + 1].ravel()
        theta[:, j] = np.sqrt(np.maximum(P[j][ip], 0.0)) * np.exp(1j * a[ia])
        w *= wa[ia]
    return SphereRule(n, theta, w)


def sphere_area(n):
    return 2 * np.pi ** n / math.factorial(n - 1)


def ball_volume(n, r=1.0):
    return np.pi ** n / math.factorial(n) * r ** (2 * n)


# ---------------------------------------------------------------------------
# meshes

@dataclass
class QuadratureMesh:
    nodes: np.ndarray            # (M, n) complex
    weights: np.ndarray          # (M,) positive
    kind: str
    level: int | None = None
    target: np.ndarray | None = None
    radii: np.ndarray | None = None
    normals: np.ndarray | None = None   # unit outward normals (boundary meshes)
    mu: np.ndarray | None = None        # gauge values (shell meshes)
    extra: dict = field(default_factory=dict)

    @property
    def measure(self):
        return math.fsum(self.weights)

    def __len__(self):
        return len(self.weights)


def boundary_normal(spec, zeta):
    """Unit outward normal as a complex vector nu_x + i nu_y."""
    _, d, _ = eval_defining(spec, zeta)
    nu = np.conj(d)
    return nu / np.linalg.norm(nu, axis=-1, keepdims=True)


def boundary_mesh(spec: DomainSpec, n_angle, n_simplex):
    """dS = R^{2n-1} d sigma / (theta . nu)."""
    sr = sphere_rule(spec.n, n_angle, n_simplex)
    R = radial_function(spec, sr.theta)
    zeta = R[:, None] * sr.theta
    nu = boundary_normal(spec, zeta)
    cosang = np.real(np.sum(np.conj(sr.theta) * nu, axis=-1))
    w = R ** (2 * spec.n - 1) * sr.weights / cosang
    return QuadratureMesh(zeta, w, "boundary", normals=nu)


def shell_mesh(spec: DomainSpec, delta, n_angle, n_simplex, n_radial, mu_breaks=None):
    """Gauge shell 1 < mu < 1 + delta, dV = mu^{2n-1} R^{2n} d mu d sigma."""
    n = spec.n
    sr = sphere_rule(n, n_angle, n_simplex)
    R = radial_function(spec, sr.theta)
    if mu_breaks is None:
        mu_breaks = np.array([1.0, 1.0 + delta / 2, 1.0 + delta])
    mu, wmu = composite_gauss(np.asarray(mu_breaks), n_radial)
    nodes = (mu[:, None, None] * (R[:, None] * sr.theta)[None]).reshape(-1, n)
    w = (wmu[:, None] * mu[:, None] ** (2 * n - 1) * (R ** (2 * n) * sr.weights)[None]).ravel()
    mus = np.repeat(mu, len(R))
    return QuadratureMesh(nodes, w, "shell", mu=mus)


def exit_distance(spec: DomainSpec, z, omega, level=1.0):
    """r > 0 with gauge(z + r omega) = level, for z with gauge(z) < level."""
    z = np.asarray(z, dtype=complex)
    if spec.kind in ("unit-ball", "ellipsoid"):
        a = spec.weights
        A = np.sum(a * np.abs(omega) ** 2, axis=-1)
        B = np.sum(a * np.real(np.conj(z) * omega), axis=-1)
        C = np.sum(a * np.abs(z) ** 2) - level ** 2
        return (-B + np.sqrt(B * B - A * C)) / A
    lo = np.zeros(len(omega))
    hi = np.full(len(omega), 4.0 * level)
    for _ in range(60):
        mid = 0.5 * (lo + hi)
        inside = gauge(spec, z + mid[:, None] * omega) < level
        lo = np.where(inside, mid, lo)
        hi = np.where(inside, hi, mid)
    return 0.5 * (lo + hi)


def polar_mesh(spec: DomainSpec, z, n_angle, n_simplex, n_radial, level=1.0, r_min=0.0,
               grading=None):
    """Ball-in-direction mesh {z + r omega: r_min < r < exit} centred at z.

    dV = r^{2n-1} dr d sigma.  With ``grading`` (a first panel length) the
    radial panels are geometric toward r_min.
    """
    n = spec.n
    sr = sphere_rule(n, n_angle, n_simplex)
    rexit = exit_distance(spec, z, sr.theta, level)
    if grading is None:
        x, wx = gauss(0.0, 1.0, n_radial)
        r = r_min + (rexit - r_min)[:, None] * x[None]
        wr = (rexit - r_min)[:, None] * wx[None]
    else:
        rows_r, rows_w = [], []
        for re_ in rexit:
            br = graded_panels(r_min, re_, grading)
            xr, wr_ = composite_gauss(br, n_radial)
            rows_r.append(xr)
            rows_w.append(wr_)
        width = max(len(x) for x in rows_r)
        r = np.zeros((len(rexit), width))
        wr = np.zeros((len(rexit), width))
        for i, (xr, wr_) in enumerate(zip(rows_r, rows_w)):
            r[i, :len(xr)] = xr
            wr[i, :len(xr)] = wr_
            r[i, len(xr):] = xr[-1]
    nodes = z[None, None, :] + r[:, :, None] * sr.theta[:, None, :]
    w = wr * r ** (2 * n - 1) * sr.weights[:, None]
    keep = w.ravel() > 0
    return QuadratureMesh(nodes.reshape(-1, n)[keep], w.ravel()[keep], "polar",
                          target=np.asarray(z), radii=r.ravel()[keep])


def polar_shell_mesh(spec, z, n_angle, n_simplex, n_radial, delta):
    """Polar mesh around z restricted to 1 < mu < 1 + delta (two panels per ray)."""
    n = spec.n
    sr = sphere_rule(n, n_angle, n_simplex)
    r1 = exit_distance(spec, z, sr.theta, 1.0)
    r2 = exit_distance(spec, z, sr.theta, 1.0 + delta / 2)
    r3 = exit_distance(spec, z, sr.theta, 1.0 + delta)
    x, wx = gauss(0.0, 1.0, n_radial)
    rs, ws = [], []
    for a, b in ((r1, r2), (r2, r3)):
        rs.append(a[:, None] + (b - a)[:, None] * x[None])
        ws.append((b - a)[:, None] * wx[None])
    r = np.concatenate(rs, axis=1)
    wr = np.concatenate(ws, axis=1)
    nodes = z[None, None, :] + r[:, :, None] * sr.theta[:, None, :]
    w = wr * r ** (2 * n - 1) * sr.weights[:, None]
    return QuadratureMesh(nodes.reshape(-1, n), w.ravel(), "polar-shell", target=np.asarray(z),
                          radii=r.ravel())


def build_mesh(region, h, grading=None, spec=None, delta=None, h_min=None):
    """Mesh of ``region`` in {"domain", "shell", "boundary"} at spacing h.

    ``region`` may also be a (kind, spec) pair.  With ``grading`` = z the
    domain mesh is polar around z with dyadic radial panels (ratio 1/2)
    down to ``h_min``; the ball of radius h_min about z is excluded.
    """
    if isinstance(region, tuple):
        region, spec = region
    spec = spec or DomainSpec("unit-ball", 2)
    if h <= 0:
        raise ValueError("h must be positive")
    if h > 1.0:
        raise ValueError("region empty at this resolution")
    n_angle = max(8, int(math.ceil(2.0 / h)))
    n_simplex = max(4, int(math.ceil(0.5 / h)))
    n_radial = max(3, int(math.ceil(0.5 / h)))
    if region == "boundary":
        m = boundary_mesh(spec, n_angle, n_simplex)
    elif region == "shell":
        d = delta if delta is not None else spec.delta_max
        m = shell_mesh(spec, d, n_angle, n_simplex, max(3, int(math.ceil(d / h))))
    elif region == "domain":
        if grading is not None:
            z = np.asarray(grading, dtype=complex)
            hm = h_min if h_min is not None else h / 16
            m = polar_mesh(spec, z, n_angle, n_simplex, 4, r_min=hm, grading=hm)
            m.extra["h_min"] = hm
        else:
            m = polar_mesh(spec, np.zeros(spec.n, dtype=complex), n_angle, n_simplex, n_radial)
    else:
        raise ValueError(f"unknown region {region!r}")
    m.extra["h"] = h
    return m


# ---------------------------------------------------------------------------
# singular integration

@dataclass
class IntegralResult:
    value: complex
    estimate: float
    floor_count: int
    flagged: bool
    levels: list = field(default_factory=list)


def singular_integrate(kernel, density, mesh_or_builder, levels=None, tol=None, floor=SINGULAR_FLOOR):
    """Compensated sum of kernel * density * weight.

    ``kernel(nodes) -> (values, phi)`` where phi is the quantity checked
    against the singularity floor (pass phi = None to skip).  ``density``
    is a callable on nodes or a constant.  With a builder ``level -> mesh``
    and ``levels`` the last two levels give the refinement estimate.
    """
    if callable(mesh_or_builder) and not isinstance(mesh_or_builder, QuadratureMesh):
        levels = list(levels or (3, 4))
        meshes = [mesh_or_builder(L) for L in levels]
    else:
        meshes = [mesh_or_builder]
    vals = []
    count = 0
    for mesh in meshes:
        dens = density(mesh.nodes) if callable(density) else np.full(len(mesh), density)
        if np.all(dens == 0):
            vals.append(0.0)
            continue
        kv, phi = kernel(mesh.nodes)
        keep = np.ones(len(mesh), dtype=bool)
        if phi is not None:
            keep = np.abs(phi) >= floor
            count = int(np.sum(~keep))
        vals.append(fsum_complex((kv * dens * mesh.weights)[keep]))
    est = abs(vals[-1] - vals[-2]) if len(vals) > 1 else float("nan")
    flagged = tol is not None and not est <= tol
    return IntegralResult(vals[-1], est, count, flagged, vals)


def cauchy_transform_disk(z, level=4):
    """(1/pi) int_{|zeta|<1} dA(zeta) / (z - zeta), polar around z (equals conj z)."""
    spec = DomainSpec("unit-ball", 1)
    c = level_counts(level)

    def builder(L):
        cc = level_counts(L)
        return polar_mesh(spec, np.array([z], dtype=complex), cc["angle"] * 2, 1, cc["radial"])

    def kern(nodes):
        w = z - nodes[:, 0]
        return 1.0 / (np.pi * w), w

    del c
    return singular_integrate(kern, 1.0, builder, levels=(level - 1, level))


# ---------------------------------------------------------------------------
# scaling probes

def _box_integral(f, s_lo, s_hi, t_hi, s_first, t_first, m=16):
    s, ws = composite_gauss(graded_panels(s_lo, s_hi, s_first), m)
    t, wt = composite_gauss(graded_panels(0.0, t_hi, t_first), m)
    S, T = np.meshgrid(s, t, indexing="ij")
    return fsum_complex(f(S, T) * np.outer(ws, wt))


def interior_integral(delta, alpha, beta):
    """int_0^1 int_0^1 s^{a+1} / (delta + s + t^2)^{3+b} dt ds."""
    return _box_integral(lambda s, t: s ** (alpha + 1) / (delta + s + t * t) ** (3 + beta),
                         0.0, 1.0, 1.0, delta * 1e-3, math.sqrt(delta) * 1e-2)


def band_integral(delta, alpha, beta):
    """int_delta^{2 delta} int_0^1 s^{a+1} / (s + t^2)^{1+b} dt ds."""
    return _box_integral(lambda s, t: s ** (alpha + 1) / (s + t * t) ** (1 + beta),
                         delta, 2 * delta, 1.0, delta, math.sqrt(delta) * 1e-2)


def projection_integral(delta, alpha, n):
    """int_0^1 int_0^1 s^{a+1} t^{2n-3} / (delta + s + t^2)^{n+2} dt ds."""
    return _box_integral(lambda s, t: s ** (alpha + 1) * t ** (2 * n - 3) / (delta + s + t * t) ** (n + 2),
                         0.0, 1.0, 1.0, delta * 1e-3, math.sqrt(delta) * 1e-2)


def interior_constant(alpha, beta):
    """Limit of I(delta) delta^{-(a - 1/2 - b)}: 1/2 B(1/2, b + 5/2) B(a + 2, b + 1/2 - a)."""
    return 0.5 * beta_fn(0.5, beta + 2.5) * beta_fn(alpha + 2, beta + 0.5 - alpha)


def projection_constant(alpha, n):
    """Limit of I(delta) delta^{1 - a}: 1/2 B(n - 1, 3) B(a + 2, 1 - a)."""
    return 0.5 * beta_fn(n - 1, 3) * beta_fn(alpha + 2, 1 - alpha)


def band_constant(alpha, beta):
    """Limit of J(delta) delta^{-(a - b + 3/2)}: 1/2 B(1/2, b + 1/2) (2^{a-b+3/2} - 1)/(a-b+3/2)."""
    e = alpha - beta + 1.5
    return 0.5 * beta_fn(0.5, beta + 0.5) * (2.0 ** e - 1) / e


DEFAULT_DELTAS = 2.0 ** -np.arange(12, 21)


@dataclass
class ProbeReport:
    name: str
    params: dict
    deltas: np.ndarray
    values: np.ndarray
    slope: float
    intercept: float
    target: float
    oracle_constant: float | None = None

    @property
    def ok(self):
        return abs(self.slope - self.target) <= 0.05

    @property
    def constant(self):
        return math.exp(self.intercept)

    def to_csv(self):
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["delta", "I", "slope"])
        for d, v in zip(self.deltas, self.values):
            w.writerow([f"{d:.12e}", f"{v:.12e}", f"{self.slope:.12e}"])
        return buf.getvalue()


def _probe(name, fn, deltas, target, params, const=None):
    from .normlab import ExponentFit

    deltas = np.asarray(deltas if deltas is not None else DEFAULT_DELTAS, dtype=float)
    vals = np.array([fn(d) for d in deltas])
    fit = ExponentFit().fit(deltas, vals)
    return ProbeReport(name, params, deltas, vals, fit.slope_, fit.intercept_, target, const)


def scaling_probe_interior(alpha, beta, deltas=None, band=False):
    if not 0 <= alpha < beta + 0.5:
        raise ValueError("need 0 <= alpha < beta + 1/2")
    if band:
        return _probe("band", lambda d: band_integral(d, alpha, beta), deltas,
                      alpha - beta + 1.5, {"alpha": alpha, "beta": beta},
                      band_constant(alpha, beta))
    return _probe("interior", lambda d: interior_integral(d, alpha, beta), deltas,
                  alpha - 0.5 - beta, {"alpha": alpha, "beta": beta},
                  interior_constant(alpha, beta))


def fit_constant(deltas, values, exponent):
    """C in values ~ C delta^exponent + c0 (exponent fixed)."""
    X = np.stack([np.asarray(deltas) ** exponent, np.ones(len(deltas))], axis=1)
    coef, *_ = np.linalg.lstsq(X, np.asarray(values), rcond=None)
    return float(coef[0])


def projection_constant_growth(alphas=(0.5, 0.75, 0.9), n=2, deltas=None):
    """Extracted constants C(alpha) and whether C(alpha)(1 - alpha) is non-decreasing.

    The latter means C grows at least linearly in 1/(1 - alpha).
    """
    deltas = np.asarray(deltas if deltas is not None else DEFAULT_DELTAS, dtype=float)
    consts = []
    for a in alphas:
        vals = [projection_integral(d, a, n) for d in deltas]
        consts.append(fit_constant(deltas, vals, a - 1))
    scaled = [c * (1 - a) for c, a in zip(consts, alphas)]
    ok = all(y >= x * (1 - 1e-9) for x, y in zip(scaled, scaled[1:]))
    return consts, scaled, ok


def scaling_probe_projection(alpha, n=2, deltas=None):
    if not (0 <= alpha < 1 and n >= 2):
        raise ValueError("need 0 <= alpha < 1 and n >= 2")
    return _probe("projection", lambda d: projection_integral(d, alpha, n), deltas, alpha - 1,
                  {"alpha": alpha, "n": n}, projection_constant(alpha, n))


# ---------------------------------------------------------------------------
# singular Stokes identity on the unit disk

def _disk_rule(n_r, n_a, grade=1e-8):
    br = 1.0 - graded_panels(0.0, 1.0, grade)[::-1]
    r, wr = composite_gauss(br, n_r)
    a = 2 * np.pi * np.arange(n_a) / n_a
    R, A = np.meshgrid(r, a, indexing="ij")
    W = np.outer(wr * r, np.full(n_a, 2 * np.pi / n_a))
    return np.stack([R * np.cos(A), R * np.sin(A)], axis=-1).reshape(-1, 2), W.ravel()


def _growth_exponent(fn, d_values):
    from .normlab import ExponentFit

    rng = np.random.default_rng(0)
    ang = rng.uniform(0, 2 * np.pi, 32)
    sups = []
    for d in d_values:
        x = (1 - d) * np.stack([np.cos(ang), np.sin(ang)], -1)
        sups.append(np.max(np.abs(fn(x))))
    return ExponentFit(floor=1e-300).fit(d_values, sups).slope_


def singular_stokes_check(B, S, m, b, dB=None, dS=None, levels=(3, 4, 5), j=0, validate=True):
    """Residual |int_V (B d_j S + S d_j B)| on the unit disk under refinement.

    B, S map points (P, 2) to values; dB, dS give gradients (P, 2) (central
    differences when omitted).  Inputs with m + b <= 0 are rejected, and
    the stated growth exponents are checked by sampling near the circle.
    """
    if m + b <= 0:
        raise ValueError("growth preconditions violated: need m + b > 0")
    if validate:
        ds = 2.0 ** -np.arange(6, 14)
        if _growth_exponent(S, ds) < m - 0.1:
            raise ValueError("S does not vanish to order m at the boundary")
        if b < 0 and _growth_exponent(B, ds) < b - 0.1:
            raise ValueError("B grows faster than d^b at the boundary")

    def grad(f, x):
        # step shrinks with the distance to the circle so stencils stay inside
        h = 1e-4 * (1.0 - np.linalg.norm(x, axis=-1))[:, None]
        g = np.empty_like(x)
        for i in range(2):
            e = np.zeros(2)
            e[i] = 1.0
            g[:, i] = (f(x + h * e) - f(x - h * e)) / (2 * h[:, 0])
        return g

    res = []
    for L in levels:
        x, w = _disk_rule(2 + 2 * L, 8 * 2 ** L)
        gs = dS(x) if dS else grad(S, x)
        gb = dB(x) if dB else grad(B, x)
        val = B(x) * gs[:, j] + S(x) * gb[:, j]
        res.append(abs(fsum_complex(val * w)))
    return res[-1], res




def _two_sided_graded(a, b, first, ratio=2.0):
    """Breaks on [a, b] graded geometrically toward 0 from both sides (a < 0 < b)."""
    right = graded_panels(0.0, b, first, ratio)
    left = -graded_panels(0.0, -a, first, ratio)[::-1]
    return np.concatenate([left[:-1], right])


def point_graded_shell_mesh(n, delta, d_min, panel_nodes=4, n_arg=12, ratio=2.0):
    """Shell {1 < |zeta| < 1 + delta} of the unit ball graded toward p = e_1.

    Coordinates (mu, psi, tau): zeta_1 = mu sqrt(1 - |tau|^2) e^{i psi},
    zeta_2 = mu tau (n = 2), so dV = mu^{2n-1} dmu dpsi dA(tau).  mu - 1 and
    psi are graded down to d_min / 8 and |tau| down to sqrt(d_min) / 8,
    which resolves |Phi| ~ d + (mu - 1) + |psi| + |tau|^2 at every target
    (1 - d) e_1 with d >= d_min.  The mu breaks include 1 + delta/2 and
    1 + 3 delta/4 so the cutoff transition is panel-aligned.
    """
    if n not in (1, 2):
        raise ValueError("point-graded shell mesh implemented for n = 1, 2")
    first = d_min / 8
    mb = graded_panels(1.0, 1.0 + delta / 2, first, ratio)
    mb = np.concatenate([mb, [1.0 + 3 * delta / 4, 1.0 + delta]])
    mu, wmu = composite_gauss(mb, panel_nodes)
    psi, wpsi = composite_gauss(_two_sided_graded(-np.pi, np.pi, first, ratio), panel_nodes)
    if n == 1:
        M, P = np.meshgrid(mu, psi, indexing="ij")
        W = np.outer(wmu * mu, wpsi)
        nodes = (M * np.exp(1j * P)).reshape(-1, 1)
        return QuadratureMesh(nodes, W.ravel(), "shell-graded", mu=M.ravel())
    rb = graded_panels(0.0, 1.0, np.sqrt(d_min) / 8, ratio)
    rt, wrt = composite_gauss(rb, panel_nodes)
    al = 2 * np.pi * np.arange(n_arg) / n_arg
    wal = np.full(n_arg, 2 * np.pi / n_arg)
    M, P, R, A = np.meshgrid(mu, psi, rt, al, indexing="ij")
    W = (wmu * mu ** 3)[:, None, None, None] * wpsi[None, :, None, None] \
        * (wrt * rt)[None, None, :, None] * wal[None, None, None, :]
    tau = R * np.exp(1j * A)
    z1 = M * np.sqrt(1 - R ** 2) * np.exp(1j * P)
    nodes = np.stack([z1.ravel(), (M * tau).ravel()], axis=-1)
    return QuadratureMesh(nodes, W.ravel(), "shell-graded", mu=M.ravel())


__all__ = [
    "QuadratureMesh", "SphereRule", "sphere_rule", "boundary_mesh", "shell_mesh", "polar_mesh",
    "polar_shell_mesh", "build_mesh", "exit_distance", "singular_integrate", "IntegralResult",
    "cauchy_transform_disk", "scaling_probe_interior", "scaling_probe_projection",
    "singular_stokes_check", "interior_constant", "projection_constant", "band_constant",
    "interior_integral", "band_integral", "projection_integral", "level_counts", "fsum_complex",
    "sphere_area", "ball_volume", "boundary_normal", "gauss", "composite_gauss", "graded_panels",
    "fit_constant", "projection_constant_growth", "point_graded_shell_mesh",
]
