"""Cauchy-Fantappie forms, their bidegree parts and the Koppelman identities.

Conventions: ``w = zeta - z`` and ``dw`` is expanded with its ``dzeta``
part only.  Terms carrying ``dz`` never reach a (0, q)-in-z component, so
dropping them loses nothing we integrate.  Kernel coefficients are
evaluated from component lists ``z, zb, ze, zeb`` (arrays or jets).
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field

import numpy as np

from . import autodiff as ad
from .forms import (FormExpr, ZBAR, ZETA, ZETABAR, dbar_jet, max_abs_diff, max_abs,
                    signed_pullback_rule)
from .leray import LerayMap

TWO_PI_I = 2j * np.pi


def _dot(g, w):
    out = 0.0
    for a, b in zip(g, w):
        out = a * b + out
    return out


def g_dw(n, g):
    """The 1-form sum g_j dzeta_j."""
    return FormExpr.one_form(n, ZETA, g)


def dbar_g_dw(n, Gz, Gze):
    """dbar(g . dw) = sum_jk (dg_j/dzbar_k dzbar_k + dg_j/dzetabar_k dzetabar_k) ^ dzeta_j."""
    out = FormExpr(n)
    for j in range(n):
        for k in range(n):
            for kind, G in ((ZBAR, Gz), (ZETABAR, Gze)):
                c = G[j][k]
                if isinstance(c, (int, float)) and c == 0:
                    continue
                out = out + FormExpr.gen(n, kind, k, c).wedge(FormExpr.gen(n, ZETA, j))
    return out


def cf_form(lmap: LerayMap, z, zb, ze, zeb, floor=0.0):
    """omega = (1/2 pi i) g.dw / g.w."""
    n = lmap.n
    g = lmap.g(z, zb, ze, zeb)
    phi = _dot(g, [ze[j] - z[j] for j in range(n)])
    _check_floor(phi, floor)
    return g_dw(n, g).scale(1.0 / (phi * TWO_PI_I))


def cf_power(lmap: LerayMap, alpha, z, zb, ze, zeb, floor=0.0):
    """omega ^ (dbar omega)^alpha by the closed form."""
    n = lmap.n
    g = lmap.g(z, zb, ze, zeb)
    Gz, Gze = lmap.dbar_g(z, zb, ze, zeb)
    phi = _dot(g, [ze[j] - z[j] for j in range(n)])
    _check_floor(phi, floor)
    num = g_dw(n, g).wedge(dbar_g_dw(n, Gz, Gze).power(alpha))
    return num.scale(1.0 / (phi * TWO_PI_I) ** (alpha + 1))


def omega(lmap, z, zb, ze, zeb, floor=0.0):
    """Omega = omega ^ (dbar omega)^(n-1)."""
    return cf_power(lmap, lmap.n - 1, z, zb, ze, zeb, floor)


def omega01(map0: LerayMap, map1: LerayMap, z, zb, ze, zeb, floor=0.0):
    """omega0 ^ omega1 ^ sum_{a+b=n-2} (dbar omega0)^a ^ (dbar omega1)^b."""
    n = map0.n
    if n < 2:
        return FormExpr(n)
    g0 = map0.g(z, zb, ze, zeb)
    g1 = map1.g(z, zb, ze, zeb)
    w = [ze[j] - z[j] for j in range(n)]
    p0, p1 = _dot(g0, w), _dot(g1, w)
    _check_floor(p0, floor)
    _check_floor(p1, floor)
    B0 = dbar_g_dw(n, *map0.dbar_g(z, zb, ze, zeb))
    B1 = dbar_g_dw(n, *map1.dbar_g(z, zb, ze, zeb))
    head = g_dw(n, g0).wedge(g_dw(n, g1))
    total = FormExpr(n)
    for a in range(n - 1):
        b = n - 2 - a
        term = head.wedge(B0.power(a)).wedge(B1.power(b))
        total = total + term.scale(1.0 / (p0 ** (a + 1) * p1 ** (b + 1)))
    return total.scale(1.0 / TWO_PI_I ** n)


def _check_floor(phi, floor):
    if floor > 0:
        v = np.abs(ad.value(phi))
        if np.any(v < floor):
            raise FloatingPointError("too close to diagonal: |g.w| below the singularity floor")


def bidegree_split(K: FormExpr, family="omega"):
    """Dict q -> (0,q)-in-z component; out-of-range q are absent (zero)."""
    n = K.n
    out = {}
    for m, c in K.terms.items():
        a, b, cc = K.grading(m)
        out.setdefault(a, FormExpr(n))
        out[a] = out[a] + FormExpr(n, {m: c})
    return out


def component(K: FormExpr, q):
    """The (0,q)-in-z part, zero for q outside 0..n."""
    return K.degree_part(a=q) if q >= 0 else FormExpr(K.n)


def expected_grading(family, n, q):
    """(dzbar, dzeta, dzetabar) degrees of the (0,q) part."""
    if family == "omega01":
        return (q, n, n - 2 - q)
    return (q, n, n - 1 - q)


@dataclass
class KernelComponent:
    family: str
    q: int
    form: FormExpr = field(repr=False)
    phi_power: int = 0
    dist_power: int = 0

    def check_grading(self):
        n = self.form.n
        exp = expected_grading(self.family, n, self.q)
        for m in self.form.terms:
            if self.form.grading(m) != exp:
                return False
        return True


def kernel_components(lmap0, lmap1, z, zb, ze, zeb):
    """All (0,q) components of Omega0, Omega1 and Omega01 as KernelComponents."""
    n = lmap0.n
    out = []
    for fam, K in (("omega0", omega(lmap0, z, zb, ze, zeb)),
                   ("omega1", omega(lmap1, z, zb, ze, zeb)),
                   ("omega01", omega01(lmap0, lmap1, z, zb, ze, zeb))):
        for q in range(n):
            out.append(KernelComponent(fam, q, component(K, q)))
    return out


# ---------------------------------------------------------------------------
# Koppelman identities

def _jet_inputs(z, zeta):
    """Jets over (z, zeta); slots: dz 0..n-1, dzeta n..2n-1, dzbar 2n.., dzetabar 3n.."""
    n = z.shape[-1]
    w = np.concatenate([np.moveaxis(z, -1, 0), np.moveaxis(zeta, -1, 0)])
    wj, wbj = ad.Jet.variables(w)
    return wj[:n], wbj[:n], wj[n:], wbj[n:]


def koppelman_check(lmap0, lmap1, z, zeta, mode="dual", h_fd=1e-5):
    """Residuals of the two Koppelman identities at points ``z, zeta``.

    Returns ``(res1, res2)`` dicts q -> max abs residual, where

    * ``res1[q] = |dbar_zeta Omega1_q + dbar_z Omega1_{q-1}|``
    * ``res2[q] = |dbar_zeta Omega01_q + dbar_z Omega01_{q-1} - (Omega0_q - Omega1_q)|``
    """
    z = np.asarray(z, dtype=complex)
    zeta = np.asarray(zeta, dtype=complex)
    if np.any(np.linalg.norm(z - zeta, axis=-1) < 1e-12):
        raise ValueError("koppelman_check needs z != zeta")
    n = z.shape[-1]
    if mode == "dual":
        zj, zbj, ej, ebj = _jet_inputs(z, zeta)
        K1 = omega(lmap1, zj, zbj, ej, ebj)
        K01 = omega01(lmap0, lmap1, zj, zbj, ej, ebj)
        dz_slots = [2 * n + k for k in range(n)]
        de_slots = [3 * n + k for k in range(n)]
        dK1z = dbar_jet(K1, zbar_slots=dz_slots)
        dK1e = dbar_jet(K1, zetabar_slots=de_slots)
        dK01z = dbar_jet(K01, zbar_slots=dz_slots)
        dK01e = dbar_jet(K01, zetabar_slots=de_slots)
        K0v = omega(lmap0, *_plain(z, zeta)).values()
        K1v = K1.values()
    elif mode == "fd":
        dK1z, dK1e = _fd_dbar(lambda *a: omega(lmap1, *a), z, zeta, h_fd)
        dK01z, dK01e = _fd_dbar(lambda *a: omega01(lmap0, lmap1, *a), z, zeta, h_fd)
        K0v = omega(lmap0, *_plain(z, zeta))
        K1v = omega(lmap1, *_plain(z, zeta))
    else:
        raise ValueError("mode must be 'dual' or 'fd'")
    res1, res2 = {}, {}
    for q in range(n + 1):
        # dbar_zeta keeps the z-degree, dbar_z raises it by one
        lhs1 = component(dK1e, q) + component(dK1z, q)
        res1[q] = max_abs(lhs1)
        lhs2 = component(dK01e, q) + component(dK01z, q)
        rhs2 = component(K0v, q) - component(K1v, q)
        res2[q] = max_abs_diff(lhs2, rhs2)
    return res1, res2


def _plain(z, zeta):
    n = z.shape[-1]
    zc = [z[..., j] for j in range(n)]
    ec = [zeta[..., j] for j in range(n)]
    return zc, [np.conj(c) for c in zc], ec, [np.conj(c) for c in ec]


def _fd_dbar(build, z, zeta, h):
    """Central-difference dbar_z and dbar_zeta of a kernel builder."""
    n = z.shape[-1]
    outz, oute = FormExpr(n), FormExpr(n)
    for which in ("z", "zeta"):
        for k in range(n):
            e = np.zeros(n)
            e[k] = h
            parts = []
            for shift in (e, 1j * e):
                zp, zm = (z + shift, z - shift) if which == "z" else (z, z)
                ep, em = (zeta + shift, zeta - shift) if which == "zeta" else (zeta, zeta)
                Kp = build(*_plain(zp, ep))
                Km = build(*_plain(zm, em))
                parts.append((Kp - Km).scale(1.0 / (2 * h)))
            d = (parts[0] + parts[1].scale(1j)).scale(0.5)
            kind = ZBAR if which == "z" else ZETABAR
            g = FormExpr.gen(n, kind, k)
            if which == "z":
                outz = outz + g.wedge(d)
            else:
                oute = oute + g.wedge(d)
    return outz, oute


def direct_omega(lmap, z, zeta):
    """omega ^ (dbar omega)^(n-1) built by differentiating omega with jets.

    Independent of the closed form; used to cross-check :func:`cf_power`.
    """
    z = np.asarray(z, dtype=complex)
    zeta = np.asarray(zeta, dtype=complex)
    n = z.shape[-1]
    zj, zbj, ej, ebj = _jet_inputs(z, zeta)
    w = cf_form(lmap, zj, zbj, ej, ebj)
    dw = dbar_jet(w, zbar_slots=[2 * n + k for k in range(n)],
                  zetabar_slots=[3 * n + k for k in range(n)])
    return w.values().wedge(dw.power(n - 1))


def random_pairs(spec_or_n, count=100, seed=0, kind="shell"):
    """Seeded (z, zeta) samples: z inside, zeta in the shell (or anywhere off-diagonal)."""
    from .geometry import DomainSpec, radial_function

    rng = np.random.default_rng(seed)
    if isinstance(spec_or_n, DomainSpec):
        spec = spec_or_n
    else:
        spec = DomainSpec("unit-ball", int(spec_or_n))
    n = spec.n

    def sphere(m):
        t = rng.normal(size=(m, n)) + 1j * rng.normal(size=(m, n))
        return t / np.linalg.norm(t, axis=-1, keepdims=True)

    tz, te = sphere(count), sphere(count)
    z = (radial_function(spec, tz) * rng.uniform(0.0, 0.9, count))[:, None] * tz
    ze = (radial_function(spec, te) * rng.uniform(1.0, 1.0 + spec.delta_max, count))[:, None] * te
    return z, ze


def dump_terms(K: FormExpr, probe_index=0):
    """JSON list of (generators, coefficient at one probe point)."""
    rows = []
    for m in sorted(K.terms):
        c = np.asarray(ad.value(K.terms[m])).ravel()
        v = complex(c[probe_index] if c.size > 1 else c[0])
        rows.append({"generators": K.describe(m), "grading": list(K.grading(m)),
                     "re": v.real, "im": v.imag})
    return json.dumps(rows, indent=1)


__all__ = ["cf_form", "cf_power", "omega", "omega01", "bidegree_split", "component",
           "koppelman_check", "signed_pullback_rule", "KernelComponent", "direct_omega",
           "random_pairs", "dump_terms", "kernel_components"]
