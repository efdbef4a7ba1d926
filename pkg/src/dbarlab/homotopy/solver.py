"""Integral solution operators H_q, H_0, the classical T_q and the top-degree solver.

Every operator is a sum of kernel integrals ``int K(z, .) ^ psi`` where K is
one of the Cauchy-Fantappie kernels (a form in dzbar, dzeta, dzetabar) and
psi a (0, *)-form in zeta.  The pairing keeps the part of K ^ psi of full
degree in zeta and reads off its density against dV (volume) or dS
(boundary, via the outward conormal).

dbar of the output is never obtained by differencing u:

* the Bochner-Martinelli volume term depends on zeta - z only, so
  d/dzbar_k moves onto the density (translation identity); on D this
  uses the partials of phi, on the shell those of the extension;
* every other kernel is evaluated with jets in zbar.
"""

from __future__ import annotations

import csv
import io
import json
import math
import time
from dataclasses import dataclass, field

import numpy as np
from sklearn.base import BaseEstimator, TransformerMixin
from sklearn.exceptions import NotFittedError

from ..autodiff import Jet
from ..cfkernels import component, omega, omega01
from ..ext.stein import SteinExtension, save_field
from ..forms import popcount, wedge_sign
from ..geometry import DomainSpec, signed_distance
from ..leray import ball_map, bm_map, convex_leray
from ..quad import (SINGULAR_FLOOR, boundary_mesh, fsum_complex, level_counts, polar_mesh,
                    shell_mesh)
from .zform import ZForm, insert_index

OPERATORS = ("Hq", "H0", "Tq", "top", "boundary")
EXTENSIONS = ("stein",)


def volume_constant(n):
    """dzeta_1..dzeta_n ^ dzetabar_1..dzetabar_n = c_n dV."""
    return (-1) ** (n * (n - 1) // 2) * (-2j) ** n


def mesh_spacing(level):
    return 1.0 / level_counts(level)["radial"]


def _zetabar_mask(n, I):
    m = 0
    for i in I:
        m |= 1 << (2 * n + i)
    return m


def _zbar_index(m, n):
    return tuple(i for i in range(n) if m >> i & 1)


def _as_density(n, values):
    """dict I -> node values  ->  dict zetabar-mask -> node values."""
    return {_zetabar_mask(n, I): v for I, v in values.items()}


def pair(K, psi, n, normals=None):
    """Integrand of int K ^ psi as dict zbar-index -> node array (or jet).

    Volume pairing when ``normals`` is None, boundary pairing otherwise.
    The z-generators are moved to the right of the zeta part before
    integrating: sign +1 over a 2n-manifold, (-1)^|I| over the boundary.
    """
    low = (1 << n) - 1
    full = ((1 << 2 * n) - 1) << n
    cn = volume_constant(n)
    acc = {}
    for mK, cK in K.terms.items():
        zb = mK & low
        zp = mK & ~low
        for mP, cP in psi.items():
            if zp & mP:
                continue
            tot = zp | mP
            s = wedge_sign(zp, mP)
            if normals is None:
                if tot != full:
                    continue
                dens = (s * cn) * cP
            else:
                miss = full & ~tot
                if popcount(miss) != 1:
                    continue
                g = miss.bit_length() - 1
                j = (g - n) % n
                # nu-flat = sum 1/2 conj(nu_j) dzeta_j + 1/2 nu_j dzetabar_j
                nu = 0.5 * (np.conj(normals[:, j]) if g < 2 * n else normals[:, j])
                s2 = wedge_sign(miss, tot)
                dens = (s * s2 * cn * (-1) ** popcount(zb)) * nu * cP
            term = cK * dens
            I = _zbar_index(zb, n)
            acc[I] = acc[I] + term if I in acc else term
    return acc


def _integrate(integrand, w, n):
    """(value, zbar-gradient or None) per index, compensated sums."""
    out = {}
    for I, c in integrand.items():
        if isinstance(c, Jet):
            val = fsum_complex(np.broadcast_to(c.val, w.shape) * w)
            grad = np.array([fsum_complex(np.broadcast_to(c.der[n + k], w.shape) * w)
                             for k in range(n)])
            out[I] = (val, grad)
        else:
            out[I] = (fsum_complex(np.broadcast_to(c, w.shape) * w), None)
    return out


def _kernel_args(z, nodes, jets):
    n = nodes.shape[-1]
    M = nodes.shape[0]
    ze = [nodes[:, j] for j in range(n)]
    zeb = [np.conj(c) for c in ze]
    if jets:
        zj, zbj = Jet.variables(np.broadcast_to(z[:, None], (n, M)).copy())
        return zj, zbj, ze, zeb
    return [z[j] for j in range(n)], [np.conj(z[j]) for j in range(n)], ze, zeb


def _count_floor(lmaps, z, nodes, floor):
    bad = np.zeros(len(nodes), dtype=bool)
    for lm in lmaps:
        bad |= np.abs(lm.phi_values(z, nodes)) < floor
    return bad


def default_leray(spec):
    if spec.kind == "unit-ball":
        return ball_map(spec.n)
    return convex_leray(spec)


@dataclass
class _Shell:
    mesh: object
    E: dict
    dE: dict
    comm: dict


@dataclass
class SolveReport:
    """Samples of u = (operator) phi at interior points plus diagnostics."""

    operator: str
    points: np.ndarray
    degree: int
    values: dict
    dbar: dict | None = None
    parts: dict = field(default_factory=dict)
    residual_max: float | None = None
    residual_l2: float | None = None
    residual_points: int = 0
    refinement: float | None = None
    flagged: list = field(default_factory=list)
    floor_count: int = 0
    metadata: dict = field(default_factory=dict)

    def value_array(self):
        keys = sorted(self.values)
        return keys, np.stack([self.values[k] for k in keys], axis=-1) if keys else None

    def summary(self):
        return {
            "operator": self.operator,
            "degree": self.degree,
            "points": int(len(self.points)),
            "residual_max": self.residual_max,
            "residual_l2": self.residual_l2,
            "residual_points": self.residual_points,
            "refinement": self.refinement,
            "flagged": list(map(int, self.flagged)),
            "floor_count": int(self.floor_count),
            "metadata": self.metadata,
        }

    def to_json(self):
        return json.dumps(self.summary(), indent=1, sort_keys=True, default=_jsonable)

    def to_csv(self):
        """One row per point: coordinates, then Re/Im of each coefficient."""
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        n = self.points.shape[1]
        keys = sorted(self.values)
        head = [f"{p}{j + 1}" for j in range(n) for p in ("re_z", "im_z")]
        for I in keys:
            lab = "u" + "".join(str(i + 1) for i in I)
            head += [f"re_{lab}", f"im_{lab}"]
        w.writerow(head)
        for r in range(len(self.points)):
            row = []
            for j in range(n):
                row += [f"{self.points[r, j].real:.15e}", f"{self.points[r, j].imag:.15e}"]
            for I in keys:
                v = self.values[I][r]
                row += [f"{v.real:.15e}", f"{v.imag:.15e}"]
            w.writerow(row)
        return buf.getvalue()

    def save_samples(self, path):
        keys, arr = self.value_array()
        if arr is None:
            arr = np.zeros((len(self.points), 0), dtype=complex)
        save_field(path, arr, origin=[0.0], spacing=[1.0],
                   provenance={"operator": self.operator, "indices": [list(k) for k in keys],
                               "points": [[[float(c.real), float(c.imag)] for c in p]
                                          for p in self.points]})


def _jsonable(o):
    if isinstance(o, (np.floating, np.integer)):
        return o.item()
    if isinstance(o, np.ndarray):
        return o.tolist()
    if isinstance(o, tuple):
        return list(o)
    raise TypeError(type(o))


class HomotopySolver(BaseEstimator, TransformerMixin):
    """Estimator wrapper around the integral operators.

    ``fit(phi)`` takes a :class:`ZForm` and precomputes everything that
    does not depend on the target point (extension, its dbar and the
    commutator on the shell mesh).  ``transform(Z)`` returns the
    coefficients of u at the rows of Z (columns ordered by index).

    operator:
        "Hq"        H_q phi, q = phi.q >= 1
        "H0"        H_0 f for a function f
        "Tq"        classical Leray-Koppelman T_q phi (needs only phi on D-bar)
        "top"       top-degree solver (q = n): BM volume operator on E phi
        "boundary"  int_{bD} Omega^1_{0,0} f (holomorphic reproduction)
    """

    def __init__(self, spec=None, operator="Hq", level=4, leray="auto", extension="stein",
                 delta=None, stein_c=2.0, h_fd=1e-3, floor=SINGULAR_FLOOR):
        self.spec = spec
        self.operator = operator
        self.level = level
        self.leray = leray
        self.extension = extension
        self.delta = delta
        self.stein_c = stein_c
        self.h_fd = h_fd
        self.floor = floor

    # ------------------------------------------------------------------
    def _check(self, phi):
        if self.operator not in OPERATORS:
            raise ValueError(f"unknown operator {self.operator!r}; choose from {OPERATORS}")
        if self.extension not in EXTENSIONS:
            raise ValueError(f"unknown extension {self.extension!r}; choose from {EXTENSIONS}")
        spec = self.spec
        if not isinstance(phi, ZForm):
            raise TypeError("fit expects a ZForm")
        if phi.n != spec.n:
            raise ValueError("form and domain dimensions differ")
        op = self.operator
        if op in ("H0", "boundary") and phi.q != 0:
            raise ValueError(f"{op} acts on functions (degree 0)")
        if op in ("Hq", "Tq") and phi.q < 1:
            raise ValueError(f"{op} needs degree q >= 1")
        if op == "top" and phi.q != spec.n:
            raise ValueError("top-degree solver needs a (0,n)-form")

    def fit(self, phi, y=None):
        self._check(phi)
        spec = self.spec
        n = spec.n
        self.form_ = phi
        self.delta_ = self.delta if self.delta is not None else spec.delta_max
        self.ext_ = SteinExtension(spec, self.delta_, c=self.stein_c, h_fd=self.h_fd)
        self.bm_ = bm_map(n)
        if self.leray == "auto":
            self.map1_ = default_leray(spec)
        elif self.leray == "ball":
            self.map1_ = ball_map(n)
        elif self.leray == "convex":
            self.map1_ = convex_leray(spec)
        elif self.leray == "bm":
            self.map1_ = bm_map(n)
        else:
            raise ValueError(f"unknown Leray map {self.leray!r}")
        c = level_counts(self.level)
        self.counts_ = c
        self.shell_ = None
        self.boundary_ = None
        if self.operator in ("Hq", "H0", "top"):
            self.shell_ = self._shell_data(phi, c)
        if self.operator in ("Tq", "boundary"):
            self.boundary_ = boundary_mesh(spec, c["angle"], c["simplex"])
            self.boundary_phi_ = phi.evaluate(self.boundary_.nodes)
        return self

    def _shell_data(self, phi, c):
        d = self.delta_
        # the cutoff descends on [1 + d/2, 1 + d]; two panels there
        breaks = np.array([1.0, 1.0 + d / 2, 1.0 + 3 * d / 4, 1.0 + d])
        mesh = shell_mesh(self.spec, d, c["angle"], c["simplex"], c["radial"], breaks)
        Z = mesh.nodes
        n = self.spec.n
        E, dE = {}, {}
        for I, f in phi.coeffs.items():
            E[I] = self.ext_.extend(f, Z)
            dE[I] = self.ext_.dbar_extended(f, Z)
        comm = {}
        if phi.q < n:
            for I in phi.coeffs:
                for k in range(n):
                    J, s = insert_index(k, I)
                    if s == 0:
                        continue
                    comm[J] = comm.get(J, 0.0) + s * dE[I][:, k]
            if not phi.closed:
                for J, g in phi.dbar().coeffs.items():
                    comm[J] = comm.get(J, 0.0) - self.ext_.extend(g, Z)
        return _Shell(mesh, E, dE, comm)

    # ------------------------------------------------------------------
    def _bm_volume(self, z, nodes, w, values, dvalues, q):
        """int Omega^0_{0,q-1} ^ psi over a node set, with translation gradient."""
        n = self.spec.n
        K = component(omega(self.bm_, *_kernel_args(z, nodes, False)), q - 1)
        out = _integrate(pair(K, _as_density(n, values), n), w, n)
        grads = []
        for k in range(n):
            dk = {I: v[:, k] for I, v in dvalues.items()}
            grads.append(_integrate(pair(K, _as_density(n, dk), n), w, n))
        res = {}
        for I, (val, _) in out.items():
            res[I] = (val, np.array([grads[k].get(I, (0.0, None))[0] for k in range(n)]))
        return res

    def _point(self, z, deriv):
        spec = self.spec
        n = spec.n
        phi = self.form_
        op = self.operator
        c = self.counts_
        parts = {}
        floor_count = 0
        q = phi.q

        if op in ("Hq", "top", "Tq"):
            pm = polar_mesh(spec, z, c["angle"], c["simplex"], c["radial"])
            vals = phi.evaluate(pm.nodes)
            dvals = {}
            if deriv:
                for I in phi.coeffs:
                    dvals[I] = np.stack([phi.partial(I, k)(pm.nodes) for k in range(n)], axis=-1)
            else:
                dvals = {I: np.zeros(v.shape + (n,), dtype=complex) for I, v in vals.items()}
            parts["bm_domain"] = self._bm_volume(z, pm.nodes, pm.weights, vals, dvals, q)
            if op == "Tq" and deriv:
                # domain moves with z: - int_bD (dV-density of K ^ phi) nu_k / 2 dS
                bm = self.boundary_
                K = component(omega(self.bm_, *_kernel_args(z, bm.nodes, False)), q - 1)
                dens = pair(K, _as_density(n, self.boundary_phi_), n)
                for I, (val, grad) in parts["bm_domain"].items():
                    if I in dens:
                        corr = np.array([fsum_complex(dens[I] * (-0.5) * bm.normals[:, k]
                                                      * bm.weights) for k in range(n)])
                        parts["bm_domain"][I] = (val, grad + corr)

        if op in ("Hq", "top"):
            sh = self.shell_
            parts["bm_shell"] = self._bm_volume(z, sh.mesh.nodes, sh.mesh.weights, sh.E,
                                                sh.dE if deriv else
                                                {I: np.zeros(v.shape + (n,), dtype=complex)
                                                 for I, v in sh.E.items()}, q)

        if op == "Hq" and n >= 2 and q - 1 <= n - 2 and self.shell_.comm:
            sh = self.shell_
            floor_count += int(np.sum(_count_floor((self.bm_, self.map1_), z, sh.mesh.nodes,
                                                   self.floor)))
            K = component(omega01(self.bm_, self.map1_,
                                  *_kernel_args(z, sh.mesh.nodes, deriv)), q - 1)
            parts["cf01_shell"] = _integrate(pair(K, _as_density(n, sh.comm), n),
                                             sh.mesh.weights, n)

        if op == "H0":
            sh = self.shell_
            K = component(omega(self.map1_, *_kernel_args(z, sh.mesh.nodes, deriv)), 0)
            parts["cf1_shell"] = _integrate(pair(K, _as_density(n, sh.comm), n),
                                            sh.mesh.weights, n)

        if op == "Tq" and n >= 2 and q - 1 <= n - 2:
            bm = self.boundary_
            K = component(omega01(self.bm_, self.map1_, *_kernel_args(z, bm.nodes, deriv)),
                          q - 1)
            r = _integrate(pair(K, _as_density(n, self.boundary_phi_), n, bm.normals),
                           bm.weights, n)
            parts["cf01_boundary"] = {I: (-v, None if g is None else -g)
                                      for I, (v, g) in r.items()}

        if op == "boundary":
            bm = self.boundary_
            K = component(omega(self.map1_, *_kernel_args(z, bm.nodes, deriv)), 0)
            parts["cf1_boundary"] = _integrate(pair(K, _as_density(n, self.boundary_phi_), n,
                                                    bm.normals), bm.weights, n)
        return parts, floor_count

    def out_degree(self):
        q = self.form_.q
        return 0 if self.operator in ("H0", "boundary") else q - 1

    def _indices(self):
        from itertools import combinations
        return list(combinations(range(self.spec.n), self.out_degree()))

    def solve(self, Z, deriv=True):
        """Evaluate at the rows of Z; returns (values, grads, parts, floor_count)."""
        if not hasattr(self, "form_"):
            raise NotFittedError("HomotopySolver is not fitted")
        Z = np.atleast_2d(np.asarray(Z, dtype=complex))
        n = self.spec.n
        idx = self._indices()
        N = len(Z)
        values = {I: np.zeros(N, dtype=complex) for I in idx}
        grads = {I: np.zeros((N, n), dtype=complex) for I in idx}
        part_vals = {}
        floors = 0
        for r, z in enumerate(Z):
            parts, fc = self._point(z, deriv)
            floors += fc
            for name, res in parts.items():
                pv = part_vals.setdefault(name, {I: np.zeros(N, dtype=complex) for I in idx})
                for I, (v, g) in res.items():
                    values[I][r] += v
                    pv[I][r] = v
                    if g is not None:
                        grads[I][r] += g
        return values, grads, part_vals, floors

    def transform(self, Z):
        values, _, _, _ = self.solve(Z, deriv=False)
        keys = self._indices()
        return np.stack([values[I] for I in keys], axis=-1)


def dbar_of(grads, n):
    """Assemble dbar u = sum_k dzbar_k ^ (du_I/dzbar_k) dzbar^I from per-index gradients."""
    out = {}
    for I, g in grads.items():
        for k in range(n):
            J, s = insert_index(k, I)
            if s == 0:
                continue
            out[J] = out.get(J, 0.0) + s * g[:, k]
    return out


def interior_mask(spec, Z, level):
    """Points with d(z) >= 2h at this level."""
    d = -signed_distance(spec, np.asarray(Z, dtype=complex))
    return d >= 2 * mesh_spacing(level)


def _residual_stats(res, mask):
    if not res or not np.any(mask):
        return 0.0, 0.0
    stack = np.stack([np.abs(np.asarray(v))[mask] for v in res.values()], axis=-1)
    pointwise = np.sqrt(np.sum(stack ** 2, axis=-1))
    return float(np.max(pointwise)), float(np.sqrt(np.mean(pointwise ** 2)))


def _run(phi, spec, Z, operator, level, leray, refine, residual, seed, extra_meta=None, **kw):
    t0 = time.perf_counter()
    solver = HomotopySolver(spec, operator, level, leray, **kw).fit(phi)
    values, grads, parts, floors = solver.solve(Z, deriv=True)
    n = spec.n
    du = dbar_of(grads, n)
    rep = SolveReport(operator, np.atleast_2d(np.asarray(Z, dtype=complex)),
                      solver.out_degree(), values, du, parts, floor_count=floors)
    mask = interior_mask(spec, rep.points, level)
    rep.residual_points = int(np.sum(mask))
    if residual is not None:
        rmax, rl2 = _residual_stats(residual(rep), mask)
        rep.residual_max, rep.residual_l2 = rmax, rl2
    if refine and level > 1:
        coarse = HomotopySolver(spec, operator, level - 1, leray, **kw).fit(phi)
        cv, _, _, _ = coarse.solve(Z, deriv=False)
        rep.refinement = float(max((np.max(np.abs(values[I] - cv[I])) for I in values),
                                   default=0.0))
    rep.metadata = {"operator": operator, "level": level, "counts": level_counts(level),
                    "leray": solver.map1_.name, "extension": solver.extension,
                    "delta": solver.delta_, "domain": json.loads(spec.to_json()),
                    "degree_in": phi.q, "seed": seed,
                    "runtime_s": round(time.perf_counter() - t0, 3)}
    if extra_meta:
        rep.metadata.update(extra_meta)
    return rep


def _closed_residual(phi):
    def res(rep):
        if phi is None:
            return {}
        ref = phi.evaluate(rep.points)
        keys = set(ref) | set(rep.dbar)
        return {J: ref.get(J, 0.0) - rep.dbar.get(J, 0.0) for J in keys}
    return res


def solve_Hq(phi: ZForm, spec: DomainSpec, Z, level=4, leray="auto", refine=False, seed=0, **kw):
    """H_q phi at the rows of Z.

    The residual phi - dbar u is filled in when phi is dbar-closed (then it
    is the full homotopy residual); otherwise use :func:`verify_homotopy`.
    """
    closed = phi.closed or phi.q == phi.n
    return _run(phi, spec, Z, "Hq", level, leray, refine,
                _closed_residual(phi) if closed else None, seed, **kw)


def solve_H0(f: ZForm, spec: DomainSpec, Z, level=4, leray="auto", refine=False, seed=0, **kw):
    """H_0 f; the residual is |dbar H_0 f| (H_0 f is holomorphic)."""
    def res(rep):
        return dict(rep.dbar)
    return _run(f, spec, Z, "H0", level, leray, refine, res, seed, **kw)


def solve_Tq_classical(phi: ZForm, spec: DomainSpec, Z, level=4, leray="auto", refine=False,
                       seed=0, **kw):
    closed = phi.closed or phi.q == phi.n
    return _run(phi, spec, Z, "Tq", level, leray, refine,
                _closed_residual(phi) if closed else None, seed, **kw)


def solve_boundary(f: ZForm, spec: DomainSpec, Z, level=4, leray="auto", seed=0, **kw):
    """int_{bD} Omega^1_{0,0} f; residual against f itself (holomorphic f)."""
    def res(rep):
        ref = f.evaluate(rep.points)[()]
        return {(): ref - rep.values[()]}
    return _run(f, spec, Z, "boundary", level, leray, False, res, seed, **kw)


def solve_top_degree(phi: ZForm, spec: DomainSpec, Z, level=4, seed=0, **kw):
    """Extend phi (a (0,n)-form) and apply the BM volume operator; dbar u = phi in D."""
    return _run(phi, spec, Z, "top", level, "bm", False, _closed_residual(phi), seed, **kw)


def verify_homotopy(phi: ZForm, spec: DomainSpec, Z, level=4, leray="auto", seed=0,
                    reports=None, **kw):
    """Residual phi - dbar H_q phi - H_{q+1} dbar phi (q >= 1) or f - H_0 f - H_1 dbar f.

    Returns (stats dict, main report, companion report or None).
    """
    n = spec.n
    q = phi.q
    op = "H0" if q == 0 else "Hq"
    main = _run(phi, spec, Z, op, level, leray, False, None, seed, **kw)
    comp = None
    psi = phi.dbar() if q < n else None
    if psi is not None and psi.coeffs:
        comp = _run(psi, spec, Z, "Hq", level, leray, False, None, seed, **kw)
    ref = phi.evaluate(main.points)
    res = {}
    if q == 0:
        res[()] = ref[()] - main.values[()] - (comp.values[()] if comp else 0.0)
    else:
        keys = set(ref) | set(main.dbar) | (set(comp.values) if comp else set())
        for J in keys:
            res[J] = (ref.get(J, 0.0) - main.dbar.get(J, 0.0)
                      - (comp.values.get(J, 0.0) if comp else 0.0))
    mask = interior_mask(spec, main.points, level)
    rmax, rl2 = _residual_stats(res, mask)
    main.residual_max, main.residual_l2 = rmax, rl2
    main.residual_points = int(np.sum(mask))
    stats = {"max": rmax, "l2": rl2, "points": int(np.sum(mask)), "level": level,
             "companion_max": (float(max(np.max(np.abs(v)) for v in comp.values.values()))
                               if comp else 0.0)}
    return stats, main, comp


def refinement_study(phi: ZForm, spec: DomainSpec, Z, levels=(2, 3, 4), leray="auto",
                     noise_floor=1e-9, **kw):
    """Homotopy residual per level and the observed order in the spacing h.

    Every level is measured on the points interior at the coarsest level so
    the residuals compare like with like.
    """
    Z = np.atleast_2d(np.asarray(Z, dtype=complex))
    Z = Z[interior_mask(spec, Z, min(levels))]
    if not len(Z):
        raise ValueError("no sample point is interior at the coarsest level")
    rows = []
    for L in levels:
        st, _, _ = verify_homotopy(phi, spec, Z, L, leray, **kw)
        rows.append((L, mesh_spacing(L), st["max"]))
    orders = []
    for (L0, h0, r0), (L1, h1, r1) in zip(rows, rows[1:]):
        if r1 <= noise_floor:
            orders.append(math.inf)
        else:
            orders.append(math.log(max(r0, noise_floor) / r1) / math.log(h0 / h1))
    return rows, orders
