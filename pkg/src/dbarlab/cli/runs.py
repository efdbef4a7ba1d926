"""Check and solve runners shared by the CLI and the acceptance suite.

Each runner returns a :class:`RunResult`; ``body`` holds only
deterministic content (no timings), ``meta`` holds timings.
"""

from __future__ import annotations

import csv
import io
import math
import time
from dataclasses import dataclass, field

import numpy as np

from ..cfkernels import koppelman_check, random_pairs
from ..ext.checks import extension_suite
from ..geometry import DomainSpec, distance_and_region, levi_check
from ..homotopy import (blowup_rates, refinement_study, solve_boundary, solve_D_complex,
                        solve_H0, solve_Hq, solve_top_degree, solve_Tq_classical)
from ..homotopy.dcomplex import StarBox
from ..leray import ball_map, bm_map, choose_levi_sign, convex_leray
from ..normlab import ExponentFit
from ..quad import (projection_constant_growth, scaling_probe_interior,
                    scaling_probe_projection)
from .config import RunConfig, build_mixed, build_zform, sample_points, sample_t


@dataclass
class RunResult:
    name: str
    body: dict
    ok: bool
    failures: list = field(default_factory=list)
    tables: dict = field(default_factory=dict)   # file stem -> CSV text
    meta: dict = field(default_factory=dict)
    solve_report: object = None


def _csv(header, rows):
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for r in rows:
        w.writerow([f"{x:.12e}" if isinstance(x, float) else x for x in r])
    return buf.getvalue()


def _timed(fn):
    def wrapper(*a, **kw):
        t0 = time.perf_counter()
        res = fn(*a, **kw)
        res.meta["runtime_s"] = round(time.perf_counter() - t0, 3)
        return res
    wrapper.__name__ = fn.__name__
    wrapper.__doc__ = fn.__doc__
    return wrapper


# ---------------------------------------------------------------------------
# kernels

@_timed
def koppelman_run(ns=(1, 2, 3), seed=0, count=100, tol=1e-6):
    """Both Koppelman identities for BM/BM, BM/ball and BM/convex-ellipsoid pairs."""
    rows, fails = [], []
    for n in ns:
        ball = DomainSpec("unit-ball", n)
        ell = DomainSpec("ellipsoid", n, [1.0] + [0.75] * (n - 1))
        cases = [("bm", ball, bm_map(n)), ("ball", ball, ball_map(n)),
                 ("ellipsoid", ell, convex_leray(ell))]
        for name, spec, lm in cases:
            z, ze = random_pairs(spec, count, seed=seed)
            r1, r2 = koppelman_check(bm_map(n), lm, z, ze)
            for q in range(n + 1):
                rows.append((n, name, q, float(r1[q]), float(r2[q])))
                if max(r1[q], r2[q]) > tol:
                    fails.append(f"n={n} map={name} q={q}: residual {max(r1[q], r2[q]):.3e}")
    worst = max(max(r[3], r[4]) for r in rows)
    body = {"check": "koppelman", "seed": seed, "count": count, "tolerance": tol,
            "max_residual": worst, "ok": not fails, "failures": fails}
    return RunResult("koppelman", body, not fails, fails,
                     {"koppelman": _csv(["n", "map", "q", "res_dbar_omega1", "res_omega01"],
                                        rows)})


# ---------------------------------------------------------------------------
# domain and extension

@_timed
def domain_run(spec: DomainSpec, seed=0, samples=2000):
    fails = []
    body = {"check": "domain", "domain": spec.to_json(), "seed": seed}
    try:
        body["levi_min_eigenvalue"] = levi_check(spec, samples, seed)
    except ValueError as e:
        fails.append(str(e))
    sign, margins = choose_levi_sign(spec, samples, seed)
    body["levi_sign"] = sign
    body["levi_margins"] = {str(k): v for k, v in margins.items()}
    if margins[sign] <= 0:
        fails.append("Levi polynomial lower bound fails for both signs")
    rng = np.random.default_rng(seed)
    th = rng.normal(size=(200, spec.n)) + 1j * rng.normal(size=(200, spec.n))
    th /= np.linalg.norm(th, axis=-1, keepdims=True)
    Z = th * rng.uniform(0.0, 1.2, 200)[:, None]
    d, flags = distance_and_region(spec, Z, spec.delta_max)
    body["distance_samples"] = int(len(Z))
    body["inside_fraction"] = float(np.mean(flags["inside"]))
    body["ok"] = not fails
    body["failures"] = fails
    return RunResult("domain", body, not fails, fails)


@_timed
def extension_run(seed=0):
    res = extension_suite(seed)
    fails = []
    for k, v in res.items():
        if k == "growth":
            for kk, g in v.items():
                if not g["ok"]:
                    fails.append(f"growth k={kk}: slope {g['slope']:.3f} vs {g['target']}")
        elif not v["ok"]:
            fails.append(f"{k} check failed")
    body = dict(res, check="extension", seed=seed, ok=not fails, failures=fails)
    rows = [(int(k), g["slope"], g["target"]) for k, g in res["growth"].items()]
    return RunResult("extension", body, not fails, fails,
                     {"growth": _csv(["order", "slope", "target"], rows)})


# ---------------------------------------------------------------------------
# sweeps

@_timed
def holder_sweep(gammas=(0.25, 0.5, 1.0, 1.5), seed=0, tol=0.05, noise=0.02):
    """Recover gamma from seeded noisy profiles c d^gamma over eight dyadic scales."""
    d = 2.0 ** -np.arange(2, 10)
    rng = np.random.default_rng(seed)
    rows, fails = [], []
    for g in gammas:
        vals = d ** g * (1 + noise * rng.uniform(-1, 1, len(d)))
        fit = ExponentFit().fit(d, vals)
        rows.append((float(g), fit.slope_, fit.residual_))
        if abs(fit.slope_ - g) > tol:
            fails.append(f"gamma={g}: slope {fit.slope_:.4f}")
    body = {"check": "holder-sweep", "seed": seed, "tolerance": tol,
            "fits": [{"gamma": r[0], "slope": r[1], "residual": r[2]} for r in rows],
            "ok": not fails, "failures": fails}
    return RunResult("holder", body, not fails, fails,
                     {"holder": _csv(["gamma", "slope", "residual"], rows)})


INTERIOR_GRID = ((0.0, 0.0), (0.25, 0.0), (0.5, 0.5), (0.75, 1.0), (0.0, 1.0))
PROJECTION_GRID = ((0.0, 2), (0.25, 2), (0.5, 2), (0.75, 2), (0.25, 3), (0.5, 3))


@_timed
def scaling_sweep(which=("interior", "band", "projection"), tol=0.05):
    rows, fails = [], []
    for kind in which:
        if kind in ("interior", "band"):
            probes = [scaling_probe_interior(a, b, band=kind == "band") for a, b in INTERIOR_GRID]
        else:
            probes = [scaling_probe_projection(a, n) for a, n in PROJECTION_GRID]
        for p in probes:
            rows.append((kind, str(p.params), p.slope, p.target, abs(p.slope - p.target)))
            if abs(p.slope - p.target) > tol:
                fails.append(f"{kind} {p.params}: slope {p.slope:.4f} vs {p.target}")
    body = {"check": "scaling", "tolerance": tol,
            "probes": [{"kind": r[0], "params": r[1], "slope": r[2], "target": r[3]}
                       for r in rows]}
    if "projection" in which:
        consts, scaled, grow = projection_constant_growth()
        body["projection_constants"] = {"alphas": [0.5, 0.75, 0.9], "constants": consts,
                                        "times_one_minus_alpha": scaled, "ok": grow}
        if not grow:
            fails.append("projection constant does not grow like 1/(1 - alpha)")
    body.update(ok=not fails, failures=fails)
    return RunResult("scaling", body, not fails, fails,
                     {"scaling": _csv(["kind", "params", "slope", "target", "error"], rows)})


@_timed
def rates_sweep(**kw):
    rows = blowup_rates(**kw)
    fails = [f"{r['term']}: slope {r['slope']:.3f} below {r['bound']:.3f}"
             for r in rows if not r["ok"]]
    body = {"check": "rates", "rows": rows, "ok": not fails, "failures": fails}
    return RunResult("rates", body, not fails, fails,
                     {"rates": _csv(["term", "exponent", "slope", "bound"],
                                    [(r["term"], r["exponent"], r["slope"], r["bound"])
                                     for r in rows])})


# ---------------------------------------------------------------------------
# solves

_SOLVERS = {"Hq": solve_Hq, "H0": solve_H0, "Tq": solve_Tq_classical,
            "boundary": solve_boundary}


def _solver_kw(cfg):
    kw = {"h_fd": cfg.h_fd}
    if cfg.delta is not None:
        kw["delta"] = cfg.delta
    return kw


@_timed
def solve_run(cfg: RunConfig, seed=None):
    """Apply the configured operator at the finest configured level."""
    if cfg.mixed:
        return dcomplex_run(cfg, seed)
    seed = cfg.seed if seed is None else seed
    phi = build_zform(cfg)
    Z = sample_points(cfg, seed)
    level = max(cfg.levels)
    if cfg.operator == "top":
        rep = solve_top_degree(phi, cfg.domain, Z, level, seed=seed, **_solver_kw(cfg))
    else:
        rep = _SOLVERS[cfg.operator](phi, cfg.domain, Z, level, cfg.leray, seed=seed,
                                     **_solver_kw(cfg))
    return _solve_result(rep, cfg)


def _dcomplex_csv(rep, T):
    Z = rep.points
    n, m = Z.shape[1], T.shape[1]
    keys = sorted(rep.values)
    head = [f"{p}{j + 1}" for j in range(n) for p in ("re_z", "im_z")]
    head += [f"t{j + 1}" for j in range(m)]
    for I, J in keys:
        lab = "u" + "".join(str(i + 1) for i in I) + "_t" + "".join(str(j + 1) for j in J)
        head += [f"re_{lab}", f"im_{lab}"]
    rows = []
    for a in range(len(Z)):
        for b in range(len(T)):
            row = [f"{x:.15e}" for c in Z[a] for x in (c.real, c.imag)]
            row += [f"{x:.15e}" for x in T[b]]
            for key in keys:
                v = rep.values[key][a, b]
                row += [f"{v.real:.15e}", f"{v.imag:.15e}"]
            rows.append(row)
    return _csv(head, rows)


def _solve_result(rep, cfg, T=None):
    runtime = rep.metadata.pop("runtime_s", None)
    fails = []
    if rep.residual_max is None:
        note = "residual undefined for a non-closed input; use verify"
    else:
        note = None
        if not rep.residual_max <= cfg.tolerance:
            fails.append(f"residual {rep.residual_max:.3e} exceeds {cfg.tolerance:g}")
    if rep.floor_count:
        fails.append(f"{rep.floor_count} integrand evaluations below the singularity floor")
    body = dict(rep.summary(), config=cfg.to_dict(), tolerance=cfg.tolerance,
                ok=not fails, failures=fails)
    if note:
        body["note"] = note
    table = rep.to_csv() if T is None else _dcomplex_csv(rep, T)
    res = RunResult("solve", body, not fails, fails, {"values": table}, solve_report=rep)
    res.meta["solver_runtime_s"] = runtime
    return res


@_timed
def verify_run(cfg: RunConfig, seed=None, min_order=1.0, noise_floor=1e-9):
    """Homotopy identity per level and the observed order under refinement."""
    seed = cfg.seed if seed is None else seed
    phi = build_zform(cfg)
    Z = sample_points(cfg, seed)
    levels = tuple(sorted(cfg.levels))
    rows, orders = refinement_study(phi, cfg.domain, Z, levels, cfg.leray, noise_floor,
                                    seed=seed, **_solver_kw(cfg))
    fails = []
    finest = rows[-1][2]
    if not finest <= cfg.tolerance:
        fails.append(f"residual {finest:.3e} at level {rows[-1][0]} exceeds {cfg.tolerance:g}")
    for (L, _, _), o in zip(rows[1:], orders):
        if o < min_order:
            fails.append(f"observed order {o:.3f} below {min_order} at level {L}")
    table = []
    for i, (L, h, r) in enumerate(rows):
        o = orders[i - 1] if i else float("nan")
        table.append((L, h, r, o))
    body = {"check": "homotopy-identity", "config": cfg.to_dict(),
            "levels": [{"level": L, "h": h, "residual": r,
                        "order": None if not i or math.isinf(orders[i - 1])
                        else orders[i - 1]} for i, (L, h, r) in enumerate(rows)],
            "converged_to_floor": [math.isinf(o) for o in orders],
            "tolerance": cfg.tolerance, "ok": not fails, "failures": fails}
    return RunResult("verify", body, not fails, fails,
                     {"refinement": _csv(["level", "h", "residual", "order"], table)})


@_timed
def dcomplex_run(cfg: RunConfig, seed=None):
    seed = cfg.seed if seed is None else seed
    phi = build_mixed(cfg)
    Z = sample_points(cfg, seed)
    T = sample_t(cfg, seed)
    S = StarBox(*map(np.asarray, (cfg.box["lo"], cfg.box["hi"]))) if cfg.box else None
    variant = "T" if cfg.operator == "dcomplexT" else "T-tilde"
    rep = solve_D_complex(phi, cfg.domain, Z, T, variant, max(cfg.levels), cfg.leray, S,
                          cfg.n_theta, seed)
    return _solve_result(rep, cfg, T)
