"""Acceptance criteria, each at its stated tolerance; one PASS/FAIL line per criterion."""

import json
import time

import numpy as np
from click.testing import CliRunner

from conftest import interior_points
from dbarlab.cli import main
from dbarlab.cli import runs
from dbarlab.geometry import DomainSpec
from dbarlab.homotopy import (MixedForm, ZForm, refinement_study, solve_boundary,
                              solve_D_complex, solve_H0, solve_Hq, solve_top_degree)
from dbarlab.homotopy.dcomplex import poincare_residual


def zero(z):
    return np.zeros(np.shape(z)[:-1], dtype=complex)


def holo(n, f):
    return ZForm(n, 0, {(): f}, partials={((), k): zero for k in range(n)})


def test_ac1_koppelman(report):
    t0 = time.perf_counter()
    res = runs.koppelman_run((1, 2, 3), seed=0, count=100, tol=1e-6)
    dt = time.perf_counter() - t0
    ok = res.ok and dt <= 60
    report("AC1 Koppelman identities", ok,
           f"max residual {res.body['max_residual']:.1e}, {dt:.1f}s")
    assert ok, res.failures


def test_ac2_reproduction(report):
    t0 = time.perf_counter()
    spec = DomainSpec("unit-ball", 2)
    Z = interior_points(2, seed=2)
    fs = {"1": lambda z: np.ones(z.shape[:-1], dtype=complex),
          "z1": lambda z: z[..., 0],
          "z1z2": lambda z: z[..., 0] * z[..., 1]}
    worst = 0.0
    for f in fs.values():
        F = holo(2, f)
        for solve in (solve_H0, solve_boundary):
            rep = solve(F, spec, Z, level=4)
            worst = max(worst, float(np.max(np.abs(rep.values[()] - f(Z)))))
    dt = time.perf_counter() - t0
    ok = worst <= 1e-3 and dt <= 300
    report("AC2 reproduction by H0 and boundary operator", ok, f"max error {worst:.1e}, {dt:.1f}s")
    assert ok


def _suite(n):
    z1 = lambda z: z[..., 0]
    out = {
        "|z1|^2": ZForm(n, 0, {(): lambda z: z[..., 0] * np.conj(z[..., 0])},
                        partials={((), k): (z1 if k == 0 else zero) for k in range(n)}),
        "z1^2 conj(z1) dzbar1": ZForm(n, 1, {(0,): lambda z: z[..., 0] ** 2 * np.conj(z[..., 0])},
                                      partials={((0,), k): ((lambda z: z[..., 0] ** 2) if k == 0
                                                            else zero) for k in range(n)}),
    }
    if n == 2:
        out["conj(z2) dzbar1"] = ZForm(2, 1, {(0,): lambda z: np.conj(z[..., 1])},
                                       partials={((0,), 0): zero,
                                                 ((0,), 1): lambda z: np.ones(z.shape[:-1])})
    return out


def test_ac3_homotopy_identity(report):
    lines = []
    ok = True
    for kind in ("unit-ball", "ellipsoid"):
        for n in (1, 2):
            spec = DomainSpec(kind, n, (1.0, 0.75)[:n] if kind == "ellipsoid" else ())
            Z = interior_points(n, seed=3)
            for name, phi in _suite(n).items():
                rows, orders = refinement_study(phi, spec, Z, (2, 3, 4))
                good = rows[-1][2] <= 1e-2 and min(orders) >= 1.0
                ok &= good
                lines.append(f"{kind} n={n} {name}: L4 {rows[-1][2]:.1e} "
                             f"order {min(orders):.2f}")
    report("AC3 homotopy identity", ok, f"{len(lines)} cases")
    assert ok, "\n".join(lines)


def test_ac4_extension_suite(report):
    res = runs.extension_run(seed=0)
    g = res.body["growth"]
    report("AC4 extension suite", res.ok,
           f"moments {res.body['moments']['continuous']:.1e}, slopes "
           + ", ".join(f"k={k}:{v['slope']:.3f}" for k, v in g.items()))
    assert res.ok, res.failures


def test_ac5_scaling(report):
    t0 = time.perf_counter()
    res = runs.scaling_sweep()
    dt = time.perf_counter() - t0
    ok = res.ok and dt <= 120
    report("AC5 scaling exponents", ok, f"{dt:.1f}s")
    assert ok, res.failures


def test_ac6_blowup_rates(report):
    res = runs.rates_sweep()
    detail = ", ".join(f"{r['term']} slope {r['slope']:.3f} (bound {r['bound']:.2f})"
                       for r in res.body["rows"])
    report("AC6 blow-up rates", res.ok, detail)
    assert res.ok, res.failures


def test_ac7_poincare_and_dcomplex(report):
    T = np.random.default_rng(7).uniform(-1, 1, (20, 3))
    poly = {(0, 1): lambda t: t[..., 0] ** 2 * t[..., 2] + 1,
            (1, 2): lambda t: t[..., 1] ** 3 - t[..., 0],
            (0, 2): lambda t: t[..., 0] * t[..., 1]}
    p = max(poincare_residual(poly, 2, 3, T),
            poincare_residual({(0,): lambda t: t[..., 1] ** 2 * t[..., 0]}, 1, 3, T))

    Tp = np.array([[0.3], [-0.5]])
    b1, b2 = DomainSpec("unit-ball", 1), DomainSpec("unit-ball", 2)
    Z1, Z2 = interior_points(1, 3, 0.5, seed=71), interior_points(2, 3, 0.5, seed=72)
    # D(t1 zbar1) and D(t1 zbar2 dzbar1): D-closed by construction
    d1 = MixedForm(1, 1, 1, {((0,), ()): lambda z, t: t[..., 0] + 0j,
                             ((), (0,)): lambda z, t: np.conj(z[..., 0])})
    d2 = MixedForm(2, 1, 2, {((1, 0), ()): lambda z, t: t[..., 0] + 0j,
                             ((0,), (0,)): lambda z, t: -np.conj(z[..., 1])})
    dres = max(solve_D_complex(phi, spec, Z, Tp, v, level=3).residual_max
               for phi, spec, Z in ((d1, b1, Z1), (d2, b2, Z2)) for v in ("T", "T-tilde"))

    phz = ZForm(2, 1, {(0,): lambda z: z[..., 1]}, partials={((0,), 0): zero, ((0,), 1): zero},
                closed=True)
    ref = solve_Hq(phz, b2, Z2, level=3)
    mz = MixedForm(2, 1, 1, {((0,), ()): lambda z, t: z[..., 1] + 0 * t[..., 0]})
    agree = 0.0
    for v in ("T", "T-tilde"):
        rep = solve_D_complex(mz, b2, Z2, Tp, v, level=3)
        agree = max(agree, max(float(np.max(np.abs(rep.values[(I, ())] - ref.values[I][:, None])))
                               for I in ref.values))
    ok = p <= 1e-10 and dres <= 1e-2 and agree <= 1e-2
    report("AC7 Poincare and D-complex", ok,
           f"Poincare {p:.1e}, Du-phi {dres:.1e}, T/T-tilde vs H_q {agree:.1e}")
    assert ok


def test_ac8_top_degree(report):
    b1, b2 = DomainSpec("unit-ball", 1), DomainSpec("unit-ball", 2)
    Z1 = interior_points(1, 6, 0.6, seed=81)
    one = lambda z: np.ones(z.shape[:-1], dtype=complex)
    rep1 = solve_top_degree(ZForm(1, 1, {(0,): one}, partials={((0,), 0): zero}), b1, Z1, 4)
    e1 = float(np.max(np.abs(rep1.values[()] - np.conj(Z1[:, 0]))))
    Z2 = interior_points(2, 4, 0.5, seed=82)
    phi2 = ZForm(2, 2, {(0, 1): lambda z: z[..., 0] * np.conj(z[..., 1])},
                 partials={((0, 1), 0): zero, ((0, 1), 1): lambda z: z[..., 0]})
    r2 = solve_top_degree(phi2, b2, Z2, 4).residual_max
    ok = e1 <= 1e-3 and r2 <= 1e-2
    report("AC8 top degree", ok, f"n=1 vs conj(z) {e1:.1e}, n=2 residual {r2:.1e}")
    assert ok


def test_ac9_determinism(report, tmp_path):
    cfg = {"domain": {"kind": "ellipsoid", "n": 2, "params": [1.0, 0.75]},
           "operator": "Hq", "form": {"degree": 1, "terms": [{"zbar": [1], "coeff": "z2"}]},
           "levels": [2], "seed": 11}
    path = tmp_path / "cfg.json"
    path.write_text(json.dumps(cfg))
    runner = CliRunner()
    outs = []
    for k in range(2):
        out = tmp_path / f"run{k}"
        r = runner.invoke(main, ["solve", str(path), "--out", str(out)])
        assert r.exit_code == 0, r.output
        r = runner.invoke(main, ["kernel", "koppelman", "--n", "2", "--count", "20",
                                 "--seed", "5", "--out", str(out / "kop")])
        assert r.exit_code == 0, r.output
        outs.append(out)
    names = ["report.json", "values.csv", "samples.bin", "samples.bin.json", "config.json",
             "kop/report.json", "kop/koppelman.csv"]
    same = all((outs[0] / f).read_bytes() == (outs[1] / f).read_bytes() for f in names)
    report("AC9 determinism", same, f"{len(names)} files compared")
    assert same
