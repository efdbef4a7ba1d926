"""Quantitative checks of the extension operators (moments, growth, commutator, cubes)."""

import numpy as np

from ..geometry import DomainSpec, radial_function
from ..normlab import ExponentFit
from .stein import MomentKernel, SteinExtension
from .whitney import BallSet, HalfSpaceSet, JetField, WhitneyExtension, whitney_decompose


def moment_check(K=4):
    """Largest |int lam^k psi - delta_k0| over k <= K (continuous and discrete rules)."""
    mk = MomentKernel(K=K)
    return {"continuous": float(np.max(np.abs(mk.moment_defects()))),
            "discrete": float(np.max(np.abs(mk.discrete_moments() - np.eye(1, K + 1)[0])))}


def _cusp_jets(a):
    def jets(p):
        y = p[:, 1]
        ay = np.abs(y)
        g = np.zeros((len(p), 2))
        g[:, 1] = a * np.sign(y) * ay ** (a - 1)
        H = np.zeros((len(p), 2, 2))
        H[:, 1, 1] = a * (a - 1) * ay ** (a - 2)
        return [ay ** a, g, H]
    return jets


def whitney_growth_slopes(r=2.5, orders=(3, 4), d_values=None, samples=400, seed=0):
    """Slopes of sup |d^k E_r f| over the band d <= dist <= 2d against d.

    f = |x_2|^r on the half-plane {x_1 <= 0}; the expected slope is -(k - r).
    """
    d_values = np.asarray(d_values if d_values is not None else 2.0 ** -np.arange(3, 10))
    ext = WhitneyExtension(HalfSpaceSet(2, 0)).fit(JetField(r, _cusp_jets(r)))
    U = np.random.default_rng(seed).uniform(size=(samples, 2))
    dirs = [np.array(v, float) for v in ([0, 1], [1, 0], [0.6, 0.8])]
    out = {}
    for k in orders:
        sups = []
        for d in d_values:
            P = np.stack([d * (1 + U[:, 0]), d * (4 * U[:, 1] - 2)], axis=1)
            sups.append(max(np.max(np.abs(ext.directional(P, v, k))) for v in dirs))
        fit = ExponentFit().fit(d_values, sups)
        out[k] = {"slope": fit.slope_, "target": -(k - r), "samples": [float(s) for s in sups]}
    return out


def commutator_interior(spec=None, samples=200, seed=0, h_fd=1e-3):
    """max |dbar(E f) - E(dbar f)| on sampled points of the closure, by finite differences.

    E is the identity on the closure, so this measures only the difference
    scheme; the tolerance scale is 10 h^2.
    """
    spec = spec or DomainSpec("unit-ball", 2)
    n = spec.n
    rng = np.random.default_rng(seed)
    th = rng.normal(size=(samples, n)) + 1j * rng.normal(size=(samples, n))
    th /= np.linalg.norm(th, axis=-1, keepdims=True)
    # keep the stencil (2h) inside the closure
    rad = radial_function(spec, th) * rng.uniform(0.0, 1.0, samples) * (1 - 4 * h_fd)
    Z = rad[:, None] * th
    f = lambda z: z[..., 0] ** 2 * np.conj(z[..., -1]) + np.exp(np.conj(z[..., 0]))
    if n > 1:
        df = [lambda z: np.exp(np.conj(z[..., 0])), lambda z: z[..., 0] ** 2]
    else:
        df = [lambda z: z[..., 0] ** 2 + np.exp(np.conj(z[..., 0]))]
    ext = SteinExtension(spec, h_fd=h_fd)
    dE = ext.dbar_extended(f, Z)
    err = max(float(np.max(np.abs(dE[:, k] - df[k](Z)))) for k in range(n))
    return {"max": err, "scale": 10 * h_fd ** 2}


def cube_sandwich(samples=4000, seed=0, dim=2):
    """dist/diam over every Whitney cube met by random exterior points of the unit ball."""
    x = np.random.default_rng(seed).uniform(-3, 3, (samples, dim))
    cubes = whitney_decompose(BallSet(dim), x, check=False)
    ratio = cubes.sandwich()
    near = cubes.dists < 1.0
    ok = bool(np.all(ratio >= 0.5) and np.all(ratio[near] <= 5.0))
    return {"cubes": len(cubes), "min": float(ratio.min()), "max_near": float(ratio[near].max()),
            "ok": ok}


def extension_suite(seed=0):
    """All extension checks with pass flags."""
    mom = moment_check()
    growth = whitney_growth_slopes(seed=seed)
    comm = commutator_interior(seed=seed)
    cubes = cube_sandwich(seed=seed)
    return {
        "moments": dict(mom, ok=mom["continuous"] <= 1e-8 and mom["discrete"] <= 1e-8),
        "growth": {str(k): dict(v, ok=abs(v["slope"] - v["target"]) <= 0.15)
                   for k, v in growth.items()},
        "commutator": dict(comm, ok=comm["max"] <= comm["scale"]),
        "cubes": cubes,
    }
