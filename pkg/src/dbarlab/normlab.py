"""Empirical Hoelder / Lipschitz-Zygmund norms, dyadic decompositions and exponent fits.

Sampled norms are lower bounds: they are sups over a finite set of pairs.
Pairs are drawn in fixed shards of ``SHARD`` from per-shard seeds spawned
from the master seed, so a larger budget always contains the pairs of a
smaller one and the estimate is non-decreasing in the budget.
"""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass, field

import numpy as np
from scipy.ndimage import gaussian_filter
from sklearn.base import BaseEstimator
from sklearn.exceptions import NotFittedError

SHARD = 1000
DEFAULT_BUDGET = 100_000
CERT_THRESHOLD = 0.1


@dataclass
class GridSamples:
    """Values of f on the lattice origin + h * index (any dimension)."""

    values: np.ndarray
    h: float
    origin: np.ndarray | float = 0.0

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=float)
        self.origin = np.broadcast_to(np.asarray(self.origin, dtype=float), (self.values.ndim,))

    @property
    def shape(self):
        return self.values.shape

    @property
    def dim(self):
        return self.values.ndim

    @classmethod
    def from_function(cls, f, lo, hi, num):
        """Sample f on a uniform grid over the box [lo, hi]^dim with ``num`` points per axis."""
        lo = np.atleast_1d(np.asarray(lo, dtype=float))
        hi = np.atleast_1d(np.asarray(hi, dtype=float))
        h = float((hi[0] - lo[0]) / (num - 1))
        axes = [lo[i] + h * np.arange(num) for i in range(len(lo))]
        X = np.stack(np.meshgrid(*axes, indexing="ij"), axis=-1)
        return cls(f(X), h, lo)

    def derivatives(self, order):
        """All partial derivatives of the given order by central differences (axis 0 = multi-index)."""
        fields = [self.values]
        for _ in range(order):
            fields = [g for v in fields for g in _grad(v, self.h)]
        return np.stack(fields) if order else self.values[None]


def _grad(v, h):
    g = np.gradient(v, h, edge_order=2)
    return list(g) if isinstance(g, (list, tuple)) else [g]


@dataclass
class NormEstimate:
    r: float
    value: float
    method: str
    budget: int
    seed: int
    parts: dict = field(default_factory=dict)


def _shards(seed, budget):
    n = max(1, math.ceil(budget / SHARD))
    return [np.random.default_rng(s) for s in np.random.SeedSequence(seed).spawn(n)]


def _pairs(shape, budget, seed, symmetric=False):
    """Integer (base index, offset) pairs: half global, half at random dyadic scales."""
    shape = np.asarray(shape)
    dim = len(shape)
    out_x, out_y = [], []
    maxlog = max(1, int(np.floor(np.log2(shape.max()))))
    for rng in _shards(seed, budget):
        x = rng.integers(0, shape, size=(SHARD, dim))
        half = SHARD // 2
        y = rng.integers(0, shape, size=(SHARD, dim)) - x
        scale = 2 ** rng.integers(0, maxlog, size=half)
        step = rng.normal(size=(half, dim))
        step /= np.linalg.norm(step, axis=-1, keepdims=True)
        y[half:] = np.rint(step * scale[:, None]).astype(int)
        if symmetric:
            y //= 2
        out_x.append(x)
        out_y.append(y)
    x = np.concatenate(out_x)[:budget]
    y = np.concatenate(out_y)[:budget]
    lo = np.zeros(dim, dtype=int)
    ok = np.all(x + y >= lo, axis=1) & np.all(x + y < shape, axis=1) & np.any(y != 0, axis=1)
    if symmetric:
        ok &= np.all(x - y >= lo, axis=1) & np.all(x - y < shape, axis=1)
    return x[ok], y[ok]


def holder_norm(samples: GridSamples, r, budget=DEFAULT_BUDGET, seed=0):
    """Sampled C^r norm: sup-norms of derivatives of order <= [r] plus the Hoelder ratio of order [r]."""
    m = int(np.floor(r))
    frac = r - m
    parts = {}
    for k in range(m + 1):
        D = samples.derivatives(k)
        parts[f"sup_d{k}"] = float(np.max(np.abs(D)))
    D = samples.derivatives(m)
    x, y = _pairs(samples.shape, budget, seed)
    if len(x):
        a = D[(slice(None),) + tuple(x.T)]
        b = D[(slice(None),) + tuple((x + y).T)]
        diff = np.max(np.abs(a - b), axis=0)
        dist = samples.h * np.linalg.norm(y, axis=1)
        ratio = float(np.max(diff / dist ** frac))
    else:
        ratio = 0.0
    parts["ratio"] = ratio
    parts["derivative"] = parts[f"sup_d{m}"] if m else 0.0
    return NormEstimate(r, sum(v for k, v in parts.items() if k.startswith("sup")) + ratio,
                        "divided-diff", budget, seed, parts)


def lipschitz_seminorm(samples: GridSamples, r, budget=DEFAULT_BUDGET, seed=0, max_offset=None):
    """Sampled Lambda_r seminorm sup |f(x+y) - 2f(x) + f(x-y)| / |y|^r for 0 < r < 2.

    ``max_offset`` restricts |y| (physical units).
    """
    if not 0 < r < 2:
        raise ValueError("r must lie in (0, 2)")
    x, y = _pairs(samples.shape, budget, seed, symmetric=True)
    if max_offset is not None:
        keep = samples.h * np.linalg.norm(y, axis=1) <= max_offset * (1 + 1e-12)
        x, y = x[keep], y[keep]
    v = samples.values
    if not len(x):
        return NormEstimate(r, 0.0, "second-diff", budget, seed, {"pairs": 0})
    d2 = v[tuple((x + y).T)] - 2 * v[tuple(x.T)] + v[tuple((x - y).T)]
    dist = samples.h * np.linalg.norm(y, axis=1)
    val = float(np.max(np.abs(d2) / dist ** r))
    return NormEstimate(r, val, "second-diff", budget, seed, {"pairs": int(len(x))})


# ---------------------------------------------------------------------------
# dyadic decomposition

@dataclass
class DyadicDecomposition:
    pieces: list
    levels: list
    norms: np.ndarray        # (levels, orders) derivative sup-norms on the interior window
    r: float
    A: float
    A_by_level: np.ndarray


def dyadic_decompose(samples: GridSamples, r, K_max, scale0=0.25, interior=0.5, tol=1e-6):
    """f = sum_k f_k with f_k differences of Gaussian mollifications at width scale0 2^-k.

    The last piece is the tail f - M_K f so the pieces reassemble f.  A is
    the smallest constant with |d^i f_k| <= A 2^{k(i - r)} for i <= [r] + 1
    (tail: i = 0 only), measured on the central ``interior`` fraction of
    the grid.
    """
    f = samples.values
    h = samples.h
    mol = [gaussian_filter(f, scale0 * 2.0 ** -k / h, mode="nearest") for k in range(K_max + 1)]
    pieces = [mol[0]] + [mol[k] - mol[k - 1] for k in range(1, K_max + 1)] + [f - mol[K_max]]
    drift = float(np.max(np.abs(np.sum(pieces, axis=0) - f)))
    if drift > tol:
        raise ValueError(f"reassembly drift {drift:.2e} above {tol:g}")
    window = tuple(slice(int(s * (1 - interior) / 2), int(s * (1 + interior) / 2) + 1)
                   for s in f.shape)
    orders = int(np.floor(r)) + 2
    norms = np.zeros((len(pieces), orders))
    A_lvl = np.zeros(len(pieces))
    for k, p in enumerate(pieces):
        g = GridSamples(p, h)
        top = orders if k <= K_max else 1
        for i in range(top):
            D = g.derivatives(i)[(slice(None),) + window]
            norms[k, i] = float(np.max(np.abs(D)))
            A_lvl[k] = max(A_lvl[k], norms[k, i] / 2.0 ** (k * (i - r)))
    return DyadicDecomposition(pieces, list(range(len(pieces))), norms, r,
                               float(np.max(A_lvl)), A_lvl)


# ---------------------------------------------------------------------------
# exponent fits

class ExponentFit(BaseEstimator):
    """Least-squares fit log value = slope * log d + intercept."""

    def __init__(self, floor=0.0, min_scales=4):
        self.floor = floor
        self.min_scales = min_scales

    def fit(self, d, values):
        d = np.asarray(d, dtype=float)
        v = np.abs(np.asarray(values, dtype=float))
        keep = (d > 0) & (v > self.floor) & np.isfinite(v)
        d, v = d[keep], v[keep]
        if len(d) < 2 or np.log2(d.max() / d.min()) < self.min_scales - 1 - 1e-9:
            raise ValueError(f"exponent fit needs >= {self.min_scales} dyadic scales above the floor")
        X = np.log(d)
        Y = np.log(v)
        slope, icpt = np.polyfit(X, Y, 1)
        self.slope_ = float(slope)
        self.intercept_ = float(icpt)
        self.residual_ = float(np.sqrt(np.mean((Y - slope * X - icpt) ** 2)))
        self.window_ = (float(d.min()), float(d.max()))
        self.n_points_ = int(len(d))
        self.d_, self.values_ = d, v
        return self

    def predict(self, d):
        if not hasattr(self, "slope_"):
            raise NotFittedError("ExponentFit is not fitted")
        return np.exp(self.intercept_) * np.asarray(d, dtype=float) ** self.slope_

    def certify(self, target, threshold=CERT_THRESHOLD, side="both"):
        """True when the slope is within ``threshold`` of target (or above/below it)."""
        if side == "above":
            return self.slope_ >= target - threshold
        if side == "below":
            return self.slope_ <= target + threshold
        return abs(self.slope_ - target) <= threshold

    def to_csv(self):
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["scale", "value", "slope", "residual"])
        for d, v in zip(self.d_, self.values_):
            w.writerow([f"{d:.12e}", f"{v:.12e}", f"{self.slope_:.12e}", f"{self.residual_:.12e}"])
        return buf.getvalue()


def boundary_exponent_fit(d, values, k=0, floor=0.0):
    """Fit |d^k u| against d(z).

    ``values`` are the k-th derivatives already (k only labels the fit)
    when given per scale; pass a 2-D array (rays x scales) to take the
    sup over rays first.
    """
    d = np.asarray(d, dtype=float)
    v = np.abs(np.asarray(values, dtype=float))
    if v.ndim == 2:
        v = v.max(axis=0)
    fit = ExponentFit(floor=floor).fit(d, v)
    fit.order_ = k
    return fit


__all__ = [
    "GridSamples", "NormEstimate", "holder_norm", "lipschitz_seminorm", "DyadicDecomposition",
    "dyadic_decompose", "ExponentFit", "boundary_exponent_fit",
]
