"""Stein-type extension with a moment kernel, cutoff and the commutator [dbar, E]."""

from __future__ import annotations

import json
from dataclasses import dataclass, field

import numpy as np
from numpy.polynomial import legendre
from sklearn.base import BaseEstimator, TransformerMixin
from sklearn.exceptions import NotFittedError

from ..geometry import gauge


def _bump(lam, lo, hi):
    out = np.zeros_like(lam, dtype=float)
    inside = (lam > lo) & (lam < hi)
    l = lam[inside]
    out[inside] = np.exp(-(hi - lo) / ((l - lo) * (hi - l)))
    return out


@dataclass
class MomentKernel:
    """psi on [1, Lambda] with int psi = 1 and int lambda^k psi = 0 for k = 1..K.

    psi is a polynomial of degree K times a C-infinity bump, so it is
    compactly supported (in particular rapidly decreasing).  ``nodes`` and
    ``weights`` are a discrete rule whose moments are exact to rounding;
    they are what the extension uses.
    """

    K: int = 4
    Lambda: float = 2.0
    n_nodes: int = 16
    n_ref: int = 400
    coef: np.ndarray = field(init=False, repr=False)
    nodes: np.ndarray = field(init=False, repr=False)
    weights: np.ndarray = field(init=False, repr=False)

    def __post_init__(self):
        x, w = legendre.leggauss(self.n_ref)
        lam = 1 + (self.Lambda - 1) * (x + 1) / 2
        w = w * (self.Lambda - 1) / 2
        b = _bump(lam, 1.0, self.Lambda)
        u = self._u(lam)
        P = legendre.legvander(u, self.K)  # (m, K+1)
        A = np.array([[np.sum(w * lam ** k * b * P[:, j]) for j in range(self.K + 1)]
                      for k in range(self.K + 1)])
        rhs = np.zeros(self.K + 1)
        rhs[0] = 1.0
        self.coef = np.linalg.solve(A, rhs)
        # discrete rule used by the extension, corrected to exact moments
        x, w = legendre.leggauss(self.n_nodes)
        lam = 1 + (self.Lambda - 1) * (x + 1) / 2
        w = w * (self.Lambda - 1) / 2
        c = w * self(lam)
        V = np.vander(lam, self.K + 1, increasing=True).T
        c = c + V.T @ np.linalg.solve(V @ V.T, rhs - V @ c)
        self.nodes, self.weights = lam, c
        err = self.truncation_error()
        if err > 1e-8:
            raise ValueError(f"lambda-quadrature error {err:.2e} above 1e-8; increase n_ref")

    def _u(self, lam):
        return (2 * lam - 1 - self.Lambda) / (self.Lambda - 1)

    def __call__(self, lam):
        lam = np.asarray(lam, dtype=float)
        return _bump(lam, 1.0, self.Lambda) * legendre.legval(self._u(lam), self.coef)

    def moments(self, n_quad=None):
        """Continuous moments int lambda^k psi for k = 0..K."""
        x, w = legendre.leggauss(n_quad or self.n_ref)
        lam = 1 + (self.Lambda - 1) * (x + 1) / 2
        w = w * (self.Lambda - 1) / 2
        return np.array([np.sum(w * lam ** k * self(lam)) for k in range(self.K + 1)])

    def discrete_moments(self):
        return np.array([np.sum(self.weights * self.nodes ** k) for k in range(self.K + 1)])

    def truncation_error(self):
        return float(np.max(np.abs(self.moments(self.n_ref) - self.moments(2 * self.n_ref))))

    def moment_defects(self):
        m = self.moments()
        m[0] -= 1.0
        return np.abs(m)


def smoothstep(u):
    """C-infinity step: 0 for u <= 0, 1 for u >= 1."""
    u = np.asarray(u, dtype=float)
    a = np.where(u > 0, np.exp(-1.0 / np.where(u > 0, u, 1.0)), 0.0)
    b = np.where(u < 1, np.exp(-1.0 / np.where(u < 1, 1 - u, 1.0)), 0.0)
    return a / (a + b)


class SteinExtension(BaseEstimator, TransformerMixin):
    """Extension across the boundary of a star-shaped model domain.

    Outside D the value at x is ``sum_i c_i f(x (1 - lambda_i s(x)))`` with
    ``s(x) = c (mu - 1) / mu``, where mu is the gauge.  This is the averaging
    operator along rays through the origin; the moment conditions make it
    reproduce polynomials of degree <= K exactly.  A radial cutoff equal to
    1 for mu <= 1 + delta/2 and 0 for mu >= 1 + delta gives compact support.

    ``fit(f)`` stores a coefficient callable ``f(z)`` (z of shape (..., n));
    ``transform(Z)`` returns the cut-off extension at the rows of Z.
    """

    def __init__(self, spec=None, delta=None, c=2.0, K=4, n_nodes=16, cutoff=True, h_fd=1e-3):
        self.spec = spec
        self.delta = delta
        self.c = c
        self.K = K
        self.n_nodes = n_nodes
        self.cutoff = cutoff
        self.h_fd = h_fd

    @property
    def kernel_(self):
        if getattr(self, "_kernel", None) is None:
            self._kernel = MomentKernel(K=self.K, n_nodes=self.n_nodes)
        return self._kernel

    @property
    def delta_(self):
        return self.delta if self.delta is not None else self.spec.delta_max

    def fit(self, f, y=None):
        if not callable(f):
            raise TypeError("fit expects a coefficient callable f(z)")
        self.f_ = f
        return self

    def transform(self, Z):
        if not hasattr(self, "f_"):
            raise NotFittedError("SteinExtension is not fitted")
        return self.extend(self.f_, Z)

    # core maps
    def chi(self, Z):
        mu = gauge(self.spec, Z)
        if not self.cutoff:
            return np.ones_like(mu)
        d = self.delta_
        return 1.0 - smoothstep((mu - 1.0 - d / 2) / (d / 2))

    def extend(self, f, Z, with_cutoff=True):
        """E f at rows of Z; equals f on the closure of D."""
        Z = np.asarray(Z, dtype=complex)
        mu = gauge(self.spec, Z)
        out = np.zeros(Z.shape[:-1], dtype=complex)
        inside = mu <= 1.0
        if np.any(inside):
            out[inside] = f(Z[inside])
        outside = ~inside & (mu < 1.0 + self.delta_ if with_cutoff and self.cutoff else ~inside)
        if np.any(outside):
            Zo = Z[outside]
            m = mu[outside]
            s = self.c * (m - 1.0) / m
            acc = np.zeros(len(Zo), dtype=complex)
            for lam, w in zip(self.kernel_.nodes, self.kernel_.weights):
                acc += w * f(Zo * (1.0 - lam * s)[:, None])
            out[outside] = acc
        if with_cutoff and self.cutoff:
            out = out * self.chi(Z)
        return out

    def dbar_extended(self, f, Z, h=None):
        """d/dzbar_k of the cut-off extension by 4th-order central differences.

        Returns an array of shape Z.shape[:-1] + (n,).
        """
        Z = np.asarray(Z, dtype=complex)
        h = h or self.h_fd
        n = Z.shape[-1]
        out = np.empty(Z.shape, dtype=complex)
        st = ((-2, 1.0 / 12), (-1, -8.0 / 12), (1, 8.0 / 12), (2, -1.0 / 12))
        for k in range(n):
            e = np.zeros(n, dtype=complex)
            e[k] = 1.0
            dx = sum(w * self.extend(f, Z + s * h * e) for s, w in st) / h
            dy = sum(w * self.extend(f, Z + 1j * s * h * e) for s, w in st) / h
            out[..., k] = 0.5 * (dx + 1j * dy)
        return out


def stein_extend_halfspace(f, X, kernel=None, c=2.0):
    """Extension of f from {x_n >= 0} to x_n < 0 along the last coordinate.

    ``f`` takes real points of shape (..., m); delta* = c |x_n|.
    """
    kernel = kernel or MomentKernel()
    X = np.asarray(X, dtype=float)
    out = np.array(f(X), dtype=float)
    neg = X[..., -1] < 0
    if np.any(neg):
        Xn = X[neg]
        dstar = -c * Xn[:, -1]
        acc = np.zeros(len(Xn))
        for lam, w in zip(kernel.nodes, kernel.weights):
            Y = Xn.copy()
            Y[:, -1] = Xn[:, -1] + lam * dstar
            acc += w * f(Y)
        out[neg] = acc
    return out


def commutator(form, ext: SteinExtension, Z):
    """[dbar, E] phi at rows of Z as a dict from (q+1)-index tuples to arrays.

    ``form`` is a :class:`dbarlab.homotopy.ZForm`.  Inside the closed
    domain the result is exactly zero (E is the identity there).
    """
    Z = np.asarray(Z, dtype=complex)
    n = Z.shape[-1]
    mu = gauge(ext.spec, Z)
    out = {}
    outside = mu > 1.0
    dphi = form.dbar()
    for I, f in form.coeffs.items():
        if not np.any(outside):
            break
        dE = np.zeros(Z.shape, dtype=complex)
        dE[outside] = ext.dbar_extended(f, Z[outside])
        for k in range(n):
            if k in I:
                continue
            J, sgn = _insert(k, I)
            out.setdefault(J, np.zeros(Z.shape[:-1], dtype=complex))
            out[J] = out[J] + sgn * dE[..., k]
    for J, g in dphi.coeffs.items():
        if not np.any(outside):
            break
        v = np.zeros(Z.shape[:-1], dtype=complex)
        v[outside] = ext.extend(g, Z[outside])
        out.setdefault(J, np.zeros(Z.shape[:-1], dtype=complex))
        out[J] = out[J] - v
    if not np.any(outside):
        return {}
    return out


def _insert(k, I):
    """dzbar_k ^ dzbar^I = sign * dzbar^J with J sorted."""
    pos = sum(1 for i in I if i < k)
    J = tuple(sorted(I + (k,)))
    return J, (-1) ** pos


def save_field(path, values, origin, spacing, provenance):
    """Flat little-endian binary plus JSON sidecar."""
    values = np.ascontiguousarray(values)
    dtype = "<c16" if np.iscomplexobj(values) else "<f8"
    values.astype(dtype).tofile(path)
    side = {"origin": list(map(float, np.atleast_1d(origin))),
            "spacing": list(map(float, np.atleast_1d(spacing))),
            "shape": list(values.shape), "dtype": dtype, "provenance": provenance}
    with open(str(path) + ".json", "w") as fh:
        json.dump(side, fh, indent=1, sort_keys=True)


def load_field(path):
    with open(str(path) + ".json") as fh:
        side = json.load(fh)
    data = np.fromfile(path, dtype=side["dtype"]).reshape(side["shape"])
    return data, side
