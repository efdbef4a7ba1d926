"""(0,q)-forms in z and mixed (0,k)-forms in (z, t) with callable coefficients."""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

FD_STENCIL = ((-2, 1.0 / 12), (-1, -8.0 / 12), (1, 8.0 / 12), (2, -1.0 / 12))


def canonical_index(I):
    """Sorted index tuple and the sign of the sorting permutation (0 if repeated)."""
    I = tuple(int(i) for i in I)
    if len(set(I)) != len(I):
        return I, 0
    sign = 1
    arr = list(I)
    for a in range(len(arr)):
        for b in range(len(arr) - 1 - a):
            if arr[b] > arr[b + 1]:
                arr[b], arr[b + 1] = arr[b + 1], arr[b]
                sign = -sign
    return tuple(arr), sign


def insert_index(k, I):
    """d_k ^ d^I = sign d^J with J sorted; sign 0 when k is already in I."""
    if k in I:
        return None, 0
    pos = sum(1 for i in I if i < k)
    return tuple(sorted(I + (k,))), (-1) ** pos


def _scaled(f, s):
    return lambda z: s * f(z)


def _summed(fs):
    fs = list(fs)
    if len(fs) == 1:
        return fs[0]
    return lambda z: sum(f(z) for f in fs)


def fd_dzbar(f, k, h=1e-3):
    """d f / d zbar_k by fourth-order central differences in x_k and y_k."""
    def g(z):
        z = np.asarray(z, dtype=complex)
        e = np.zeros(z.shape[-1], dtype=complex)
        e[k] = 1.0
        dx = sum(w * f(z + s * h * e) for s, w in FD_STENCIL) / h
        dy = sum(w * f(z + 1j * s * h * e) for s, w in FD_STENCIL) / h
        return 0.5 * (dx + 1j * dy)
    return g


@dataclass
class ZForm:
    """sum_I phi_I(z) dzbar^I over increasing multi-indices I with |I| = q.

    ``coeffs`` maps index tuples (any order, 0-based) to callables on
    arrays of shape (..., n); they are canonicalized on construction.
    ``partials`` optionally maps (I, k) to d phi_I / d zbar_k; missing ones
    fall back to finite differences.  ``closed`` marks forms known to be
    dbar-closed (e.g. outputs of :meth:`dbar`).
    """

    n: int
    q: int
    coeffs: dict
    partials: dict = field(default_factory=dict)
    r: float = math.inf
    closed: bool = False
    h_fd: float = 1e-3

    def __post_init__(self):
        if not 0 <= self.q <= self.n:
            raise ValueError(f"degree {self.q} outside 0..{self.n}")
        merged = {}
        parts = {}
        for I, f in self.coeffs.items():
            I = (I,) if isinstance(I, (int, np.integer)) else tuple(I)
            if len(I) != self.q or any(not 0 <= i < self.n for i in I):
                raise ValueError(f"index {I} does not fit a (0,{self.q})-form in C^{self.n}")
            J, s = canonical_index(I)
            if s == 0:
                continue
            merged.setdefault(J, []).append(f if s > 0 else _scaled(f, -1.0))
            for k in range(self.n):
                p = self.partials.get((I, k))
                if p is not None:
                    parts.setdefault((J, k), []).append(p if s > 0 else _scaled(p, -1.0))
        counts = {J: len(v) for J, v in merged.items()}
        self.coeffs = {J: _summed(v) for J, v in sorted(merged.items())}
        # a partial is only usable when every contributing coefficient supplied one
        self.partials = {key: _summed(v) for key, v in parts.items() if len(v) == counts[key[0]]}

    @classmethod
    def zero(cls, n, q):
        return cls(n, q, {}, closed=True)

    @property
    def indices(self):
        return list(self.coeffs)

    def evaluate(self, Z):
        Z = np.asarray(Z, dtype=complex)
        return {I: np.broadcast_to(np.asarray(f(Z), dtype=complex), Z.shape[:-1]).copy()
                for I, f in self.coeffs.items()}

    def partial(self, I, k):
        p = self.partials.get((I, k))
        return p if p is not None else fd_dzbar(self.coeffs[I], k, self.h_fd)

    def dbar(self):
        """dbar phi = sum_I sum_k d phi_I/d zbar_k dzbar_k ^ dzbar^I."""
        if self.q == self.n:
            return None
        if self.closed:
            return ZForm.zero(self.n, self.q + 1)
        out = {}
        for I in self.coeffs:
            for k in range(self.n):
                J, s = insert_index(k, I)
                if s == 0:
                    continue
                out.setdefault(J, []).append(_scaled(self.partial(I, k), float(s)))
        return ZForm(self.n, self.q + 1, {J: _summed(v) for J, v in out.items()},
                     r=self.r - 1, closed=True, h_fd=self.h_fd)

    def __add__(self, other):
        if (self.n, self.q) != (other.n, other.q):
            raise ValueError("forms of different type")
        coeffs = {}
        for F in (self, other):
            for I, f in F.coeffs.items():
                coeffs.setdefault(I, []).append(f)
        return ZForm(self.n, self.q, {I: _summed(v) for I, v in coeffs.items()},
                     r=min(self.r, other.r), closed=self.closed and other.closed, h_fd=self.h_fd)

    def scale(self, s):
        return ZForm(self.n, self.q, {I: _scaled(f, s) for I, f in self.coeffs.items()},
                     {key: _scaled(p, s) for key, p in self.partials.items()},
                     r=self.r, closed=self.closed, h_fd=self.h_fd)


# ---------------------------------------------------------------------------
# mixed forms on D x S

def _mask(I, J, n):
    m = 0
    for i in I:
        m |= 1 << i
    for j in J:
        m |= 1 << (n + j)
    return m


def mask_indices(m, n, nt):
    I = tuple(i for i in range(n) if m >> i & 1)
    J = tuple(j for j in range(nt) if m >> (n + j) & 1)
    return I, J


@dataclass
class MixedForm:
    """sum a_IJ(z, t) dzbar^I ^ dt^J with |I| + |J| = k.

    Coefficients are callables ``a(z, t)`` with z of shape (..., n) and t of
    shape (..., m); keys are (I, J) pairs of index tuples.  ``smoothness``
    records which smoothness hypotheses the caller vouches for:
    "C11" (variant T) and "C1" (variant T-tilde).
    """

    n: int
    m: int
    k: int
    coeffs: dict
    smoothness: tuple = ("C11", "C1")
    h_fd: float = 1e-3

    def __post_init__(self):
        merged = {}
        for (I, J), f in self.coeffs.items():
            I, J = tuple(I), tuple(J)
            if len(I) + len(J) != self.k:
                raise ValueError(f"term {(I, J)} has degree {len(I) + len(J)}, expected {self.k}")
            if any(not 0 <= i < self.n for i in I) or any(not 0 <= j < self.m for j in J):
                raise ValueError(f"index out of range in {(I, J)}")
            I2, s1 = canonical_index(I)
            J2, s2 = canonical_index(J)
            if s1 * s2 == 0:
                continue
            s = s1 * s2
            merged.setdefault((I2, J2), []).append(
                f if s > 0 else (lambda z, t, f=f: -f(z, t)))
        self.coeffs = {key: (v[0] if len(v) == 1 else
                             (lambda z, t, v=v: sum(g(z, t) for g in v)))
                       for key, v in sorted(merged.items())}

    def component(self, i):
        return MixedForm(self.n, self.m, self.k,
                         {(I, J): f for (I, J), f in self.coeffs.items() if len(I) == i},
                         self.smoothness, self.h_fd)

    def zform(self, J, t):
        """The z-form sum_I a_IJ(., t) dzbar^I for a fixed dt^J and t."""
        t = np.asarray(t, dtype=float)
        coeffs = {I: (lambda z, f=f: f(z, np.broadcast_to(t, np.shape(z)[:-1] + t.shape)))
                  for (I, J2), f in self.coeffs.items() if J2 == tuple(J)}
        return ZForm(self.n, self.k - len(J), coeffs, h_fd=self.h_fd)

    def evaluate(self, Z, T):
        """Dict (I, J) -> values at paired rows of Z and T."""
        Z = np.asarray(Z, dtype=complex)
        T = np.asarray(T, dtype=float)
        return {key: np.asarray(f(Z, T), dtype=complex) * np.ones(Z.shape[:-1])
                for key, f in self.coeffs.items()}


def mixed_split(phi: MixedForm):
    """Components [phi]_0 .. [phi]_k by dzbar-degree; those above n are zero."""
    return [phi.component(i) for i in range(phi.k + 1)]
