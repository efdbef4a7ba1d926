"""Sparse exterior algebra over the generators dzbar_j, dzeta_j, dzetabar_j.

A form is a dict from a generator bitmask to a coefficient.  Bits are laid
out as ``[dzbar_1..dzbar_n | dzeta_1..dzeta_n | dzetabar_1..dzetabar_n]`` and
a term always means the wedge of its generators in increasing bit order.
Coefficients are anything that supports ``+`` and ``*``: floats, complex
arrays, :class:`~dbarlab.autodiff.Jet` or :class:`~dbarlab.autodiff.Taylor`.
"""

from __future__ import annotations

import numpy as np

from .autodiff import Jet

ZBAR, ZETA, ZETABAR = 0, 1, 2
MAX_N = 4


def gen_bit(n, kind, j):
    """Bit index of generator ``kind`` (ZBAR/ZETA/ZETABAR), 0-based ``j``."""
    return kind * n + j


def popcount(m):
    return bin(m).count("1")


def wedge_sign(a, b):
    """Sign of sorting ``gens(a) ++ gens(b)``; 0 if they share a generator."""
    if a & b:
        return 0
    swaps = 0
    bb = b
    while bb:
        low = bb & -bb
        # generators of a sitting above this generator of b must hop over it
        swaps += popcount(a & ~((low << 1) - 1))
        bb ^= low
    return -1 if swaps & 1 else 1


class FormExpr:
    """Immutable sparse form in ``n`` complex dimensions."""

    def __init__(self, n, terms=None):
        if not 1 <= n <= MAX_N:
            raise ValueError(f"n must be in 1..{MAX_N}, got {n}")
        self.n = n
        self.terms = dict(terms or {})

    # construction
    @classmethod
    def scalar(cls, n, c):
        return cls(n, {0: c})

    @classmethod
    def gen(cls, n, kind, j, c=1.0):
        return cls(n, {1 << gen_bit(n, kind, j): c})

    @classmethod
    def one_form(cls, n, kind, coefs):
        """``sum_j coefs[j] d(kind)_j``; zero coefficients (python 0) are skipped."""
        out = {}
        for j, c in enumerate(coefs):
            if isinstance(c, int) and c == 0:
                continue
            out[1 << gen_bit(n, kind, j)] = c
        return cls(n, out)

    # algebra
    def __add__(self, other):
        if not isinstance(other, FormExpr):
            return NotImplemented
        out = dict(self.terms)
        for m, c in other.terms.items():
            out[m] = out[m] + c if m in out else c
        return FormExpr(self.n, out)

    def __neg__(self):
        return FormExpr(self.n, {m: -c for m, c in self.terms.items()})

    def __sub__(self, other):
        return self + (-other)

    def scale(self, s):
        return FormExpr(self.n, {m: c * s for m, c in self.terms.items()})

    def wedge(self, other):
        out = {}
        for ma, ca in self.terms.items():
            for mb, cb in other.terms.items():
                sg = wedge_sign(ma, mb)
                if sg == 0:
                    continue
                m = ma | mb
                c = ca * cb if sg > 0 else -(ca * cb)
                out[m] = out[m] + c if m in out else c
        return FormExpr(self.n, out)

    __xor__ = wedge

    def power(self, k):
        out = FormExpr.scalar(self.n, 1.0)
        for _ in range(k):
            out = out.wedge(self)
        return out

    def map(self, fn):
        return FormExpr(self.n, {m: fn(c) for m, c in self.terms.items()})

    # gradings
    def grading(self, m):
        n = self.n
        full = (1 << n) - 1
        return (popcount(m & full), popcount((m >> n) & full), popcount((m >> 2 * n) & full))

    def degree_part(self, a=None, b=None, c=None):
        keep = {}
        for m, v in self.terms.items():
            ga, gb, gc = self.grading(m)
            if (a is None or ga == a) and (b is None or gb == b) and (c is None or gc == c):
                keep[m] = v
        return FormExpr(self.n, keep)

    def zbar_mask(self, m):
        return m & ((1 << self.n) - 1)

    def zeta_mask(self, m):
        return m & ~((1 << self.n) - 1)

    def values(self):
        """Replace jet coefficients by their values."""
        return self.map(lambda c: c.val if isinstance(c, Jet) else c)

    def __repr__(self):
        return f"FormExpr(n={self.n}, terms={sorted(self.terms)})"

    def describe(self, m):
        names = []
        for kind, lab in ((ZBAR, "dzbar"), (ZETA, "dzeta"), (ZETABAR, "dzetabar")):
            for j in range(self.n):
                if m >> gen_bit(self.n, kind, j) & 1:
                    names.append(f"{lab}{j + 1}")
        return "^".join(names) if names else "1"


def dbar_jet(form: FormExpr, zbar_slots=None, zetabar_slots=None):
    """Apply dbar to a form whose coefficients are jets.

    ``zbar_slots[k]`` is the jet slot holding d/dzbar_k (None to skip the z
    part), likewise for zeta.  The differential acts from the left:
    ``dbar(c dx^I) = sum_k dc/dxbar_k dxbar_k ^ dx^I``.
    """
    n = form.n
    out = FormExpr(n)
    for kind, slots in ((ZBAR, zbar_slots), (ZETABAR, zetabar_slots)):
        if slots is None:
            continue
        for k, s in enumerate(slots):
            g = FormExpr.gen(n, kind, k)
            part = FormExpr(n, {m: (c.der[s] if isinstance(c, Jet) else np.zeros_like(c))
                                for m, c in form.terms.items()})
            out = out + g.wedge(part)
    return out


def max_abs_diff(a: FormExpr, b: FormExpr):
    """Max coefficient difference over the union of terms (values only)."""
    keys = set(a.terms) | set(b.terms)
    worst = 0.0
    for m in keys:
        ca = a.terms.get(m, 0.0)
        cb = b.terms.get(m, 0.0)
        ca = ca.val if isinstance(ca, Jet) else ca
        cb = cb.val if isinstance(cb, Jet) else cb
        worst = max(worst, float(np.max(np.abs(np.asarray(ca) - np.asarray(cb)))))
    return worst


def max_abs(a: FormExpr):
    worst = 0.0
    for c in a.terms.values():
        c = c.val if isinstance(c, Jet) else c
        worst = max(worst, float(np.max(np.abs(c))))
    return worst


def signed_pullback_rule(dim_m: int) -> int:
    """Sign picked up when d_z is moved past integration over a dim_m manifold."""
    return -1 if dim_m % 2 else 1
