"""Forward-mode differentiation helpers.

Two number types live here:

``Jet``
    first-order multi-slot dual numbers over Wirtinger variables.  The slot
    axis is split in two halves: slot ``i`` holds a derivative in a
    holomorphic variable ``w_i`` and slot ``i + k`` the derivative in its
    conjugate.  With that layout ``conj`` is well defined, which is what makes
    complex kernels with ``z`` and ``zbar`` inputs differentiable.

``Taylor``
    truncated univariate Taylor series, used for higher directional
    derivatives (Whitney extensions, second derivatives of solution
    operators along a complex line).

Both work on numpy arrays and broadcast like them.  Functions ``exp``,
``log``, ``sqrt``, ``conj``, ``real`` and ``imag`` dispatch on the argument
type so the same kernel code runs on floats, complex arrays, jets and
Taylor series.
"""

from __future__ import annotations

import numpy as np


def _lift(x):
    return np.asarray(x)


class Jet:
    """Value plus gradient over ``2k`` Wirtinger slots."""

    __array_priority__ = 100

    def __init__(self, val, der):
        self.val = np.asarray(val)
        self.der = np.asarray(der)

    @property
    def nslots(self):
        return self.der.shape[0]

    @classmethod
    def variables(cls, w, wb=None):
        """Seed jets for holomorphic inputs ``w`` (shape ``(k, ...)``).

        Returns ``(w_jets, wb_jets)``; the conjugates are independent inputs
        so that ``d/dw`` and ``d/dwbar`` come out separately.
        """
        w = np.asarray(w, dtype=complex)
        wb = np.conj(w) if wb is None else np.asarray(wb, dtype=complex)
        k = w.shape[0]
        rest = w.shape[1:]
        wj, wbj = [], []
        for i in range(k):
            d = np.zeros((2 * k,) + rest, dtype=complex)
            d[i] = 1.0
            wj.append(cls(w[i], d))
            d = np.zeros((2 * k,) + rest, dtype=complex)
            d[i + k] = 1.0
            wbj.append(cls(wb[i], d))
        return wj, wbj

    def _coerce(self, other):
        if isinstance(other, Jet):
            return other
        other = _lift(other)
        return Jet(other, np.zeros((self.nslots,) + np.broadcast(other, self.val).shape,
                                   dtype=complex))

    def __add__(self, other):
        if isinstance(other, Jet):
            return Jet(self.val + other.val, self.der + other.der)
        return Jet(self.val + other, self.der + np.zeros_like(_lift(other), dtype=complex))

    __radd__ = __add__

    def __neg__(self):
        return Jet(-self.val, -self.der)

    def __sub__(self, other):
        return self + (-other)

    def __rsub__(self, other):
        return (-self) + other

    def __mul__(self, other):
        if isinstance(other, Jet):
            return Jet(self.val * other.val, self.der * other.val + other.der * self.val)
        other = _lift(other)
        return Jet(self.val * other, self.der * other)

    __rmul__ = __mul__

    def reciprocal(self):
        inv = 1.0 / self.val
        return Jet(inv, -self.der * inv * inv)

    def __truediv__(self, other):
        if isinstance(other, Jet):
            return self * other.reciprocal()
        return self * (1.0 / _lift(other))

    def __rtruediv__(self, other):
        return self.reciprocal() * other

    def __pow__(self, p):
        if isinstance(p, (int, np.integer)):
            if p == 0:
                return Jet(np.ones_like(self.val), np.zeros_like(self.der))
            if p < 0:
                return (self ** (-p)).reciprocal()
            vp = self.val ** (p - 1)
            return Jet(vp * self.val, p * vp * self.der)
        vp = self.val ** (p - 1)
        return Jet(vp * self.val, p * vp * self.der)

    def conj(self):
        k = self.nslots // 2
        d = np.concatenate([np.conj(self.der[k:]), np.conj(self.der[:k])], axis=0)
        return Jet(np.conj(self.val), d)

    def exp(self):
        e = np.exp(self.val)
        return Jet(e, e * self.der)

    def log(self):
        return Jet(np.log(self.val), self.der / self.val)

    def sqrt(self):
        s = np.sqrt(self.val)
        return Jet(s, self.der / (2 * s))

    def sin(self):
        return Jet(np.sin(self.val), np.cos(self.val) * self.der)

    def cos(self):
        return Jet(np.cos(self.val), -np.sin(self.val) * self.der)

    def real(self):
        return (self + self.conj()) * 0.5

    def imag(self):
        return (self - self.conj()) * (-0.5j)

    def __repr__(self):
        return f"Jet(val={self.val!r}, nslots={self.nslots})"


class Taylor:
    """Truncated Taylor series ``sum_k c[k] t^k`` with ``c`` of shape ``(K+1, ...)``."""

    __array_priority__ = 100

    def __init__(self, coef):
        self.coef = np.asarray(coef)

    @property
    def order(self):
        return self.coef.shape[0] - 1

    @classmethod
    def line(cls, x0, v, order):
        """The affine path ``x0 + t v`` as a series."""
        x0 = np.asarray(x0)
        v = np.asarray(v)
        shape = np.broadcast(x0, v).shape
        dtype = np.result_type(x0, v, float)
        c = np.zeros((order + 1,) + shape, dtype=dtype)
        c[0] = x0
        if order >= 1:
            c[1] = v
        return cls(c)

    def derivative(self, k):
        """k-th derivative at t = 0."""
        return self.coef[k] * float(np.prod(np.arange(1, k + 1)))

    def _const(self, x):
        x = _lift(x)
        c = np.zeros((self.order + 1,) + np.broadcast(x, self.coef[0]).shape,
                     dtype=np.result_type(x, self.coef))
        c[0] = x
        return c

    def __add__(self, other):
        if isinstance(other, Taylor):
            return Taylor(self.coef + other.coef)
        c = self.coef + np.zeros_like(self._const(other))
        c[0] = c[0] + other
        return Taylor(c)

    __radd__ = __add__

    def __neg__(self):
        return Taylor(-self.coef)

    def __sub__(self, other):
        return self + (-other)

    def __rsub__(self, other):
        return (-self) + other

    def __mul__(self, other):
        if not isinstance(other, Taylor):
            return Taylor(self.coef * _lift(other))
        a, b = self.coef, other.coef
        K = self.order
        out = np.zeros((K + 1,) + np.broadcast(a[0], b[0]).shape, dtype=np.result_type(a, b))
        for k in range(K + 1):
            for j in range(k + 1):
                out[k] = out[k] + a[j] * b[k - j]
        return Taylor(out)

    __rmul__ = __mul__

    def reciprocal(self):
        a = self.coef
        K = self.order
        out = np.zeros_like(a, dtype=np.result_type(a, float))
        out[0] = 1.0 / a[0]
        for k in range(1, K + 1):
            s = np.zeros_like(out[0])
            for j in range(1, k + 1):
                s = s + a[j] * out[k - j]
            out[k] = -s / a[0]
        return Taylor(out)

    def __truediv__(self, other):
        if isinstance(other, Taylor):
            return self * other.reciprocal()
        return Taylor(self.coef / _lift(other))

    def __rtruediv__(self, other):
        return self.reciprocal() * other

    def __pow__(self, p):
        if isinstance(p, (int, np.integer)) and p >= 0:
            out = Taylor(self._const(1.0))
            base = self
            while p:
                if p & 1:
                    out = out * base
                base = base * base
                p >>= 1
            return out
        if isinstance(p, (int, np.integer)):
            return (self ** (-p)).reciprocal()
        return (self.log() * p).exp()

    def exp(self):
        a = self.coef
        K = self.order
        out = np.zeros_like(a, dtype=np.result_type(a, float))
        out[0] = np.exp(a[0])
        for k in range(1, K + 1):
            s = np.zeros_like(out[0])
            for j in range(1, k + 1):
                s = s + j * a[j] * out[k - j]
            out[k] = s / k
        return Taylor(out)

    def log(self):
        a = self.coef
        K = self.order
        out = np.zeros_like(a, dtype=np.result_type(a, float))
        out[0] = np.log(a[0])
        for k in range(1, K + 1):
            s = k * a[k]
            for j in range(1, k):
                s = s - j * out[j] * a[k - j]
            out[k] = s / (k * a[0])
        return Taylor(out)

    def sqrt(self):
        return (self.log() * 0.5).exp()

    def _sincos(self):
        a = self.coef
        K = self.order
        sn = np.zeros_like(a, dtype=np.result_type(a, float))
        cs = np.zeros_like(sn)
        sn[0], cs[0] = np.sin(a[0]), np.cos(a[0])
        for k in range(1, K + 1):
            s1 = np.zeros_like(sn[0])
            c1 = np.zeros_like(sn[0])
            for j in range(1, k + 1):
                s1 = s1 + j * a[j] * cs[k - j]
                c1 = c1 - j * a[j] * sn[k - j]
            sn[k], cs[k] = s1 / k, c1 / k
        return Taylor(sn), Taylor(cs)

    def sin(self):
        return self._sincos()[0]

    def cos(self):
        return self._sincos()[1]

    def conj(self):
        return Taylor(np.conj(self.coef))

    def real(self):
        return Taylor(np.real(self.coef))

    def imag(self):
        return Taylor(np.imag(self.coef))


def _dispatch(name, npfunc):
    def f(x):
        if isinstance(x, (Jet, Taylor)):
            return getattr(x, name)()
        return npfunc(x)
    f.__name__ = name
    return f


exp = _dispatch("exp", np.exp)
log = _dispatch("log", np.log)
sqrt = _dispatch("sqrt", np.sqrt)
conj = _dispatch("conj", np.conj)
real = _dispatch("real", np.real)
imag = _dispatch("imag", np.imag)
sin = _dispatch("sin", np.sin)
cos = _dispatch("cos", np.cos)


def value(x):
    """Plain value of a number-like object."""
    if isinstance(x, Jet):
        return x.val
    if isinstance(x, Taylor):
        return x.coef[0]
    return np.asarray(x)
