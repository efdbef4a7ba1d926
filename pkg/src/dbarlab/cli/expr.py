"""Coefficient expressions: a small grammar over z1.., t1.. with complex literals.

Grammar (lowest to highest precedence)::

    sum     := product (('+' | '-') product)*
    product := unary (('*' | '/') unary)*
    unary   := '-' unary | atom
    atom    := number | 'i' | name | func '(' args ')' | '(' sum ')'

Numbers may carry an imaginary suffix (``2.5i``, ``3j``).  Functions are
conj, re, im, exp, abs2 and pow(x, integer).  Errors report byte offsets
into the UTF-8 source.
"""

from __future__ import annotations

import re
from dataclasses import dataclass

import numpy as np

FUNCS = {"conj": 1, "re": 1, "im": 1, "exp": 1, "abs2": 1, "pow": 2}
_TOKEN = re.compile(r"""
    (?P<ws>\s+)
  | (?P<num>(?:\d+\.\d*|\.\d+|\d+)(?:[eE][+-]?\d+)?[ij]?)
  | (?P<name>[A-Za-z_][A-Za-z_0-9]*)
  | (?P<op>[-+*/(),])
""", re.VERBOSE)
_VAR = re.compile(r"([zt])([1-9][0-9]*)$")


class ExprError(ValueError):
    """Parse error with a byte offset into the source."""

    def __init__(self, message, offset):
        super().__init__(f"{message} at byte {offset}")
        self.offset = offset
        self.message = message


class EvalError(ArithmeticError):
    pass


# ---------------------------------------------------------------------------
# tree

@dataclass(frozen=True)
class Num:
    value: int | float
    imag: bool = False


@dataclass(frozen=True)
class Var:
    kind: str   # "z" or "t"
    index: int  # 0-based


@dataclass(frozen=True)
class Neg:
    arg: object


@dataclass(frozen=True)
class Bin:
    op: str
    left: object
    right: object


@dataclass(frozen=True)
class Call:
    fn: str
    args: tuple


# ---------------------------------------------------------------------------
# parsing

def _tokens(text):
    raw = text.encode("utf-8")
    pos = 0
    out = []
    while pos < len(text):
        m = _TOKEN.match(text, pos)
        off = len(text[:pos].encode("utf-8"))
        if not m:
            raise ExprError(f"unexpected character {text[pos]!r}", off)
        if m.lastgroup != "ws":
            out.append((m.lastgroup, m.group(), off))
        pos = m.end()
    out.append(("end", "", len(raw)))
    return out


class _Parser:
    def __init__(self, text):
        self.toks = _tokens(text)
        self.i = 0

    def peek(self):
        return self.toks[self.i]

    def take(self, value=None):
        tok = self.toks[self.i]
        if value is not None and tok[1] != value:
            what = "end of input" if tok[0] == "end" else repr(tok[1])
            raise ExprError(f"expected {value!r}, found {what}", tok[2])
        self.i += 1
        return tok

    def sum(self):
        node = self.product()
        while self.peek()[1] in ("+", "-"):
            op = self.take()[1]
            node = Bin(op, node, self.product())
        return node

    def product(self):
        node = self.unary()
        while self.peek()[1] in ("*", "/"):
            op = self.take()[1]
            node = Bin(op, node, self.unary())
        return node

    def unary(self):
        if self.peek()[1] == "-":
            self.take()
            return Neg(self.unary())
        return self.atom()

    def atom(self):
        kind, val, off = self.peek()
        if kind == "num":
            self.take()
            imag = val[-1] in "ij"
            body = val[:-1] if imag else val
            num = int(body) if re.fullmatch(r"\d+", body) else float(body)
            return Num(num, imag)
        if kind == "name":
            self.take()
            if val in FUNCS:
                return self.call(val, off)
            if val == "i":
                return Num(1, True)
            m = _VAR.match(val)
            if m:
                return Var(m.group(1), int(m.group(2)) - 1)
            raise ExprError(f"unknown identifier {val!r}", off)
        if val == "(":
            self.take()
            node = self.sum()
            self.take(")")
            return node
        what = "end of input" if kind == "end" else repr(val)
        raise ExprError(f"unexpected {what}", off)

    def call(self, fn, off):
        self.take("(")
        args = [self.sum()]
        while self.peek()[1] == ",":
            self.take()
            if fn == "pow":
                k_off = self.peek()[2]
                neg = False
                if self.peek()[1] == "-":
                    self.take()
                    neg = True
                kind, val, _ = self.peek()
                if kind != "num" or not re.fullmatch(r"\d+", val):
                    raise ExprError("pow exponent must be an integer literal", k_off)
                self.take()
                args.append(Num(-int(val) if neg else int(val)))
            else:
                args.append(self.sum())
        if len(args) != FUNCS[fn]:
            raise ExprError(f"{fn} takes {FUNCS[fn]} argument(s), got {len(args)}", off)
        self.take(")")
        return Call(fn, tuple(args))


def parse_expr(text: str):
    p = _Parser(text)
    node = p.sum()
    kind, val, off = p.peek()
    if kind != "end":
        raise ExprError(f"unexpected {val!r}" if val != ")" else "unbalanced ')'", off)
    return CoeffExpr(node, text)


# ---------------------------------------------------------------------------
# printing

_PREC = {"+": 1, "-": 1, "*": 2, "/": 2}


def to_text(node, parent=0, right=False):
    if isinstance(node, Num):
        s = repr(node.value) if isinstance(node.value, float) else str(node.value)
        return s + "i" if node.imag else s
    if isinstance(node, Var):
        return f"{node.kind}{node.index + 1}"
    if isinstance(node, Neg):
        s = "-" + to_text(node.arg, 3)
        return f"({s})" if parent >= 3 else s
    if isinstance(node, Call):
        return f"{node.fn}(" + ", ".join(to_text(a) for a in node.args) + ")"
    p = _PREC[node.op]
    s = f"{to_text(node.left, p)} {node.op} {to_text(node.right, p, True)}"
    # left-associative: a right operand of equal precedence needs parentheses
    if p < parent or (p == parent and right):
        return f"({s})"
    return s


# ---------------------------------------------------------------------------
# evaluation

def _value(node, z, t):
    if isinstance(node, Num):
        return node.value * 1j if node.imag else node.value
    if isinstance(node, Var):
        src = z if node.kind == "z" else t
        if src is None or node.index >= src.shape[-1]:
            raise EvalError(f"variable {node.kind}{node.index + 1} not available")
        return src[..., node.index]
    if isinstance(node, Neg):
        return -_value(node.arg, z, t)
    if isinstance(node, Call):
        a = _value(node.args[0], z, t)
        if node.fn == "conj":
            return np.conj(a)
        if node.fn == "re":
            return np.real(a)
        if node.fn == "im":
            return np.imag(a)
        if node.fn == "exp":
            return np.exp(a)
        if node.fn == "abs2":
            return np.real(a * np.conj(a))
        k = node.args[1].value
        if k < 0:
            if np.any(np.asarray(a) == 0):
                raise EvalError("division by zero in pow")
            return 1.0 / np.asarray(a, dtype=complex) ** (-k)
        return np.asarray(a) ** k if k else np.ones_like(np.asarray(a, dtype=complex))
    a = _value(node.left, z, t)
    b = _value(node.right, z, t)
    if node.op == "+":
        return a + b
    if node.op == "-":
        return a - b
    if node.op == "*":
        return a * b
    if np.any(np.asarray(b) == 0):
        raise EvalError("division by zero")
    return a / b


# ---------------------------------------------------------------------------
# Wirtinger derivatives

ZERO, ONE = Num(0), Num(1)


def _add(a, b):
    if a == ZERO:
        return b
    if b == ZERO:
        return a
    return Bin("+", a, b)


def _mul(a, b):
    if a == ZERO or b == ZERO:
        return ZERO
    if a == ONE:
        return b
    if b == ONE:
        return a
    return Bin("*", a, b)


def _conj(a):
    if isinstance(a, Num):
        return Neg(a) if a.imag else a
    return Call("conj", (a,))


def wirtinger(node, k, bar):
    """d/dz_k (bar=False) or d/dzbar_k (bar=True) as a new tree."""
    if isinstance(node, Num):
        return ZERO
    if isinstance(node, Var):
        return ONE if node.kind == "z" and node.index == k and not bar else ZERO
    if isinstance(node, Neg):
        d = wirtinger(node.arg, k, bar)
        return ZERO if d == ZERO else Neg(d)
    if isinstance(node, Call):
        u = node.args[0]
        du = wirtinger(u, k, bar)
        # d conj(u) = conj(d' u) with the other Wirtinger derivative
        dcu = _conj(wirtinger(u, k, not bar))
        if node.fn == "conj":
            return dcu
        if node.fn == "re":
            s = _add(du, dcu)
            return ZERO if s == ZERO else Bin("*", Num(0.5), s)
        if node.fn == "im":
            if du == ZERO and dcu == ZERO:
                return ZERO
            s = du if dcu == ZERO else Neg(dcu) if du == ZERO else Bin("-", du, dcu)
            return Bin("*", Num(-0.5, True), s)
        if node.fn == "exp":
            return _mul(node, du)
        if node.fn == "abs2":
            return _add(_mul(du, Call("conj", (u,))), _mul(u, dcu))
        n = node.args[1].value
        if n == 0 or du == ZERO:
            return ZERO
        lower = u if n - 1 == 1 else Call("pow", (u, Num(n - 1)))
        return _mul(_mul(Num(n), lower if n != 1 else ONE), du)
    dl = wirtinger(node.left, k, bar)
    dr = wirtinger(node.right, k, bar)
    if node.op in "+-":
        if dr == ZERO:
            return dl
        return Bin(node.op, dl, dr) if dl != ZERO else Neg(dr) if node.op == "-" else dr
    if node.op == "*":
        return _add(_mul(dl, node.right), _mul(node.left, dr))
    # quotient rule
    num = _add(_mul(dl, node.right), Neg(_mul(node.left, dr)) if dr != ZERO else ZERO)
    if num == ZERO:
        return ZERO
    return Bin("/", num, Call("pow", (node.right, Num(2))))


def variables(node):
    if isinstance(node, Var):
        return {(node.kind, node.index)}
    if isinstance(node, Num):
        return set()
    if isinstance(node, Neg):
        return variables(node.arg)
    if isinstance(node, Call):
        return set().union(*(variables(a) for a in node.args))
    return variables(node.left) | variables(node.right)


@dataclass(frozen=True)
class CoeffExpr:
    tree: object
    source: str = ""

    def __eq__(self, other):
        return isinstance(other, CoeffExpr) and self.tree == other.tree

    def __hash__(self):
        return hash(self.tree)

    def __str__(self):
        return to_text(self.tree)

    def terms(self):
        """Top-level summands (a leading minus is kept with its term)."""
        out = []

        def walk(node, sign):
            if isinstance(node, Bin) and node.op in "+-":
                walk(node.left, sign)
                walk(node.right, sign if node.op == "+" else -sign)
            else:
                out.append(node if sign > 0 else Neg(node))
        walk(self.tree, 1)
        return out

    def __call__(self, z, t=None):
        z = None if z is None else np.asarray(z, dtype=complex)
        t = None if t is None else np.asarray(t, dtype=float)
        shape = (z if z is not None else t).shape[:-1]
        out = _value(self.tree, z, t)
        return np.broadcast_to(np.asarray(out, dtype=complex), shape).copy()

    def dzbar(self, k):
        return CoeffExpr(wirtinger(self.tree, k, True))

    def dz(self, k):
        return CoeffExpr(wirtinger(self.tree, k, False))

    def max_index(self, kind):
        idx = [i for kd, i in variables(self.tree) if kd == kind]
        return max(idx) + 1 if idx else 0
