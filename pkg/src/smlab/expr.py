"""Expression parsing and jet evaluation.

Grammar (recursive descent, standard precedence; whitespace insignificant):

    expr   := term (('+'|'-') term)*
    term   := factor (('*'|'/') factor)*
    factor := atom ('^' signed-number)?
    atom   := number | 'u' | 'v' | 'pi' | func '(' expr ')' | '(' expr ')' | '-' atom
    func   := sqrt | sin | cos | exp | bump

Exponents are restricted to integer and half-integer literals, and `abs` is
rejected outright: both would break the smoothness the jet evaluator relies
on.  `bump` is the built-in partition function: bump(t) = 1 for |t| <= 1/4,
0 for |t| >= 3/4, and s(3/4-|t|) / (s(3/4-|t|) + s(|t|-1/4)) in between,
where s(x) = exp(-1/x) for x > 0 and 0 otherwise.  Its jet at a point uses
the closed-form smooth branch active there; on the flat plateaus the Taylor
expansion is the constant.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import jet as J
from .errors import DomainError, ParseError, RejectedConstruct

_FUNCS = ("sqrt", "sin", "cos", "exp", "bump")


# ---------------------------------------------------------------------------
# AST
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class Num:
    value: float


@dataclass(frozen=True)
class Var:
    name: str  # 'u' or 'v'


@dataclass(frozen=True)
class Neg:
    arg: object


@dataclass(frozen=True)
class Call:
    func: str
    arg: object


@dataclass(frozen=True)
class Bin:
    op: str  # '+', '-', '*', '/'
    left: object
    right: object


@dataclass(frozen=True)
class Pow:
    base: object
    exponent: float  # integer or half-integer


Expr = object  # any of the node classes above


# ---------------------------------------------------------------------------
# tokenizer / parser
# ---------------------------------------------------------------------------

class _Tok:
    __slots__ = ("kind", "text", "pos")

    def __init__(self, kind, text, pos):
        self.kind = kind
        self.text = text
        self.pos = pos


def _tokenize(text):
    toks = []
    i, n = 0, len(text)
    while i < n:
        ch = text[i]
        if ch.isspace():
            i += 1
            continue
        if ch in "+-*/^()":
            toks.append(_Tok(ch, ch, i))
            i += 1
            continue
        if ch.isdigit() or ch == ".":
            j = i
            while j < n and (text[j].isdigit() or text[j] == "."):
                j += 1
            if j < n and text[j] in "eE":
                k = j + 1
                if k < n and text[k] in "+-":
                    k += 1
                if k < n and text[k].isdigit():
                    j = k
                    while j < n and text[j].isdigit():
                        j += 1
            try:
                float(text[i:j])
            except ValueError:
                raise ParseError("malformed number", i) from None
            toks.append(_Tok("num", text[i:j], i))
            i = j
            continue
        if ch.isalpha() or ch == "_":
            j = i
            while j < n and (text[j].isalnum() or text[j] == "_"):
                j += 1
            toks.append(_Tok("ident", text[i:j], i))
            i = j
            continue
        raise ParseError(f"unexpected character {ch!r}", i)
    toks.append(_Tok("end", "", n))
    return toks


class _Parser:
    def __init__(self, text):
        self.text = text
        self.toks = _tokenize(text)
        self.i = 0

    def peek(self):
        return self.toks[self.i]

    def take(self):
        tok = self.toks[self.i]
        self.i += 1
        return tok

    def expect(self, kind):
        tok = self.peek()
        if tok.kind != kind:
            raise ParseError(f"unexpected {tok.kind or 'end of input'}", tok.pos, {kind})
        return self.take()

    def parse(self):
        node = self.expr()
        tok = self.peek()
        if tok.kind != "end":
            raise ParseError("trailing input", tok.pos, {"end"})
        return node

    def expr(self):
        node = self.term()
        while self.peek().kind in ("+", "-"):
            op = self.take().kind
            node = Bin(op, node, self.term())
        return node

    def term(self):
        node = self.factor()
        while self.peek().kind in ("*", "/"):
            op = self.take().kind
            node = Bin(op, node, self.factor())
        return node

    def factor(self):
        node = self.atom()
        if self.peek().kind == "^":
            self.take()
            sign = 1.0
            if self.peek().kind == "-":
                self.take()
                sign = -1.0
            elif self.peek().kind == "+":
                self.take()
            tok = self.expect("num")
            p = sign * float(tok.text)
            if not (2.0 * p).is_integer():
                raise RejectedConstruct(
                    f"exponent {p} is not an integer or half-integer (offset {tok.pos})")
            return Pow(node, p)
        return node

    def atom(self):
        tok = self.peek()
        if tok.kind == "num":
            self.take()
            return Num(float(tok.text))
        if tok.kind == "-":
            self.take()
            return Neg(self.atom())
        if tok.kind == "(":
            self.take()
            node = self.expr()
            self.expect(")")
            return node
        if tok.kind == "ident":
            self.take()
            name = tok.text
            if name in ("u", "v"):
                return Var(name)
            if name == "pi":
                return Num(math.pi)
            if name == "abs":
                raise RejectedConstruct(
                    f"abs is not allowed: absolute values destroy smoothness (offset {tok.pos})")
            if name in _FUNCS:
                self.expect("(")
                arg = self.expr()
                self.expect(")")
                return Call(name, arg)
            raise ParseError(f"unknown identifier {name!r}", tok.pos,
                             {"u", "v", "pi", *_FUNCS})
        raise ParseError(f"unexpected {tok.kind or 'end of input'}", tok.pos,
                         {"number", "u", "v", "(", "-", "function"})


def parse(text):
    """Parse an expression in the variables u, v into an AST."""
    node = _Parser(text).parse()
    _check_finite(node)
    return node


def _check_finite(node):
    if isinstance(node, Num):
        if not math.isfinite(node.value):
            raise RejectedConstruct("non-finite constant")
    elif isinstance(node, Neg):
        _check_finite(node.arg)
    elif isinstance(node, Call):
        _check_finite(node.arg)
    elif isinstance(node, Bin):
        _check_finite(node.left)
        _check_finite(node.right)
    elif isinstance(node, Pow):
        _check_finite(node.base)


# ---------------------------------------------------------------------------
# pretty printer (round-trip stable)
# ---------------------------------------------------------------------------

def _prec(node):
    if isinstance(node, Bin):
        return 1 if node.op in "+-" else 2
    if isinstance(node, Neg):
        return 1
    if isinstance(node, Pow):
        return 3
    return 4


def to_str(node):
    if isinstance(node, Num):
        return repr(node.value) if node.value != int(node.value) else str(int(node.value))
    if isinstance(node, Var):
        return node.name
    if isinstance(node, Neg):
        inner = to_str(node.arg)
        # a bare Pow after '-' would re-parse as (-base)^e, so keep the parens
        return f"-{inner}" if isinstance(node.arg, (Num, Var, Call)) else f"-({inner})"
    if isinstance(node, Call):
        return f"{node.func}({to_str(node.arg)})"
    if isinstance(node, Bin):
        l, r = to_str(node.left), to_str(node.right)
        if _prec(node.left) < _prec(node):
            l = f"({l})"
        # right operand needs parens at equal precedence too: '-' and '/' associate left
        if _prec(node.right) <= _prec(node):
            r = f"({r})"
        return f"{l} {node.op} {r}"
    if isinstance(node, Pow):
        b = to_str(node.base)
        if _prec(node.base) <= 3:
            b = f"({b})"
        e = node.exponent
        etxt = str(int(e)) if e == int(e) else repr(e)
        return f"{b}^{etxt}"
    raise TypeError(f"not an expression node: {node!r}")


# ---------------------------------------------------------------------------
# float evaluation (vectorized)
# ---------------------------------------------------------------------------

def _bump_float(t):
    t = np.abs(np.asarray(t, dtype=float))
    lo = t <= 0.25
    hi = t >= 0.75
    mid = ~(lo | hi)
    out = np.zeros_like(t)
    out[lo] = 1.0
    if np.any(mid):
        tm = t[mid]
        sa = np.exp(-1.0 / (0.75 - tm))
        sb = np.exp(-1.0 / (tm - 0.25))
        out[mid] = sa / (sa + sb)
    return out


def eval_float(node, u, v):
    """Plain floating evaluation; u, v may be scalars or arrays."""
    u = np.asarray(u, dtype=float)
    v = np.asarray(v, dtype=float)
    with np.errstate(divide="ignore", invalid="ignore", over="ignore"):
        out = _eval_float(node, u, v)
    return out


def _eval_float(node, u, v):
    if isinstance(node, Num):
        return np.broadcast_to(np.float64(node.value), np.broadcast_shapes(u.shape, v.shape)).copy()
    if isinstance(node, Var):
        return (u if node.name == "u" else v).copy()
    if isinstance(node, Neg):
        return -_eval_float(node.arg, u, v)
    if isinstance(node, Bin):
        a = _eval_float(node.left, u, v)
        b = _eval_float(node.right, u, v)
        if node.op == "+":
            return a + b
        if node.op == "-":
            return a - b
        if node.op == "*":
            return a * b
        return a / b
    if isinstance(node, Pow):
        a = _eval_float(node.base, u, v)
        p = node.exponent
        if p == int(p):
            return a ** int(p)
        return np.sqrt(a) ** int(2 * p)
    if isinstance(node, Call):
        a = _eval_float(node.arg, u, v)
        if node.func == "sqrt":
            return np.sqrt(a)
        if node.func == "sin":
            return np.sin(a)
        if node.func == "cos":
            return np.cos(a)
        if node.func == "exp":
            return np.exp(a)
        return _bump_float(a)
    raise TypeError(f"not an expression node: {node!r}")


# ---------------------------------------------------------------------------
# jet evaluation (batched over points)
# ---------------------------------------------------------------------------

def _bump_series(t0, order):
    """Univariate Taylor coefficients of bump at the points t0 (all strictly
    inside the transition band 1/4 < |t0| < 3/4), via 1-variable jets."""
    t0 = np.asarray(t0, dtype=float)
    n = t0.shape[0]
    csize = J.size(order)
    that = np.zeros((n, csize))
    that[:, 0] = np.abs(t0)
    if order >= 1:
        that[:, J.index_of(1, 0)] = np.sign(t0)
    a = np.zeros((n, csize))
    a[:, 0] = 0.75
    b = np.zeros((n, csize))
    b[:, 0] = -0.25
    sa = J._exp(-J._recip(a - that, order), order)
    sb = J._exp(-J._recip(that + b, order), order)
    w = J._div(sa, sa + sb, order)
    cols = [J.index_of(k, 0) for k in range(order + 1)]
    return w[:, cols]


def eval_jet_batch(node, points, order):
    """Taylor coefficients of the expression at each point; shape (N, size(order))."""
    points = np.asarray(points, dtype=float)
    try:
        return _eval_jet(node, points, order)
    except (ZeroDivisionError, FloatingPointError) as exc:  # pragma: no cover
        raise DomainError(str(exc)) from exc


def _eval_jet(node, points, order):
    n = points.shape[0]
    csize = J.size(order)
    if isinstance(node, Num):
        out = np.zeros((n, csize))
        out[:, 0] = node.value
        return out
    if isinstance(node, Var):
        out = np.zeros((n, csize))
        col = 0 if node.name == "u" else 1
        out[:, 0] = points[:, col]
        if order >= 1:
            out[:, J.index_of(1, 0) if node.name == "u" else J.index_of(0, 1)] = 1.0
        return out
    if isinstance(node, Neg):
        return -_eval_jet(node.arg, points, order)
    if isinstance(node, Bin):
        a = _eval_jet(node.left, points, order)
        b = _eval_jet(node.right, points, order)
        if node.op == "+":
            return a + b
        if node.op == "-":
            return a - b
        if node.op == "*":
            return J._mul(a, b, order)
        try:
            return J._div(a, b, order)
        except Exception as exc:
            raise DomainError(f"division by zero during jet evaluation: {exc}") from exc
    if isinstance(node, Pow):
        a = _eval_jet(node.base, points, order)
        p = node.exponent
        try:
            if p == int(p):
                return J._pow_int(a, int(p), order)
            return J._pow_int(J._sqrt(a, order), int(2 * p), order)
        except Exception as exc:
            raise DomainError(f"power not evaluable here: {exc}") from exc
    if isinstance(node, Call):
        if node.func == "bump":
            # decide the branch from the plain value; only transition-band
            # points need the inner jet at all
            tvals = np.atleast_1d(eval_float(node.arg, points[:, 0], points[:, 1]))
            if not np.all(np.isfinite(tvals)):
                raise DomainError("bump argument not evaluable at point")
            out = np.zeros((n, csize))
            out[np.abs(tvals) <= 0.25, 0] = 1.0
            mid = (np.abs(tvals) > 0.25) & (np.abs(tvals) < 0.75)
            if np.any(mid):
                inner = _eval_jet(node.arg, points[mid], order)
                series = _bump_series(tvals[mid], order)
                out[mid] = J._series(series, inner, order)
            return out
        a = _eval_jet(node.arg, points, order)
        try:
            if node.func == "sqrt":
                return J._sqrt(a, order)
            if node.func == "sin":
                return J._sin(a, order)
            if node.func == "cos":
                return J._cos(a, order)
            return J._exp(a, order)
        except Exception as exc:
            raise DomainError(f"{node.func} not evaluable here: {exc}") from exc
    raise TypeError(f"not an expression node: {node!r}")


def eval_jet(node, point, order):
    """Jet of the expression at one point."""
    if order > J.MAX_ORDER:
        raise ValueError(f"jet order capped at {J.MAX_ORDER}")
    pts = np.array([[point[0], point[1]]], dtype=float)
    coeffs = eval_jet_batch(node, pts, order)[0]
    if not np.all(np.isfinite(coeffs)):
        raise DomainError(f"expression not evaluable at {tuple(point)}")
    return J.Jet2(order, (point[0], point[1]), coeffs)
