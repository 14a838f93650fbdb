"""Closed-form scalar expression trees.

Potentials, coupling coefficients, and test functions are stored as tiny
expression trees so that model definitions serialize to plain strings in
config files and round-trip exactly. The grammar covers +, -, *, /, powers,
the functions exp/sin/cos, numeric literals, pi, and the variables x (and y
in two dimensions). Trees evaluate vectorized over numpy arrays and support
exact symbolic differentiation, which is what the test-function battery uses
for gradient rules.
"""

import math
from dataclasses import dataclass

import numpy as np

__all__ = ["Expr", "parse", "ParseError"]


class ParseError(ValueError):
    pass


_FUNCTIONS = {"exp": np.exp, "sin": np.sin, "cos": np.cos}
_VARIABLES = ("x", "y")


@dataclass(frozen=True)
class Expr:
    """A node of the expression tree.

    kind is one of "num", "var", "neg", "add", "sub", "mul", "div", "pow",
    "call". Children are stored in args; numeric payloads in value/name.
    """

    kind: str
    value: float = 0.0
    name: str = ""
    args: tuple = ()

    # -- evaluation -------------------------------------------------------

    def __call__(self, **env):
        k = self.kind
        if k == "num":
            return self.value
        if k == "var":
            if self.name not in env:
                raise ParseError(f"unbound variable {self.name!r}")
            return env[self.name]
        if k == "neg":
            return -self.args[0](**env)
        a = self.args[0](**env)
        if k == "call":
            return _FUNCTIONS[self.name](a)
        b = self.args[1](**env)
        if k == "add":
            return a + b
        if k == "sub":
            return a - b
        if k == "mul":
            return a * b
        if k == "div":
            return a / b
        if k == "pow":
            return a ** b
        raise AssertionError(k)

    # -- differentiation --------------------------------------------------

    def diff(self, var: str) -> "Expr":
        k = self.kind
        if k == "num":
            return _num(0.0)
        if k == "var":
            return _num(1.0 if self.name == var else 0.0)
        if k == "neg":
            return _neg(self.args[0].diff(var))
        if k == "add":
            return _add(self.args[0].diff(var), self.args[1].diff(var))
        if k == "sub":
            return _sub(self.args[0].diff(var), self.args[1].diff(var))
        if k == "mul":
            a, b = self.args
            return _add(_mul(a.diff(var), b), _mul(a, b.diff(var)))
        if k == "div":
            a, b = self.args
            num = _sub(_mul(a.diff(var), b), _mul(a, b.diff(var)))
            return _div(num, _pow(b, _num(2.0)))
        if k == "pow":
            a, b = self.args
            if b.kind != "num":
                raise ParseError("only constant exponents are differentiable")
            return _mul(_mul(b, _pow(a, _num(b.value - 1.0))), a.diff(var))
        if k == "call":
            inner = self.args[0]
            d = inner.diff(var)
            if self.name == "exp":
                return _mul(self, d)
            if self.name == "sin":
                return _mul(_call("cos", inner), d)
            if self.name == "cos":
                return _neg(_mul(_call("sin", inner), d))
        raise AssertionError(k)

    # -- serialization ----------------------------------------------------

    def __str__(self):
        return _render(self, 0)

    @property
    def variables(self) -> set:
        if self.kind == "var":
            return {self.name}
        out = set()
        for a in self.args:
            out |= a.variables
        return out


# smart constructors with light constant folding, used by diff()

def _num(v: float) -> Expr:
    return Expr("num", value=float(v))


def _neg(a: Expr) -> Expr:
    if a.kind == "num":
        return _num(-a.value)
    return Expr("neg", args=(a,))


def _add(a: Expr, b: Expr) -> Expr:
    if a.kind == "num" and a.value == 0.0:
        return b
    if b.kind == "num" and b.value == 0.0:
        return a
    if a.kind == "num" and b.kind == "num":
        return _num(a.value + b.value)
    return Expr("add", args=(a, b))


def _sub(a: Expr, b: Expr) -> Expr:
    if b.kind == "num" and b.value == 0.0:
        return a
    if a.kind == "num" and a.value == 0.0:
        return _neg(b)
    if a.kind == "num" and b.kind == "num":
        return _num(a.value - b.value)
    return Expr("sub", args=(a, b))


def _mul(a: Expr, b: Expr) -> Expr:
    for u, v in ((a, b), (b, a)):
        if u.kind == "num":
            if u.value == 0.0:
                return _num(0.0)
            if u.value == 1.0:
                return v
    if a.kind == "num" and b.kind == "num":
        return _num(a.value * b.value)
    return Expr("mul", args=(a, b))


def _div(a: Expr, b: Expr) -> Expr:
    if a.kind == "num" and a.value == 0.0:
        return _num(0.0)
    if b.kind == "num" and b.value == 1.0:
        return a
    return Expr("div", args=(a, b))


def _pow(a: Expr, b: Expr) -> Expr:
    if b.kind == "num":
        if b.value == 0.0:
            return _num(1.0)
        if b.value == 1.0:
            return a
    return Expr("pow", args=(a, b))


def _call(fn: str, a: Expr) -> Expr:
    return Expr("call", name=fn, args=(a,))


_PRECEDENCE = {"add": 1, "sub": 1, "mul": 2, "div": 2, "neg": 3, "pow": 4}


def _render(e: Expr, parent_prec: int) -> str:
    k = e.kind
    if k == "num":
        v = e.value
        if v == int(v) and abs(v) < 1e15:
            s = repr(int(v))
        else:
            s = repr(v)
        return s if v >= 0 or parent_prec == 0 else f"({s})"
    if k == "var":
        return e.name
    if k == "call":
        return f"{e.name}({_render(e.args[0], 0)})"
    if k == "neg":
        s = "-" + _render(e.args[0], _PRECEDENCE["neg"])
        return f"({s})" if parent_prec > _PRECEDENCE["neg"] else s
    op = {"add": " + ", "sub": " - ", "mul": "*", "div": "/", "pow": "**"}[k]
    prec = _PRECEDENCE[k]
    left = _render(e.args[0], prec)
    # right operand of - / ** binds tighter
    right = _render(e.args[1], prec + (0 if k in ("add", "mul") else 1))
    s = f"{left}{op}{right}"
    return f"({s})" if parent_prec > prec else s


# -- parser ---------------------------------------------------------------

def _tokenize(text: str):
    tokens = []
    i, n = 0, len(text)
    while i < n:
        ch = text[i]
        if ch.isspace():
            i += 1
            continue
        if ch.isdigit() or (ch == "." and i + 1 < n and text[i + 1].isdigit()):
            j = i
            seen_e = False
            while j < n and (text[j].isdigit() or text[j] == "." or
                             text[j] in "eE" and not seen_e or
                             text[j] in "+-" and j > i and text[j - 1] in "eE"):
                if text[j] in "eE":
                    seen_e = True
                j += 1
            tokens.append(("num", text[i:j]))
            i = j
            continue
        if ch.isalpha() or ch == "_":
            j = i
            while j < n and (text[j].isalnum() or text[j] == "_"):
                j += 1
            tokens.append(("name", text[i:j]))
            i = j
            continue
        if text.startswith("**", i):
            tokens.append(("op", "**"))
            i += 2
            continue
        if ch in "+-*/()^":
            tokens.append(("op", "**" if ch == "^" else ch))
            i += 1
            continue
        raise ParseError(f"unexpected character {ch!r} at position {i}")
    tokens.append(("end", ""))
    return tokens


class _Parser:
    def __init__(self, tokens):
        self.tokens = tokens
        self.pos = 0

    def peek(self):
        return self.tokens[self.pos]

    def take(self, kind=None, value=None):
        tok = self.tokens[self.pos]
        if kind is not None and tok[0] != kind:
            raise ParseError(f"expected {kind}, found {tok[1]!r}")
        if value is not None and tok[1] != value:
            raise ParseError(f"expected {value!r}, found {tok[1]!r}")
        self.pos += 1
        return tok

    def expr(self) -> Expr:
        node = self.term()
        while self.peek() == ("op", "+") or self.peek() == ("op", "-"):
            op = self.take()[1]
            rhs = self.term()
            node = Expr("add" if op == "+" else "sub", args=(node, rhs))
        return node

    def term(self) -> Expr:
        node = self.factor()
        while self.peek() == ("op", "*") or self.peek() == ("op", "/"):
            op = self.take()[1]
            rhs = self.factor()
            node = Expr("mul" if op == "*" else "div", args=(node, rhs))
        return node

    def factor(self) -> Expr:
        if self.peek() == ("op", "-"):
            self.take()
            return Expr("neg", args=(self.factor(),))
        if self.peek() == ("op", "+"):
            self.take()
            return self.factor()
        node = self.atom()
        if self.peek() == ("op", "**"):
            self.take()
            exponent = self.factor()
            node = Expr("pow", args=(node, exponent))
        return node

    def atom(self) -> Expr:
        kind, value = self.peek()
        if kind == "num":
            self.take()
            return _num(float(value))
        if kind == "name":
            self.take()
            if value in _FUNCTIONS:
                self.take("op", "(")
                inner = self.expr()
                self.take("op", ")")
                return _call(value, inner)
            if value in _VARIABLES:
                return Expr("var", name=value)
            if value == "pi":
                return _num(math.pi)
            raise ParseError(f"unknown name {value!r}")
        if (kind, value) == ("op", "("):
            self.take()
            inner = self.expr()
            self.take("op", ")")
            return inner
        raise ParseError(f"unexpected token {value!r}")


def parse(text: str) -> Expr:
    """Parse a scalar expression string into an Expr tree."""
    parser = _Parser(_tokenize(text))
    node = parser.expr()
    parser.take("end")
    return node
