"""Small arithmetic expression language for kernels and initial data.

Grammar (lowest to highest precedence)::

    expr    := term (("+" | "-") term)*
    term    := unary (("*" | "/") unary)*
    unary   := "-" unary | power
    power   := atom ("^" unary)?          # right associative
    atom    := NUMBER | NAME | NAME "(" expr ("," expr)* ")" | "(" expr ")"

Variables are ``x``, ``y``, ``t`` and ``s``; ``pi`` and ``e`` are named
constants.  Evaluation is vectorised over numpy arrays and broadcasts the
variable bindings against each other.
"""
from __future__ import annotations

import math
import re
from dataclasses import dataclass
from typing import Callable, Union

import numpy as np

from .errors import EvaluationError, ExpressionSyntaxError

VARIABLES = ("x", "y", "t", "s")
CONSTANTS = {"pi": math.pi, "e": math.e}
# name -> (min arity, max arity); None means unbounded
FUNCTIONS = {
    "sin": (1, 1),
    "cos": (1, 1),
    "exp": (1, 1),
    "abs": (1, 1),
    "min": (2, None),
    "max": (2, None),
}


@dataclass(frozen=True)
class Num:
    value: float


@dataclass(frozen=True)
class Var:
    name: str


@dataclass(frozen=True)
class Neg:
    operand: "Node"


@dataclass(frozen=True)
class BinOp:
    op: str
    left: "Node"
    right: "Node"


@dataclass(frozen=True)
class Call:
    name: str
    args: tuple


Node = Union[Num, Var, Neg, BinOp, Call]

_TOKEN = re.compile(
    r"\s*(?:(?P<num>(?:\d+\.?\d*|\.\d+)(?:[eE][+-]?\d+)?)|(?P<name>[A-Za-z_]\w*)|(?P<op>[-+*/^(),]))"
)


@dataclass(frozen=True)
class _Tok:
    kind: str  # "num" | "name" | "op" | "end"
    text: str
    pos: int  # character index


def _tokenize(text: str) -> list[_Tok]:
    toks = []
    pos = 0
    while True:
        while pos < len(text) and text[pos].isspace():
            pos += 1
        if pos >= len(text):
            toks.append(_Tok("end", "", pos))
            return toks
        m = _TOKEN.match(text, pos)
        if m is None or m.end() == pos:
            raise ExpressionSyntaxError(_byte_offset(text, pos), "a number, name or operator", text)
        kind = m.lastgroup
        toks.append(_Tok(kind, m.group(kind), m.start(kind)))
        pos = m.end()


def _byte_offset(text: str, pos: int) -> int:
    return len(text[:pos].encode("utf-8"))


class _Parser:
    def __init__(self, text: str):
        self.text = text
        self.toks = _tokenize(text)
        self.i = 0

    @property
    def tok(self) -> _Tok:
        return self.toks[self.i]

    def fail(self, expected: str):
        raise ExpressionSyntaxError(_byte_offset(self.text, self.tok.pos), expected, self.text)

    def accept(self, op: str) -> bool:
        if self.tok.kind == "op" and self.tok.text == op:
            self.i += 1
            return True
        return False

    def expect(self, op: str):
        if not self.accept(op):
            self.fail(repr(op))

    def parse(self) -> Node:
        node = self.expr()
        if self.tok.kind != "end":
            self.fail("an operator or end of input")
        return node

    def expr(self) -> Node:
        node = self.term()
        while self.tok.kind == "op" and self.tok.text in "+-":
            op = self.tok.text
            self.i += 1
            node = BinOp(op, node, self.term())
        return node

    def term(self) -> Node:
        node = self.unary()
        while self.tok.kind == "op" and self.tok.text in "*/":
            op = self.tok.text
            self.i += 1
            node = BinOp(op, node, self.unary())
        return node

    def unary(self) -> Node:
        if self.accept("-"):
            return Neg(self.unary())
        return self.power()

    def power(self) -> Node:
        base = self.atom()
        if self.accept("^"):
            return BinOp("^", base, self.unary())
        return base

    def atom(self) -> Node:
        tok = self.tok
        if tok.kind == "num":
            self.i += 1
            return Num(float(tok.text))
        if tok.kind == "name":
            self.i += 1
            if self.accept("("):
                if tok.text not in FUNCTIONS:
                    self.i -= 2
                    self.fail(f"a known function (one of {', '.join(FUNCTIONS)})")
                args = [self.expr()]
                while self.accept(","):
                    args.append(self.expr())
                self.expect(")")
                lo, hi = FUNCTIONS[tok.text]
                if len(args) < lo or (hi is not None and len(args) > hi):
                    raise ExpressionSyntaxError(
                        _byte_offset(self.text, tok.pos), f"{tok.text} with a valid argument count", self.text
                    )
                return Call(tok.text, tuple(args))
            if tok.text in CONSTANTS:
                return Num(CONSTANTS[tok.text])
            if tok.text in VARIABLES:
                return Var(tok.text)
            self.i -= 1
            self.fail(f"a variable (one of {', '.join(VARIABLES)}) or constant")
        if self.accept("("):
            node = self.expr()
            self.expect(")")
            return node
        self.fail("a number, variable, function call or '('")


def _checked(values, what: str):
    arr = np.asarray(values, dtype=float)
    if not np.all(np.isfinite(arr)):
        raise EvaluationError(f"{what} produced a non-finite value")
    return arr


def _compile(node: Node) -> Callable[[dict], np.ndarray]:
    if isinstance(node, Num):
        v = node.value
        return lambda env: np.float64(v)
    if isinstance(node, Var):
        name = node.name

        def var(env):
            try:
                return np.asarray(env[name], dtype=float)
            except KeyError:
                raise EvaluationError(f"variable {name!r} is not bound") from None

        return var
    if isinstance(node, Neg):
        inner = _compile(node.operand)
        return lambda env: -inner(env)
    if isinstance(node, BinOp):
        lf, rf = _compile(node.left), _compile(node.right)
        op = node.op
        if op == "+":
            return lambda env: lf(env) + rf(env)
        if op == "-":
            return lambda env: lf(env) - rf(env)
        if op == "*":
            return lambda env: lf(env) * rf(env)
        if op == "/":

            def div(env):
                num, den = lf(env), rf(env)
                if np.any(den == 0.0):
                    raise EvaluationError("division by zero")
                return num / den

            return div

        def pw(env):
            base, ex = lf(env), rf(env)
            with np.errstate(all="ignore"):
                if np.any((base == 0.0) & (ex < 0.0)):
                    raise EvaluationError("division by zero in power")
                return _checked(np.power(base, ex), "power")

        return pw
    if isinstance(node, Call):
        fs = [_compile(a) for a in node.args]
        name = node.name
        if name == "min":
            return lambda env: _reduce(np.minimum, fs, env)
        if name == "max":
            return lambda env: _reduce(np.maximum, fs, env)
        fn = {"sin": np.sin, "cos": np.cos, "exp": np.exp, "abs": np.abs}[name]
        f0 = fs[0]

        def call(env):
            with np.errstate(all="ignore"):
                return _checked(fn(f0(env)), name)

        return call
    raise TypeError(f"unknown node {node!r}")


def _reduce(ufunc, fs, env):
    out = fs[0](env)
    for f in fs[1:]:
        out = ufunc(out, f(env))
    return out


def variables_of(node: Node) -> frozenset:
    if isinstance(node, Var):
        return frozenset({node.name})
    if isinstance(node, Neg):
        return variables_of(node.operand)
    if isinstance(node, BinOp):
        return variables_of(node.left) | variables_of(node.right)
    if isinstance(node, Call):
        return frozenset().union(*(variables_of(a) for a in node.args))
    return frozenset()


class Expression:
    """A parsed expression; call it with keyword bindings for x, y, t, s."""

    def __init__(self, text: str, ast: Node):
        self.text = text
        self.ast = ast
        self.variables = variables_of(ast)
        self._fn = _compile(ast)

    def __call__(self, **env):
        unknown = set(env) - set(VARIABLES)
        if unknown:
            raise EvaluationError(f"unknown variables {sorted(unknown)}")
        with np.errstate(all="ignore"):
            out = _checked(self._fn(env), "expression")
        if out.ndim == 0:
            return float(out)
        return out

    def __repr__(self):
        return f"Expression({self.text!r})"


def parse_expression(text: str) -> Expression:
    """Parse ``text``; raises ExpressionSyntaxError with a byte offset on failure."""
    return Expression(text, _Parser(text).parse())
