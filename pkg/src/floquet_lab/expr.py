"""Recursive-descent parser for coefficient expressions.

Grammar::

    expr   := term (('+' | '-') term)*
    term   := factor (('*' | '/') factor)*
    factor := number | 'pi' | 'x1' | 'x2'
            | ('sin' | 'cos' | 'exp') '(' expr ')'
            | '(' expr ')' | '-' factor

Compiled trees evaluate vectorised over numpy coordinate arrays.
"""

import re
from dataclasses import dataclass

import numpy as np

from .errors import ExprError

_TOKEN = re.compile(
    r"\s*(?:(?P<number>(?:\d+\.?\d*|\.\d+)(?:[eE][+-]?\d+)?)"
    r"|(?P<name>[A-Za-z_][A-Za-z_0-9]*)"
    r"|(?P<op>[-+*/()]))"
)
_FUNCS = {"sin": np.sin, "cos": np.cos, "exp": np.exp}
_VARS = ("x1", "x2")


@dataclass(frozen=True)
class Num:
    value: float

    def eval(self, env):
        return self.value


@dataclass(frozen=True)
class Var:
    name: str

    def eval(self, env):
        return env[self.name]


@dataclass(frozen=True)
class Neg:
    arg: object

    def eval(self, env):
        return -self.arg.eval(env)


@dataclass(frozen=True)
class Call:
    func: str
    arg: object

    def eval(self, env):
        return _FUNCS[self.func](self.arg.eval(env))


@dataclass(frozen=True)
class BinOp:
    op: str
    left: object
    right: object

    def eval(self, env):
        lhs = self.left.eval(env)
        rhs = self.right.eval(env)
        if self.op == "+":
            return lhs + rhs
        if self.op == "-":
            return lhs - rhs
        if self.op == "*":
            return lhs * rhs
        if np.any(np.asarray(rhs) == 0.0):
            raise ExprError("singular at node: division by zero")
        return lhs / rhs


def _tokenize(source):
    tokens = []
    pos = 0
    while pos < len(source):
        if source[pos:].strip() == "":
            break
        m = _TOKEN.match(source, pos)
        if m is None or m.end() == pos:
            while source[pos].isspace():
                pos += 1
            raise ExprError(f"unexpected character {source[pos]!r} at offset {pos}", pos)
        kind = m.lastgroup
        start = m.start(kind)
        tokens.append((kind, m.group(kind), start))
        pos = m.end()
    tokens.append(("end", "", len(source)))
    return tokens


class _Parser:
    def __init__(self, source):
        self.source = source
        self.tokens = _tokenize(source)
        self.i = 0

    def peek(self):
        return self.tokens[self.i]

    def advance(self):
        tok = self.tokens[self.i]
        self.i += 1
        return tok

    def expect(self, value):
        kind, text, pos = self.advance()
        if text != value or kind == "end":
            found = "end of input" if kind == "end" else repr(text)
            raise ExprError(f"syntax error at offset {pos}: expected {value!r}, found {found}", pos)

    def parse(self):
        node = self.expr()
        kind, text, pos = self.peek()
        if kind != "end":
            raise ExprError(f"syntax error at offset {pos}: unexpected {text!r}", pos)
        return node

    def expr(self):
        node = self.term()
        while self.peek()[1] in ("+", "-") and self.peek()[0] == "op":
            op = self.advance()[1]
            node = BinOp(op, node, self.term())
        return node

    def term(self):
        node = self.factor()
        while self.peek()[1] in ("*", "/") and self.peek()[0] == "op":
            op = self.advance()[1]
            node = BinOp(op, node, self.factor())
        return node

    def factor(self):
        kind, text, pos = self.advance()
        if kind == "number":
            return Num(float(text))
        if kind == "name":
            if text == "pi":
                return Num(np.pi)
            if text in _VARS:
                return Var(text)
            if text in _FUNCS:
                self.expect("(")
                arg = self.expr()
                self.expect(")")
                return Call(text, arg)
            raise ExprError(f"syntax error at offset {pos}: unknown name {text!r}", pos)
        if kind == "op" and text == "(":
            node = self.expr()
            self.expect(")")
            return node
        if kind == "op" and text == "-":
            return Neg(self.factor())
        found = "end of input" if kind == "end" else repr(text)
        raise ExprError(f"syntax error at offset {pos}: unexpected {found}", pos)


def _variables(node):
    if isinstance(node, Var):
        return {node.name}
    if isinstance(node, (Neg, Call)):
        return _variables(node.arg)
    if isinstance(node, BinOp):
        return _variables(node.left) | _variables(node.right)
    return set()


@dataclass(frozen=True)
class CoefficientExpr:
    source: str
    tree: object

    @property
    def variables(self):
        return _variables(self.tree)

    def evaluate(self, coords):
        """Evaluate on a list of coordinate arrays (x1[, x2]) of equal shape."""
        env = {}
        for name, arr in zip(_VARS, coords):
            env[name] = np.asarray(arr, dtype=float)
        missing = self.variables - env.keys()
        if missing:
            raise ExprError(
                f"{sorted(missing)[0]} is not available in a {len(coords)}D run"
            )
        shape = np.shape(coords[0])
        with np.errstate(all="ignore"):
            value = np.broadcast_to(np.asarray(self.tree.eval(env), dtype=float), shape)
        if not np.all(np.isfinite(value)):
            raise ExprError(f"expression {self.source!r} is not finite at every node")
        return np.array(value)


def parse_expr(source):
    """Compile ``source`` into a :class:`CoefficientExpr`."""
    return CoefficientExpr(source, _Parser(source).parse())
