"""Coordinate expressions for metric components.

Grammar (``^`` binds tighter than unary minus, which binds tighter than
``* /``, then ``+ -``)::

    expr     := term (('+' | '-') term)*
    term     := unary (('*' | '/') unary)*
    unary    := '-' unary | power
    power    := atom ('^' exponent)?
    exponent := '-'? power          # must reduce to an integer literal
    atom     := NUMBER | 'x' | 'y' | 'z' | FUNC '(' expr ')' | '(' expr ')'
"""

from __future__ import annotations

import math
import re
from dataclasses import dataclass
from typing import Union

import numpy as np

from . import jets
from .errors import (
    ExprSyntaxError,
    GuardViolation,
    MetricSpecError,
    NonIntegerExponent,
    NotPositiveDefinite,
    SingularInput,
    UnknownIdentifier,
)
from .jets import Jet

VARIABLES = ("x", "y", "z")
FUNCTIONS = ("sin", "cos", "exp", "sqrt")


@dataclass(frozen=True)
class Num:
    value: float


@dataclass(frozen=True)
class Var:
    name: str


@dataclass(frozen=True)
class Neg:
    operand: "Expr"


@dataclass(frozen=True)
class BinOp:
    op: str
    left: "Expr"
    right: "Expr"


@dataclass(frozen=True)
class Pow:
    base: "Expr"
    exponent: int


@dataclass(frozen=True)
class Call:
    func: str
    arg: "Expr"


Expr = Union[Num, Var, Neg, BinOp, Pow, Call]


def Add(a, b):
    return BinOp("+", a, b)


def Sub(a, b):
    return BinOp("-", a, b)


def Mul(a, b):
    return BinOp("*", a, b)


def Div(a, b):
    return BinOp("/", a, b)


_TOKEN = re.compile(
    r"\s*(?:(?P<num>(?:\d+\.?\d*|\.\d+)(?:[eE][+-]?\d+)?)|(?P<name>[A-Za-z_]\w*)|(?P<op>[-+*/^()]))"
)


class _Parser:
    def __init__(self, text: str):
        self.text = text
        self.tokens = []  # (kind, text, byte offset)
        pos = 0
        stripped_end = len(text.rstrip())
        while pos < stripped_end:
            m = _TOKEN.match(text, pos)
            if m is None or m.end() == pos:
                start = pos + len(text[pos:]) - len(text[pos:].lstrip())
                raise ExprSyntaxError(f"unexpected character {text[start]!r}", self._byte(start))
            kind = m.lastgroup
            self.tokens.append((kind, m.group(kind), self._byte(m.start(kind))))
            pos = m.end()
        self.end_offset = self._byte(len(text))
        self.i = 0

    def _byte(self, char_pos: int) -> int:
        return len(self.text[:char_pos].encode("utf-8"))

    def peek(self):
        if self.i < len(self.tokens):
            return self.tokens[self.i]
        return ("end", "", self.end_offset)

    def take(self):
        tok = self.peek()
        self.i += 1
        return tok

    def expect(self, text: str):
        kind, val, off = self.peek()
        if val != text or kind != "op":
            raise ExprSyntaxError("syntax error", off, {text})
        self.i += 1

    def parse(self) -> Expr:
        e = self.expr()
        kind, val, off = self.peek()
        if kind != "end":
            raise ExprSyntaxError(f"unexpected token {val!r}", off, {"+", "-", "*", "/", "^", "end of input"})
        return e

    def expr(self) -> Expr:
        e = self.term()
        while self.peek()[1] in ("+", "-") and self.peek()[0] == "op":
            op = self.take()[1]
            e = BinOp(op, e, self.term())
        return e

    def term(self) -> Expr:
        e = self.unary()
        while self.peek()[1] in ("*", "/") and self.peek()[0] == "op":
            op = self.take()[1]
            e = BinOp(op, e, self.unary())
        return e

    def unary(self) -> Expr:
        if self.peek()[:2] == ("op", "-"):
            self.take()
            return Neg(self.unary())
        return self.power()

    def power(self) -> Expr:
        base = self.atom()
        if self.peek()[:2] == ("op", "^"):
            self.take()
            off = self.peek()[2]
            return Pow(base, self.exponent(off))
        return base

    def exponent(self, off: int) -> int:
        sign = 1
        if self.peek()[:2] == ("op", "-"):
            self.take()
            sign = -1
        kind, val, tok_off = self.peek()
        if kind != "num":
            raise NonIntegerExponent("exponent must be an integer literal", off)
        self.take()
        if not val.isdigit():
            raise NonIntegerExponent(f"exponent {val!r} is not an integer literal", tok_off)
        value = int(val)
        # right associativity: 2^3^2 folds to 2^9
        if self.peek()[:2] == ("op", "^"):
            self.take()
            value = value ** self.exponent(self.peek()[2])
        return sign * value

    def atom(self) -> Expr:
        kind, val, off = self.peek()
        if kind == "num":
            self.take()
            return Num(float(val))
        if kind == "name":
            self.take()
            if val in VARIABLES:
                return Var(val)
            if val in FUNCTIONS:
                self.expect("(")
                arg = self.expr()
                self.expect(")")
                return Call(val, arg)
            raise UnknownIdentifier(f"unknown identifier {val!r}", off, VARIABLES + FUNCTIONS)
        if (kind, val) == ("op", "("):
            self.take()
            e = self.expr()
            self.expect(")")
            return e
        raise ExprSyntaxError("syntax error", off, {"number", "variable", "function", "(", "-"})


def parse_expr(text: str) -> Expr:
    return _Parser(text).parse()


def to_text(e: Expr) -> str:
    """Fully parenthesised rendering; ``parse_expr(to_text(e)) == e``."""
    if isinstance(e, Num):
        return repr(float(e.value))
    if isinstance(e, Var):
        return e.name
    if isinstance(e, Neg):
        return f"(-{to_text(e.operand)})"
    if isinstance(e, BinOp):
        return f"({to_text(e.left)} {e.op} {to_text(e.right)})"
    if isinstance(e, Pow):
        return f"({to_text(e.base)}^{e.exponent})"
    if isinstance(e, Call):
        return f"{e.func}({to_text(e.arg)})"
    raise TypeError(f"not an expression node: {e!r}")


_JET_FUNCS = {"sin": "sin", "cos": "cos", "exp": "exp", "sqrt": "sqrt"}


def eval_expr_jet(e: Expr, point, order: int = jets.MAX_ORDER) -> Jet:
    """Evaluate ``e`` as a Taylor jet of the requested order at ``point``."""
    order = jets.check_order(order)
    point = tuple(float(v) for v in point)

    def ev(node) -> Jet:
        if isinstance(node, Num):
            return Jet.const(node.value, order)
        if isinstance(node, Var):
            i = VARIABLES.index(node.name)
            return jets.jet_seed(point[i], i, order)
        if isinstance(node, Neg):
            return -ev(node.operand)
        if isinstance(node, BinOp):
            a, b = ev(node.left), ev(node.right)
            if node.op == "+":
                return a + b
            if node.op == "-":
                return a - b
            if node.op == "*":
                return a * b
            return a / b
        if isinstance(node, Pow):
            base = ev(node.base)
            if node.exponent < 0 and base.value == 0.0:
                raise SingularInput("pow_int", "negative power of a jet with zero constant term")
            return base**node.exponent
        if isinstance(node, Call):
            return jets.jet_unary(_JET_FUNCS[node.func], ev(node.arg))
        raise TypeError(f"not an expression node: {node!r}")

    return ev(e)


_NUMERIC_FUNCS = {"sin": math.sin, "cos": math.cos, "exp": math.exp, "sqrt": math.sqrt}


def eval_expr(e: Expr, point) -> float:
    """Plain floating-point evaluation, independent of the jet machinery."""
    if isinstance(e, Num):
        return e.value
    if isinstance(e, Var):
        return float(point[VARIABLES.index(e.name)])
    if isinstance(e, Neg):
        return -eval_expr(e.operand, point)
    if isinstance(e, BinOp):
        a, b = eval_expr(e.left, point), eval_expr(e.right, point)
        if e.op == "+":
            return a + b
        if e.op == "-":
            return a - b
        if e.op == "*":
            return a * b
        return a / b
    if isinstance(e, Pow):
        return eval_expr(e.base, point) ** e.exponent
    if isinstance(e, Call):
        return _NUMERIC_FUNCS[e.func](eval_expr(e.arg, point))
    raise TypeError(f"not an expression node: {e!r}")


ONE = Num(1.0)
ZERO = Num(0.0)


@dataclass(frozen=True)
class MetricChart:
    """A 3x3 symmetric field of coordinate expressions.

    ``guards`` are expressions that must all be strictly positive at a point
    for the chart to be used there.
    """

    name: str
    components: tuple
    guards: tuple = ()

    def __post_init__(self):
        comps = tuple(tuple(row) for row in self.components)
        if len(comps) != 3 or any(len(row) != 3 for row in comps):
            raise MetricSpecError("metric components must form a 3x3 array")
        for i in range(3):
            for j in range(i + 1, 3):
                if comps[i][j] != comps[j][i]:
                    raise MetricSpecError(f"component g{i + 1}{j + 1} differs from g{j + 1}{i + 1}")
        object.__setattr__(self, "components", comps)
        object.__setattr__(self, "guards", tuple(self.guards))

    def check_guard(self, point) -> None:
        for guard in self.guards:
            value = eval_expr(guard, point)
            if not value > 0:
                raise GuardViolation(
                    f"chart {self.name!r}: guard {to_text(guard)} = {value:.6g} is not positive at {tuple(point)}"
                )

    def evaluate(self, point) -> np.ndarray:
        """Metric matrix at ``point``; checks the guard and positive definiteness."""
        self.check_guard(point)
        g = np.array([[eval_expr(self.components[i][j], point) for j in range(3)] for i in range(3)])
        check_positive_definite(g, self.name, point)
        return g

    def jets(self, point, order: int = jets.MAX_ORDER) -> np.ndarray:
        """Component jets as a (3, 3, 35) array."""
        out = np.empty((3, 3, jets.NTERMS))
        for i in range(3):
            for j in range(i, 3):
                out[i, j] = out[j, i] = eval_expr_jet(self.components[i][j], point, order).coeffs
        return out


def check_positive_definite(g: np.ndarray, name: str, point) -> None:
    if not np.all(np.isfinite(g)) or np.linalg.eigvalsh(g).min() <= 0:
        raise NotPositiveDefinite(f"chart {name!r}: metric is not positive definite at {tuple(point)}")


def diagonal_chart(name: str, diag, guards=()) -> MetricChart:
    comps = [[ZERO] * 3 for _ in range(3)]
    for i, e in enumerate(diag):
        comps[i][i] = parse_expr(e) if isinstance(e, str) else e
    return MetricChart(name, comps, guards)


GV_WARPING = "1 + x^2 + y^2"
CATALOG = ("flat", "gv_example", "round_sphere", "warped_template")


def warped_chart(f, name: str = "warped_template") -> MetricChart:
    """dx^2 + dy^2 + f^2 dz^2."""
    f = parse_expr(f) if isinstance(f, str) else f
    return diagonal_chart(name, [ONE, ONE, Pow(f, 2)])


def catalog_metric(name: str, f=None) -> MetricChart:
    if name == "flat":
        return diagonal_chart("flat", [ONE, ONE, ONE])
    if name == "gv_example":
        return diagonal_chart("gv_example", [ONE, ONE, parse_expr(f"({GV_WARPING})^2")])
    if name == "round_sphere":
        return diagonal_chart(
            "round_sphere",
            ["1", "sin(x)^2", "sin(x)^2 * sin(y)^2"],
            guards=(parse_expr("sin(x) - 0.1"), parse_expr("sin(y) - 0.1")),
        )
    if name == "warped_template":
        if f is None:
            raise MetricSpecError("warped_template needs a warping function f")
        return warped_chart(f)
    raise MetricSpecError(f"unknown catalog metric {name!r}; known: {', '.join(CATALOG)}")


_SPEC_LINE = re.compile(r'^\s*(?P<key>\w+)\s*=\s*"(?P<value>[^"]*)"\s*(?:#.*)?$')
_COMPONENT_KEYS = {f"g{i + 1}{j + 1}": (i, j) for i in range(3) for j in range(3)}


def load_metric_spec(document: str) -> MetricChart:
    """Parse the ``key = "expression"`` metric document.

    Keys are g11..g33 (either triangle), ``name`` and ``guard``; a guard
    may list several comma-separated expressions, each required positive.
    """
    seen: dict[str, str] = {}
    for lineno, raw in enumerate(document.splitlines(), 1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        m = _SPEC_LINE.match(line)
        if m is None:
            raise MetricSpecError(f"line {lineno}: expected key = \"expression\"")
        key, value = m.group("key"), m.group("value")
        if key not in _COMPONENT_KEYS and key not in ("name", "guard"):
            raise MetricSpecError(f"line {lineno}: unknown key {key!r}")
        if key in seen:
            raise MetricSpecError(f"line {lineno}: duplicate key {key!r}")
        seen[key] = value

    comps: list[list[Expr | None]] = [[None] * 3 for _ in range(3)]
    for key, (i, j) in _COMPONENT_KEYS.items():
        if key not in seen:
            continue
        try:
            e = parse_expr(seen[key])
        except Exception as exc:
            raise MetricSpecError(f"{key}: {exc}") from exc
        a, b = min(i, j), max(i, j)
        if comps[a][b] is not None and comps[a][b] != e:
            raise MetricSpecError(f"asymmetric specification: g{a + 1}{b + 1} and g{b + 1}{a + 1} differ")
        comps[a][b] = e
    for i in range(3):
        for j in range(i, 3):
            if comps[i][j] is None:
                comps[i][j] = ONE if i == j else ZERO
            comps[j][i] = comps[i][j]
    guards = ()
    if "guard" in seen:
        try:
            guards = tuple(parse_expr(part) for part in seen["guard"].split(","))
        except Exception as exc:
            raise MetricSpecError(f"guard: {exc}") from exc
    return MetricChart(seen.get("name", "custom"), comps, guards)


def resolve_metric(ref: str) -> MetricChart:
    """Catalog name or path to a metric document."""
    if ref in CATALOG:
        return catalog_metric(ref)
    with open(ref, encoding="utf-8") as fh:
        return load_metric_spec(fh.read())
