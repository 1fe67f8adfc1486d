"""Small deterministic arithmetic expression language.

Used to define metric components, structure fields and transformation
functions.  The grammar is standard precedence climbing:

    expr    := term (("+" | "-") term)*
    term    := unary (("*" | "/") unary)*
    unary   := "-" unary | power
    power   := primary ["^" exponent]
    primary := NUMBER | NAME | NAME "(" expr ")" | "(" expr ")"

``^`` binds tighter than unary minus and takes a (possibly negated)
numeric literal exponent.  Function application requires parentheses;
whitespace is insignificant.  Expression trees are immutable and
evaluation is pure.
"""

from __future__ import annotations

import math
import re
from dataclasses import dataclass

from .jets import FUNCTION_TABLE, Jet, JetDomainError

FUNCTIONS = frozenset(FUNCTION_TABLE)

_FLOAT_FUNCS = {
    "sin": math.sin, "cos": math.cos, "tan": math.tan,
    "sinh": math.sinh, "cosh": math.cosh, "tanh": math.tanh,
    "exp": math.exp, "ln": math.log, "sqrt": math.sqrt,
    "arctan": math.atan, "arcsin": math.asin,
}


class ParseError(ValueError):
    """Malformed expression text."""

    def __init__(self, offset: int, expected: str, found: str):
        self.offset = offset
        self.expected = expected
        self.found = found
        super().__init__(
            f"parse error at offset {offset}: expected {expected}, "
            f"found {found}")


class EvalError(ArithmeticError):
    """Unbound variable or domain error during evaluation."""


@dataclass(frozen=True)
class Expr:
    def __str__(self):
        return serialize(self)

    # operator helpers for building trees programmatically
    def __add__(self, other):
        return Bin("+", self, _as_expr(other))

    def __radd__(self, other):
        return Bin("+", _as_expr(other), self)

    def __sub__(self, other):
        return Bin("-", self, _as_expr(other))

    def __rsub__(self, other):
        return Bin("-", _as_expr(other), self)

    def __mul__(self, other):
        return Bin("*", self, _as_expr(other))

    def __rmul__(self, other):
        return Bin("*", _as_expr(other), self)

    def __truediv__(self, other):
        return Bin("/", self, _as_expr(other))

    def __rtruediv__(self, other):
        return Bin("/", _as_expr(other), self)

    def __neg__(self):
        return Neg(self)

    def __pow__(self, exponent):
        return Pow(self, float(exponent))


@dataclass(frozen=True)
class Const(Expr):
    value: float


@dataclass(frozen=True)
class Var(Expr):
    name: str


@dataclass(frozen=True)
class Neg(Expr):
    arg: Expr


@dataclass(frozen=True)
class Bin(Expr):
    op: str
    left: Expr
    right: Expr


@dataclass(frozen=True)
class Pow(Expr):
    base: Expr
    exponent: float


@dataclass(frozen=True)
class Func(Expr):
    name: str
    arg: Expr


def _as_expr(x) -> Expr:
    if isinstance(x, Expr):
        return x
    return Const(float(x))


def func(name: str, arg) -> Func:
    if name not in FUNCTIONS:
        raise ValueError(f"unknown function {name!r}")
    return Func(name, _as_expr(arg))


# ---------------------------------------------------------------------------
# Tokenizer / parser
# ---------------------------------------------------------------------------

_TOKEN_RE = re.compile(
    r"\s*(?:(?P<number>(?:\d+\.?\d*|\.\d+)(?:[eE][+-]?\d+)?)"
    r"|(?P<name>[A-Za-z][A-Za-z0-9_]*)"
    r"|(?P<op>[-+*/^()]))")


def _tokenize(text: str):
    tokens = []
    pos = 0
    while pos < len(text):
        m = _TOKEN_RE.match(text, pos)
        if m is None or m.end() == m.start():
            rest = text[pos:]
            stripped = rest.lstrip()
            if not stripped:
                break
            off = pos + len(rest) - len(stripped)
            raise ParseError(off, "a token", repr(stripped[0]))
        pos = m.end()
        if m.lastgroup is None:
            continue
        kind = m.lastgroup
        value = m.group(kind)
        tokens.append((kind, value, m.start(kind)))
    tokens.append(("eof", "", len(text)))
    return tokens


class _Parser:
    def __init__(self, text: str):
        self.text = text
        self.tokens = _tokenize(text)
        self.pos = 0

    def peek(self):
        return self.tokens[self.pos]

    def advance(self):
        tok = self.tokens[self.pos]
        self.pos += 1
        return tok

    def fail(self, expected: str):
        kind, value, offset = self.peek()
        found = "end of input" if kind == "eof" else repr(value)
        raise ParseError(offset, expected, found)

    def expect_op(self, op: str):
        kind, value, _ = self.peek()
        if kind != "op" or value != op:
            self.fail(repr(op))
        self.advance()

    def parse(self) -> Expr:
        e = self.expr()
        if self.peek()[0] != "eof":
            self.fail("end of input")
        return e

    def expr(self) -> Expr:
        e = self.term()
        while True:
            kind, value, _ = self.peek()
            if kind == "op" and value in "+-":
                self.advance()
                e = Bin(value, e, self.term())
            else:
                return e

    def term(self) -> Expr:
        e = self.unary()
        while True:
            kind, value, _ = self.peek()
            if kind == "op" and value in "*/":
                self.advance()
                e = Bin(value, e, self.unary())
            else:
                return e

    def unary(self) -> Expr:
        kind, value, _ = self.peek()
        if kind == "op" and value == "-":
            self.advance()
            return Neg(self.unary())
        return self.power()

    def power(self) -> Expr:
        base = self.primary()
        kind, value, _ = self.peek()
        if kind == "op" and value == "^":
            self.advance()
            return Pow(base, self.exponent())
        return base

    def exponent(self) -> float:
        sign = 1.0
        kind, value, _ = self.peek()
        if kind == "op" and value == "-":
            self.advance()
            sign = -1.0
        kind, value, _ = self.peek()
        if kind != "number":
            self.fail("a numeric exponent")
        self.advance()
        return sign * float(value)

    def primary(self) -> Expr:
        kind, value, _ = self.peek()
        if kind == "number":
            self.advance()
            return Const(float(value))
        if kind == "name":
            self.advance()
            nk, nv, _ = self.peek()
            if nk == "op" and nv == "(":
                if value not in FUNCTIONS:
                    self.pos -= 1
                    self.fail("a known function name")
                self.advance()
                arg = self.expr()
                self.expect_op(")")
                return Func(value, arg)
            return Var(value)
        if kind == "op" and value == "(":
            self.advance()
            e = self.expr()
            self.expect_op(")")
            return e
        self.fail("a number, name or '('")


def parse(text: str) -> Expr:
    """Parse expression text; raises :class:`ParseError` on malformed input."""
    return _Parser(text).parse()


# ---------------------------------------------------------------------------
# Evaluation / inspection
# ---------------------------------------------------------------------------

def free_vars(e: Expr) -> frozenset[str]:
    match e:
        case Const():
            return frozenset()
        case Var(name):
            return frozenset((name,))
        case Neg(arg) | Func(_, arg):
            return free_vars(arg)
        case Bin(_, left, right):
            return free_vars(left) | free_vars(right)
        case Pow(base, _):
            return free_vars(base)
    raise TypeError(f"not an Expr: {e!r}")


def eval_jet(e: Expr, bindings: dict[str, Jet]) -> Jet:
    """Evaluate over jets; the result is the exact truncated Taylor
    expansion of the expression at the bound point."""
    space = None
    for jet in bindings.values():
        space = jet.space
        break
    if space is None:
        raise EvalError("jet evaluation needs at least one binding")

    def go(node: Expr) -> Jet:
        match node:
            case Const(value):
                return space.constant(value)
            case Var(name):
                try:
                    return bindings[name]
                except KeyError:
                    raise EvalError(f"unbound variable {name!r}") from None
            case Neg(arg):
                return -go(arg)
            case Bin(op, left, right):
                a, b = go(left), go(right)
                if op == "+":
                    return a + b
                if op == "-":
                    return a - b
                if op == "*":
                    return a * b
                return a / b
            case Pow(base, exponent):
                return go(base) ** exponent
            case Func(name, arg):
                return FUNCTION_TABLE[name](go(arg))
        raise TypeError(f"not an Expr: {node!r}")

    try:
        return go(e)
    except JetDomainError as err:
        raise EvalError(str(err)) from err


def eval_float(e: Expr, bindings: dict[str, float]) -> float:
    """Plain order-0 evaluation over floats."""
    match e:
        case Const(value):
            return value
        case Var(name):
            try:
                return float(bindings[name])
            except KeyError:
                raise EvalError(f"unbound variable {name!r}") from None
        case Neg(arg):
            return -eval_float(arg, bindings)
        case Bin(op, left, right):
            a = eval_float(left, bindings)
            b = eval_float(right, bindings)
            if op == "+":
                return a + b
            if op == "-":
                return a - b
            if op == "*":
                return a * b
            if b == 0.0:
                raise EvalError("division by zero")
            return a / b
        case Pow(base, exponent):
            b = eval_float(base, bindings)
            if exponent.is_integer():
                return b ** int(exponent)
            if b <= 0.0:
                raise EvalError("non-integer power of a nonpositive base")
            return math.exp(exponent * math.log(b))
        case Func(name, arg):
            v = eval_float(arg, bindings)
            if name in ("ln", "sqrt") and v <= 0.0:
                raise EvalError(f"{name} of a nonpositive value")
            if name == "arcsin" and not -1.0 < v < 1.0:
                raise EvalError("arcsin outside (-1, 1)")
            return _FLOAT_FUNCS[name](v)
    raise TypeError(f"not an Expr: {e!r}")


def _fmt(x: float) -> str:
    return f"{x:.17g}"


def serialize(e: Expr) -> str:
    """Canonical fully parenthesized text; re-parsing yields a
    structurally identical tree."""
    match e:
        case Const(value):
            return _fmt(value)
        case Var(name):
            return name
        case Neg(arg):
            return f"(-{serialize(arg)})"
        case Bin(op, left, right):
            return f"({serialize(left)} {op} {serialize(right)})"
        case Pow(base, exponent):
            if exponent < 0:
                return f"({serialize(base)} ^ -{_fmt(-exponent)})"
            return f"({serialize(base)} ^ {_fmt(exponent)})"
        case Func(name, arg):
            return f"{name}({serialize(arg)})"
    raise TypeError(f"not an Expr: {e!r}")
