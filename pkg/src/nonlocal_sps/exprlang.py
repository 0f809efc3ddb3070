"""Small math-expression language: parser, evaluator and symbolic derivative.

Problems are written as plain strings (``"y^2 + u"``, ``"-1 + sqrt(1 - t)"``)
inside JSON files. This module turns them into immutable trees that can be
evaluated, differentiated and compiled to vectorised numpy callables.

Grammar (usual precedence, ``^`` binds tighter than unary minus)::

    expr    := term (('+' | '-') term)*
    term    := unary (('*' | '/') unary)*
    unary   := '-' unary | power
    power   := atom ('^' exponent)?
    exponent:= '-' exponent | atom ('^' exponent)?     # must be variable-free
    atom    := number | name | func '(' expr ')' | '(' expr ')'

Exponents are restricted to constants so that :func:`diff` is total.
"""

from __future__ import annotations

import math
import re
from dataclasses import dataclass
from typing import Any, Callable, Iterable, Mapping, Union

import numpy as np

FUNCTIONS = ("sin", "cos", "exp", "ln", "sqrt", "abs")
NAMED_CONSTANTS = {"pi": math.pi}


class ExprError(ValueError):
    """Base class for expression errors."""


class ExprSyntaxError(ExprError):
    def __init__(self, message: str, position: int):
        super().__init__(f"{message} at offset {position}")
        self.position = position


class UnknownIdentifierError(ExprSyntaxError):
    pass


class NonConstantExponentError(ExprSyntaxError):
    pass


class UnboundVariableError(ExprError, KeyError):
    def __str__(self) -> str:  # KeyError would repr() the message
        return self.args[0]


class ExprDomainError(ExprError, ArithmeticError):
    pass


# --------------------------------------------------------------------------- nodes


@dataclass(frozen=True)
class Const:
    value: float


@dataclass(frozen=True)
class Var:
    name: str


@dataclass(frozen=True)
class Unary:
    op: str  # "neg" or one of FUNCTIONS
    arg: "Expr"


@dataclass(frozen=True)
class Binary:
    op: str  # + - * /
    left: "Expr"
    right: "Expr"


@dataclass(frozen=True)
class Pow:
    base: "Expr"
    exponent: float


Expr = Union[Const, Var, Unary, Binary, Pow]


# --------------------------------------------------------------------------- parser

_TOKEN = re.compile(
    r"\s*(?:(?P<num>(?:\d+\.?\d*|\.\d+)(?:[eE][+-]?\d+)?)|(?P<name>[A-Za-z_]\w*)|(?P<op>[-+*/^()]))"
)


def _tokenize(src: str) -> list[tuple[str, str, int]]:
    tokens = []
    pos = 0
    while pos < len(src):
        if src[pos:].strip() == "":
            break
        m = _TOKEN.match(src, pos)
        if m is None:
            bad = pos + len(src[pos:]) - len(src[pos:].lstrip())
            raise ExprSyntaxError(f"unexpected character {src[bad]!r}", bad)
        kind = m.lastgroup
        tokens.append((kind, m.group(kind), m.start(kind)))
        pos = m.end()
    tokens.append(("end", "", len(src)))
    return tokens


class _Parser:
    def __init__(self, src: str, variables: frozenset[str] | None):
        self.src = src
        self.tokens = _tokenize(src)
        self.i = 0
        self.variables = variables

    def peek(self) -> tuple[str, str, int]:
        return self.tokens[self.i]

    def take(self) -> tuple[str, str, int]:
        tok = self.tokens[self.i]
        self.i += 1
        return tok

    def expect(self, text: str) -> None:
        kind, val, pos = self.take()
        if val != text or kind != "op":
            raise ExprSyntaxError(f"expected {text!r}", pos)

    def parse(self) -> Expr:
        node = self.expr()
        kind, val, pos = self.peek()
        if kind != "end":
            raise ExprSyntaxError(f"unexpected token {val!r}", pos)
        return node

    def expr(self) -> Expr:
        node = self.term()
        while self.peek()[1] in ("+", "-") and self.peek()[0] == "op":
            op = self.take()[1]
            node = Binary(op, node, self.term())
        return node

    def term(self) -> Expr:
        node = self.unary()
        while self.peek()[1] in ("*", "/") and self.peek()[0] == "op":
            op = self.take()[1]
            node = Binary(op, node, self.unary())
        return node

    def unary(self) -> Expr:
        if self.peek()[:2] == ("op", "-"):
            self.take()
            return Unary("neg", self.unary())
        return self.power()

    def power(self) -> Expr:
        base = self.atom()
        if self.peek()[:2] == ("op", "^"):
            self.take()
            pos = self.peek()[2]
            exponent = self.exponent()
            if _variables(exponent):
                raise NonConstantExponentError("non-constant exponent", pos)
            try:
                value = evaluate(exponent, {})
            except ExprError as exc:
                raise ExprSyntaxError(f"invalid exponent ({exc})", pos) from None
            return Pow(base, value)
        return base

    def exponent(self) -> Expr:
        if self.peek()[:2] == ("op", "-"):
            self.take()
            return Unary("neg", self.exponent())
        base = self.atom()
        if self.peek()[:2] == ("op", "^"):
            self.take()
            pos = self.peek()[2]
            sub = self.exponent()
            if _variables(sub):
                raise NonConstantExponentError("non-constant exponent", pos)
            return Pow(base, evaluate(sub, {}))
        return base

    def atom(self) -> Expr:
        kind, val, pos = self.take()
        if kind == "num":
            return Const(float(val))
        if kind == "name":
            if val in FUNCTIONS:
                if self.peek()[:2] != ("op", "("):
                    raise ExprSyntaxError(f"expected '(' after {val}", self.peek()[2])
                self.take()
                arg = self.expr()
                self.expect(")")
                return Unary(val, arg)
            if val in NAMED_CONSTANTS:
                return Const(NAMED_CONSTANTS[val])
            if self.variables is not None and val not in self.variables:
                raise UnknownIdentifierError(f"unknown identifier {val!r}", pos)
            return Var(val)
        if kind == "op" and val == "(":
            node = self.expr()
            self.expect(")")
            return node
        if kind == "end":
            raise ExprSyntaxError("unexpected end of input", pos)
        raise ExprSyntaxError(f"unexpected token {val!r}", pos)


def parse(src: str, variables: Iterable[str] | None = None) -> Expr:
    """Parse ``src`` into an expression tree.

    Args:
        src: expression text.
        variables: allowed identifier names. ``None`` accepts any name that is
            not a function.

    Raises:
        ExprSyntaxError: malformed input; ``.position`` is the character offset.
        UnknownIdentifierError: a name outside ``variables``.
        NonConstantExponentError: ``^`` followed by a variable expression.
    """
    if not src or not src.strip():
        raise ExprSyntaxError("empty expression", 0)
    allowed = None if variables is None else frozenset(variables)
    return _Parser(src, allowed).parse()


def as_expr(obj: Expr | str | float, variables: Iterable[str] | None = None) -> Expr:
    if isinstance(obj, (Const, Var, Unary, Binary, Pow)):
        return obj
    if isinstance(obj, str):
        return parse(obj, variables)
    return Const(float(obj))


# --------------------------------------------------------------------------- serialise

_PREC = {"+": 1, "-": 1, "*": 2, "/": 2, "neg": 3, "pow": 4}


def _fmt_number(x: float) -> str:
    if x == int(x) and abs(x) < 1e15:
        return str(int(x))
    return repr(x)


def _prec(e: Expr) -> int:
    if isinstance(e, Binary):
        return _PREC[e.op]
    if isinstance(e, Unary) and e.op == "neg":
        return _PREC["neg"]
    if isinstance(e, Pow):
        return _PREC["pow"]
    return 5


def to_string(e: Expr) -> str:
    """Serialise with the minimum parentheses that keep the tree shape."""
    if isinstance(e, Const):
        s = _fmt_number(e.value)
        return f"({s})" if e.value < 0 else s
    if isinstance(e, Var):
        return e.name
    if isinstance(e, Unary):
        if e.op == "neg":
            inner = to_string(e.arg)
            return "-" + (f"({inner})" if _prec(e.arg) < _PREC["neg"] else inner)
        return f"{e.op}({to_string(e.arg)})"
    if isinstance(e, Pow):
        base = to_string(e.base)
        if _prec(e.base) <= _PREC["pow"]:
            base = f"({base})"
        expo = _fmt_number(e.exponent)
        if e.exponent < 0:
            expo = f"({expo})"
        return f"{base}^{expo}"
    p = _PREC[e.op]
    left = to_string(e.left)
    if _prec(e.left) < p:
        left = f"({left})"
    right = to_string(e.right)
    if _prec(e.right) <= p:
        right = f"({right})"
    if e.op in "+-":
        return f"{left} {e.op} {right}"
    return f"{left}{e.op}{right}"


def _variables(e: Expr) -> set[str]:
    if isinstance(e, Var):
        return {e.name}
    if isinstance(e, Const):
        return set()
    if isinstance(e, Unary):
        return _variables(e.arg)
    if isinstance(e, Pow):
        return _variables(e.base)
    return _variables(e.left) | _variables(e.right)


def variables(e: Expr) -> frozenset[str]:
    return frozenset(_variables(e))


# --------------------------------------------------------------------------- evaluate


def _scalar_pow(base: float, exponent: float) -> float:
    if base == 0.0 and exponent < 0:
        raise ExprDomainError("division by zero (0 to a negative power)")
    if base < 0 and exponent != int(exponent):
        raise ExprDomainError(f"negative base {base!r} with non-integer exponent")
    try:
        return math.pow(base, exponent)
    except OverflowError:
        return math.copysign(math.inf, base) if exponent % 2 == 1 else math.inf


def _unary(op: str, x: float) -> float:
    if op == "neg":
        return -x
    if op == "sin":
        return math.sin(x)
    if op == "cos":
        return math.cos(x)
    if op == "exp":
        try:
            return math.exp(x)
        except OverflowError:
            return math.inf
    if op == "ln":
        if x <= 0:
            raise ExprDomainError(f"ln of non-positive value {x!r}")
        return math.log(x)
    if op == "sqrt":
        if x < 0:
            raise ExprDomainError(f"sqrt of negative value {x!r}")
        return math.sqrt(x)
    if op == "abs":
        return abs(x)
    raise ExprError(f"unknown function {op!r}")


def evaluate(e: Expr, bindings: Mapping[str, float] | None = None, **kw: float) -> float:
    """Evaluate ``e`` in IEEE double precision.

    Bindings may be passed as a mapping or keyword arguments.
    """
    env = dict(bindings or {})
    env.update(kw)
    return _eval(e, env)


def _eval(e: Expr, env: Mapping[str, float]) -> float:
    if isinstance(e, Const):
        return e.value
    if isinstance(e, Var):
        try:
            return float(env[e.name])
        except KeyError:
            raise UnboundVariableError(f"unbound variable {e.name!r}") from None
    if isinstance(e, Unary):
        return _unary(e.op, _eval(e.arg, env))
    if isinstance(e, Pow):
        return _scalar_pow(_eval(e.base, env), e.exponent)
    x = _eval(e.left, env)
    y = _eval(e.right, env)
    if e.op == "+":
        return x + y
    if e.op == "-":
        return x - y
    if e.op == "*":
        return x * y
    if y == 0.0:
        raise ExprDomainError("division by zero")
    return x / y


# --------------------------------------------------------------------------- compile

_FUNCS = {
    "numpy": {"sin": "np.sin", "cos": "np.cos", "exp": "np.exp", "ln": "np.log",
              "sqrt": "np.sqrt", "abs": "np.abs", "pow": "np.power"},
    "math": {"sin": "math.sin", "cos": "math.cos", "exp": "math.exp", "ln": "math.log",
             "sqrt": "math.sqrt", "abs": "abs", "pow": "math.pow"},
}


def _code(e: Expr, fns: Mapping[str, str]) -> str:
    if isinstance(e, Const):
        return repr(e.value)
    if isinstance(e, Var):
        return e.name
    if isinstance(e, Unary):
        if e.op == "neg":
            return f"(-{_code(e.arg, fns)})"
        return f"{fns[e.op]}({_code(e.arg, fns)})"
    if isinstance(e, Pow):
        b = _code(e.base, fns)
        if e.exponent == 2.0:
            return f"({b}*{b})"
        return f"{fns['pow']}({b}, {e.exponent!r})"
    return f"({_code(e.left, fns)} {e.op} {_code(e.right, fns)})"


def compile_expr(e: Expr, args: Iterable[str], backend: str = "numpy") -> Callable[..., Any]:
    """Compile to a Python function of positional ``args``.

    ``backend="numpy"`` gives a vectorised function that broadcasts its
    arguments and returns nan/inf outside the domain instead of raising.
    ``backend="math"`` gives a faster scalar function for tight loops; domain
    errors surface as ``ValueError``/``OverflowError`` from :mod:`math`.
    """
    args = tuple(args)
    missing = variables(e) - set(args)
    if missing:
        raise UnboundVariableError(f"unbound variable {sorted(missing)[0]!r}")
    body = _code(e, _FUNCS[backend])
    if backend == "numpy" and args:
        # broadcast constant-valued expressions to the argument shape
        body = f"{body} + 0.0 * ({' + '.join(args)})"
    src = f"lambda {', '.join(args)}: {body}"
    return eval(src, {"np": np, "math": math})  # noqa: S307 - generated from a checked tree


# --------------------------------------------------------------------------- rewrite


def _is_const(e: Expr, value: float | None = None) -> bool:
    return isinstance(e, Const) and (value is None or e.value == value)


def add(a: Expr, b: Expr) -> Expr:
    if _is_const(a) and _is_const(b):
        return Const(a.value + b.value)
    if _is_const(a, 0.0):
        return b
    if _is_const(b, 0.0):
        return a
    return Binary("+", a, b)


def sub(a: Expr, b: Expr) -> Expr:
    if _is_const(a) and _is_const(b):
        return Const(a.value - b.value)
    if _is_const(b, 0.0):
        return a
    if _is_const(a, 0.0):
        return neg(b)
    return Binary("-", a, b)


def neg(a: Expr) -> Expr:
    if _is_const(a):
        return Const(-a.value)
    if isinstance(a, Unary) and a.op == "neg":
        return a.arg
    return Unary("neg", a)


def mul(a: Expr, b: Expr) -> Expr:
    if _is_const(a) and _is_const(b):
        return Const(a.value * b.value)
    if _is_const(a, 0.0) or _is_const(b, 0.0):
        return Const(0.0)
    if _is_const(a, 1.0):
        return b
    if _is_const(b, 1.0):
        return a
    if _is_const(b):
        a, b = b, a
    return Binary("*", a, b)


def div(a: Expr, b: Expr) -> Expr:
    if _is_const(b, 1.0):
        return a
    if _is_const(a, 0.0):
        return Const(0.0)
    if _is_const(a) and _is_const(b) and b.value != 0.0:
        return Const(a.value / b.value)
    return Binary("/", a, b)


def power(a: Expr, n: float) -> Expr:
    if n == 0.0:
        return Const(1.0)
    if n == 1.0:
        return a
    if _is_const(a):
        try:
            return Const(_scalar_pow(a.value, n))
        except ExprDomainError:
            pass
    return Pow(a, n)


def call(fn: str, a: Expr) -> Expr:
    return Unary(fn, a)


def substitute(e: Expr, mapping: Mapping[str, Expr]) -> Expr:
    """Replace variables by expressions (no simplification)."""
    if isinstance(e, Var):
        return mapping.get(e.name, e)
    if isinstance(e, Const):
        return e
    if isinstance(e, Unary):
        return Unary(e.op, substitute(e.arg, mapping))
    if isinstance(e, Pow):
        return Pow(substitute(e.base, mapping), e.exponent)
    return Binary(e.op, substitute(e.left, mapping), substitute(e.right, mapping))


# --------------------------------------------------------------------------- diff


def diff(e: Expr, var: str) -> Expr:
    """Exact symbolic derivative of ``e`` with respect to ``var``."""
    if isinstance(e, Const):
        return Const(0.0)
    if isinstance(e, Var):
        return Const(1.0 if e.name == var else 0.0)
    if isinstance(e, Pow):
        da = diff(e.base, var)
        return mul(mul(Const(e.exponent), power(e.base, e.exponent - 1.0)), da)
    if isinstance(e, Unary):
        a = e.arg
        da = diff(a, var)
        if _is_const(da, 0.0):
            return Const(0.0)
        if e.op == "neg":
            return neg(da)
        if e.op == "sin":
            return mul(call("cos", a), da)
        if e.op == "cos":
            return neg(mul(call("sin", a), da))
        if e.op == "exp":
            return mul(e, da)
        if e.op == "ln":
            return div(da, a)
        if e.op == "sqrt":
            return div(da, mul(Const(2.0), e))
        if e.op == "abs":
            return mul(div(a, e), da)
        raise ExprError(f"unknown function {e.op!r}")
    da = diff(e.left, var)
    db = diff(e.right, var)
    if e.op == "+":
        return add(da, db)
    if e.op == "-":
        return sub(da, db)
    if e.op == "*":
        return add(mul(da, e.right), mul(e.left, db))
    # quotient rule
    if _is_const(db, 0.0):
        return div(da, e.right)
    return div(sub(mul(da, e.right), mul(e.left, db)), power(e.right, 2.0))
