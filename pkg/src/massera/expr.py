"""Closed-form expressions in ``t`` and ``x``.

A small recursive-descent / precedence-climbing parser, a tree evaluator,
a canonical formatter and a compiler that turns a tree into a plain Python
callable for the hot loops of the integrator.

Grammar (loosest to tightest)::

    expr    := term (('+' | '-') term)*
    term    := unary (('*' | '/') unary)*
    unary   := '-' unary | power
    power   := primary ('^' unary)?          # right-associative
    primary := number | 'pi' | 'e' | 't' | 'x'
             | func '(' expr ')' | '(' expr ')'

so ``-x^2`` is ``-(x^2)`` and ``2^3^2`` is ``2^(3^2)``.
"""

from __future__ import annotations

import math
import re
from dataclasses import dataclass
from typing import Callable, Union

__all__ = [
    "Num",
    "Const",
    "Var",
    "Neg",
    "BinOp",
    "Call",
    "Expr",
    "ParseError",
    "EvalError",
    "parse",
    "eval_expr",
    "format_expr",
    "compile_expr",
    "shift_time",
    "reflect_time",
    "additive_terms",
    "FUNCTIONS",
    "CONSTANTS",
]

MAX_DEPTH = 200


@dataclass(frozen=True)
class Num:
    value: float


@dataclass(frozen=True)
class Const:
    name: str  # "pi" or "e"


@dataclass(frozen=True)
class Var:
    name: str  # "t" or "x"


@dataclass(frozen=True)
class Neg:
    operand: "Expr"


@dataclass(frozen=True)
class BinOp:
    op: str  # one of + - * / ^
    left: "Expr"
    right: "Expr"


@dataclass(frozen=True)
class Call:
    func: str
    arg: "Expr"


Expr = Union[Num, Const, Var, Neg, BinOp, Call]


def _floor(v: float) -> float:
    return float(math.floor(v))


FUNCTIONS: dict[str, Callable[[float], float]] = {
    "sin": math.sin,
    "cos": math.cos,
    "tan": math.tan,
    "sqrt": math.sqrt,
    "exp": math.exp,
    "log": math.log,
    "abs": abs,
    "floor": _floor,
}

CONSTANTS = {"pi": math.pi, "e": math.e}
VARIABLES = ("t", "x")


class ParseError(ValueError):
    """Syntax error at byte offset ``position`` of the source string."""

    def __init__(self, message: str, position: int, expected: str = ""):
        self.message = message
        self.position = position
        self.expected = expected
        text = f"{message} at position {position}"
        if expected:
            text += f" (expected {expected})"
        super().__init__(text)


class EvalError(ArithmeticError):
    """Domain or overflow error raised while evaluating an expression.

    ``path`` lists the child indices from the root down to the offending
    node; ``operand`` is the value that violated the domain.
    """

    def __init__(self, message: str, path: tuple[int, ...] = (), operand: float | None = None):
        self.message = message
        self.path = path
        self.operand = operand
        super().__init__(f"{message} (node path {list(path)}, operand {operand!r})")


# -- tokenizer ---------------------------------------------------------------

_TOKEN_RE = re.compile(
    r"""
    (?P<ws>\s+)
  | (?P<num>(?:\d+\.?\d*|\.\d+)(?:[eE][+-]?\d+)?)
  | (?P<name>[A-Za-z_][A-Za-z_0-9]*)
  | (?P<op>[-+*/^()])
    """,
    re.VERBOSE,
)


@dataclass
class _Token:
    kind: str  # num, name, op, end
    text: str
    pos: int  # character offset


def _tokenize(src: str) -> list[_Token]:
    tokens = []
    i = 0
    while i < len(src):
        m = _TOKEN_RE.match(src, i)
        if m is None:
            pos = len(src[:i].encode("utf-8"))
            raise ParseError(f"unexpected character {src[i]!r}", pos, "number, name, operator or parenthesis")
        kind = m.lastgroup
        if kind != "ws":
            tokens.append(_Token(kind, m.group(), i))
        i = m.end()
    tokens.append(_Token("end", "", len(src)))
    return tokens


# -- parser ------------------------------------------------------------------

_BINARY_POWER = {"+": 10, "-": 10, "*": 20, "/": 20}


class _Parser:
    def __init__(self, src: str):
        self.src = src
        self.tokens = _tokenize(src)
        self.i = 0
        self.depth = 0

    def _byte_pos(self, char_pos: int) -> int:
        return len(self.src[:char_pos].encode("utf-8"))

    def error(self, message: str, tok: _Token, expected: str = "") -> ParseError:
        return ParseError(message, self._byte_pos(tok.pos), expected)

    @property
    def tok(self) -> _Token:
        return self.tokens[self.i]

    def advance(self) -> _Token:
        tok = self.tokens[self.i]
        self.i += 1
        return tok

    def expect(self, text: str) -> None:
        if self.tok.text != text or self.tok.kind == "end":
            raise self.error(f"expected {text!r}", self.tok, repr(text))
        self.advance()

    def parse(self) -> Expr:
        node = self.expression(0)
        if self.tok.kind != "end":
            raise self.error(f"unexpected token {self.tok.text!r}", self.tok, "operator or end of input")
        return node

    def expression(self, min_power: int) -> Expr:
        self.depth += 1
        if self.depth > MAX_DEPTH:
            raise self.error("expression nested too deeply", self.tok)
        left = self.unary()
        while self.tok.kind == "op" and self.tok.text in _BINARY_POWER:
            power = _BINARY_POWER[self.tok.text]
            if power <= min_power:
                break
            op = self.advance().text
            right = self.expression(power)
            left = BinOp(op, left, right)
        self.depth -= 1
        return left

    def unary(self) -> Expr:
        if self.tok.kind == "op" and self.tok.text == "-":
            self.advance()
            self.depth += 1
            if self.depth > MAX_DEPTH:
                raise self.error("expression nested too deeply", self.tok)
            node = Neg(self.unary())
            self.depth -= 1
            return node
        return self.power()

    def power(self) -> Expr:
        base = self.primary()
        if self.tok.kind == "op" and self.tok.text == "^":
            self.advance()
            self.depth += 1
            if self.depth > MAX_DEPTH:
                raise self.error("expression nested too deeply", self.tok)
            node = BinOp("^", base, self.unary())
            self.depth -= 1
            return node
        return base

    def primary(self) -> Expr:
        tok = self.tok
        if tok.kind == "num":
            self.advance()
            value = float(tok.text)
            if not math.isfinite(value):
                raise self.error(f"number {tok.text!r} out of range", tok)
            return Num(value)
        if tok.kind == "name":
            self.advance()
            name = tok.text
            if name in FUNCTIONS:
                self.expect("(")
                arg = self.expression(0)
                self.expect(")")
                return Call(name, arg)
            if self.tok.kind == "op" and self.tok.text == "(":
                raise self.error(f"unknown function {name!r}", tok, "one of " + ", ".join(FUNCTIONS))
            if name in CONSTANTS:
                return Const(name)
            if name in VARIABLES:
                return Var(name)
            raise self.error(f"unknown identifier {name!r}", tok, "t, x, pi, e or a function name")
        if tok.kind == "op" and tok.text == "(":
            self.advance()
            node = self.expression(0)
            self.expect(")")
            return node
        if tok.kind == "end":
            raise self.error("unexpected end of input", tok, "operand")
        raise self.error(f"unexpected token {tok.text!r}", tok, "operand")


def parse(src: str) -> Expr:
    """Parse ``src`` into an expression tree.

    Raises
    ------
    ParseError
        On any syntax violation, with the byte offset of the offending token.
    """
    if not isinstance(src, str):
        raise TypeError("expression source must be a string")
    if not src.strip():
        raise ParseError("empty expression", 0, "operand")
    return _Parser(src).parse()


# -- evaluation --------------------------------------------------------------


def _apply_binary(op: str, a: float, b: float) -> float:
    if op == "+":
        return a + b
    if op == "-":
        return a - b
    if op == "*":
        return a * b
    if op == "/":
        return a / b
    return math.pow(a, b)


def eval_expr(e: Expr, t: float, x: float) -> float:
    """Evaluate ``e`` at ``(t, x)`` in IEEE double precision.

    Domain violations (negative radicand, non-positive logarithm argument,
    division by zero, overflow) raise :class:`EvalError` instead of
    producing ``nan`` or ``inf``.
    """
    value = _eval(e, float(t), float(x), ())
    if not math.isfinite(value):
        raise EvalError("non-finite result", (), value)
    return value


def _eval(e: Expr, t: float, x: float, path: tuple[int, ...]) -> float:
    if isinstance(e, Num):
        return e.value
    if isinstance(e, Var):
        return t if e.name == "t" else x
    if isinstance(e, Const):
        return CONSTANTS[e.name]
    if isinstance(e, Neg):
        return -_eval(e.operand, t, x, path + (0,))
    if isinstance(e, BinOp):
        a = _eval(e.left, t, x, path + (0,))
        b = _eval(e.right, t, x, path + (1,))
        try:
            return _apply_binary(e.op, a, b)
        except ZeroDivisionError:
            raise EvalError("division by zero", path, b) from None
        except (ValueError, OverflowError) as exc:
            raise EvalError(f"'^' failed: {exc}", path, a) from None
    if isinstance(e, Call):
        a = _eval(e.arg, t, x, path + (0,))
        try:
            return FUNCTIONS[e.func](a)
        except (ValueError, OverflowError) as exc:
            raise EvalError(f"{e.func} failed: {exc}", path, a) from None
    raise TypeError(f"not an expression node: {e!r}")


def compile_expr(e: Expr) -> Callable[[float, float], float]:
    """Compile ``e`` to a Python function ``f(t, x)``.

    Produces bit-identical results to :func:`eval_expr` (same operations
    in the same order) but runs several times faster. On failure the tree
    evaluator is re-run to report the precise :class:`EvalError`.
    """
    source = _to_python(e)
    namespace = {
        "_pow": math.pow,
        "_isfinite": math.isfinite,
        **{f"_{name}": fn for name, fn in FUNCTIONS.items()},
        "_pi": math.pi,
        "_e": math.e,
    }
    raw = eval(f"lambda t, x: {source}", namespace)  # noqa: S307 - source built from a validated tree

    def fn(t: float, x: float) -> float:
        try:
            value = raw(t, x)
        except (ArithmeticError, ValueError):
            return eval_expr(e, t, x)
        if not _isfinite(value):
            return eval_expr(e, t, x)
        return value

    _isfinite = math.isfinite
    fn.source = source  # type: ignore[attr-defined]
    return fn


def _to_python(e: Expr) -> str:
    if isinstance(e, Num):
        return repr(e.value)
    if isinstance(e, Var):
        return e.name
    if isinstance(e, Const):
        return f"_{e.name}"
    if isinstance(e, Neg):
        return f"(-{_to_python(e.operand)})"
    if isinstance(e, BinOp):
        a, b = _to_python(e.left), _to_python(e.right)
        if e.op == "^":
            return f"_pow({a}, {b})"
        return f"({a} {e.op} {b})"
    if isinstance(e, Call):
        return f"_{e.func}({_to_python(e.arg)})"
    raise TypeError(f"not an expression node: {e!r}")


# -- formatting and rewriting ------------------------------------------------


def _format_number(v: float) -> str:
    if v.is_integer() and abs(v) < 1e15:
        return str(int(v))
    return repr(v)


def format_expr(e: Expr) -> str:
    """Canonical fully parenthesized text; ``parse(format_expr(e)) == e``."""
    if isinstance(e, Num):
        return _format_number(e.value)
    if isinstance(e, (Var, Const)):
        return e.name
    if isinstance(e, Neg):
        return f"(-{format_expr(e.operand)})"
    if isinstance(e, BinOp):
        return f"({format_expr(e.left)}{e.op}{format_expr(e.right)})"
    if isinstance(e, Call):
        return f"{e.func}({format_expr(e.arg)})"
    raise TypeError(f"not an expression node: {e!r}")


def _replace_t(e: Expr, replacement: Expr) -> Expr:
    if isinstance(e, Var) and e.name == "t":
        return replacement
    if isinstance(e, Neg):
        return Neg(_replace_t(e.operand, replacement))
    if isinstance(e, BinOp):
        return BinOp(e.op, _replace_t(e.left, replacement), _replace_t(e.right, replacement))
    if isinstance(e, Call):
        return Call(e.func, _replace_t(e.arg, replacement))
    return e


def shift_time(e: Expr, h: float) -> Expr:
    """Return the expression evaluating ``e(t + h, x)``."""
    if h == 0:
        return e
    if h < 0:
        return _replace_t(e, BinOp("-", Var("t"), Num(-float(h))))
    return _replace_t(e, BinOp("+", Var("t"), Num(float(h))))


def reflect_time(e: Expr, T: float) -> Expr:
    """Return the expression evaluating ``e(T - t, x)``."""
    return _replace_t(e, BinOp("-", Num(float(T)), Var("t")))


def additive_terms(e: Expr) -> list[Expr]:
    """Split a top-level sum into signed terms (subtraction becomes negation)."""
    if isinstance(e, BinOp) and e.op == "+":
        return additive_terms(e.left) + additive_terms(e.right)
    if isinstance(e, BinOp) and e.op == "-":
        return additive_terms(e.left) + [Neg(term) for term in additive_terms(e.right)]
    return [e]
