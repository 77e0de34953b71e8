"""Arithmetic expression trees with exact evaluation and derivatives.

Expressions are written over variables ``x1, x2, ...`` (1-based) with the
operators ``+ - * / ^``, the functions ``exp()`` and ``log()``, parentheses
and decimal literals.  Trees are immutable after parsing and safe to share
across threads.  Exponents of ``^`` must reduce to nonnegative integers so
that differentiation stays exact.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Union

__all__ = [
    "Expression",
    "Const",
    "Var",
    "Add",
    "Sub",
    "Mul",
    "Div",
    "Neg",
    "Pow",
    "Exp",
    "Log",
    "ParseError",
    "DomainError",
    "parse",
    "evaluate",
    "gradient",
    "to_string",
    "variable_indices",
]


class ParseError(ValueError):
    """Syntax error with a 1-based character position."""

    def __init__(self, message: str, position: int):
        super().__init__(f"{message} (position {position})")
        self.position = position


class DomainError(ArithmeticError):
    """Evaluation outside the expression's domain (log <= 0, division by 0)."""


@dataclass(frozen=True)
class Const:
    value: float


@dataclass(frozen=True)
class Var:
    index: int  # 1-based

    def __post_init__(self):
        if self.index < 1:
            raise ValueError(f"variable index must be >= 1, got {self.index}")


@dataclass(frozen=True)
class Add:
    left: "Expression"
    right: "Expression"


@dataclass(frozen=True)
class Sub:
    left: "Expression"
    right: "Expression"


@dataclass(frozen=True)
class Mul:
    left: "Expression"
    right: "Expression"


@dataclass(frozen=True)
class Div:
    left: "Expression"
    right: "Expression"


@dataclass(frozen=True)
class Neg:
    operand: "Expression"


@dataclass(frozen=True)
class Pow:
    base: "Expression"
    exponent: int

    def __post_init__(self):
        if self.exponent < 0:
            raise ValueError(f"integer power must be >= 0, got {self.exponent}")


@dataclass(frozen=True)
class Exp:
    operand: "Expression"


@dataclass(frozen=True)
class Log:
    operand: "Expression"


Expression = Union[Const, Var, Add, Sub, Mul, Div, Neg, Pow, Exp, Log]


# ---------------------------------------------------------------------------
# tokenizer / parser

_OPERATORS = set("+-*/^()")


def _tokenize(text: str) -> list[tuple[str, str, int]]:
    # token kinds: num, ident, op; positions are 1-based char offsets
    tokens = []
    i = 0
    n = len(text)
    while i < n:
        ch = text[i]
        if ch.isspace():
            i += 1
            continue
        if ch in _OPERATORS:
            tokens.append(("op", ch, i + 1))
            i += 1
            continue
        if ch.isdigit() or ch == ".":
            j = i
            seen_dot = False
            while j < n and (text[j].isdigit() or (text[j] == "." and not seen_dot)):
                if text[j] == ".":
                    seen_dot = True
                j += 1
            # scientific notation: 1e-3, 2.5E+4
            if j < n and text[j] in "eE":
                k = j + 1
                if k < n and text[k] in "+-":
                    k += 1
                if k < n and text[k].isdigit():
                    while k < n and text[k].isdigit():
                        k += 1
                    j = k
            lit = text[i:j]
            try:
                float(lit)
            except ValueError:
                raise ParseError(f"malformed number {lit!r}", i + 1) from None
            tokens.append(("num", lit, i + 1))
            i = j
            continue
        if ch.isalpha() or ch == "_":
            j = i
            while j < n and (text[j].isalnum() or text[j] == "_"):
                j += 1
            tokens.append(("ident", text[i:j], i + 1))
            i = j
            continue
        raise ParseError(f"unexpected character {ch!r}", i + 1)
    tokens.append(("eof", "", n + 1))
    return tokens


class _Parser:
    def __init__(self, text: str):
        self.tokens = _tokenize(text)
        self.pos = 0

    def peek(self):
        return self.tokens[self.pos]

    def advance(self):
        tok = self.tokens[self.pos]
        self.pos += 1
        return tok

    def expect_op(self, symbol: str):
        kind, value, position = self.peek()
        if kind != "op" or value != symbol:
            raise ParseError(f"expected {symbol!r}", position)
        return self.advance()

    # expr := term (('+'|'-') term)*
    def parse_expr(self) -> Expression:
        node = self.parse_term()
        while True:
            kind, value, _ = self.peek()
            if kind == "op" and value in "+-":
                self.advance()
                rhs = self.parse_term()
                node = Add(node, rhs) if value == "+" else Sub(node, rhs)
            else:
                return node

    # term := unary (('*'|'/') unary)*
    def parse_term(self) -> Expression:
        node = self.parse_unary()
        while True:
            kind, value, _ = self.peek()
            if kind == "op" and value in "*/":
                self.advance()
                rhs = self.parse_unary()
                node = Mul(node, rhs) if value == "*" else Div(node, rhs)
            else:
                return node

    # unary := '-' unary | power ; '^' binds tighter than unary minus
    def parse_unary(self) -> Expression:
        kind, value, _ = self.peek()
        if kind == "op" and value == "-":
            self.advance()
            return Neg(self.parse_unary())
        return self.parse_power()

    # power := atom ['^' unary] with the exponent folded to an integer;
    # parsing the exponent at unary level makes '^' right-associative
    def parse_power(self) -> Expression:
        base = self.parse_atom()
        kind, value, position = self.peek()
        if kind == "op" and value == "^":
            self.advance()
            _, _, expo_pos = self.peek()
            exponent = self.parse_unary()
            k = _fold_integer_exponent(exponent, expo_pos)
            return Pow(base, k)
        return base

    def parse_atom(self) -> Expression:
        kind, value, position = self.advance()
        if kind == "num":
            return Const(float(value))
        if kind == "ident":
            if value in ("exp", "log"):
                self.expect_op("(")
                inner = self.parse_expr()
                self.expect_op(")")
                return Exp(inner) if value == "exp" else Log(inner)
            if value[0] == "x" and value[1:].isdigit():
                index = int(value[1:])
                if index < 1:
                    raise ParseError("variable index must be >= 1", position)
                return Var(index)
            raise ParseError(f"unknown identifier {value!r}", position)
        if kind == "op" and value == "(":
            inner = self.parse_expr()
            self.expect_op(")")
            return inner
        raise ParseError("expected a number, variable or '('", position)


def _fold_integer_exponent(node: Expression, position: int) -> int:
    if variable_indices(node):
        raise ParseError("exponent must be a constant integer", position)
    value = evaluate(node, ())
    if value != math.floor(value):
        raise ParseError(f"exponent must be an integer, got {value}", position)
    if value < 0:
        raise ParseError(f"exponent must be >= 0, got {int(value)}", position)
    return int(value)


def parse(text: str) -> Expression:
    """Parse ``text`` into an expression tree.

    Precedence is ``^`` over unary ``-`` over ``* /`` over ``+ -``, with
    left association except for ``^`` which associates to the right.
    Raises :class:`ParseError` with a 1-based position on bad input.
    """
    parser = _Parser(text)
    node = parser.parse_expr()
    kind, value, position = parser.peek()
    if kind != "eof":
        raise ParseError(f"unexpected trailing input {value!r}", position)
    return node


# ---------------------------------------------------------------------------
# evaluation and differentiation


def _pow(base: float, k: int) -> float:
    try:
        return base**k
    except OverflowError:
        if base > 0 or k % 2 == 0:
            return math.inf
        return -math.inf


def evaluate(expr: Expression, point) -> float:
    """Evaluate ``expr`` at ``point`` (a sequence indexed by x1 -> point[0]).

    Overflow follows IEEE semantics (returns inf); log of a non-positive
    argument and division by zero raise :class:`DomainError`.
    """
    if isinstance(expr, Const):
        return expr.value
    if isinstance(expr, Var):
        if expr.index > len(point):
            raise ValueError(
                f"point has dimension {len(point)}, expression uses x{expr.index}"
            )
        return float(point[expr.index - 1])
    if isinstance(expr, Add):
        return evaluate(expr.left, point) + evaluate(expr.right, point)
    if isinstance(expr, Sub):
        return evaluate(expr.left, point) - evaluate(expr.right, point)
    if isinstance(expr, Mul):
        return evaluate(expr.left, point) * evaluate(expr.right, point)
    if isinstance(expr, Div):
        denominator = evaluate(expr.right, point)
        if denominator == 0.0:
            raise DomainError("division by zero")
        return evaluate(expr.left, point) / denominator
    if isinstance(expr, Neg):
        return -evaluate(expr.operand, point)
    if isinstance(expr, Pow):
        return _pow(evaluate(expr.base, point), expr.exponent)
    if isinstance(expr, Exp):
        try:
            return math.exp(evaluate(expr.operand, point))
        except OverflowError:
            return math.inf
    if isinstance(expr, Log):
        value = evaluate(expr.operand, point)
        if value <= 0.0:
            raise DomainError(f"log of non-positive argument {value}")
        return math.log(value)
    raise TypeError(f"not an expression node: {expr!r}")


def gradient(expr: Expression, point) -> list[float]:
    """Exact gradient of ``expr`` at ``point`` via reverse-mode differentiation.

    The result has the same length as ``point``; raises the same domain
    errors as :func:`evaluate`.
    """
    values: dict[int, float] = {}
    _forward(expr, point, values)
    grad = [0.0] * len(point)
    _backward(expr, 1.0, values, grad)
    return grad


def _forward(expr: Expression, point, values: dict[int, float]) -> float:
    # post-order value pass; values keyed by node identity
    if isinstance(expr, Const):
        value = expr.value
    elif isinstance(expr, Var):
        if expr.index > len(point):
            raise ValueError(
                f"point has dimension {len(point)}, expression uses x{expr.index}"
            )
        value = float(point[expr.index - 1])
    elif isinstance(expr, Add):
        value = _forward(expr.left, point, values) + _forward(expr.right, point, values)
    elif isinstance(expr, Sub):
        value = _forward(expr.left, point, values) - _forward(expr.right, point, values)
    elif isinstance(expr, Mul):
        value = _forward(expr.left, point, values) * _forward(expr.right, point, values)
    elif isinstance(expr, Div):
        numerator = _forward(expr.left, point, values)
        denominator = _forward(expr.right, point, values)
        if denominator == 0.0:
            raise DomainError("division by zero")
        value = numerator / denominator
    elif isinstance(expr, Neg):
        value = -_forward(expr.operand, point, values)
    elif isinstance(expr, Pow):
        value = _pow(_forward(expr.base, point, values), expr.exponent)
    elif isinstance(expr, Exp):
        try:
            value = math.exp(_forward(expr.operand, point, values))
        except OverflowError:
            value = math.inf
    elif isinstance(expr, Log):
        inner = _forward(expr.operand, point, values)
        if inner <= 0.0:
            raise DomainError(f"log of non-positive argument {inner}")
        value = math.log(inner)
    else:
        raise TypeError(f"not an expression node: {expr!r}")
    values[id(expr)] = value
    return value


def _backward(expr: Expression, adjoint: float, values: dict[int, float], grad: list[float]):
    if isinstance(expr, Const):
        return
    if isinstance(expr, Var):
        grad[expr.index - 1] += adjoint
        return
    if isinstance(expr, Add):
        _backward(expr.left, adjoint, values, grad)
        _backward(expr.right, adjoint, values, grad)
        return
    if isinstance(expr, Sub):
        _backward(expr.left, adjoint, values, grad)
        _backward(expr.right, -adjoint, values, grad)
        return
    if isinstance(expr, Mul):
        _backward(expr.left, adjoint * values[id(expr.right)], values, grad)
        _backward(expr.right, adjoint * values[id(expr.left)], values, grad)
        return
    if isinstance(expr, Div):
        denominator = values[id(expr.right)]
        _backward(expr.left, adjoint / denominator, values, grad)
        _backward(
            expr.right,
            -adjoint * values[id(expr.left)] / (denominator * denominator),
            values,
            grad,
        )
        return
    if isinstance(expr, Neg):
        _backward(expr.operand, -adjoint, values, grad)
        return
    if isinstance(expr, Pow):
        if expr.exponent == 0:
            return
        base = values[id(expr.base)]
        _backward(
            expr.base, adjoint * expr.exponent * _pow(base, expr.exponent - 1), values, grad
        )
        return
    if isinstance(expr, Exp):
        _backward(expr.operand, adjoint * values[id(expr)], values, grad)
        return
    if isinstance(expr, Log):
        _backward(expr.operand, adjoint / values[id(expr.operand)], values, grad)
        return
    raise TypeError(f"not an expression node: {expr!r}")


# ---------------------------------------------------------------------------
# printing and inspection

_PREC_ADD, _PREC_MUL, _PREC_NEG, _PREC_POW, _PREC_ATOM = 1, 2, 3, 4, 5


def _render(expr: Expression) -> tuple[str, int]:
    if isinstance(expr, Const):
        if expr.value < 0:
            return f"-{-expr.value!r}", _PREC_NEG
        return repr(expr.value), _PREC_ATOM
    if isinstance(expr, Var):
        return f"x{expr.index}", _PREC_ATOM
    if isinstance(expr, Add):
        return f"{_wrap(expr.left, _PREC_ADD)} + {_wrap(expr.right, _PREC_ADD)}", _PREC_ADD
    if isinstance(expr, Sub):
        # right side needs parens at equal precedence: a - (b + c)
        return f"{_wrap(expr.left, _PREC_ADD)} - {_wrap(expr.right, _PREC_ADD + 1)}", _PREC_ADD
    if isinstance(expr, Mul):
        return f"{_wrap(expr.left, _PREC_MUL)}*{_wrap(expr.right, _PREC_MUL)}", _PREC_MUL
    if isinstance(expr, Div):
        return f"{_wrap(expr.left, _PREC_MUL)}/{_wrap(expr.right, _PREC_MUL + 1)}", _PREC_MUL
    if isinstance(expr, Neg):
        return f"-{_wrap(expr.operand, _PREC_NEG)}", _PREC_NEG
    if isinstance(expr, Pow):
        return f"{_wrap(expr.base, _PREC_POW + 1)}^{expr.exponent}", _PREC_POW
    if isinstance(expr, Exp):
        return f"exp({_render(expr.operand)[0]})", _PREC_ATOM
    if isinstance(expr, Log):
        return f"log({_render(expr.operand)[0]})", _PREC_ATOM
    raise TypeError(f"not an expression node: {expr!r}")


def _wrap(expr: Expression, minimum: int) -> str:
    text, precedence = _render(expr)
    if precedence < minimum:
        return f"({text})"
    return text


def to_string(expr: Expression) -> str:
    """Render the tree back to parseable text (parse(to_string(e)) evaluates like e)."""
    return _render(expr)[0]


def variable_indices(expr: Expression) -> set[int]:
    """The set of 1-based variable indices referenced by ``expr``."""
    out: set[int] = set()
    stack = [expr]
    while stack:
        node = stack.pop()
        if isinstance(node, Var):
            out.add(node.index)
        elif isinstance(node, (Add, Sub, Mul, Div)):
            stack.append(node.left)
            stack.append(node.right)
        elif isinstance(node, (Neg, Exp, Log)):
            stack.append(node.operand)
        elif isinstance(node, Pow):
            stack.append(node.base)
    return out
