"""A small arithmetic language for field components and foliation maps.

Grammar, loosest to tightest binding::

    expr   := expr ('+' | '-') expr
            | expr ('*' | '/') expr
            | '-' expr
            | expr '^' expr            (right associative)
            | NUMBER | NAME | NAME '(' args ')' | '(' expr ')'

``X^(p/q)`` and ``X^p`` with integer literals become a rational power with
real odd-root semantics, so ``(-8)^(2/3) == 4``. Any other exponent is
evaluated as ``exp(e*log(X))`` and needs ``X > 0``.

Evaluation is vectorized: variables may be bound to numpy arrays.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Mapping, Union

import numpy as np

from .errors import DimensionError, EvaluationError, FoliantError

MAX_DEPTH = 256
FUNCTIONS = ("sin", "cos", "exp", "abs", "sqrt", "cbrt")
CONSTANTS = {"pi": math.pi}


class ExprError(FoliantError, ValueError):
    """Lexical or syntactic problem; ``position`` is a 0-based offset."""

    def __init__(self, message: str, position: int | None = None):
        self.position = position
        if position is not None:
            message = f"{message} (column {position + 1})"
        super().__init__(message)


class LexError(ExprError):
    pass


class ParseError(ExprError):
    pass


class DomainError(EvaluationError):
    pass


# -- AST ---------------------------------------------------------------------


@dataclass(frozen=True)
class Num:
    value: float
    depth: int = field(default=1, compare=False)


@dataclass(frozen=True)
class Var:
    index: int  # 0-based position in the evaluation vector
    name: str
    depth: int = field(default=1, compare=False)


@dataclass(frozen=True)
class Neg:
    operand: "Expr"
    depth: int = field(default=1, compare=False)


@dataclass(frozen=True)
class BinOp:
    op: str  # one of + - * / ^
    left: "Expr"
    right: "Expr"
    depth: int = field(default=1, compare=False)


@dataclass(frozen=True)
class RatPow:
    base: "Expr"
    p: int
    q: int
    depth: int = field(default=1, compare=False)


@dataclass(frozen=True)
class Call:
    func: str
    arg: "Expr"
    depth: int = field(default=1, compare=False)


Expr = Union[Num, Var, Neg, BinOp, RatPow, Call]


def _node(cls, *args):
    children = [a for a in args if isinstance(a, (Num, Var, Neg, BinOp, RatPow, Call))]
    depth = 1 + max((c.depth for c in children), default=0)
    if depth > MAX_DEPTH:
        raise ParseError(f"expression nests deeper than {MAX_DEPTH}")
    return cls(*args, depth=depth)


# -- lexer -------------------------------------------------------------------


@dataclass(frozen=True)
class Token:
    kind: str  # NUM, NAME, OP, EOF
    text: str
    pos: int


def tokenize(text: str) -> list[Token]:
    tokens: list[Token] = []
    i, n = 0, len(text)
    while i < n:
        c = text[i]
        if c in " \t\r\n":
            i += 1
            continue
        if c.isdigit() or (c == "." and i + 1 < n and text[i + 1].isdigit()):
            j = i
            while j < n and text[j].isdigit():
                j += 1
            if j < n and text[j] == ".":
                j += 1
                while j < n and text[j].isdigit():
                    j += 1
            if j < n and text[j] in "eE":
                k = j + 1
                if k < n and text[k] in "+-":
                    k += 1
                if k < n and text[k].isdigit():
                    while k < n and text[k].isdigit():
                        k += 1
                    j = k
            tokens.append(Token("NUM", text[i:j], i))
            i = j
            continue
        if c.isalpha() or c == "_":
            j = i
            while j < n and (text[j].isalnum() or text[j] == "_"):
                j += 1
            tokens.append(Token("NAME", text[i:j], i))
            i = j
            continue
        if c in "+-*/^(),":
            tokens.append(Token("OP", c, i))
            i += 1
            continue
        raise LexError(f"unexpected character {c!r}", i)
    tokens.append(Token("EOF", "", n))
    return tokens


# -- parser ------------------------------------------------------------------

_BINARY = {"+": (10, 11), "-": (10, 11), "*": (20, 21), "/": (20, 21), "^": (41, 40)}
_PREFIX_BP = 30


def default_names(dimension: int) -> dict[str, int]:
    return {f"z{i + 1}": i for i in range(dimension)}


def foliation_names(dimension: int) -> dict[str, int]:
    """``z1..`` plus the aliases ``s, y1, .., yn`` for foliation coordinates."""
    names = default_names(dimension)
    names["s"] = 0
    names.update({f"y{i}": i for i in range(1, dimension)})
    return names


class _Parser:
    def __init__(self, text: str, names: Mapping[str, int]):
        self.tokens = tokenize(text)
        self.i = 0
        self.names = names
        self.nesting = 0

    def peek(self) -> Token:
        return self.tokens[self.i]

    def advance(self) -> Token:
        tok = self.tokens[self.i]
        self.i += 1
        return tok

    def expect(self, text: str) -> Token:
        tok = self.peek()
        if tok.text != text or tok.kind != "OP":
            if tok.kind == "EOF" and text == ")":
                raise ParseError("unbalanced parentheses: missing ')'", tok.pos)
            raise ParseError(f"expected {text!r}, found {tok.text or 'end of input'!r}", tok.pos)
        return self.advance()

    def parse(self) -> Expr:
        e = self.expr(0)
        tok = self.peek()
        if tok.kind != "EOF":
            if tok.text == ")":
                raise ParseError("unbalanced parentheses: unexpected ')'", tok.pos)
            raise ParseError(f"unexpected token {tok.text!r}", tok.pos)
        return e

    def expr(self, min_bp: int) -> Expr:
        self.nesting += 1
        if self.nesting > MAX_DEPTH:
            raise ParseError(f"expression nests deeper than {MAX_DEPTH}", self.peek().pos)
        try:
            left = self.prefix()
            while True:
                tok = self.peek()
                if tok.kind != "OP" or tok.text not in _BINARY:
                    break
                lbp, rbp = _BINARY[tok.text]
                if lbp < min_bp:
                    break
                self.advance()
                right = self.expr(rbp)
                if tok.text == "^":
                    left = _power(left, right)
                else:
                    left = _node(BinOp, tok.text, left, right)
            return left
        finally:
            self.nesting -= 1

    def prefix(self) -> Expr:
        tok = self.advance()
        if tok.kind == "NUM":
            return _node(Num, float(tok.text))
        if tok.kind == "OP" and tok.text == "-":
            return _node(Neg, self.expr(_PREFIX_BP))
        if tok.kind == "OP" and tok.text == "(":
            e = self.expr(0)
            self.expect(")")
            return e
        if tok.kind == "NAME":
            name = tok.text
            if self.peek().text == "(" and self.peek().kind == "OP":
                return self.call(tok)
            if name in self.names:
                return _node(Var, self.names[name], name)
            if name in CONSTANTS:
                return _node(Num, CONSTANTS[name])
            if name.startswith(("z", "y")) and name[1:].isdigit():
                raise ParseError(f"variable {name!r} is out of range for this dimension", tok.pos)
            raise ParseError(f"unknown identifier {name!r}", tok.pos)
        if tok.kind == "EOF":
            raise ParseError("unexpected end of input", tok.pos)
        if tok.text == ")":
            raise ParseError("unbalanced parentheses: unexpected ')'", tok.pos)
        raise ParseError(f"unexpected token {tok.text!r}", tok.pos)

    def call(self, name_tok: Token) -> Expr:
        name = name_tok.text
        self.expect("(")
        if name == "pow":
            base = self.expr(0)
            self.expect(",")
            p = self.integer()
            self.expect(",")
            q_tok = self.peek()
            q = self.integer()
            self.expect(")")
            if q == 0:
                raise ParseError("rational power with zero denominator", q_tok.pos)
            return _node(RatPow, base, p, q)
        if name not in FUNCTIONS:
            raise ParseError(f"unknown function {name!r}", name_tok.pos)
        arg = self.expr(0)
        self.expect(")")
        return _node(Call, name, arg)

    def integer(self) -> int:
        sign = 1
        if self.peek().text == "-":
            self.advance()
            sign = -1
        tok = self.advance()
        if tok.kind != "NUM" or not tok.text.isdigit():
            raise ParseError("expected an integer literal", tok.pos)
        return sign * int(tok.text)


def _int_literal(e: Expr) -> int | None:
    if isinstance(e, Num) and e.value.is_integer() and abs(e.value) < 2**53:
        return int(e.value)
    if isinstance(e, Neg):
        k = _int_literal(e.operand)
        return None if k is None else -k
    return None


def _power(base: Expr, exponent: Expr) -> Expr:
    k = _int_literal(exponent)
    if k is not None:
        return _node(RatPow, base, k, 1)
    if isinstance(exponent, BinOp) and exponent.op == "/":
        p, q = _int_literal(exponent.left), _int_literal(exponent.right)
        if p is not None and q is not None and q != 0:
            return _node(RatPow, base, p, q)
    if isinstance(exponent, Neg) and isinstance(exponent.operand, BinOp) and exponent.operand.op == "/":
        p, q = _int_literal(exponent.operand.left), _int_literal(exponent.operand.right)
        if p is not None and q is not None and q != 0:
            return _node(RatPow, base, -p, q)
    return _node(BinOp, "^", base, exponent)


def parse_expr(text, dimension: int, names: Mapping[str, int] | None = None) -> Expr:
    """Parse ``text`` into an AST over ``dimension`` variables.

    ``names`` maps identifiers to 0-based variable indices and defaults to
    ``z1 .. z{dimension}``. Raises :class:`ExprError` subclasses only.
    """
    if isinstance(text, (bytes, bytearray)):
        try:
            text = bytes(text).decode("ascii")
        except UnicodeDecodeError as exc:
            raise LexError("input is not ASCII", exc.start) from None
    if not isinstance(text, str):
        raise ParseError(f"expected text, got {type(text).__name__}")
    if not text.isascii():
        bad = next(i for i, c in enumerate(text) if ord(c) > 127)
        raise LexError("input is not ASCII", bad)
    if not text.strip():
        raise ParseError("empty expression", 0)
    if dimension < 1:
        raise ValueError("dimension must be positive")
    if names is None:
        names = default_names(dimension)
    for key, idx in names.items():
        if not 0 <= idx < dimension:
            raise ValueError(f"name {key!r} maps outside the dimension")
    return _Parser(text, names).parse()


# -- evaluation --------------------------------------------------------------


def _finite(x, what: str):
    if not np.all(np.isfinite(x)):
        raise EvaluationError(f"{what} produced a non-finite value")
    return x


def _rational_power(x, p: int, q: int):
    if q < 0:
        p, q = -p, -q
    g = math.gcd(p, q)
    p, q = p // g, q // g
    if q == 1:
        root = x
    elif q % 2 == 0:
        if np.any(np.asarray(x) < 0):
            raise DomainError(f"even root (q={q}) of a negative number")
        root = np.sqrt(x) if q == 2 else np.power(x, 1.0 / q)
    elif q == 3:
        root = np.cbrt(x)
    else:
        root = np.sign(x) * np.power(np.abs(x), 1.0 / q)
    if p < 0 and np.any(np.asarray(root) == 0):
        raise EvaluationError("division by zero in negative power")
    return _finite(np.power(root, float(p)) if p < 0 else root**p, "power")


def _eval(e: Expr, values):
    if isinstance(e, Num):
        return e.value
    if isinstance(e, Var):
        return values[e.index]
    if isinstance(e, Neg):
        return -_eval(e.operand, values)
    if isinstance(e, RatPow):
        return _rational_power(_eval(e.base, values), e.p, e.q)
    if isinstance(e, Call):
        a = _eval(e.arg, values)
        if e.func == "sqrt":
            if np.any(np.asarray(a) < 0):
                raise DomainError("sqrt of a negative number")
            return np.sqrt(a)
        if e.func == "cbrt":
            return np.cbrt(a)
        if e.func == "abs":
            return np.abs(a)
        return _finite(getattr(np, e.func)(a), e.func)
    a = _eval(e.left, values)
    b = _eval(e.right, values)
    if e.op == "+":
        return _finite(a + b, "addition")
    if e.op == "-":
        return _finite(a - b, "subtraction")
    if e.op == "*":
        return _finite(a * b, "multiplication")
    if e.op == "/":
        if np.any(np.asarray(b) == 0):
            raise EvaluationError("division by zero")
        return _finite(a / b, "division")
    if np.any(np.asarray(a) <= 0):
        raise DomainError("non-rational power of a non-positive base")
    return _finite(np.exp(b * np.log(a)), "power")


def eval_expr(e: Expr, values):
    """Evaluate ``e`` with variable ``i`` bound to ``values[..., i]``.

    ``values`` may be a single point or an array of points (last axis is the
    coordinate axis); the result has the matching leading shape. Non-finite
    results raise :class:`EvaluationError`.
    """
    arr = np.asarray(values, dtype=float)
    if arr.ndim == 0:
        arr = arr.reshape(1)
    cols = [arr[..., i] for i in range(arr.shape[-1])]
    with np.errstate(all="ignore"):
        try:
            out = _eval(e, cols)
        except IndexError:
            raise DimensionError(
                f"expression uses more variables than the {arr.shape[-1]} supplied"
            ) from None
        out = np.broadcast_to(np.asarray(out, dtype=float), arr.shape[:-1])
    _finite(out, "expression")
    return float(out) if out.ndim == 0 else out.copy()


# -- printing ----------------------------------------------------------------

_PREC = {"+": 1, "-": 1, "*": 2, "/": 2}


def _prec(e: Expr) -> int:
    if isinstance(e, BinOp):
        return 4 if e.op == "^" else _PREC[e.op]
    if isinstance(e, RatPow):
        return 4
    if isinstance(e, Neg):
        return 3
    return 5


def _fmt_num(x: float) -> str:
    if x.is_integer() and abs(x) < 1e16:
        return str(int(x))
    return repr(x)


def pretty(e: Expr) -> str:
    """Canonical text for ``e``, with only the parentheses it needs."""
    if isinstance(e, Num):
        return _fmt_num(e.value)
    if isinstance(e, Var):
        return e.name
    if isinstance(e, Call):
        return f"{e.func}({pretty(e.arg)})"
    if isinstance(e, Neg):
        inner = pretty(e.operand)
        return f"-({inner})" if _prec(e.operand) < 3 else f"-{inner}"
    if isinstance(e, RatPow):
        base = pretty(e.base)
        if _prec(e.base) <= 4:
            base = f"({base})"
        if e.q == 1:
            return f"{base}^{e.p}" if e.p >= 0 else f"{base}^({e.p})"
        return f"{base}^({e.p}/{e.q})"
    left, right = pretty(e.left), pretty(e.right)
    if e.op == "^":
        if _prec(e.left) <= 4:
            left = f"({left})"
        if _prec(e.right) < 4:
            right = f"({right})"
        return f"{left}^{right}"
    p = _PREC[e.op]
    if _prec(e.left) < p:
        left = f"({left})"
    if _prec(e.right) <= p:
        right = f"({right})"
    return f"{left} {e.op} {right}"
