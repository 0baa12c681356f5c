"""A small expression language for user-specified force fields and stress
tensors on R^3: tokenizer, recursive-descent parser, evaluator.

Grammar (with right-associative '^'):

    expr   := term (('+'|'-') term)*
    term   := factor (('*'|'/') factor)*
    factor := unary ('^' factor)?
    unary  := '-' unary | atom
    atom   := number | var | func '(' expr ')' | '(' expr ')'

Variables are x1, x2, x3; functions sin, cos, exp, tanh, sqrt.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

__all__ = ["FieldExpr", "ParseError", "EvalError", "parse", "evaluate",
           "to_source", "as_callable"]

_FUNCS = {
    "sin": np.sin, "cos": np.cos, "exp": np.exp, "tanh": np.tanh,
    "sqrt": np.sqrt,
}


class ParseError(ValueError):
    def __init__(self, message, offset, expected=()):
        self.offset = offset
        self.expected = tuple(expected)
        exp = f" (expected one of: {', '.join(expected)})" if expected else ""
        super().__init__(f"syntax error at offset {offset}: {message}{exp}")


class EvalError(ValueError):
    def __init__(self, message, offset):
        self.offset = offset
        super().__init__(f"evaluation error at offset {offset}: {message}")


@dataclass(frozen=True)
class Node:
    pos: int


@dataclass(frozen=True)
class Num(Node):
    value: float


@dataclass(frozen=True)
class Var(Node):
    index: int  # 1, 2, or 3


@dataclass(frozen=True)
class Unary(Node):
    op: str
    arg: "FieldExpr"


@dataclass(frozen=True)
class BinOp(Node):
    op: str
    left: "FieldExpr"
    right: "FieldExpr"


@dataclass(frozen=True)
class Call(Node):
    func: str
    arg: "FieldExpr"


FieldExpr = Node


_TOKEN_CHARS = set("+-*/^()")


def _tokenize(src):
    """Yields (kind, text, offset); kind in {op, num, name, end}."""
    toks = []
    i = 0
    n = len(src)
    while i < n:
        c = src[i]
        if c.isspace():
            i += 1
            continue
        if c in _TOKEN_CHARS:
            toks.append(("op", c, i))
            i += 1
            continue
        if c.isdigit() or c == ".":
            j = i
            seen_e = False
            while j < n and (src[j].isdigit() or src[j] == "."
                             or src[j] in "eE"
                             or (src[j] in "+-" and j > i and src[j - 1] in "eE")):
                if src[j] in "eE":
                    if seen_e:
                        break
                    seen_e = True
                j += 1
            text = src[i:j]
            try:
                float(text)
            except ValueError:
                raise ParseError(f"bad number literal {text!r}", i)
            toks.append(("num", text, i))
            i = j
            continue
        if c.isalpha() or c == "_":
            j = i
            while j < n and (src[j].isalnum() or src[j] == "_"):
                j += 1
            toks.append(("name", src[i:j], i))
            i = j
            continue
        raise ParseError(f"unexpected character {c!r}", i)
    toks.append(("end", "", n))
    return toks


class _Parser:
    def __init__(self, src):
        self.src = src
        self.toks = _tokenize(src)
        self.i = 0

    def peek(self):
        return self.toks[self.i]

    def next(self):
        t = self.toks[self.i]
        self.i += 1
        return t

    def expect_op(self, op):
        kind, text, pos = self.peek()
        if kind == "op" and text == op:
            return self.next()
        raise ParseError(f"got {text!r}" if text else "unexpected end of input",
                         pos, expected=(repr(op),))

    def parse(self):
        e = self.expr()
        kind, text, pos = self.peek()
        if kind != "end":
            raise ParseError(f"trailing input {text!r}", pos,
                             expected=("operator", "end of input"))
        return e

    def expr(self):
        left = self.term()
        while True:
            kind, text, pos = self.peek()
            if kind == "op" and text in "+-":
                self.next()
                right = self.term()
                left = BinOp(pos, text, left, right)
            else:
                return left

    def term(self):
        left = self.factor()
        while True:
            kind, text, pos = self.peek()
            if kind == "op" and text in "*/":
                self.next()
                right = self.factor()
                left = BinOp(pos, text, left, right)
            else:
                return left

    def factor(self):
        base = self.unary()
        kind, text, pos = self.peek()
        if kind == "op" and text == "^":
            self.next()
            exponent = self.factor()   # right associative
            return BinOp(pos, "^", base, exponent)
        return base

    def unary(self):
        kind, text, pos = self.peek()
        if kind == "op" and text == "-":
            self.next()
            return Unary(pos, "-", self.unary())
        return self.atom()

    def atom(self):
        kind, text, pos = self.next()
        if kind == "num":
            return Num(pos, float(text))
        if kind == "name":
            if text in ("x1", "x2", "x3"):
                return Var(pos, int(text[1]))
            if text in _FUNCS:
                self.expect_op("(")
                arg = self.expr()
                self.expect_op(")")
                return Call(pos, text, arg)
            raise ParseError(f"unknown name {text!r}", pos,
                             expected=("x1", "x2", "x3", *_FUNCS))
        if kind == "op" and text == "(":
            e = self.expr()
            self.expect_op(")")
            return e
        raise ParseError(f"got {text!r}" if text else "unexpected end of input",
                         pos, expected=("number", "variable", "function", "'('"))


def parse(src: str) -> FieldExpr:
    return _Parser(src).parse()


def evaluate(e: FieldExpr, point):
    """Evaluate at a point (x1, x2, x3); accepts scalars or numpy arrays.

    Division by zero and sqrt of a negative are evaluation errors carrying
    the source offset of the offending operator.
    """
    x1, x2, x3 = point
    if isinstance(e, Num):
        return e.value if np.isscalar(x1) else np.full(np.shape(x1), e.value)
    if isinstance(e, Var):
        return (x1, x2, x3)[e.index - 1]
    if isinstance(e, Unary):
        return -evaluate(e.arg, point)
    if isinstance(e, Call):
        v = evaluate(e.arg, point)
        if e.func == "sqrt" and np.any(np.asarray(v) < 0):
            raise EvalError("sqrt of a negative value", e.pos)
        return _FUNCS[e.func](v)
    if isinstance(e, BinOp):
        a = evaluate(e.left, point)
        bb = evaluate(e.right, point)
        if e.op == "+":
            return a + bb
        if e.op == "-":
            return a - bb
        if e.op == "*":
            return a * bb
        if e.op == "/":
            if np.any(np.asarray(bb) == 0):
                raise EvalError("division by zero", e.pos)
            return a / bb
        if e.op == "^":
            with np.errstate(invalid="raise", divide="raise"):
                try:
                    return a ** bb
                except FloatingPointError:
                    raise EvalError("invalid power", e.pos) from None
    raise TypeError(f"not a FieldExpr node: {e!r}")


def to_source(e: FieldExpr) -> str:
    """Fully parenthesized source whose parse evaluates identically."""
    if isinstance(e, Num):
        return repr(e.value)
    if isinstance(e, Var):
        return f"x{e.index}"
    if isinstance(e, Unary):
        return f"(-{to_source(e.arg)})"
    if isinstance(e, Call):
        return f"{e.func}({to_source(e.arg)})"
    if isinstance(e, BinOp):
        return f"({to_source(e.left)}{e.op}{to_source(e.right)})"
    raise TypeError(f"not a FieldExpr node: {e!r}")


def as_callable(src: str):
    """Parse once and return f(x1, x2, x3) for grid sampling."""
    e = parse(src)
    return lambda x1, x2, x3: evaluate(e, (x1, x2, x3))
