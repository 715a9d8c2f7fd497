"""Recursive-descent parser for the expression text grammar::

    expr   := term (("+" | "-") term)*
    term   := factor (("*" | "/") factor)*
    factor := "-" factor | power
    power  := base ("^" integer)?
    base   := number | ident | fn "(" expr ")" | "(" expr ")"
    ident  := "u" | "x"digit+ | "z"digit+ | "w"digit digit | name

``^`` binds tighter than unary minus, so ``-u^2`` is ``-(u^2)``.  Numbers
are read exactly (``0.5`` becomes 1/2).
"""

from __future__ import annotations

import math
import re
from fractions import Fraction

from .nodes import FUNCTIONS, Const, Expression, Func, Param, Power, Product, Quotient, Sum, U, W, X, Z

_TOKEN = re.compile(
    r"\s*(?:(?P<num>(?:\d+\.?\d*|\.\d+)(?:[eE][+-]?\d+)?)|(?P<name>[A-Za-z_][A-Za-z_0-9]*)|(?P<op>[-+*/^()]))"
)


class ParseError(ValueError):
    def __init__(self, message, text, pos, line=1):
        self.text = text
        self.pos = pos
        self.line = line
        self.column = pos + 1
        super().__init__(f"line {line}, column {self.column}: {message}")


def _ident(name: str) -> Expression:
    if name == "u":
        return U
    if name == "pi":
        return Const(math.pi)
    m = re.fullmatch(r"([xz])(\d+)", name)
    if m:
        i = int(m.group(2))
        if i < 1:
            raise ValueError(f"index must be >= 1 in {name!r}")
        return X(i) if m.group(1) == "x" else Z(i)
    m = re.fullmatch(r"w(\d)(\d)", name)
    if m:
        return W(int(m.group(1)), int(m.group(2)))
    return Param(name)


class _Parser:
    def __init__(self, text: str, line: int):
        self.text = text
        self.line = line
        self.tokens = []
        pos = 0
        stripped = text.rstrip()
        while pos < len(stripped):
            m = _TOKEN.match(stripped, pos)
            if not m or m.end() == pos:
                self.fail("unexpected character", pos + len(stripped[pos:]) - len(stripped[pos:].lstrip()))
            kind = m.lastgroup
            start = m.start(kind)
            self.tokens.append((kind, m.group(kind), start))
            pos = m.end()
        self.k = 0

    def fail(self, message, pos=None):
        if pos is None:
            pos = self.tokens[self.k][2] if self.k < len(self.tokens) else len(self.text.rstrip())
        raise ParseError(message, self.text, pos, self.line)

    def peek(self):
        return self.tokens[self.k] if self.k < len(self.tokens) else (None, None, len(self.text))

    def take(self):
        tok = self.peek()
        self.k += 1
        return tok

    def expect(self, value):
        kind, tok, _ = self.peek()
        if tok != value:
            self.fail(f"expected {value!r}")
        self.k += 1

    def parse(self) -> Expression:
        if not self.tokens:
            self.fail("empty expression", 0)
        e = self.expr()
        if self.k != len(self.tokens):
            self.fail("unexpected token")
        return e

    def expr(self):
        terms = [self.term()]
        while self.peek()[1] in ("+", "-"):
            op = self.take()[1]
            t = self.term()
            terms.append(t if op == "+" else Product((Const(-1), t)))
        return terms[0] if len(terms) == 1 else Sum(tuple(terms))

    def term(self):
        e = self.factor()
        while self.peek()[1] in ("*", "/"):
            op = self.take()[1]
            f = self.factor()
            e = Product((e, f)) if op == "*" else Quotient(e, f)
        return e

    def factor(self):
        if self.peek()[1] == "-":
            self.take()
            return Product((Const(-1), self.factor()))
        if self.peek()[1] == "+":
            self.take()
            return self.factor()
        return self.power()

    def power(self):
        base = self.base()
        if self.peek()[1] == "^":
            self.take()
            return Power(base, self.integer())
        return base

    def integer(self):
        paren = False
        if self.peek()[1] == "(":
            self.take()
            paren = True
        sign = 1
        if self.peek()[1] in ("-", "+"):
            sign = -1 if self.take()[1] == "-" else 1
        kind, tok, pos = self.peek()
        if kind != "num" or not re.fullmatch(r"\d+", tok):
            self.fail("exponent must be an integer")
        self.take()
        if paren:
            self.expect(")")
        return sign * int(tok)

    def base(self):
        kind, tok, pos = self.peek()
        if kind == "num":
            self.take()
            return Const(Fraction(tok))
        if kind == "name":
            self.take()
            if tok in FUNCTIONS:
                self.expect("(")
                arg = self.expr()
                self.expect(")")
                return Func(tok, arg)
            if self.peek()[1] == "(":
                self.fail(f"unknown function {tok!r}", pos)
            try:
                return _ident(tok)
            except ValueError as err:
                self.fail(str(err), pos)
        if tok == "(":
            self.take()
            e = self.expr()
            self.expect(")")
            return e
        self.fail("expected a number, variable, function or '('")


def parse(text: str, line: int = 1) -> Expression:
    """Parse ``text`` into an (unsimplified) expression.  Raises ParseError."""
    return _Parser(text, line).parse()
