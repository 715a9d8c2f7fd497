"""Expression tree for the variational variables.

Variables come in five kinds: spatial coordinates ``x_i``, the field value
``u``, gradient slots ``z_i``, Hessian slots ``w_ij`` (symmetric) and named
parameters.  Nodes are immutable and hashable, so they can be used as dict
keys and shared freely.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from numbers import Number
from typing import Union

FUNCTIONS = ("sin", "cos", "exp", "log", "sqrt", "tanh")

# ordering of variable kinds in canonical forms
_KIND_ORDER = {"x": 0, "u": 1, "z": 2, "w": 3, "p": 4}


def as_number(value) -> Union[Fraction, float]:
    """Coerce to the constant representation: exact when possible."""
    if isinstance(value, Fraction):
        return value
    if isinstance(value, bool):
        return Fraction(int(value))
    if isinstance(value, int):
        return Fraction(value)
    if isinstance(value, float):
        return value
    if isinstance(value, Number):
        return float(value)
    raise TypeError(f"not a number: {value!r}")


class Expression:
    """Base class.  Arithmetic operators build raw (unsimplified) trees."""

    __slots__ = ()

    def __add__(self, other):
        return Sum((self, wrap(other)))

    def __radd__(self, other):
        return Sum((wrap(other), self))

    def __sub__(self, other):
        return Sum((self, -wrap(other)))

    def __rsub__(self, other):
        return Sum((wrap(other), -self))

    def __mul__(self, other):
        return Product((self, wrap(other)))

    def __rmul__(self, other):
        return Product((wrap(other), self))

    def __truediv__(self, other):
        return Quotient(self, wrap(other))

    def __rtruediv__(self, other):
        return Quotient(wrap(other), self)

    def __neg__(self):
        return Product((Const(-1), self))

    def __pow__(self, n):
        if isinstance(n, Const) and isinstance(n.value, Fraction) and n.value.denominator == 1:
            n = int(n.value)
        if not isinstance(n, int) or isinstance(n, bool):
            raise TypeError("only integer exponents are supported; use exp/log or sqrt")
        return Power(self, n)

    def __str__(self):
        from .printer import to_string

        return to_string(self)

    def children(self) -> tuple:
        return ()


@dataclass(frozen=True, eq=True, repr=False)
class Const(Expression):
    value: Union[Fraction, float]

    def __post_init__(self):
        object.__setattr__(self, "value", as_number(self.value))

    def __repr__(self):
        return f"Const({self.value})"

    @property
    def is_exact(self) -> bool:
        return isinstance(self.value, Fraction)


@dataclass(frozen=True, eq=True, repr=False)
class Var(Expression):
    """A variable.  ``kind`` is one of x, u, z, w, p; ``key`` its index tuple
    (``(i,)`` for x/z, ``(i, j)`` with i <= j for w, ``(name,)`` for p)."""

    kind: str
    key: tuple = ()

    def __post_init__(self):
        if self.kind not in _KIND_ORDER:
            raise ValueError(f"unknown variable kind {self.kind!r}")
        if self.kind == "w":
            i, j = self.key
            object.__setattr__(self, "key", (min(i, j), max(i, j)))

    def __repr__(self):
        return f"Var({self.name})"

    @property
    def name(self) -> str:
        if self.kind == "u":
            return "u"
        if self.kind == "p":
            return self.key[0]
        return self.kind + "".join(str(k) for k in self.key)

    @property
    def index(self):
        return self.key[0] if self.kind in ("x", "z") else None

    def sort_key(self):
        return (_KIND_ORDER[self.kind], tuple(str(k).rjust(8) for k in self.key))


@dataclass(frozen=True, eq=True, repr=False)
class Sum(Expression):
    terms: tuple

    def __post_init__(self):
        if not self.terms:
            raise ValueError("Sum needs at least one term")
        object.__setattr__(self, "terms", tuple(self.terms))

    def __repr__(self):
        return f"Sum{self.terms!r}"

    def children(self):
        return self.terms


@dataclass(frozen=True, eq=True, repr=False)
class Product(Expression):
    factors: tuple

    def __post_init__(self):
        if not self.factors:
            raise ValueError("Product needs at least one factor")
        object.__setattr__(self, "factors", tuple(self.factors))

    def __repr__(self):
        return f"Product{self.factors!r}"

    def children(self):
        return self.factors


@dataclass(frozen=True, eq=True, repr=False)
class Power(Expression):
    base: Expression
    exponent: int

    def __post_init__(self):
        if not isinstance(self.exponent, int) or isinstance(self.exponent, bool):
            raise TypeError("Power exponent must be an integer")

    def __repr__(self):
        return f"Power({self.base!r}, {self.exponent})"

    def children(self):
        return (self.base,)


@dataclass(frozen=True, eq=True, repr=False)
class Quotient(Expression):
    num: Expression
    den: Expression

    def __repr__(self):
        return f"Quotient({self.num!r}, {self.den!r})"

    def children(self):
        return (self.num, self.den)


@dataclass(frozen=True, eq=True, repr=False)
class Func(Expression):
    name: str
    arg: Expression

    def __post_init__(self):
        if self.name not in FUNCTIONS:
            raise ValueError(f"unknown function {self.name!r}")

    def __repr__(self):
        return f"{self.name}({self.arg!r})"

    def children(self):
        return (self.arg,)


def wrap(value) -> Expression:
    if isinstance(value, Expression):
        return value
    return Const(value)


# -- variable constructors ---------------------------------------------------

def X(i: int) -> Var:
    return Var("x", (i,))


def Z(i: int) -> Var:
    return Var("z", (i,))


def W(i: int, j: int) -> Var:
    return Var("w", (i, j))


def Param(name: str) -> Var:
    return Var("p", (name,))


U = Var("u")
ZERO = Const(0)
ONE = Const(1)


def sin(e):
    return Func("sin", wrap(e))


def cos(e):
    return Func("cos", wrap(e))


def exp(e):
    return Func("exp", wrap(e))


def log(e):
    return Func("log", wrap(e))


def sqrt(e):
    return Func("sqrt", wrap(e))


def tanh(e):
    return Func("tanh", wrap(e))


def variables(e: Expression) -> frozenset:
    """All variables occurring in ``e``."""
    found = set()
    stack = [e]
    while stack:
        node = stack.pop()
        if isinstance(node, Var):
            found.add(node)
        else:
            stack.extend(node.children())
    return frozenset(found)


def contains(e: Expression, v: Var) -> bool:
    return v in variables(e)


def substitute(e: Expression, mapping: dict) -> Expression:
    """Replace variables by expressions (or numbers).  Result is not simplified."""
    mapping = {k: wrap(v) for k, v in mapping.items()}

    def go(node):
        if isinstance(node, Var):
            return mapping.get(node, node)
        if isinstance(node, Const):
            return node
        if isinstance(node, Sum):
            return Sum(tuple(go(t) for t in node.terms))
        if isinstance(node, Product):
            return Product(tuple(go(f) for f in node.factors))
        if isinstance(node, Power):
            return Power(go(node.base), node.exponent)
        if isinstance(node, Quotient):
            return Quotient(go(node.num), go(node.den))
        if isinstance(node, Func):
            return Func(node.name, go(node.arg))
        raise TypeError(node)

    return go(e)
