"""Small computer-algebra engine for Lagrangians in (x, u, z) and derived
operators in (x, u, z, w)."""

from .calculus import differentiate, gradient
from .evaluate import DomainError, UnboundVariable, binding, evaluate, evaluate_on
from .nodes import (
    FUNCTIONS,
    ONE,
    U,
    ZERO,
    Const,
    Expression,
    Func,
    Param,
    Power,
    Product,
    Quotient,
    Sum,
    Var,
    W,
    X,
    Z,
    contains,
    cos,
    exp,
    log,
    sin,
    sqrt,
    substitute,
    tanh,
    variables,
    wrap,
)
from .parser import ParseError, parse
from .printer import to_string
from .simplify import expand_in, is_structurally_zero, simplify, sort_key
from .zerotest import DEFAULT_SEED, UnableToDecide, ZeroTest, is_identically_zero

__all__ = [name for name in dir() if not name.startswith("_")]
