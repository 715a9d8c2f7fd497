from __future__ import annotations

from fractions import Fraction
from functools import lru_cache

from .nodes import (
    Const,
    Expression,
    Func,
    Power,
    Product,
    Quotient,
    Sum,
    Var,
    variables,
)
from .simplify import simplify

_ZERO = Const(0)
_ONE = Const(1)


def _add(terms):
    terms = [t for t in terms if t != _ZERO]
    if not terms:
        return _ZERO
    return terms[0] if len(terms) == 1 else Sum(tuple(terms))


def _mul(factors):
    if any(f == _ZERO for f in factors):
        return _ZERO
    factors = [f for f in factors if f != _ONE]
    if not factors:
        return _ONE
    return factors[0] if len(factors) == 1 else Product(tuple(factors))


def _func_derivative(name: str, a: Expression) -> Expression:
    """d/da of name(a), as an expression in a."""
    if name == "sin":
        return Func("cos", a)
    if name == "cos":
        return Product((Const(-1), Func("sin", a)))
    if name == "exp":
        return Func("exp", a)
    if name == "log":
        return Power(a, -1)
    if name == "sqrt":
        return Product((Const(Fraction(1, 2)), Power(Func("sqrt", a), -1)))
    if name == "tanh":
        return Sum((_ONE, Product((Const(-1), Power(Func("tanh", a), 2)))))
    raise ValueError(name)


def _d(e: Expression, v: Var) -> Expression:
    if isinstance(e, Const):
        return _ZERO
    if isinstance(e, Var):
        return _ONE if e == v else _ZERO
    if v not in variables(e):
        return _ZERO
    if isinstance(e, Sum):
        return _add([_d(t, v) for t in e.terms])
    if isinstance(e, Product):
        terms = []
        for k, f in enumerate(e.factors):
            df = _d(f, v)
            if df != _ZERO:
                terms.append(_mul(list(e.factors[:k]) + [df] + list(e.factors[k + 1:])))
        return _add(terms)
    if isinstance(e, Power):
        n = e.exponent
        db = _d(e.base, v)
        if n == 0:
            return _ZERO
        return _mul([Const(n), _ONE if n == 1 else Power(e.base, n - 1), db])
    if isinstance(e, Quotient):
        dn = _d(e.num, v)
        dd = _d(e.den, v)
        first = _mul([dn, Power(e.den, -1)])
        second = _mul([Const(-1), e.num, dd, Power(e.den, -2)])
        return _add([first, second])
    if isinstance(e, Func):
        return _mul([_func_derivative(e.name, e.arg), _d(e.arg, v)])
    raise TypeError(e)


@lru_cache(maxsize=50_000)
def differentiate(e: Expression, v: Var) -> Expression:
    """Exact partial derivative of ``e`` with respect to ``v``, simplified.

    Hessian slots are symmetric, so ``W(1, 2)`` and ``W(2, 1)`` name the same
    variable.
    """
    if not isinstance(v, Var):
        raise TypeError("differentiate with respect to a single variable")
    return simplify(_d(e, v))


def gradient(e: Expression, vs) -> list:
    return [differentiate(e, v) for v in vs]
