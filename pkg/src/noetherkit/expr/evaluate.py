"""Numeric evaluation of expression trees.

Bindings map :class:`Var` to numbers or numpy arrays; with arrays the
evaluation is elementwise and broadcasting follows numpy rules.
"""

from __future__ import annotations

import math

import numpy as np

from .nodes import Const, Expression, Func, Power, Product, Quotient, Sum, Var, U, X, Z, W, Param


class DomainError(ArithmeticError):
    """Evaluation hit a singularity (log of non-positive, division by zero...).

    ``index`` is the flat position of the first offending entry when the
    evaluation was over arrays, else None.
    """

    def __init__(self, message, index=None):
        super().__init__(message)
        self.index = index


class UnboundVariable(KeyError):
    pass


def binding(x=(), u=None, z=(), w=None, **params) -> dict:
    """Build a binding from conventional arguments.

    ``x`` and ``z`` are sequences (1-based in the variable names), ``w`` a
    mapping ``(i, j) -> value``.
    """
    out = {}
    for i, v in enumerate(x, start=1):
        out[X(i)] = v
    if u is not None:
        out[U] = u
    for i, v in enumerate(z, start=1):
        out[Z(i)] = v
    for (i, j), v in (w or {}).items():
        out[W(i, j)] = v
    for name, v in params.items():
        out[Param(name)] = v
    return out


def _first_bad(mask):
    if np.ndim(mask) == 0:
        return None
    return int(np.flatnonzero(np.ravel(mask))[0])


def _check(bad, message):
    if np.any(bad):
        raise DomainError(message, _first_bad(bad))


def _is_array(v):
    return isinstance(v, np.ndarray)


def _evaluate(e: Expression, b: dict):
    if isinstance(e, Const):
        return float(e.value)
    if isinstance(e, Var):
        try:
            return b[e]
        except KeyError:
            raise UnboundVariable(e.name) from None
    if isinstance(e, Sum):
        total = _evaluate(e.terms[0], b)
        for t in e.terms[1:]:
            total = total + _evaluate(t, b)
        return total
    if isinstance(e, Product):
        total = _evaluate(e.factors[0], b)
        for f in e.factors[1:]:
            total = total * _evaluate(f, b)
        return total
    if isinstance(e, Power):
        base = _evaluate(e.base, b)
        n = e.exponent
        if n < 0:
            _check(np.equal(base, 0), "zero raised to a negative power")
            return 1.0 / (base ** (-n)) if not _is_array(base) else np.reciprocal(np.power(base, -n, dtype=float))
        return base ** n
    if isinstance(e, Quotient):
        num = _evaluate(e.num, b)
        den = _evaluate(e.den, b)
        _check(np.equal(den, 0), "division by zero")
        return num / den
    if isinstance(e, Func):
        a = _evaluate(e.arg, b)
        if e.name == "log":
            _check(np.less_equal(a, 0), "log of a non-positive number")
        elif e.name == "sqrt":
            _check(np.less(a, 0), "sqrt of a negative number")
        if _is_array(a):
            return getattr(np, e.name)(a)
        try:
            return getattr(math, e.name)(a)
        except OverflowError:
            return math.inf
    raise TypeError(e)


def evaluate(e: Expression, b: dict):
    """Value of ``e`` at binding ``b`` (float, or array for array bindings).

    Raises DomainError at singularities and UnboundVariable when ``b`` lacks
    a variable of ``e``.
    """
    with np.errstate(over="ignore"):
        return _evaluate(e, b)


def evaluate_on(e: Expression, b: dict, shape) -> np.ndarray:
    """Like :func:`evaluate` but always returns an array of ``shape``
    (constants and lower-rank results are broadcast)."""
    value = evaluate(e, b)
    return np.broadcast_to(np.asarray(value, dtype=float), shape).copy()
