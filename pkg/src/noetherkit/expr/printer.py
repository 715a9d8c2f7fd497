"""Render expressions in the same text grammar the parser reads."""

from __future__ import annotations

import math
from fractions import Fraction

from .nodes import Const, Expression, Func, Power, Product, Quotient, Sum, Var

# binding strength: sum < product < unary minus < power < atom
_SUM, _PROD, _NEG, _POW, _ATOM = range(5)


def _const_str(value) -> str:
    if isinstance(value, Fraction):
        if value.denominator == 1:
            return str(value.numerator)
        return f"{value.numerator}/{value.denominator}"
    if value == math.pi:
        return "pi"
    return repr(float(value))


def _const_level(value) -> int:
    if isinstance(value, Fraction) and value.denominator != 1:
        return _PROD
    if value < 0:
        return _NEG
    return _ATOM


def _render(e: Expression):
    """Return (text, level)."""
    if isinstance(e, Const):
        return _const_str(e.value), _const_level(e.value)
    if isinstance(e, Var):
        return e.name, _ATOM
    if isinstance(e, Func):
        return f"{e.name}({_render(e.arg)[0]})", _ATOM
    if isinstance(e, Power):
        base, lvl = _render(e.base)
        if lvl < _ATOM:
            base = f"({base})"
        exp = str(e.exponent) if e.exponent >= 0 else f"({e.exponent})"
        return f"{base}^{exp}", _POW
    if isinstance(e, Quotient):
        num, ln = _render(e.num)
        den, ld = _render(e.den)
        if ln < _PROD:
            num = f"({num})"
        if ld <= _PROD:
            den = f"({den})"
        return f"{num}/{den}", _PROD
    if isinstance(e, Product):
        return _render_product(e)
    if isinstance(e, Sum):
        parts = []
        for k, t in enumerate(e.terms):
            text, lvl = _render(t)
            if k == 0:
                parts.append(text if lvl > _SUM else f"({text})")
            elif text.startswith("-") and lvl >= _PROD:
                parts.append(" - " + text[1:])
            else:
                parts.append(" + " + (text if lvl > _SUM else f"({text})"))
        return "".join(parts), _SUM
    raise TypeError(e)


def _flat_factors(e: Product) -> list:
    out = []
    for f in e.factors:
        if isinstance(f, Product):
            out.extend(_flat_factors(f))
        else:
            out.append(f)
    return out


def _render_product(e: Product):
    factors = _flat_factors(e)
    units = [f for f in factors if isinstance(f, Const) and f.value in (1, -1)]
    sign = "-" if sum(f.value == -1 for f in units) % 2 else ""
    factors = [f for f in factors if not (isinstance(f, Const) and f.value in (1, -1))] or [Const(1)]
    num, den = [], []
    for f in factors:
        if isinstance(f, Power) and f.exponent < 0:
            den.append(f.base if f.exponent == -1 else Power(f.base, -f.exponent))
        else:
            num.append(f)

    def join(items):
        if len(items) == 1:
            return _render(items[0])
        out = []
        for k, f in enumerate(items):
            text, lvl = _render(f)
            leading_const = k == 0 and isinstance(f, Const)
            out.append(f"({text})" if lvl <= _PROD and not leading_const else text)
        return "*".join(out), _PROD

    text, lvl = join(num) if num else ("1", _ATOM)
    if den:
        if lvl < _PROD or (lvl == _PROD and len(num) == 1):
            text = f"({text})"
        dtext, dlvl = join(den)
        if dlvl < _POW:
            dtext = f"({dtext})"
        text = f"{text}/{dtext}"
    elif lvl < _PROD:
        text = f"({text})"
    if sign:
        return "-" + text, _PROD
    return text, _PROD


def to_string(e: Expression) -> str:
    return _render(e)[0]
