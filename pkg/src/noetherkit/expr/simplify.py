"""Canonical simplification.

Every expression is brought to a sum of monomials ``c * a1^e1 * ... * ak^ek``
where the atoms are variables, elementary functions of simplified arguments,
or (for negative / very large powers) monic multi-term sums.  Sums and
products are expanded, so equal polynomials in the atoms get identical trees
and structural comparison is meaningful.

A few value-preserving rewrites keep transcendental forms canonical:

* ``exp(a) * exp(b) -> exp(a + b)``
* ``exp(c*log(b) + r) -> b^floor(c) * exp((c - floor(c))*log(b) + r)`` for
  rational ``c`` and single-term ``b``; a remaining ``exp(log(b)/2)`` becomes
  ``sqrt(b)``
* for a multi-term ``b``, powers ``b^k`` and ``sqrt(b)`` sharing a monomial
  with ``exp(c*log(b) + r)`` are folded into the exponent; only whole
  exponents leave the exponential
* ``log(exp(a)) -> a``, ``sqrt(b)^2 -> b``
"""

from __future__ import annotations

import math
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
)

# maximal number of terms produced when expanding a positive power of a sum
_EXPANSION_LIMIT = 400


def sort_key(e: Expression):
    if isinstance(e, Const):
        return (0, float(e.value), str(e.value))
    if isinstance(e, Var):
        return (1, e.sort_key())
    if isinstance(e, Func):
        return (2, e.name, sort_key(e.arg))
    if isinstance(e, Power):
        return (3, sort_key(e.base), e.exponent)
    if isinstance(e, Product):
        return (4, tuple(sort_key(f) for f in e.factors))
    if isinstance(e, Sum):
        return (5, tuple(sort_key(t) for t in e.terms))
    if isinstance(e, Quotient):
        return (6, sort_key(e.num), sort_key(e.den))
    raise TypeError(e)


def _mono_key(mono):
    return (len(mono), tuple((sort_key(a), n) for a, n in mono))


class Poly:
    """Mapping monomial -> coefficient.  A monomial is a sorted tuple of
    ``(atom, exponent)`` pairs; ``()`` is the constant monomial."""

    __slots__ = ("terms",)

    def __init__(self, terms=None):
        self.terms = {} if terms is None else terms

    @classmethod
    def const(cls, c):
        return cls({(): c}) if c != 0 else cls()

    @classmethod
    def atom(cls, a, n=1):
        return cls({((a, n),): Fraction(1)})

    def is_zero(self):
        return not self.terms

    def constant_value(self):
        """The value if the polynomial is constant, else None."""
        if not self.terms:
            return Fraction(0)
        if len(self.terms) == 1 and () in self.terms:
            return self.terms[()]
        return None

    def copy(self):
        return Poly(dict(self.terms))

    def add_term(self, mono, c):
        new = self.terms.get(mono, 0) + c
        if new == 0:
            self.terms.pop(mono, None)
        else:
            self.terms[mono] = new

    def __add__(self, other):
        out = self.copy()
        for m, c in other.terms.items():
            out.add_term(m, c)
        return out

    def scale(self, c):
        if c == 0:
            return Poly()
        return Poly({m: v * c for m, v in self.terms.items()})

    def __mul__(self, other):
        out = Poly()
        for m1, c1 in self.terms.items():
            for m2, c2 in other.terms.items():
                merged = dict(m1)
                for a, n in m2:
                    merged[a] = merged.get(a, 0) + n
                prod = _finalize_monomial(merged)
                c = c1 * c2
                for m, cm in prod.terms.items():
                    out.add_term(m, cm * c)
        return out

    def sorted_items(self):
        return sorted(self.terms.items(), key=lambda kv: _mono_key(kv[0]))

    def to_expr(self) -> Expression:
        if not self.terms:
            return Const(0)
        terms = [_mono_to_expr(m, c) for m, c in self.sorted_items()]
        return terms[0] if len(terms) == 1 else Sum(tuple(terms))


def _mono_to_expr(mono, c):
    factors = []
    if c != 1 or not mono:
        factors.append(Const(c))
    for a, n in mono:
        factors.append(a if n == 1 else Power(a, n))
    return factors[0] if len(factors) == 1 else Product(tuple(factors))


def _sorted_mono(d):
    return tuple(sorted(((a, n) for a, n in d.items() if n != 0), key=lambda an: sort_key(an[0])))


def _expansion_size(nterms, n):
    return math.comb(n + nterms - 1, nterms - 1)


def _log_base(mono):
    """If ``mono`` is the single atom log(b), return b."""
    if len(mono) == 1 and mono[0][1] == 1:
        a = mono[0][0]
        if isinstance(a, Func) and a.name == "log":
            return a.arg
    return None


def _finalize_monomial(d) -> Poly:
    """Apply the atom-level rewrites to a merged monomial."""
    d = {a: n for a, n in d.items() if n != 0}
    extra = Poly.const(Fraction(1))
    changed = False

    exps = [(a, n) for a, n in d.items() if isinstance(a, Func) and a.name == "exp"]
    if exps:
        arg = Poly()
        for a, n in exps:
            arg = arg + _norm(a.arg).scale(Fraction(n))
        # powers of a multi-term base b fold into exp(c*log(b))
        merged = False
        bases = {_log_base(m) for m in arg.terms} - {None}
        for a, n in list(d.items()):
            if isinstance(a, Sum) and a in bases:
                arg.add_term(((Func("log", a), 1),), Fraction(n))
                del d[a]
                merged = True
            elif isinstance(a, Func) and a.name == "sqrt" and isinstance(a.arg, Sum) and a.arg in bases:
                arg.add_term(((Func("log", a.arg), 1),), Fraction(n, 2))
                del d[a]
                merged = True
        if merged or len(exps) > 1 or exps[0][1] != 1:
            for a, _ in exps:
                del d[a]
            extra = extra * _make_exp(arg)
            changed = True

    for a, n in list(d.items()):
        if isinstance(a, Func) and a.name == "sqrt" and abs(n) >= 2:
            q, r = divmod(abs(n), 2)
            sign = 1 if n > 0 else -1
            del d[a]
            if r:
                d[a] = sign
            extra = extra * _norm_power(_norm(a.arg), sign * q)
            changed = True
        elif isinstance(a, Sum) and n > 0 and _expansion_size(len(a.terms), n) <= _EXPANSION_LIMIT:
            del d[a]
            extra = extra * _power(_norm(a), n)
            changed = True

    base = Poly({_sorted_mono(d): Fraction(1)}) if d else Poly.const(Fraction(1))
    if not changed:
        return base
    return base * extra if extra.constant_value() != 1 else base


def _power(p: Poly, n: int) -> Poly:
    out = Poly.const(Fraction(1))
    for _ in range(n):
        out = out * p
    return out


def _invert_coeff(c, n):
    if isinstance(c, Fraction):
        return c ** n
    return float(c) ** n


def _norm_power(p: Poly, n: int) -> Poly:
    if n == 0:
        return Poly.const(Fraction(1))
    if p.is_zero():
        if n < 0:
            # 0^-n has no value; keep it symbolic so evaluation raises
            return Poly.atom(Const(0), n)
        return Poly()
    if len(p.terms) == 1:
        (mono, c), = p.terms.items()
        d = {a: e * n for a, e in mono}
        return _finalize_monomial(d).scale(_invert_coeff(c, n))
    if n > 0 and _expansion_size(len(p.terms), n) <= _EXPANSION_LIMIT:
        return _power(p, n)
    # keep as an atom: factor out the leading coefficient to make it monic
    items = p.sorted_items()
    lead = items[0][1]
    monic = Poly({m: c / lead for m, c in items})
    return _finalize_monomial({monic.to_expr(): n}).scale(_invert_coeff(lead, n))


def _make_exp(arg: Poly) -> Poly:
    if arg.is_zero():
        return Poly.const(Fraction(1))
    out = Poly.const(Fraction(1))
    rest = Poly()
    for mono, c in arg.terms.items():
        b = _log_base(mono)
        if b is None or not isinstance(c, Fraction):
            rest.add_term(mono, c)
            continue
        inner = _norm(b)
        if len(inner.terms) > 1:
            # multi-term base: only whole powers leave the exponential
            if c.denominator == 1:
                out = out * _norm_power(inner, int(c))
            else:
                rest.add_term(mono, c)
            continue
        whole = math.floor(c)
        frac = c - whole
        if whole:
            out = out * _norm_power(inner, whole)
        if frac == Fraction(1, 2):
            out = out * Poly.atom(Func("sqrt", b))
        elif frac:
            rest.add_term(mono, frac)
    if not rest.is_zero():
        out = out * Poly({((Func("exp", rest.to_expr()), 1),): Fraction(1)})
    return out


_EXACT_FOLDS = {
    ("sin", Fraction(0)): Fraction(0),
    ("cos", Fraction(0)): Fraction(1),
    ("exp", Fraction(0)): Fraction(1),
    ("log", Fraction(1)): Fraction(0),
    ("tanh", Fraction(0)): Fraction(0),
    ("sqrt", Fraction(0)): Fraction(0),
}


def _exact_sqrt(q: Fraction):
    if q < 0:
        return None
    n, d = math.isqrt(q.numerator), math.isqrt(q.denominator)
    if n * n == q.numerator and d * d == q.denominator:
        return Fraction(n, d)
    return None


def _norm_func(e: Func) -> Poly:
    arg = _norm(e.arg)
    value = arg.constant_value()
    if value is not None:
        if isinstance(value, Fraction):
            if (e.name, value) in _EXACT_FOLDS:
                return Poly.const(_EXACT_FOLDS[(e.name, value)])
            if e.name == "sqrt":
                root = _exact_sqrt(value)
                if root is not None:
                    return Poly.const(root)
        else:
            try:
                return Poly.const(float(getattr(math, e.name)(value)))
            except (ValueError, OverflowError):
                pass
    if e.name == "exp":
        return _make_exp(arg)
    if e.name == "log" and len(arg.terms) == 1:
        (mono, c), = arg.terms.items()
        if c == 1 and len(mono) == 1 and mono[0][1] == 1:
            a = mono[0][0]
            if isinstance(a, Func) and a.name == "exp":
                return _norm(a.arg)
    return Poly.atom(Func(e.name, arg.to_expr()))


@lru_cache(maxsize=200_000)
def _norm_cached(e: Expression):
    return tuple(_norm_uncached(e).terms.items())


def _norm(e: Expression) -> Poly:
    return Poly(dict(_norm_cached(e)))


def _norm_uncached(e: Expression) -> Poly:
    if isinstance(e, Const):
        return Poly.const(e.value)
    if isinstance(e, Var):
        return Poly.atom(e)
    if isinstance(e, Sum):
        out = Poly()
        for t in e.terms:
            for m, c in _norm(t).terms.items():
                out.add_term(m, c)
        return out
    if isinstance(e, Product):
        out = Poly.const(Fraction(1))
        for f in e.factors:
            out = out * _norm(f)
            if out.is_zero():
                break
        return out
    if isinstance(e, Power):
        return _norm_power(_norm(e.base), e.exponent)
    if isinstance(e, Quotient):
        num = _norm(e.num)
        if num.is_zero():
            den = _norm(e.den)
            # 0/0 stays symbolic so that evaluation can report it
            if den.is_zero():
                return Poly.atom(Const(0), -1) * num
            return Poly()
        return num * _norm_power(_norm(e.den), -1)
    if isinstance(e, Func):
        return _norm_func(e)
    raise TypeError(f"cannot simplify {e!r}")


def simplify(e: Expression) -> Expression:
    """Canonical, value-preserving form of ``e``."""
    return _norm(e).to_expr()


def is_structurally_zero(e: Expression) -> bool:
    return _norm(e).is_zero()


def expand_in(e: Expression, var: Var) -> dict:
    """Split ``simplify(e)`` into powers of ``var``: {power: coefficient expr}.

    Atoms that merely contain ``var`` (e.g. ``sin(var)``) are left in the
    coefficients; callers should check for that when it matters.
    """
    out = {}
    for mono, c in _norm(e).terms.items():
        k = 0
        rest = []
        for a, n in mono:
            if a == var:
                k = n
            else:
                rest.append((a, n))
        out.setdefault(k, Poly()).add_term(tuple(rest), c)
    return {k: p.to_expr() for k, p in out.items()}
