"""Inner and admissible variations of J(u) = integral of L(x, u, Du).

The field ``u`` is given symbolically as an expression in ``x1, x2`` so that
``u`` and its derivatives can be evaluated exactly at displaced points.
Integrals are taken with the trapezoidal rule on a uniform grid over the
support rectangle of the variation; the integrands vanish outside it.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction

import numpy as np

from .expr import (
    Const,
    Expression,
    U,
    X,
    Z,
    differentiate,
    evaluate_on,
    exp,
    simplify,
    variables,
)
from .fields import Grid, integrate
from .lagrangian import Lagrangian


class SupportTouchesBoundary(ValueError):
    pass


class StepTooLarge(ValueError):
    pass


def _x_only(e: Expression, what: str):
    for v in variables(e):
        if v.kind not in ("x", "p"):
            raise ValueError(f"{what} may only depend on x1, x2 and parameters, found {v.name}")


@dataclass(frozen=True)
class CompactFunction:
    """A smooth function of (x1, x2) that vanishes outside ``support``.

    ``expr`` is only trusted strictly inside the support rectangle; on and
    outside its edges the function and its derivatives are taken as zero.
    """

    expr: Expression
    support: tuple  # (a1, b1, a2, b2)

    def gradient(self):
        return [differentiate(self.expr, X(j)) for j in (1, 2)]

    def inside(self, x1, x2):
        a1, b1, a2, b2 = self.support
        return (x1 > a1) & (x1 < b1) & (x2 > a2) & (x2 < b2)

    def _masked(self, e, x1, x2, params):
        out = np.zeros(np.shape(x1))
        m = self.inside(x1, x2)
        if m.any():
            out[m] = evaluate_on(e, {X(1): x1[m], X(2): x2[m], **(params or {})}, (int(m.sum()),))
        return out

    def values(self, x1, x2, params=None):
        return self._masked(self.expr, x1, x2, params)

    def gradient_values(self, x1, x2, params=None):
        return [self._masked(g, x1, x2, params) for g in self.gradient()]


@dataclass(frozen=True)
class VariationDirection:
    """Compactly supported vector field h = (h1, h2)."""

    components: tuple  # of Expressions, valid inside the support
    support: tuple

    def __post_init__(self):
        for c in self.components:
            _x_only(c, "a variation direction")

    @property
    def parts(self):
        return [CompactFunction(c, self.support) for c in self.components]

    def values(self, x1, x2):
        return [p.values(x1, x2) for p in self.parts]

    def jacobian(self, x1, x2):
        """``Dh[i][j] = d h_i / d x_j``."""
        return [p.gradient_values(x1, x2) for p in self.parts]

    def quadrature_grid(self, n: int = 129) -> Grid:
        a1, b1, a2, b2 = self.support
        return Grid(n, n, a1, b1, a2, b2)

    def max_row_sum(self, n: int = 129) -> float:
        """max over the support of max_i sum_j |h_{i,j}|."""
        x1, x2 = self.quadrature_grid(n).coords()
        dh = self.jacobian(x1, x2)
        rows = [np.abs(dh[i][0]) + np.abs(dh[i][1]) for i in range(2)]
        return float(max(r.max() for r in rows))

    def edge_values(self, n: int = 129, inset: float = 1e-9) -> float:
        """Largest |h| or |Dh| on the support edges, approached from inside."""
        a1, b1, a2, b2 = self.support
        d1, d2 = inset * (b1 - a1), inset * (b2 - a2)
        t1 = np.linspace(a1 + d1, b1 - d1, n)
        t2 = np.linspace(a2 + d2, b2 - d2, n)
        x1 = np.concatenate([t1, t1, np.full(n, a1 + d1), np.full(n, b1 - d1)])
        x2 = np.concatenate([np.full(n, a2 + d2), np.full(n, b2 - d2), t2, t2])
        worst = 0.0
        for c in self.components:
            for e in (c, differentiate(c, X(1)), differentiate(c, X(2))):
                worst = max(worst, float(np.max(np.abs(evaluate_on(e, {X(1): x1, X(2): x2}, x1.shape)))))
        return worst


def _exact(v):
    return Fraction(repr(float(v))) if not isinstance(v, (int, Fraction)) else Fraction(v)


def make_bump(support, amplitude=(1.0, 0.0), domain=(0.0, 1.0, 0.0, 1.0)) -> VariationDirection:
    """``h_i = amplitude_i * B(s1) B(s2)`` with ``B(s) = exp(1 - 1/(1 - s^2))``
    and ``s`` the affine map of the support onto [-1, 1]^2."""
    a1, b1, a2, b2 = support
    d1, e1, d2, e2 = domain
    if not (d1 < a1 < b1 < e1 and d2 < a2 < b2 < e2):
        raise SupportTouchesBoundary(f"support {support} is not strictly inside {domain}")
    a1, b1, a2, b2 = (_exact(v) for v in support)
    s1 = (2 * X(1) - (a1 + b1)) / (b1 - a1)
    s2 = (2 * X(2) - (a2 + b2)) / (b2 - a2)
    bump = exp(2 - 1 / (1 - s1**2) - 1 / (1 - s2**2))
    comps = tuple(simplify(_exact(amp) * bump) if amp else Const(0) for amp in amplitude)
    return VariationDirection(comps, tuple(float(v) for v in support))


@dataclass(frozen=True)
class DiffeoFamily:
    """xi^t(x) = x + t h(x)."""

    h: VariationDirection
    t: float

    def is_diffeomorphism(self, n: int = 129) -> bool:
        return abs(self.t) * self.h.max_row_sum(n) <= 0.5

    def __call__(self, x1, x2):
        h1, h2 = self.h.values(x1, x2)
        return x1 + self.t * h1, x2 + self.t * h2


class _FieldData:
    """u and its derivatives as callables on coordinate arrays."""

    def __init__(self, u: Expression, params):
        _x_only(u, "the field u")
        self.u = u
        self.du = [differentiate(u, X(j)) for j in (1, 2)]
        self.params = params

    def at(self, x1, x2):
        b = {X(1): x1, X(2): x2, **self.params}
        shape = np.shape(x1)
        return evaluate_on(self.u, b, shape), [evaluate_on(d, b, shape) for d in self.du]


def _lagrangian_parts(L: Lagrangian, x1, x2, u, du, parts):
    b = {X(1): x1, X(2): x2, U: u, Z(1): du[0], Z(2): du[1], **L.param_binding()}
    shape = np.shape(x1)
    return [evaluate_on(e, b, shape) for e in parts]


def _check(L: Lagrangian):
    if L.dim != 2:
        raise ValueError("variations are computed in two dimensions")


def inner_variation_formula(L: Lagrangian, u: Expression, h: VariationDirection, n: int = 129) -> float:
    """integral of ``u_i L_{z_j} h_{i,j} - L div h - L_{x_i} h_i``."""
    _check(L)
    grid = h.quadrature_grid(n)
    x1, x2 = grid.coords()
    fd = _FieldData(u, L.param_binding())
    uu, du = fd.at(x1, x2)
    Lv, Lz1, Lz2, Lx1, Lx2 = _lagrangian_parts(
        L, x1, x2, uu, du, [L.body, L.d(Z(1)), L.d(Z(2)), L.d(X(1)), L.d(X(2))]
    )
    hv = h.values(x1, x2)
    dh = h.jacobian(x1, x2)
    Lz = (Lz1, Lz2)
    integrand = -Lv * (dh[0][0] + dh[1][1]) - Lx1 * hv[0] - Lx2 * hv[1]
    for i in range(2):
        for j in range(2):
            integrand = integrand + du[i] * Lz[j] * dh[i][j]
    return integrate((grid, integrand))


def inner_variation_direct(
    L: Lagrangian, u: Expression, h: VariationDirection, n: int = 129, t_step: float = 1e-3
) -> float:
    """Central difference of t -> J(u o xi^t) at t = 0.

    ``D(u o xi^t) = (Dxi^t)^T Du(xi^t)`` is applied exactly; the integrand
    difference is formed pointwise before quadrature.
    """
    _check(L)
    if t_step <= 0:
        raise ValueError("t_step must be positive")
    slope = h.max_row_sum(n)
    bound = 1.0 / (2.0 * slope) if slope > 0 else np.inf
    if t_step > bound:
        raise StepTooLarge(f"t_step {t_step} exceeds the diffeomorphism bound {bound:.3g}")
    grid = h.quadrature_grid(n)
    x1, x2 = grid.coords()
    fd = _FieldData(u, L.param_binding())
    hv = h.values(x1, x2)
    dh = h.jacobian(x1, x2)

    def density(t):
        y1, y2 = x1 + t * hv[0], x2 + t * hv[1]
        uy, duy = fd.at(y1, y2)
        grad = [duy[j] + t * (duy[0] * dh[0][j] + duy[1] * dh[1][j]) for j in range(2)]
        return _lagrangian_parts(L, x1, x2, uy, grad, [L.body])[0]

    diff = (density(t_step) - density(-t_step)) / (2 * t_step)
    return integrate((grid, diff))


def first_variation(L: Lagrangian, u: Expression, v: CompactFunction, n: int = 129) -> float:
    """integral of ``L_u v + L_{z_j} v_{,j}`` over the support of ``v``."""
    _check(L)
    a1, b1, a2, b2 = v.support
    grid = Grid(n, n, a1, b1, a2, b2)
    x1, x2 = grid.coords()
    fd = _FieldData(u, L.param_binding())
    uu, du = fd.at(x1, x2)
    Lu, Lz1, Lz2 = _lagrangian_parts(L, x1, x2, uu, du, [L.d(U), L.d(Z(1)), L.d(Z(2))])
    params = L.param_binding()
    vv = v.values(x1, x2, params)
    dv = v.gradient_values(x1, x2, params)
    return integrate((grid, Lu * vv + Lz1 * dv[0] + Lz2 * dv[1]))


def admissible_from_inner(u: Expression, h: VariationDirection) -> CompactFunction:
    """The admissible variation ``w = Du . h`` generated by an inner one."""
    _x_only(u, "the field u")
    w = sum((differentiate(u, X(i + 1)) * c for i, c in enumerate(h.components)), Const(0))
    return CompactFunction(simplify(w), h.support)
