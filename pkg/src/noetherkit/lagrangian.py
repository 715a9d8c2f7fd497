"""Symbolic derivations from a scalar Lagrangian L(x, u, z).

Sign conventions used throughout:

* Euler-Lagrange residual ``EL = L_u - d/dx_j L_{z_j}`` (so for
  ``L = |z|^2/2 + F(u)`` the equation reads ``F'(u) - Laplace(u) = 0``);
* Noether component ``N_i = d/dx_j T_ij + L_{x_i}`` with
  ``T_ij = z_i L_{z_j} - delta_ij L``.

With these, ``N_i + EL * z_i`` vanishes identically for every Lagrangian.
Total derivatives are expanded by the chain rule,
``d/dx_j e = e_{x_j} + e_u z_j + e_{z_k} w_{kj}``.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from pathlib import Path

from .expr import (
    Const,
    Expression,
    ParseError,
    Param,
    U,
    Var,
    W,
    X,
    Z,
    ZeroTest,
    differentiate,
    is_identically_zero,
    is_structurally_zero,
    parse,
    simplify,
    substitute,
    to_string,
    variables,
)


class LagrangianError(ValueError):
    pass


@dataclass(frozen=True)
class Lagrangian:
    dim: int
    body: Expression
    params: dict = field(default_factory=dict, hash=False, compare=False)
    name: str = ""

    def __post_init__(self):
        if self.dim < 1:
            raise LagrangianError("dimension must be >= 1")
        object.__setattr__(self, "params", dict(self.params))
        for v in variables(self.body):
            if v.kind == "w":
                raise LagrangianError("a Lagrangian may not depend on Hessian slots")
            if v.kind in ("x", "z") and v.index > self.dim:
                raise LagrangianError(f"{v.name} exceeds dimension {self.dim}")

    @classmethod
    def from_string(cls, text: str, dim: int, params=None, name: str = "") -> "Lagrangian":
        return cls(dim, parse(text), params or {}, name or text)

    def __str__(self):
        return to_string(self.body)

    @property
    def xs(self):
        return [X(i) for i in range(1, self.dim + 1)]

    @property
    def zs(self):
        return [Z(i) for i in range(1, self.dim + 1)]

    def param_binding(self) -> dict:
        return {Param(k): float(v) for k, v in self.params.items()}

    def d(self, *vs: Var) -> Expression:
        """Repeated partial derivative of the body."""
        e = self.body
        for v in vs:
            e = differentiate(e, v)
        return e

    def __add__(self, other: "Lagrangian") -> "Lagrangian":
        if self.dim != other.dim:
            raise LagrangianError("dimension mismatch")
        return Lagrangian(self.dim, self.body + other.body, {**self.params, **other.params})


def total_derivative(e: Expression, j: int, dim: int) -> Expression:
    """d/dx_j of e(x, u(x), Du(x)) expressed in jet variables."""
    if any(v.kind == "w" for v in variables(e)):
        raise LagrangianError("total derivative of second-order expressions is not supported")
    terms = [differentiate(e, X(j)), differentiate(e, U) * Z(j)]
    terms += [differentiate(e, Z(k)) * W(k, j) for k in range(1, dim + 1)]
    return simplify(sum(terms[1:], terms[0]))


def _w_slots(dim):
    return [W(i, j) for i in range(1, dim + 1) for j in range(i, dim + 1)]


def is_affine_in_w(e: Expression, dim: int) -> bool:
    for a in _w_slots(dim):
        da = differentiate(e, a)
        for b in _w_slots(dim):
            if not is_structurally_zero(differentiate(da, b)):
                return False
    return True


@dataclass(frozen=True)
class EulerLagrangeOperator:
    dim: int
    residual: Expression

    def __str__(self):
        return to_string(self.residual)


@dataclass(frozen=True)
class SymbolicTensor:
    dim: int
    entries: tuple  # rows of Expressions

    def __getitem__(self, ij):
        i, j = ij
        return self.entries[i][j]

    def trace(self) -> Expression:
        return simplify(sum((self.entries[i][i] for i in range(self.dim)), Const(0)))

    def is_symmetric(self) -> bool:
        return all(
            is_structurally_zero(self.entries[i][j] - self.entries[j][i])
            for i in range(self.dim)
            for j in range(i + 1, self.dim)
        )

    def rows_as_strings(self):
        return [[to_string(e) for e in row] for row in self.entries]


@dataclass(frozen=True)
class NoetherOperator:
    dim: int
    residuals: tuple

    def __getitem__(self, i):
        return self.residuals[i]


def euler_lagrange(L: Lagrangian) -> EulerLagrangeOperator:
    flux_div = [total_derivative(L.d(Z(j)), j, L.dim) for j in range(1, L.dim + 1)]
    residual = simplify(L.d(U) - sum(flux_div[1:], flux_div[0]))
    return EulerLagrangeOperator(L.dim, residual)


def energy_momentum(L: Lagrangian) -> SymbolicTensor:
    n = L.dim
    rows = []
    for i in range(1, n + 1):
        row = []
        for j in range(1, n + 1):
            e = Z(i) * L.d(Z(j))
            if i == j:
                e = e - L.body
            row.append(simplify(e))
        rows.append(tuple(row))
    return SymbolicTensor(n, tuple(rows))


def noether(L: Lagrangian) -> NoetherOperator:
    T = energy_momentum(L)
    n = L.dim
    comps = []
    for i in range(n):
        div = [total_derivative(T.entries[i][j], j + 1, n) for j in range(n)]
        comps.append(simplify(sum(div, L.d(X(i + 1)))))
    return NoetherOperator(n, tuple(comps))


@dataclass(frozen=True)
class IdentityReport:
    """Per-component verdicts for ``N_i + EL * z_i == 0``."""

    components: tuple  # ZeroTest per i

    @property
    def holds(self) -> bool:
        return all(self.components)

    @property
    def paths(self):
        return [c.path for c in self.components]


def identity_defects(L: Lagrangian):
    """The expressions ``N_i + EL * z_i`` (identically zero in theory)."""
    el = euler_lagrange(L).residual
    nt = noether(L)
    return [simplify(nt[i] + el * Z(i + 1)) for i in range(L.dim)]


def check_identity_35(L: Lagrangian, samples: int = 100, tol: float = 1e-10, seed=None) -> IdentityReport:
    kw = {} if seed is None else {"seed": seed}
    verdicts = tuple(
        is_identically_zero(d, samples=samples, tol=tol, fixed=L.param_binding(), **kw)
        for d in identity_defects(L)
    )
    return IdentityReport(verdicts)


@dataclass(frozen=True)
class ConditionCheck:
    label: str
    expression: Expression
    verdict: ZeroTest


@dataclass(frozen=True)
class ConditionHReport:
    mode: str
    checks: tuple

    @property
    def satisfied(self) -> bool:
        return all(c.verdict for c in self.checks)

    @property
    def violations(self):
        return [c for c in self.checks if not c.verdict]


def check_condition_H(
    L: Lagrangian, mode: str = "trace", samples: int = 100, tol: float = 1e-10, seed=None
) -> ConditionHReport:
    """Evaluate condition (H): ``L_{x_i z_i}(x, u, 0) = 0`` (summed over i in
    ``trace`` mode, for each i in ``per_index`` mode) and
    ``L_{x_i u}(x, u, 0) = 0`` for each i."""
    if mode not in ("trace", "per_index"):
        raise ValueError(f"unknown mode {mode!r}")
    at_zero = {Z(i): Const(0) for i in range(1, L.dim + 1)}
    fixed = L.param_binding()

    def restrict(e):
        return simplify(substitute(e, at_zero))

    first = [L.d(X(i), Z(i)) for i in range(1, L.dim + 1)]
    items = []
    if mode == "trace":
        items.append(("sum_i L_{x_i z_i}(x,u,0)", restrict(sum(first[1:], first[0]))))
    else:
        items += [(f"L_{{x{i} z{i}}}(x,u,0)", restrict(e)) for i, e in enumerate(first, start=1)]
    items += [(f"L_{{x{i} u}}(x,u,0)", restrict(L.d(X(i), U))) for i in range(1, L.dim + 1)]
    checks = tuple(
        ConditionCheck(label, e, is_identically_zero(e, samples=samples, tol=tol, seed=seed, fixed=fixed))
        for label, e in items
    )
    return ConditionHReport(mode, checks)


def parse_lagrangian(text: str) -> Lagrangian:
    """Read the plain-text Lagrangian format::

        dim = 2
        param alpha = 1
        L = 1/2*(z1^2 + z2^2) - alpha/2*u^2

    Blank lines and ``#`` comments are ignored.  Errors carry line/column.
    """
    dim = None
    params = {}
    body = None
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        key, sep, value = line.partition("=")
        if not sep:
            raise ParseError("expected 'key = value'", raw, 0, lineno)
        key = key.strip()
        offset = raw.index("=") + 1
        if key == "dim":
            try:
                dim = int(value)
            except ValueError:
                raise ParseError("dimension must be an integer", raw, offset, lineno) from None
        elif key.startswith("param "):
            pname = key[len("param "):].strip()
            try:
                params[pname] = Fraction(value.strip())
            except ValueError:
                raise ParseError("parameter value must be a number", raw, offset, lineno) from None
        elif key == "L":
            try:
                body = parse(value, line=lineno)
            except ParseError as err:
                raise ParseError(str(err).split(": ", 1)[1], raw, offset + err.pos, lineno) from None
        else:
            raise ParseError(f"unknown key {key!r}", raw, 0, lineno)
    if dim is None or body is None:
        raise ParseError("Lagrangian file needs 'dim = N' and 'L = <expression>'", text, 0, 1)
    return Lagrangian(dim, body, params)


def load_lagrangian(path) -> Lagrangian:
    L = parse_lagrangian(Path(path).read_text(encoding="utf-8"))
    return Lagrangian(L.dim, L.body, L.params, Path(path).stem)


def format_lagrangian(L: Lagrangian) -> str:
    lines = [f"dim = {L.dim}"]
    lines += [f"param {k} = {v}" for k, v in sorted(L.params.items())]
    lines.append(f"L = {to_string(L.body)}")
    return "\n".join(lines) + "\n"
