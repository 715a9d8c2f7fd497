"""Recover a Lagrangian L(u, z) from a prescribed energy-momentum tensor.

The defining system ``z_i dL/dz_j - delta_ij L = T_ij`` is linear in L, so
for an ansatz ``L = sum_m c_m B_m(u, z)`` it is linear in the coefficients.
We sample it at random (u, z) points and solve the stacked least-squares
problem; feasibility is judged on a fresh validation sample.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from pathlib import Path

import numpy as np

from .expr import (
    DEFAULT_SEED,
    Const,
    Expression,
    ParseError,
    Param,
    U,
    Z,
    differentiate,
    evaluate_on,
    is_identically_zero,
    is_structurally_zero,
    parse,
    simplify,
    to_string,
    variables,
)
from .lagrangian import Lagrangian

SAMPLE_BOX = (-2.0, 2.0)


class RankDeficient(ArithmeticError):
    def __init__(self, null_dim: int, rank: int):
        super().__init__(f"least-squares system is rank deficient (rank {rank}, null space dimension {null_dim})")
        self.null_dim = null_dim
        self.rank = rank


@dataclass(frozen=True)
class TensorTarget:
    dim: int
    entries: tuple  # rows of Expressions in u, z, params
    params: dict = field(default_factory=dict, hash=False, compare=False)

    def __post_init__(self):
        rows = tuple(tuple(r) for r in self.entries)
        if len(rows) != self.dim or any(len(r) != self.dim for r in rows):
            raise ValueError("target must be dim x dim")
        for row in rows:
            for e in row:
                for v in variables(e):
                    if v.kind in ("x", "w"):
                        raise ValueError(f"target entries may not depend on {v.name}")
                    if v.kind == "z" and v.index > self.dim:
                        raise ValueError(f"{v.name} exceeds dimension {self.dim}")
        object.__setattr__(self, "entries", rows)

    @classmethod
    def from_strings(cls, rows, params=None) -> "TensorTarget":
        entries = tuple(tuple(parse(s) for s in row) for row in rows)
        return cls(len(entries), entries, params or {})

    def param_binding(self):
        return {Param(k): float(v) for k, v in self.params.items()}


def alpha_target(alpha=1, dim: int = 2) -> TensorTarget:
    """``T_ij = z_i z_j - delta_ij (|z|^2 - alpha u^2)/2``."""
    zs = [Z(i) for i in range(1, dim + 1)]
    sq = sum((z * z for z in zs[1:]), zs[0] * zs[0])
    a = Fraction(alpha) if not isinstance(alpha, float) else alpha
    rows = []
    for i in range(dim):
        row = []
        for j in range(dim):
            e = zs[i] * zs[j]
            if i == j:
                e = e - Const(Fraction(1, 2)) * (sq - a * U * U)
            row.append(simplify(e))
        rows.append(tuple(row))
    return TensorTarget(dim, tuple(rows))


def default_basis(dim: int = 2) -> tuple:
    """{|z|^2, z1^2, z1 z2, u, u^2, u^3, 1} (the mixed terms only for dim >= 2)."""
    zs = [Z(i) for i in range(1, dim + 1)]
    basis = [simplify(sum((z * z for z in zs[1:]), zs[0] * zs[0]))]
    if dim >= 2:
        basis += [simplify(zs[0] ** 2), simplify(zs[0] * zs[1])]
    basis += [U, simplify(U**2), simplify(U**3), Const(1)]
    return tuple(basis)


@dataclass(frozen=True)
class LagrangianAnsatz:
    dim: int
    basis: tuple

    def __post_init__(self):
        object.__setattr__(self, "basis", tuple(self.basis))
        for b in self.basis:
            for v in variables(b):
                if v.kind not in ("u", "z", "p"):
                    raise ValueError(f"basis functions depend on u and z only, found {v.name}")

    @classmethod
    def default(cls, dim: int = 2) -> "LagrangianAnsatz":
        return cls(dim, default_basis(dim))

    @classmethod
    def from_strings(cls, dim: int, texts) -> "LagrangianAnsatz":
        return cls(dim, tuple(simplify(parse(t)) for t in texts))

    @property
    def coefficients(self):
        return [Param(f"c{m}") for m in range(1, len(self.basis) + 1)]

    @property
    def slots(self):
        return [U] + [Z(i) for i in range(1, self.dim + 1)]

    def images(self):
        """``images[m][i][j] = z_i dB_m/dz_j - delta_ij B_m``."""
        out = []
        for b in self.basis:
            rows = []
            for i in range(1, self.dim + 1):
                rows.append(tuple(
                    simplify(Z(i) * differentiate(b, Z(j)) - (b if i == j else 0))
                    for j in range(1, self.dim + 1)
                ))
            out.append(tuple(rows))
        return out

    def gram_condition(self, samples: int = 200, seed: int = DEFAULT_SEED) -> float:
        """Condition number of the sampled Gram matrix of the basis."""
        pts = _sample(np.random.default_rng(seed), samples, self.dim)
        V = np.column_stack([_eval(b, pts) for b in self.basis])
        return float(np.linalg.cond(V.T @ V))

    def lagrangian(self, coefficients) -> Lagrangian:
        body = sum((Const(c) * b for c, b in zip(coefficients, self.basis)), Const(0))
        return Lagrangian(self.dim, simplify(body))


def _sample(rng, k: int, dim: int) -> dict:
    pts = rng.uniform(*SAMPLE_BOX, size=(k, dim + 1))
    out = {U: pts[:, 0]}
    for i in range(1, dim + 1):
        out[Z(i)] = pts[:, i]
    return out


def _eval(e: Expression, pts: dict, extra=None) -> np.ndarray:
    k = len(pts[U])
    return evaluate_on(e, {**pts, **(extra or {})}, (k,))


def assemble_defining_residuals(ansatz: LagrangianAnsatz, target: TensorTarget):
    """Entries ``z_i dL/dz_j - delta_ij L - T_ij`` for ``L = sum c_m B_m``,
    with the coefficients as parameters ``c1, c2, ...``."""
    if ansatz.dim != target.dim:
        raise ValueError("dimension mismatch")
    cs = ansatz.coefficients
    L = sum((c * b for c, b in zip(cs, ansatz.basis)), Const(0))
    rows = []
    for i in range(1, target.dim + 1):
        row = []
        for j in range(1, target.dim + 1):
            e = Z(i) * differentiate(L, Z(j)) - target.entries[i - 1][j - 1]
            if i == j:
                e = e - L
            e = simplify(e)
            for c in cs:
                if not is_structurally_zero(differentiate(differentiate(e, c), c)):
                    raise AssertionError("defining residual is not linear in the coefficients")
            row.append(e)
        rows.append(tuple(row))
    return tuple(rows)


def _snap(c: float):
    """Nearby simple fraction when within 1e-9, else the float."""
    q = Fraction(c).limit_denominator(1000)
    if abs(float(q) - c) <= 1e-9 * max(1.0, abs(c)):
        return q
    return c


@dataclass
class FitResult:
    basis: list  # strings
    coefficients: list
    entry_residual: list  # validation sup-norm per (i, j)
    training_residual: float
    validation_residual: float
    feasible: bool
    rank: int
    gram_condition: float
    tol: float
    samples: int
    lagrangian: Lagrangian | None = None

    def coefficient(self, basis_text: str) -> float:
        return self.coefficients[self.basis.index(basis_text)]

    def as_dict(self):
        return {
            "basis": self.basis,
            "coefficients": self.coefficients,
            "entry_residual": self.entry_residual,
            "training_residual": self.training_residual,
            "validation_residual": self.validation_residual,
            "feasible": self.feasible,
            "rank": self.rank,
            "gram_condition": self.gram_condition,
            "tol": self.tol,
            "samples": self.samples,
            "lagrangian": to_string(self.lagrangian.body) if self.lagrangian else None,
            "uniqueness": "relative to the chosen basis only",
        }


def fit(
    ansatz: LagrangianAnsatz,
    target: TensorTarget,
    samples: int | None = None,
    tol: float = 1e-8,
    seed: int = DEFAULT_SEED,
) -> FitResult:
    """Least-squares fit of the ansatz coefficients to the target tensor.

    Raises RankDeficient when the sampled system does not determine the
    coefficients uniquely.
    """
    m = len(ansatz.basis)
    if samples is None:
        samples = 10 * m
    if samples < 3 * m:
        raise ValueError(f"need at least {3 * m} samples for {m} coefficients")
    if tol <= 0:
        raise ValueError("tol must be positive")
    if ansatz.dim != target.dim:
        raise ValueError("dimension mismatch")
    n = target.dim
    images = ansatz.images()
    extra = target.param_binding()
    rng = np.random.default_rng(seed)

    def system(pts):
        blocks, rhs = [], []
        for i in range(n):
            for j in range(n):
                blocks.append(np.column_stack([_eval(img[i][j], pts, extra) for img in images]))
                rhs.append(_eval(target.entries[i][j], pts, extra))
        return blocks, rhs

    train_blocks, train_rhs = system(_sample(rng, samples, n))
    A = np.vstack(train_blocks)
    b = np.concatenate(train_rhs)
    rank = int(np.linalg.matrix_rank(A))
    if rank < m:
        raise RankDeficient(m - rank, rank)
    c, *_ = np.linalg.lstsq(A, b, rcond=None)
    gram_cond = float(np.linalg.cond(A.T @ A))
    training = float(np.max(np.abs(A @ c - b)))

    val_blocks, val_rhs = system(_sample(rng, samples, n))
    per_entry = [float(np.max(np.abs(B @ c - r))) for B, r in zip(val_blocks, val_rhs)]
    validation = max(per_entry)
    feasible = validation <= tol
    coeffs = [float(v) for v in c]
    L = ansatz.lagrangian([_snap(v) for v in coeffs]) if feasible else None
    return FitResult(
        basis=[to_string(bm) for bm in ansatz.basis],
        coefficients=coeffs,
        entry_residual=[per_entry[i * n:(i + 1) * n] for i in range(n)],
        training_residual=training,
        validation_residual=validation,
        feasible=feasible,
        rank=rank,
        gram_condition=gram_cond,
        tol=tol,
        samples=samples,
        lagrangian=L,
    )


@dataclass(frozen=True)
class VerifyReport:
    entries: tuple  # rows of ZeroTest

    @property
    def holds(self) -> bool:
        return all(all(row) for row in self.entries)

    def failing(self):
        return [(i + 1, j + 1) for i, row in enumerate(self.entries) for j, t in enumerate(row) if not t]


def verify_solution(
    L: Lagrangian, target: TensorTarget, samples: int = 100, tol: float = 1e-10, seed=None
) -> VerifyReport:
    """Check ``z_i L_{z_j} - delta_ij L == T_ij`` entry by entry."""
    if L.dim != target.dim:
        raise ValueError("dimension mismatch")
    fixed = {**L.param_binding(), **target.param_binding()}
    rows = []
    for i in range(1, L.dim + 1):
        row = []
        for j in range(1, L.dim + 1):
            e = Z(i) * L.d(Z(j)) - target.entries[i - 1][j - 1]
            if i == j:
                e = e - L.body
            row.append(is_identically_zero(e, samples=samples, tol=tol, seed=seed, fixed=fixed))
        rows.append(tuple(row))
    return VerifyReport(tuple(rows))


def parse_target(text: str) -> TensorTarget:
    """Target file: ``dim = N``, optional ``param name = value`` lines, then
    ``T i j = <expression>`` for every pair."""
    dim = None
    params = {}
    found = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        key, sep, value = line.partition("=")
        if not sep:
            raise ParseError("expected 'key = value'", raw, 0, lineno)
        words = key.split()
        offset = raw.index("=") + 1
        if words == ["dim"]:
            try:
                dim = int(value)
            except ValueError:
                raise ParseError("dimension must be an integer", raw, offset, lineno) from None
        elif len(words) == 2 and words[0] == "param":
            try:
                params[words[1]] = Fraction(value.strip())
            except ValueError:
                raise ParseError("parameter value must be a number", raw, offset, lineno) from None
        elif len(words) == 3 and words[0] == "T":
            try:
                found[(int(words[1]), int(words[2]))] = parse(value, line=lineno)
            except ParseError as err:
                raise ParseError(str(err).split(": ", 1)[1], raw, offset + err.pos, lineno) from None
        else:
            raise ParseError(f"unknown key {key.strip()!r}", raw, 0, lineno)
    if dim is None:
        raise ParseError("target file needs 'dim = N'", text, 0, 1)
    missing = [(i, j) for i in range(1, dim + 1) for j in range(1, dim + 1) if (i, j) not in found]
    if missing:
        raise ParseError(f"missing entries {missing}", text, 0, 1)
    rows = tuple(tuple(found[(i, j)] for j in range(1, dim + 1)) for i in range(1, dim + 1))
    return TensorTarget(dim, rows, params)


def load_target(path) -> TensorTarget:
    return parse_target(Path(path).read_text(encoding="utf-8"))


def format_target(target: TensorTarget) -> str:
    lines = [f"dim = {target.dim}"]
    lines += [f"param {k} = {v}" for k, v in sorted(target.params.items())]
    for i, row in enumerate(target.entries, start=1):
        for j, e in enumerate(row, start=1):
            lines.append(f"T {i} {j} = {to_string(e)}")
    return "\n".join(lines) + "\n"
