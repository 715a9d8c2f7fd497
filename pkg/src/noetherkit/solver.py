"""Damped Newton solver for the Euler-Lagrange equation on a grid.

The discrete residual is the symbolic EL operator evaluated on the
central-difference jets at interior nodes, and ``u - g`` at boundary nodes.
The Jacobian is assembled from the symbolic partials of the residual with
respect to the U, Z and W slots, chained through the stencils (9-point
pattern), with identity rows on the boundary.
"""

from __future__ import annotations

import logging
import warnings
from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from .expr import DomainError, Expression, U, W, Z, X, differentiate, evaluate_on
from .fields import Grid, InteriorField, ScalarField, divergence, eval_operator, jet
from .lagrangian import Lagrangian, energy_momentum, euler_lagrange, is_affine_in_w, noether

log = logging.getLogger(__name__)

_SLOTS = (U, Z(1), Z(2), W(1, 1), W(1, 2), W(2, 2))


class NonConvergence(RuntimeError):
    def __init__(self, iterations, residual, report=None):
        super().__init__(f"Newton failed after {iterations} iterations, residual {residual:.3e}")
        self.iterations = iterations
        self.residual = residual
        self.report = report


class SingularJacobian(RuntimeError):
    pass


@dataclass
class DirichletProblem:
    lagrangian: Lagrangian
    grid: Grid
    bc: Expression
    initial: ScalarField | None = None
    tol: float = 1e-10
    max_iter: int = 50
    damping: float = 1.0
    min_step: float = 2.0**-20

    def __post_init__(self):
        if self.tol <= 0:
            raise ValueError("tol must be positive")
        if not 0 < self.damping <= 1:
            raise ValueError("damping must lie in (0, 1]")
        if self.lagrangian.dim != 2:
            raise ValueError("grid solves are two-dimensional")


@dataclass
class ResidualPair:
    el: InteriorField
    noether: list
    defect: list
    form: str

    @property
    def el_norm(self) -> float:
        return self.el.max_abs()

    @property
    def noether_norm(self) -> float:
        return max(f.max_abs() for f in self.noether)

    @property
    def defect_norm(self) -> float:
        return max(f.max_abs() for f in self.defect)


@dataclass
class SolveReport:
    converged: bool
    iterations: int
    residual_norm: float
    solution: ScalarField
    residuals: ResidualPair | None
    history: list = field(default_factory=list)
    tol: float = 0.0
    line_search_halvings: list = field(default_factory=list)

    @property
    def el_residual(self) -> InteriorField:
        return self.residuals.el

    @property
    def noether_residuals(self) -> list:
        return self.residuals.noether


def crop(f: InteriorField, margin: int) -> InteriorField:
    k = margin - f.margin
    if k < 0:
        raise ValueError("cannot grow a field's support")
    v = f.values[k:f.values.shape[0] - k, k:f.values.shape[1] - k] if k else f.values
    return InteriorField(f.grid, v, margin)


def residual_pair(L: Lagrangian, u: ScalarField, form: str = "divergence") -> ResidualPair:
    """EL residual, Noether residuals and the pointwise identity defect
    ``N_i + EL * z_i``.

    ``form="divergence"`` differences the nodal energy-momentum tensor with
    central stencils (margin 2); ``form="expanded"`` evaluates the
    chain-rule-expanded Noether operator on the jets (margin 1), for which
    the defect vanishes up to rounding.
    """
    params = L.param_binding()
    j = jet(u)
    el = eval_operator(euler_lagrange(L).residual, j, params)
    zs = (j.z1, j.z2)
    if form == "divergence":
        T = energy_momentum(L)
        rows = [[eval_operator(T[i, k], j, params) for k in range(2)] for i in range(2)]
        div = divergence(rows, u.grid)
        nt = []
        for i in range(2):
            lx = crop(eval_operator(L.d(X(i + 1)), j, params), 2)
            nt.append(InteriorField(u.grid, div[i].values + lx.values, 2))
    elif form == "expanded":
        ops = noether(L)
        nt = [eval_operator(ops[i], j, params) for i in range(2)]
    else:
        raise ValueError(f"unknown form {form!r}")
    m = nt[0].margin
    el_c = crop(el, m)
    defect = []
    for i in range(2):
        z = crop(InteriorField(u.grid, zs[i], 1), m)
        defect.append(InteriorField(u.grid, nt[i].values + el_c.values * z.values, m))
    return ResidualPair(el, nt, defect, form)


class _Discretization:
    def __init__(self, p: DirichletProblem):
        L = p.lagrangian
        self.grid = p.grid
        self.params = L.param_binding()
        self.el = euler_lagrange(L).residual
        if not is_affine_in_w(self.el, 2):
            raise ValueError("Euler-Lagrange operator is not affine in the Hessian slots")
        self.partials = [differentiate(self.el, s) for s in _SLOTS]
        x1, x2 = p.grid.coords()
        self.boundary = p.grid.boundary_mask()
        g = evaluate_on(p.bc, {X(1): x1, X(2): x2, **self.params}, p.grid.shape)
        self.g = g

    def residual(self, v: np.ndarray) -> np.ndarray:
        r = v - self.g
        j = jet(ScalarField(self.grid, v))
        r[1:-1, 1:-1] = evaluate_on(self.el, j.binding(self.params), j.u.shape)
        return r

    def jacobian(self, v: np.ndarray) -> sp.csr_matrix:
        g = self.grid
        n1, n2 = g.n1, g.n2
        h1, h2 = g.h1, g.h2
        j = jet(ScalarField(g, v))
        b = j.binding(self.params)
        aU, aZ1, aZ2, aW11, aW12, aW22 = (evaluate_on(e, b, j.u.shape) for e in self.partials)
        idx = np.arange(n1 * n2).reshape(n2, n1)
        rows_c = idx[1:-1, 1:-1]
        stencil = [
            ((0, 0), aU - 2 * aW11 / h1**2 - 2 * aW22 / h2**2),
            ((0, 1), aZ1 / (2 * h1) + aW11 / h1**2),
            ((0, -1), -aZ1 / (2 * h1) + aW11 / h1**2),
            ((1, 0), aZ2 / (2 * h2) + aW22 / h2**2),
            ((-1, 0), -aZ2 / (2 * h2) + aW22 / h2**2),
            ((1, 1), aW12 / (4 * h1 * h2)),
            ((1, -1), -aW12 / (4 * h1 * h2)),
            ((-1, 1), -aW12 / (4 * h1 * h2)),
            ((-1, -1), aW12 / (4 * h1 * h2)),
        ]
        rows, cols, vals = [], [], []
        for (dr, dc), coef in stencil:
            cols_s = idx[1 + dr:n2 - 1 + dr, 1 + dc:n1 - 1 + dc]
            rows.append(rows_c.ravel())
            cols.append(cols_s.ravel())
            vals.append(np.broadcast_to(coef, rows_c.shape).ravel())
        bnd = idx[self.boundary]
        rows.append(bnd)
        cols.append(bnd)
        vals.append(np.ones(bnd.size))
        return sp.csr_matrix(
            (np.concatenate(vals), (np.concatenate(rows), np.concatenate(cols))),
            shape=(n1 * n2, n1 * n2),
        )

    def solve_linear(self, A, rhs: np.ndarray) -> np.ndarray:
        try:
            with warnings.catch_warnings():
                warnings.simplefilter("error", spla.MatrixRankWarning)
                x = spla.spsolve(A.tocsc(), rhs.ravel())
        except (RuntimeError, spla.MatrixRankWarning) as err:
            raise SingularJacobian(f"Newton matrix is singular: {err}") from None
        if not np.all(np.isfinite(x)):
            raise SingularJacobian("linear solve produced non-finite values")
        return x.reshape(rhs.shape)

    def initial_guess(self) -> np.ndarray:
        """Newton step from the constant state at the boundary mean, with the
        boundary rows set to g; falls back to that constant state."""
        ubar = float(np.mean(self.g[self.boundary]))
        v0 = np.full(self.grid.shape, ubar)
        fallback = np.where(self.boundary, self.g, ubar)
        try:
            r = self.residual(v0)
            step = self.solve_linear(self.jacobian(v0), -r)
            guess = v0 + step
            self.residual(guess)
        except (DomainError, SingularJacobian):
            return fallback
        guess[self.boundary] = self.g[self.boundary]
        return guess


def _norm(r):
    return float(np.max(np.abs(r)))


def solve(p: DirichletProblem, check_residuals: bool = True) -> SolveReport:
    """Drive the discrete EL residual below ``p.tol``.

    Each step solves the sparse Newton system directly, then backtracks by
    halving (at most 20 times) until the residual infinity-norm decreases.
    Raises NonConvergence (carrying the partial report) or SingularJacobian.
    """
    d = _Discretization(p)
    if p.initial is not None:
        v = np.array(p.initial.values, dtype=float)
        v[d.boundary] = d.g[d.boundary]
    else:
        v = d.initial_guess()
    r = d.residual(v)
    norm = _norm(r)
    history = [norm]
    halvings = []
    it = 0
    while norm > p.tol and it < p.max_iter:
        step = d.solve_linear(d.jacobian(v), -r)
        lam = p.damping
        accepted = False
        for k in range(21):
            trial = v + lam * step
            trial[d.boundary] = d.g[d.boundary]
            try:
                r_trial = d.residual(trial)
                n_trial = _norm(r_trial)
            except DomainError:
                n_trial = np.inf
            if n_trial < norm:
                accepted = True
                break
            lam *= 0.5
            if lam < p.min_step:
                break
        it += 1
        if not accepted:
            log.info("line search stalled at iteration %d, residual %.3e", it, norm)
            break
        if norm < 1e-3:
            log.debug("newton ratio r_{k+1}/r_k^2 = %.3e", n_trial / norm**2)
        v, r, norm = trial, r_trial, n_trial
        history.append(norm)
        halvings.append(k)
    u = ScalarField(p.grid, v)
    converged = norm <= p.tol
    pair = residual_pair(p.lagrangian, u) if (check_residuals and converged) else None
    report = SolveReport(converged, it, norm, u, pair, history, p.tol, halvings)
    if not converged:
        raise NonConvergence(it, norm, report)
    return report


def describe(report: SolveReport) -> dict:
    """Key-value summary used by reports."""
    out = {
        "converged": report.converged,
        "iterations": report.iterations,
        "residual_inf": report.residual_norm,
        "tol": report.tol,
        "history": report.history,
    }
    if report.residuals is not None:
        out["el_residual_inf"] = report.residuals.el_norm
        out["noether_residual_inf"] = report.residuals.noether_norm
        out["identity_defect_inf"] = report.residuals.defect_norm
    return out
