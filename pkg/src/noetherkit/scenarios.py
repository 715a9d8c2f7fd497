"""Verification suites run by ``noetherkit verify`` and the acceptance tests.

Every suite returns a :class:`Scenario` holding named checks (value, bound,
verdict) and any tables it produced.  All tolerances live in this module.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from . import corpus
from .expr import parse
from .fields import Grid, InteriorField, ScalarField, eval_operator, jet, plateau_check
from .lagrangian import check_identity_35, noether
from .solver import DirichletProblem, crop, residual_pair, solve
from .variations import (
    admissible_from_inner,
    first_variation,
    inner_variation_direct,
    inner_variation_formula,
    make_bump,
)

LADDER = (33, 65, 129)

COUNTEREXAMPLE_TOL = 1e-12
IDENTITY_ORDER = 1.8
SOLVE_ORDER = 1.9
SOLVE_TOL = 1e-10
NOETHER_FACTOR = 10.0
GRAD_FLOOR = 0.1
PLATEAU_RADIUS = 3
VARIATION_RTOL = 1e-4
VARIATION_FLOOR = 1e-6
QUAD_NODES = 129
T_STEP = 1e-3

IDENTITY_FIELD = "sin(pi*x1)*cos(2*pi*x2) + x1*x2"


@dataclass
class Check:
    label: str
    value: float
    bound: float
    passed: bool
    relation: str = "<="

    def as_dict(self):
        return {"label": self.label, "value": self.value, "bound": self.bound,
                "relation": self.relation, "passed": self.passed}


@dataclass
class Scenario:
    name: str
    checks: list = field(default_factory=list)
    tables: dict = field(default_factory=dict)
    settings: dict = field(default_factory=dict)

    @property
    def passed(self) -> bool:
        return all(c.passed for c in self.checks)

    def le(self, label, value, bound):
        self.checks.append(Check(label, float(value), float(bound), bool(value <= bound), "<="))

    def ge(self, label, value, bound):
        self.checks.append(Check(label, float(value), float(bound), bool(value >= bound), ">="))

    def as_dict(self):
        return {
            "scenario": self.name,
            "passed": self.passed,
            "settings": self.settings,
            "checks": [c.as_dict() for c in self.checks],
            "tables": self.tables,
        }


def observed_orders(errors) -> list:
    """log2 ratios of successive errors on a halving ladder."""
    return [math.log2(a / b) for a, b in zip(errors, errors[1:])]


def counterexample(n: int = 33, c: float = 2.0) -> Scenario:
    """Constant field under L = |z|^2/2 + u: Noether holds, EL is 1."""
    s = Scenario("counterexample", settings={"grid": n, "constant": c, "tol": COUNTEREXAMPLE_TOL})
    grid = Grid.square(n)
    u = ScalarField.constant(grid, c)
    L = corpus.torsion()
    pair = residual_pair(L, u)
    s.le("noether residual inf-norm (divergence form)", pair.noether_norm, COUNTEREXAMPLE_TOL)
    expanded = residual_pair(L, u, form="expanded")
    s.le("noether residual inf-norm (expanded form)", expanded.noether_norm, COUNTEREXAMPLE_TOL)
    s.le("max |EL - 1|", float(np.max(np.abs(pair.el.values - 1.0))), 0.0)
    nt = noether(corpus.potential_only("u"))
    zero = max(eval_operator(nt[i], u).max_abs() for i in range(2))
    s.le("noether of L = u on the constant field", zero, 0.0)
    return s


def identity_ladder(sizes=LADDER):
    """Divergence-form defect of N_i + EL z_i under refinement.

    Returns (hs, defects, C) with C = max defect / h^2.
    """
    L = corpus.weighted_dirichlet()
    ue = parse(IDENTITY_FIELD)
    hs, defects = [], []
    for n in sizes:
        grid = Grid.square(n)
        pair = residual_pair(L, ScalarField.from_expression(grid, ue))
        hs.append(grid.h)
        defects.append(pair.defect_norm)
    C = max(d / h**2 for d, h in zip(defects, hs))
    return hs, defects, C


def identity35(sizes=LADDER) -> Scenario:
    s = Scenario("identity35", settings={"grids": list(sizes), "field": IDENTITY_FIELD,
                                          "lagrangian": str(corpus.weighted_dirichlet()),
                                          "min_order": IDENTITY_ORDER})
    for L in corpus.corpus():
        rep = check_identity_35(L)
        s.checks.append(Check(f"symbolic identity for {L.name} ({'/'.join(rep.paths)})",
                              max(c.max_abs for c in rep.components), 1e-10, rep.holds))
    hs, defects, C = identity_ladder(sizes)
    orders = observed_orders(defects)
    s.tables["convergence"] = [{"n": n, "h": h, "defect_inf": d} for n, h, d in zip(sizes, hs, defects)]
    s.tables["C"] = C
    for k, p in enumerate(orders):
        s.ge(f"observed order {sizes[k]}->{sizes[k + 1]}", p, IDENTITY_ORDER)
    return s


def equivalence(sizes=LADDER, probe_n: int = 65) -> Scenario:
    """Helmholtz solve with g = exp(x1): convergence, EL => Noether and the
    pointwise division of the identity by |Du|."""
    s = Scenario("equivalence", settings={"grids": list(sizes), "probe_grid": probe_n, "tol": SOLVE_TOL,
                                           "bc": "exp(x1)", "min_order": SOLVE_ORDER,
                                           "noether_factor": NOETHER_FACTOR, "grad_floor": GRAD_FLOOR})
    L = corpus.helmholtz()
    bc = parse("exp(x1)")
    _, _, C = identity_ladder()
    s.tables["C"] = C
    errors, rows = [], []
    for n in sizes:
        grid = Grid.square(n)
        rep = solve(DirichletProblem(L, grid, bc, tol=SOLVE_TOL))
        exact = ScalarField.from_expression(grid, bc)
        err = float(np.max(np.abs(rep.solution.values - exact.values)))
        errors.append(err)
        rows.append({"n": n, "iterations": rep.iterations, "residual_inf": rep.residual_norm,
                     "error_inf": err, "noether_inf": rep.residuals.noether_norm})
        if n == probe_n:
            h = grid.h
            s.le(f"noether residual inf-norm on {n}^2", rep.residuals.noether_norm,
                 NOETHER_FACTOR * (SOLVE_TOL + C * h**2))
            excess, count = pointwise_probe(rep.residuals, rep.solution, C)
            s.tables["probe_nodes"] = count
            s.le(f"pointwise |EL| - (max|N_i|/|Du| + C h^2) on {n}^2", excess, 0.0)
    s.tables["convergence"] = rows
    for k, p in enumerate(observed_orders(errors)):
        s.ge(f"error order {sizes[k]}->{sizes[k + 1]}", p, SOLVE_ORDER)
    return s


def pointwise_probe(pair, u: ScalarField, C: float):
    """Largest ``|EL| - (max_i |N_i| / |Du| + C h^2)`` over nodes where
    ``|Du| >= GRAD_FLOOR``, and the number of such nodes."""
    m = pair.noether[0].margin
    j = jet(u)
    grad = crop(InteriorField(u.grid, j.grad_norm, 1), m).values
    el = crop(pair.el, m).values
    nmax = np.maximum(np.abs(pair.noether[0].values), np.abs(pair.noether[1].values))
    mask = grad >= GRAD_FLOOR
    if not mask.any():
        return -np.inf, 0
    excess = np.abs(el[mask]) - (nmax[mask] / grad[mask] + C * u.grid.h**2)
    return float(excess.max()), int(mask.sum())


def plateau(n: int = 65) -> Scenario:
    s = Scenario("plateau", settings={"grid": n, "radius_nodes": PLATEAU_RADIUS, "eps": "h"})
    grid = Grid.square(n)
    rep = solve(DirichletProblem(corpus.torsion(), grid, parse("0"), tol=SOLVE_TOL))
    verdict = plateau_check(rep.solution, grid.h, PLATEAU_RADIUS)
    s.tables["torsion"] = {"flat_nodes": verdict.size, "found": verdict.found}
    s.le("torsion field: plateau discs found", int(verdict.found), 0)
    control = plateau_check(ScalarField.constant(grid, 1.0), grid.h, PLATEAU_RADIUS)
    s.tables["constant"] = {"flat_nodes": control.size, "found": control.found, "center": control.center}
    s.ge("constant field: plateau discs found", int(control.found), 1)
    return s


def bridge_triples():
    """(Lagrangian, u, h) triples for the admissible/inner comparison."""
    sq = make_bump((0.25, 0.75, 0.25, 0.75), (1.0, 0.5))
    off = make_bump((0.2, 0.6, 0.3, 0.8), (-0.5, 1.0))
    return [
        ("cubic potential", corpus.poisson("u^3"), "sin(pi*x1)*x2", sq),
        ("weighted Dirichlet", corpus.weighted_dirichlet(), "x1^2 + x1*x2", off),
        ("p-Laplacian", corpus.p_laplacian(), "sin(x1) + x2^2", sq),
    ]


def relative_gap(a: float, b: float) -> float:
    return abs(a - b) / max(abs(b), VARIATION_FLOOR)


def bridge() -> Scenario:
    s = Scenario("bridge", settings={"quadrature_nodes": QUAD_NODES, "t_step": T_STEP,
                                      "rtol": VARIATION_RTOL, "floor": VARIATION_FLOOR})
    rows = []
    L = corpus.poisson("u^3")
    u = parse("sin(pi*x1)*x2")
    h = make_bump((0.25, 0.75, 0.25, 0.75), (1.0, 0.5))
    formula = inner_variation_formula(L, u, h, QUAD_NODES)
    direct = inner_variation_direct(L, u, h, QUAD_NODES, T_STEP)
    s.le("inner variation: |direct - formula| / max(|formula|, 1e-6)", relative_gap(direct, formula), VARIATION_RTOL)
    rows.append({"case": "inner", "formula": formula, "direct": direct})
    for label, L, ut, h in bridge_triples():
        u = parse(ut)
        formula = inner_variation_formula(L, u, h, QUAD_NODES)
        admissible = first_variation(L, u, admissible_from_inner(u, h), QUAD_NODES)
        s.le(f"bridge [{label}]: |first variation - formula| / max(|formula|, 1e-6)",
             relative_gap(admissible, formula), VARIATION_RTOL)
        rows.append({"case": label, "formula": formula, "first_variation": admissible})
    s.tables["values"] = rows
    return s


SCENARIOS = {
    "counterexample": counterexample,
    "identity35": identity35,
    "equivalence": equivalence,
    "plateau": plateau,
    "bridge": bridge,
}


def run(name: str) -> Scenario:
    try:
        return SCENARIOS[name]()
    except KeyError:
        raise ValueError(f"unknown scenario {name!r}; choose from {sorted(SCENARIOS)}") from None
