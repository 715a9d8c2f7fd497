"""Away from critical plateaus, Noether solutions are Euler-Lagrange solutions.

Solve Laplace(u) = u with u = exp(x1) on the boundary, then compare the two
residuals node by node with the pointwise bound |EL| <= max|N_i| / |Du| + C h^2.
"""

# %% convergence of the Newton solve
import math

import numpy as np

from noetherkit import corpus
from noetherkit.expr import parse
from noetherkit.fields import Grid, ScalarField, jet, plateau_check
from noetherkit.scenarios import identity_ladder
from noetherkit.solver import DirichletProblem, solve

exact = parse("exp(x1)")
errors = []
for n in (33, 65, 129):
    rep = solve(DirichletProblem(corpus.helmholtz(), Grid.square(n), exact))
    err = np.max(np.abs(rep.solution.values - ScalarField.from_expression(rep.solution.grid, exact).values))
    errors.append(err)
    print(f"n = {n:4d}  iterations {rep.iterations}  max error {err:.3e}")
print("observed orders:", [round(math.log2(a / b), 3) for a, b in zip(errors, errors[1:])])

# %% the identity constant C from a smooth manufactured field
hs, defects, C = identity_ladder()
print(f"C = {C:.1f}")

# %% pointwise probe on the 65 x 65 solve
rep = solve(DirichletProblem(corpus.helmholtz(), Grid.square(65), exact))
h = rep.solution.grid.h
pair = rep.residuals
grad = jet(rep.solution).grad_norm[1:-1, 1:-1]
el = np.abs(pair.el.values[1:-1, 1:-1])
nmax = np.maximum(*(np.abs(f.values) for f in pair.noether))
mask = grad >= 0.1
slack = nmax[mask] / grad[mask] + C * h**2 - el[mask]
print(f"{mask.sum()} probed nodes, smallest slack {slack.min():.3e}")

# %% torsion has no plateau, a constant does
g = Grid.square(65)
torsion = solve(DirichletProblem(corpus.torsion(), g, parse("0"))).solution
print("torsion plateau:", plateau_check(torsion, g.h, 3).found)
print("constant plateau:", plateau_check(ScalarField.constant(g, 1.0), g.h, 3).found)
