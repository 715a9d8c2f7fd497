"""Constant fields solve Noether's equations without being critical points.

For L = |Du|^2/2 + u the Euler-Lagrange equation is Laplace(u) = 1, yet any
constant field makes the energy-momentum tensor divergence-free.
"""

# %% symbolic side
from noetherkit import corpus
from noetherkit.expr import to_string
from noetherkit.fields import Grid, ScalarField
from noetherkit.lagrangian import energy_momentum, euler_lagrange, noether
from noetherkit.solver import residual_pair

L = corpus.torsion()
print("L  =", to_string(L.body))
print("EL =", to_string(euler_lagrange(L).residual))
T = energy_momentum(L)
for i in range(2):
    print(f"T[{i + 1}] =", [to_string(T[i, j]) for j in range(2)])
    print(f"Noether[{i + 1}] =", to_string(noether(L)[i]))

# %% numeric side: u = 2 on a 33 x 33 grid
u = ScalarField.constant(Grid.square(33), 2.0)
pair = residual_pair(L, u)
print(f"Noether residual inf-norm: {pair.noether_norm:.3e}")
print(f"EL residual range: [{pair.el.values.min()}, {pair.el.values.max()}]")

# %% the same holds for a pure potential
for F in ("u", "u^2", "cos(u)"):
    pair = residual_pair(corpus.potential_only(F), ScalarField.constant(Grid.square(17), 0.7))
    print(f"L = {F:7s} Noether {pair.noether_norm:.1e}  EL {pair.el_norm:.3f}")
