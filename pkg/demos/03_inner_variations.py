"""Inner variations: domain deformations versus the closed-form derivative.

Deform the unit square by x + t h(x) with a compactly supported bump h and
differentiate the action at t = 0, once by central differences in t and once
through the energy-momentum tensor. The admissible variation Du . h gives
the same number through the ordinary first variation.
"""

# %%
from noetherkit import corpus
from noetherkit.expr import parse, to_string
from noetherkit.scenarios import bridge_triples
from noetherkit.variations import (
    admissible_from_inner,
    first_variation,
    inner_variation_direct,
    inner_variation_formula,
    make_bump,
)

L = corpus.poisson("u^3")
u = parse("sin(pi*x1)*x2")
h = make_bump((0.25, 0.75, 0.25, 0.75), (1.0, 0.5))
print("h1 =", to_string(h.components[0])[:70], "...")
print(f"largest safe step: {1 / (2 * h.max_row_sum()):.4f}")

# %% direct differences converge like t^2
formula = inner_variation_formula(L, u, h)
print(f"formula: {formula:.10f}")
for t in (4e-3, 2e-3, 1e-3):
    direct = inner_variation_direct(L, u, h, t_step=t)
    print(f"t = {t:.0e}  direct {direct:.10f}  gap {direct - formula:+.2e}")

# %% the admissible bridge
for label, L, ut, h in bridge_triples():
    u = parse(ut)
    a = first_variation(L, u, admissible_from_inner(u, h))
    b = inner_variation_formula(L, u, h)
    print(f"{label:20s} first variation {a:+.8f}  inner {b:+.8f}")

# %% at an exact solution both vanish
u = parse("exp(x1)")
print(f"Helmholtz at exp(x1): {inner_variation_formula(corpus.helmholtz(), u, h):.2e}")
