"""Recovering a Lagrangian from its energy-momentum tensor.

The defining system z_i L_{z_j} - delta_ij L = T_ij is linear in L. With a
finite basis it becomes a sampled least-squares problem whose residual on
fresh samples decides feasibility.
"""

# %%
from noetherkit.expr import to_string
from noetherkit.inverse import LagrangianAnsatz, TensorTarget, alpha_target, fit, verify_solution

ansatz = LagrangianAnsatz.default()
print("basis:", [to_string(b) for b in ansatz.basis])

for alpha in (0, 1, 2):
    r = fit(ansatz, alpha_target(alpha))
    print(f"alpha = {alpha}: L = {to_string(r.lagrangian.body)}  validation {r.validation_residual:.1e}")
    print("  verified symbolically:", verify_solution(r.lagrangian, alpha_target(alpha)).holds)

# %% a tensor no basis Lagrangian produces
rows = [[to_string(e) for e in row] for row in alpha_target(1).entries]
rows[0][1] = "u*z1"
r = fit(ansatz, TensorTarget.from_strings(rows))
print(f"perturbed target feasible: {r.feasible}, validation residual {r.validation_residual:.3f}")
print("per-entry misfit:", [[f"{v:.2e}" for v in row] for row in r.entry_residual])
