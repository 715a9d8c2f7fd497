"""Euler-Lagrange operators, energy-momentum tensors and Noether equations
for scalar variational problems, with finite-difference checks."""

__version__ = "0.1.0"
