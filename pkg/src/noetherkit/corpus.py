"""Built-in two-dimensional Lagrangians used by the checks and demos."""

from __future__ import annotations

from fractions import Fraction

from .lagrangian import Lagrangian

DIRICHLET = "1/2*(z1^2 + z2^2)"

#: F(u) choices for the nonlinear Poisson family |z|^2/2 + F(u)
POISSON_F = {
    "linear": "u",
    "quadratic": "u^2",
    "cubic": "u^3 - u",
    "cosine": "cos(u)",
}


def poisson(F: str, name: str = "") -> Lagrangian:
    return Lagrangian.from_string(f"{DIRICHLET} + {F}", 2, name=name or f"poisson[{F}]")


def potential_only(F: str = "u") -> Lagrangian:
    """L = F(u): the classic example with constant solutions of Noether's
    equations that are not critical points."""
    return Lagrangian.from_string(F, 2, name=f"potential[{F}]")


def p_laplacian(p=3, F: str = "u^2", eps=Fraction(1, 1000)) -> Lagrangian:
    """L = phi(|z|^2)/2 + F(u) with phi(s) = (eps + s)^(p/2)."""
    half = Fraction(p) / 2
    body = f"1/2*exp({half}*log(eps + z1^2 + z2^2)) + {F}"
    return Lagrangian.from_string(body, 2, params={"eps": eps}, name=f"p-laplacian[p={p}]")


def quartic_phi(F: str = "u^2", eps=Fraction(1, 1000)) -> Lagrangian:
    """L = phi(|z|^2)/2 + F(u) with the polynomial phi(s) = (eps + s)^2."""
    return Lagrangian.from_string(
        f"1/2*(eps + z1^2 + z2^2)^2 + {F}", 2, params={"eps": eps}, name="phi=(eps+s)^2"
    )


def weighted_dirichlet() -> Lagrangian:
    return Lagrangian.from_string("1/2*(1 + x1^2)*(z1^2 + z2^2) + u^3", 2, name="weighted")


def field_weighted(F: str = "u^3 - u") -> Lagrangian:
    """L = phi(x, u)|z|^2/2 + F(u) with phi = 1 + x1^2 u^2."""
    return Lagrangian.from_string(f"1/2*(1 + x1^2*u^2)*(z1^2 + z2^2) + {F}", 2, name="phi(x,u)")


def helmholtz() -> Lagrangian:
    """Euler-Lagrange equation: Laplace(u) = u."""
    return poisson("1/2*u^2", name="helmholtz")


def torsion() -> Lagrangian:
    """Euler-Lagrange equation: Laplace(u) = 1."""
    return poisson("u", name="torsion")


def corpus() -> list:
    """Every Lagrangian the identity and trace checks run over."""
    out = [poisson(F, name=f"poisson-{k}") for k, F in POISSON_F.items()]
    out += [potential_only("u"), potential_only("u^2"), p_laplacian(), quartic_phi(),
            weighted_dirichlet(), field_weighted(), helmholtz()]
    return out


def x_independent(Ls) -> list:
    return [L for L in Ls if not any(v.kind == "x" for v in _vars(L))]


def _vars(L):
    from .expr import variables

    return variables(L.body)
