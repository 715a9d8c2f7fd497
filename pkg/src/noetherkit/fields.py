"""Scalar fields on uniform rectangular grids.

Arrays are stored with shape ``(n2, n1)``: the first axis runs along ``x2``
(low to high), the second along ``x1``.  Every derived quantity is computed
with second-order central stencils on interior nodes only; an
:class:`InteriorField` remembers how many boundary rings (``margin``) it
excludes.
"""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path

import numpy as np
from scipy import ndimage

from .expr import DomainError, Expression, Param, U, W, X, Z, evaluate_on, variables


@dataclass(frozen=True)
class Grid:
    n1: int
    n2: int
    a1: float = 0.0
    b1: float = 1.0
    a2: float = 0.0
    b2: float = 1.0

    def __post_init__(self):
        if self.n1 < 5 or self.n2 < 5:
            raise ValueError("grids need at least 5 nodes per direction")
        if not (self.b1 > self.a1 and self.b2 > self.a2):
            raise ValueError("empty rectangle")

    @classmethod
    def square(cls, n: int, a: float = 0.0, b: float = 1.0) -> "Grid":
        return cls(n, n, a, b, a, b)

    @property
    def shape(self):
        return (self.n2, self.n1)

    @property
    def h1(self) -> float:
        return (self.b1 - self.a1) / (self.n1 - 1)

    @property
    def h2(self) -> float:
        return (self.b2 - self.a2) / (self.n2 - 1)

    @property
    def h(self) -> float:
        return max(self.h1, self.h2)

    @property
    def area(self) -> float:
        return (self.b1 - self.a1) * (self.b2 - self.a2)

    def axes(self):
        return np.linspace(self.a1, self.b1, self.n1), np.linspace(self.a2, self.b2, self.n2)

    def coords(self):
        """Node coordinates ``(x1, x2)`` as ``(n2, n1)`` arrays."""
        x1, x2 = self.axes()
        return np.meshgrid(x1, x2)

    def boundary_mask(self) -> np.ndarray:
        mask = np.zeros(self.shape, dtype=bool)
        mask[0, :] = mask[-1, :] = mask[:, 0] = mask[:, -1] = True
        return mask

    def trapezoid_weights(self) -> np.ndarray:
        w1 = np.full(self.n1, self.h1)
        w1[[0, -1]] *= 0.5
        w2 = np.full(self.n2, self.h2)
        w2[[0, -1]] *= 0.5
        return np.outer(w2, w1)

    def header(self) -> str:
        return f"grid {self.n1} {self.n2} {self.a1!r} {self.b1!r} {self.a2!r} {self.b2!r}"


@dataclass(frozen=True)
class ScalarField:
    grid: Grid
    values: np.ndarray

    def __post_init__(self):
        values = np.asarray(self.values, dtype=float)
        if values.shape != self.grid.shape:
            raise ValueError(f"expected shape {self.grid.shape}, got {values.shape}")
        if not np.all(np.isfinite(values)):
            raise ValueError("field values must be finite")
        object.__setattr__(self, "values", values)

    @classmethod
    def from_function(cls, grid: Grid, f) -> "ScalarField":
        x1, x2 = grid.coords()
        return cls(grid, np.broadcast_to(f(x1, x2), grid.shape).astype(float))

    @classmethod
    def from_expression(cls, grid: Grid, e: Expression, params=None) -> "ScalarField":
        x1, x2 = grid.coords()
        b = {X(1): x1, X(2): x2, **(params or {})}
        return cls(grid, evaluate_on(e, b, grid.shape))

    @classmethod
    def constant(cls, grid: Grid, c: float) -> "ScalarField":
        return cls(grid, np.full(grid.shape, float(c)))


@dataclass(frozen=True)
class InteriorField:
    """Values on the nodes at least ``margin`` nodes away from the boundary."""

    grid: Grid
    values: np.ndarray
    margin: int = 1

    def max_abs(self, shrink: int = 0) -> float:
        v = self.values
        if shrink:
            v = v[shrink:-shrink, shrink:-shrink]
        return float(np.max(np.abs(v))) if v.size else 0.0

    def full(self) -> np.ndarray:
        """Zero-extended to the whole grid."""
        out = np.zeros(self.grid.shape)
        m = self.margin
        out[m:self.grid.n2 - m, m:self.grid.n1 - m] = self.values
        return out

    def coords(self):
        m = self.margin
        x1, x2 = self.grid.coords()
        return x1[m:-m, m:-m], x2[m:-m, m:-m]

    def node(self, flat_index: int):
        """Grid indices ``(i1, i2)`` of a flat index into ``values``."""
        r, c = np.unravel_index(flat_index, self.values.shape)
        return int(c) + self.margin, int(r) + self.margin


@dataclass(frozen=True)
class JetField:
    """Discrete (x, u, Du, D^2u) on the interior nodes (margin 1)."""

    grid: Grid
    x1: np.ndarray
    x2: np.ndarray
    u: np.ndarray
    z1: np.ndarray
    z2: np.ndarray
    w11: np.ndarray
    w12: np.ndarray
    w22: np.ndarray

    def binding(self, params=None) -> dict:
        return {
            X(1): self.x1, X(2): self.x2, U: self.u,
            Z(1): self.z1, Z(2): self.z2,
            W(1, 1): self.w11, W(1, 2): self.w12, W(2, 2): self.w22,
            **(params or {}),
        }

    @property
    def grad_norm(self) -> np.ndarray:
        return np.hypot(self.z1, self.z2)


def jet(u: ScalarField) -> JetField:
    g = u.grid
    v = u.values
    h1, h2 = g.h1, g.h2
    c = v[1:-1, 1:-1]
    east, west = v[1:-1, 2:], v[1:-1, :-2]
    north, south = v[2:, 1:-1], v[:-2, 1:-1]
    x1, x2 = g.coords()
    return JetField(
        grid=g,
        x1=x1[1:-1, 1:-1],
        x2=x2[1:-1, 1:-1],
        u=c,
        z1=(east - west) / (2 * h1),
        z2=(north - south) / (2 * h2),
        w11=(east - 2 * c + west) / h1**2,
        w22=(north - 2 * c + south) / h2**2,
        w12=(v[2:, 2:] - v[2:, :-2] - v[:-2, 2:] + v[:-2, :-2]) / (4 * h1 * h2),
    )


def _check_dimension(op: Expression):
    for var in variables(op):
        if var.kind in ("x", "z") and var.index > 2:
            raise ValueError(f"{var.name} is outside the two grid dimensions")
        if var.kind == "w" and max(var.key) > 2:
            raise ValueError(f"{var.name} is outside the two grid dimensions")


def _param_binding(params):
    if not params:
        return {}
    return {(Param(k) if isinstance(k, str) else k): float(v) for k, v in params.items()}


def eval_operator(op: Expression, u, params=None) -> InteriorField:
    """Evaluate a jet-space expression at every interior node of ``u``.

    ``u`` may be a ScalarField or an already computed JetField.  A
    singularity aborts with a DomainError naming the node.
    """
    _check_dimension(op)
    j = u if isinstance(u, JetField) else jet(u)
    shape = j.u.shape
    try:
        values = evaluate_on(op, j.binding(_param_binding(params)), shape)
    except DomainError as err:
        where = ""
        if err.index is not None:
            r, c = np.unravel_index(err.index, shape)
            where = f" at node ({c + 1}, {r + 1}), x = ({j.x1[r, c]:.6g}, {j.x2[r, c]:.6g})"
        raise DomainError(f"{err}{where}", err.index) from None
    return InteriorField(j.grid, values, 1)


def integrate(f) -> float:
    """Composite trapezoidal rule over the grid rectangle.

    Accepts a ScalarField, an InteriorField (extended by zero) or a raw
    ``(n2, n1)`` array together with its grid as ``(grid, array)``.
    """
    if isinstance(f, ScalarField):
        grid, values = f.grid, f.values
    elif isinstance(f, InteriorField):
        grid, values = f.grid, f.full()
    else:
        grid, values = f
    return float(np.sum(grid.trapezoid_weights() * values))


def divergence(rows, grid: Grid) -> list:
    """Row-wise central divergence of a tensor field.

    ``rows[i][j]`` are InteriorFields sharing a margin ``m``; the result has
    margin ``m + 1``: ``sum_j (T_ij(+e_j) - T_ij(-e_j)) / (2 h_j)``.
    """
    out = []
    for row in rows:
        m = row[0].margin
        t1, t2 = row[0].values, row[1].values
        d = (t1[1:-1, 2:] - t1[1:-1, :-2]) / (2 * grid.h1) + (t2[2:, 1:-1] - t2[:-2, 1:-1]) / (2 * grid.h2)
        out.append(InteriorField(grid, d, m + 1))
    return out


@dataclass(frozen=True)
class PlateauVerdict:
    found: bool
    eps: float
    radius_nodes: int
    size: int  # number of interior nodes with |Du| <= eps
    center: tuple | None = None  # grid indices (i1, i2)
    location: tuple | None = None  # coordinates (x1, x2)


def _disc(radius: int) -> np.ndarray:
    r = np.arange(-radius, radius + 1)
    return (r[:, None] ** 2 + r[None, :] ** 2) <= radius**2


def plateau_check(u: ScalarField, eps: float, radius_nodes: int) -> PlateauVerdict:
    """Look for a discrete disc of ``radius_nodes`` inside {|Du| <= eps}.

    Only interior nodes carry a gradient, so a disc must fit in the interior.
    Among several candidates the first in row-major order is reported.
    """
    if eps <= 0 or radius_nodes < 1:
        raise ValueError("need eps > 0 and radius_nodes >= 1")
    j = jet(u)
    flat = j.grad_norm <= eps
    centers = ndimage.binary_erosion(flat, structure=_disc(radius_nodes), border_value=0)
    if not centers.any():
        return PlateauVerdict(False, eps, radius_nodes, int(flat.sum()))
    r, c = np.argwhere(centers)[0]
    return PlateauVerdict(
        True, eps, radius_nodes, int(flat.sum()),
        center=(int(c) + 1, int(r) + 1),
        location=(float(j.x1[r, c]), float(j.x2[r, c])),
    )


def write_field(path, u: ScalarField) -> None:
    """Plain-text matrix: header line, then ``n2`` rows of ``n1`` values
    from low x2 to high x2."""
    lines = [u.grid.header()]
    lines += [" ".join(format(v, ".17g") for v in row) for row in u.values]
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")


def read_field(path) -> ScalarField:
    text = Path(path).read_text(encoding="utf-8").split("\n")
    head = text[0].split()
    if len(head) != 7 or head[0] != "grid":
        raise ValueError("field file must start with 'grid n1 n2 a1 b1 a2 b2'")
    n1, n2 = int(head[1]), int(head[2])
    grid = Grid(n1, n2, *map(float, head[3:]))
    rows = [line.split() for line in text[1:] if line.strip()]
    values = np.array(rows, dtype=float)
    return ScalarField(grid, values)
