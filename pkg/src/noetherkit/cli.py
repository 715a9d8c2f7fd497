"""Command-line front end.

Every report starts with the resolved configuration (including the seed) so
that a run can be repeated exactly.  ``--format json`` emits one JSON
document with sorted keys; identical inputs give byte-identical output.

Exit codes: 0 success, 1 negative verdict, 2 usage or parse error,
3 numeric failure.
"""

from __future__ import annotations

import argparse
import json
import math
import sys
from fractions import Fraction
from pathlib import Path

import numpy as np

from . import __version__, scenarios
from .expr import DEFAULT_SEED, DomainError, ParseError, UnableToDecide, parse, to_string
from .fields import Grid, plateau_check, write_field
from .inverse import (
    LagrangianAnsatz,
    RankDeficient,
    alpha_target,
    default_basis,
    fit,
    format_target,
    load_target,
    verify_solution,
)
from .lagrangian import (
    Lagrangian,
    check_condition_H,
    check_identity_35,
    energy_momentum,
    euler_lagrange,
    format_lagrangian,
    load_lagrangian,
    noether,
)
from .solver import DirichletProblem, NonConvergence, SingularJacobian, describe, solve
from .variations import (
    VariationDirection,
    admissible_from_inner,
    first_variation,
    inner_variation_direct,
    inner_variation_formula,
    make_bump,
)

OK, NEGATIVE, USAGE, NUMERIC = 0, 1, 2, 3
EDGE_TOL = 1e-10


class UsageError(ValueError):
    pass


# ---------------------------------------------------------------- inputs


def read_lagrangian(source: str, dim: int) -> tuple[Lagrangian, str]:
    """A Lagrangian file path, or else an inline expression in ``dim``
    dimensions.  Returns the Lagrangian and a description of the source."""
    path = Path(source)
    if path.is_file():
        return load_lagrangian(path), str(path)
    try:
        body = parse(source)
    except ParseError as err:
        raise UsageError(f"{source!r} is neither a readable file nor a valid expression: {err}") from None
    return Lagrangian(dim, body, {}, "inline"), "inline"


def parse_grid(text: str) -> Grid:
    """``N``, ``N1xN2`` or ``N1,N2,a1,b1,a2,b2``."""
    try:
        if "," in text:
            parts = text.split(",")
            if len(parts) != 6:
                raise ValueError
            return Grid(int(parts[0]), int(parts[1]), *map(float, parts[2:]))
        if "x" in text:
            n1, n2 = text.split("x")
            return Grid(int(n1), int(n2))
        return Grid.square(int(text))
    except ValueError as err:
        detail = f": {err}" if str(err) else ""
        raise UsageError(f"bad grid {text!r}, expected N, N1xN2 or N1,N2,a1,b1,a2,b2{detail}") from None


def parse_numbers(text: str, count: int, what: str) -> tuple:
    try:
        vals = tuple(float(v) for v in text.split(","))
    except ValueError:
        vals = ()
    if len(vals) != count:
        raise UsageError(f"{what} needs {count} comma-separated numbers, got {text!r}")
    return vals


def parse_list(text: str, what: str) -> list:
    items = [t.strip() for t in text.split(",")]
    if not all(items):
        raise UsageError(f"empty entry in {what} {text!r}")
    return [parse(t) for t in items]


def read_target(source: str, dim: int):
    """A target file, or ``alpha=<value>`` for the built-in family."""
    if source.startswith("alpha="):
        try:
            alpha = Fraction(source[len("alpha="):])
        except ValueError:
            raise UsageError(f"bad alpha in {source!r}") from None
        return alpha_target(alpha, dim)
    return load_target(source)


# ---------------------------------------------------------------- output


def _plain(v):
    """Convert a report value into JSON-compatible builtins."""
    if isinstance(v, dict):
        return {str(k): _plain(x) for k, x in v.items()}
    if isinstance(v, (list, tuple)):
        return [_plain(x) for x in v]
    if isinstance(v, (bool, np.bool_)):
        return bool(v)
    if isinstance(v, (int, np.integer)):
        return int(v)
    if isinstance(v, (float, np.floating)):
        v = float(v)
        return v if math.isfinite(v) else repr(v)
    if isinstance(v, Fraction):
        return str(v)
    if v is None or isinstance(v, str):
        return v
    return str(v)


def render_json(report: dict) -> str:
    return json.dumps(_plain(report), sort_keys=True, indent=2, ensure_ascii=False) + "\n"


def _render_text(v, indent: int, lines: list):
    pad = "  " * indent
    if isinstance(v, dict):
        for k, x in v.items():
            if isinstance(x, (dict, list)) and x and not _flat(x):
                lines.append(f"{pad}{k}:")
                _render_text(x, indent + 1, lines)
            elif isinstance(x, str) and "\n" in x:
                lines.append(f"{pad}{k}: |")
                lines.extend(f"{pad}  {row}" for row in x.rstrip("\n").split("\n"))
            else:
                lines.append(f"{pad}{k}: {_inline(x)}")
    else:
        for x in v:
            if isinstance(x, dict):
                lines.append(f"{pad}-")
                _render_text(x, indent + 1, lines)
            else:
                lines.append(f"{pad}- {_inline(x)}")


def _flat(x) -> bool:
    return isinstance(x, list) and all(not isinstance(y, (dict, list)) for y in x)


def _inline(x) -> str:
    if isinstance(x, float):
        return f"{x:.6g}"
    if isinstance(x, list):
        return "[" + ", ".join(_inline(y) for y in x) + "]"
    return str(x)


def render_text(report: dict) -> str:
    lines = []
    _render_text(_plain(report), 0, lines)
    return "\n".join(lines) + "\n"


def _report(args, config: dict, result: dict, status: str) -> dict:
    return {
        "tool": "noetherkit",
        "version": __version__,
        "command": args.command,
        "config": config,
        "status": status,
        "result": result,
    }


# ---------------------------------------------------------------- commands


def _tensor_rows(T) -> list:
    return [[to_string(T[i, j]) for j in range(T.dim)] for i in range(T.dim)]


def cmd_derive(args):
    L, source = read_lagrangian(args.lagrangian, args.dim)
    config = {"lagrangian": format_lagrangian(L), "source": source, "samples": args.samples,
              "seed": args.seed, "zero_tol": 1e-10}
    T = energy_momentum(L)
    nt = noether(L)
    ident = check_identity_35(L, samples=args.samples, seed=args.seed)
    result = {
        "euler_lagrange": to_string(euler_lagrange(L).residual),
        "energy_momentum": _tensor_rows(T),
        "energy_momentum_symmetric": T.is_symmetric(),
        "noether": [to_string(nt[i]) for i in range(L.dim)],
        "identity": {
            "holds": ident.holds,
            "components": [
                {"index": i + 1, "zero": c.zero, "path": c.path, "max_abs": c.max_abs}
                for i, c in enumerate(ident.components)
            ],
        },
    }
    return _report(args, config, result, "PASS" if ident.holds else "FAIL"), (OK if ident.holds else NEGATIVE)


def cmd_check_h(args):
    L, source = read_lagrangian(args.lagrangian, args.dim)
    config = {"lagrangian": format_lagrangian(L), "source": source, "mode": args.mode,
              "samples": args.samples, "seed": args.seed, "zero_tol": 1e-10}
    rep = check_condition_H(L, mode=args.mode, samples=args.samples, seed=args.seed)
    result = {
        "satisfied": rep.satisfied,
        "checks": [
            {"condition": c.label, "expression": to_string(c.expression), "zero": c.verdict.zero,
             "path": c.verdict.path}
            for c in rep.checks
        ],
        "violations": [{"condition": c.label, "expression": to_string(c.expression)} for c in rep.violations],
    }
    status = "SATISFIED" if rep.satisfied else "VIOLATED"
    return _report(args, config, result, status), (OK if rep.satisfied else NEGATIVE)


def cmd_solve(args):
    L, source = read_lagrangian(args.lagrangian, 2)
    grid = parse_grid(args.grid)
    bc = parse(args.bc)
    radius = 3
    config = {"lagrangian": format_lagrangian(L), "source": source, "grid": grid.header(), "bc": to_string(bc),
              "tol": args.tol, "max_iter": args.max_iter, "damping": 1.0, "min_step": 2.0**-20,
              "plateau_eps": grid.h, "plateau_radius_nodes": radius, "out": args.out, "seed": args.seed}
    problem = DirichletProblem(L, grid, bc, tol=args.tol, max_iter=args.max_iter)
    try:
        rep = solve(problem)
    except NonConvergence as err:
        partial = describe(err.report) if err.report is not None else {}
        return _report(args, config, {"error": str(err), "solve": partial}, "NONCONVERGENCE"), NUMERIC
    pv = plateau_check(rep.solution, grid.h, radius)
    result = {
        "solve": describe(rep),
        "plateau": {"found": pv.found, "flat_nodes": pv.size, "center": pv.center, "location": pv.location},
        "solution": {"min": float(rep.solution.values.min()), "max": float(rep.solution.values.max())},
    }
    if args.out:
        write_field(args.out, rep.solution)
    return _report(args, config, result, "CONVERGED"), OK


def cmd_verify(args):
    s = scenarios.run(args.scenario)
    config = {"scenario": args.scenario, "seed": args.seed, **s.settings}
    result = {"checks": [c.as_dict() for c in s.checks], "tables": s.tables}
    return _report(args, config, result, "PASS" if s.passed else "FAIL"), (OK if s.passed else NEGATIVE)


def _direction(args) -> VariationDirection:
    support = parse_numbers(args.support, 4, "--support")
    if args.h:
        comps = tuple(parse_list(args.h, "--h"))
        if len(comps) != 2:
            raise UsageError("--h needs two comma-separated components")
        h = VariationDirection(comps, support)
        a1, b1, a2, b2 = support
        if not (0 < a1 < b1 < 1 and 0 < a2 < b2 < 1):
            raise UsageError(f"support {support} is not strictly inside the unit square")
        edge = h.edge_values(args.nodes)
        if edge > EDGE_TOL:
            raise UsageError(f"h or its gradient does not vanish on the support edges (max {edge:.3g})")
        return h
    return make_bump(support, parse_numbers(args.amplitude, 2, "--amplitude"))


def cmd_innervar(args):
    L, source = read_lagrangian(args.lagrangian, 2)
    u = parse(args.u)
    h = _direction(args)
    config = {"lagrangian": format_lagrangian(L), "source": source, "u": to_string(u),
              "h": [to_string(c) for c in h.components], "support": list(h.support),
              "quadrature_nodes": args.nodes, "t_step": args.t_step, "rtol": args.rtol,
              "floor": scenarios.VARIATION_FLOOR, "seed": args.seed}
    formula = inner_variation_formula(L, u, h, args.nodes)
    direct = inner_variation_direct(L, u, h, args.nodes, args.t_step)
    bridge = first_variation(L, u, admissible_from_inner(u, h), args.nodes)
    rel_direct = scenarios.relative_gap(direct, formula)
    rel_bridge = scenarios.relative_gap(bridge, formula)
    ok = rel_direct <= args.rtol and rel_bridge <= args.rtol
    result = {
        "formula": formula,
        "direct": direct,
        "difference": direct - formula,
        "relative_difference": rel_direct,
        "admissible_variation": to_string(admissible_from_inner(u, h).expr),
        "first_variation": bridge,
        "bridge_difference": bridge - formula,
        "bridge_relative_difference": rel_bridge,
        "diffeomorphism_bound": 1.0 / (2.0 * h.max_row_sum(args.nodes)),
    }
    return _report(args, config, result, "AGREE" if ok else "DISAGREE"), (OK if ok else NEGATIVE)


def cmd_invert(args):
    target = read_target(args.target, args.dim)
    basis = parse_list(args.basis, "--basis") if args.basis else list(default_basis(target.dim))
    ansatz = LagrangianAnsatz(target.dim, tuple(basis))
    m = len(basis)
    samples = args.samples if args.samples is not None else 10 * m
    config = {"target": format_target(target), "source": args.target,
              "basis": [to_string(b) for b in basis], "samples": samples, "tol": args.tol,
              "seed": args.seed, "out": args.out}
    try:
        res = fit(ansatz, target, samples=samples, tol=args.tol, seed=args.seed)
    except RankDeficient as err:
        result = {"error": str(err), "rank": err.rank, "null_dim": err.null_dim}
        return _report(args, config, result, "RANK_DEFICIENT"), NUMERIC
    result = res.as_dict()
    status = "FEASIBLE" if res.feasible else "INFEASIBLE"
    code = OK if res.feasible else NEGATIVE
    if res.lagrangian is not None:
        check = verify_solution(res.lagrangian, target, seed=args.seed)
        result["verified"] = check.holds
        result["failing_entries"] = check.failing()
        if not check.holds:
            status, code = "UNVERIFIED", NEGATIVE
        if args.out:
            Path(args.out).write_text(format_lagrangian(res.lagrangian), encoding="utf-8")
    return _report(args, config, result, status), code


# ---------------------------------------------------------------- parser


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="noetherkit", description=__doc__.split("\n\n")[0])
    ap.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = ap.add_subparsers(dest="command", required=True, metavar="command")

    def common(p):
        p.add_argument("--seed", type=int, default=DEFAULT_SEED, help="seed for randomized probes")
        p.add_argument("--format", choices=("text", "json"), default="text", help="report format")

    def lagrangian(p, with_dim=True):
        p.add_argument("--lagrangian", required=True,
                       help="Lagrangian file, or an inline expression such as '1/2*(z1^2+z2^2) + u'")
        if with_dim:
            p.add_argument("--dim", type=int, default=2, help="dimension of an inline expression (default 2)")

    p = sub.add_parser("derive", help="print EL operator, energy-momentum tensor, Noether operators")
    lagrangian(p)
    p.add_argument("--samples", type=int, default=100, help="numeric probes for the zero test")
    common(p)
    p.set_defaults(func=cmd_derive)

    p = sub.add_parser("check-h", help="evaluate condition (H)")
    lagrangian(p)
    p.add_argument("--mode", choices=("trace", "per_index"), default="trace")
    p.add_argument("--samples", type=int, default=100)
    common(p)
    p.set_defaults(func=cmd_check_h)

    p = sub.add_parser("solve", help="Newton solve of the EL equation with Dirichlet data")
    lagrangian(p, with_dim=False)
    p.add_argument("--grid", default="65", help="N, N1xN2 or N1,N2,a1,b1,a2,b2 (default 65)")
    p.add_argument("--bc", default="0", help="boundary expression in x1, x2")
    p.add_argument("--tol", type=float, default=1e-10, help="residual infinity-norm tolerance")
    p.add_argument("--max-iter", type=int, default=50)
    p.add_argument("--out", help="write the solution field to this file")
    common(p)
    p.set_defaults(func=cmd_solve)

    p = sub.add_parser("verify", help="run a built-in verification scenario")
    p.add_argument("scenario", choices=sorted(scenarios.SCENARIOS))
    common(p)
    p.set_defaults(func=cmd_verify)

    p = sub.add_parser("innervar", help="inner variation by formula and by direct differentiation")
    lagrangian(p, with_dim=False)
    p.add_argument("--u", required=True, help="field u as an expression in x1, x2")
    p.add_argument("--support", default="0.25,0.75,0.25,0.75", help="a1,b1,a2,b2")
    p.add_argument("--amplitude", default="1,0.5", help="bump amplitudes for h1,h2")
    p.add_argument("--h", help="explicit components h1,h2 (override the bump)")
    p.add_argument("--grid", dest="nodes", type=int, default=scenarios.QUAD_NODES,
                   help="quadrature nodes per direction on the support")
    p.add_argument("--t-step", type=float, default=scenarios.T_STEP)
    p.add_argument("--tol", dest="rtol", type=float, default=scenarios.VARIATION_RTOL,
                   help="relative agreement budget")
    common(p)
    p.set_defaults(func=cmd_innervar)

    p = sub.add_parser("invert", help="recover a Lagrangian from an energy-momentum tensor")
    p.add_argument("--target", required=True, help="target file, or alpha=<value>")
    p.add_argument("--dim", type=int, default=2, help="dimension for alpha=<value> targets")
    p.add_argument("--basis", help="comma-separated basis expressions")
    p.add_argument("--samples", type=int, help="training samples (default 10 per coefficient)")
    p.add_argument("--tol", type=float, default=1e-8, help="feasibility tolerance")
    p.add_argument("--out", help="write the recovered Lagrangian to this file")
    common(p)
    p.set_defaults(func=cmd_invert)
    return ap


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        report, code = args.func(args)
    except (ParseError, UsageError, FileNotFoundError, IsADirectoryError, ValueError) as err:
        print(f"noetherkit {args.command}: error: {err}", file=sys.stderr)
        return USAGE
    except (SingularJacobian, DomainError, RankDeficient, UnableToDecide, NonConvergence) as err:
        print(f"noetherkit {args.command}: numeric failure: {err}", file=sys.stderr)
        return NUMERIC
    text = render_json(report) if args.format == "json" else render_text(report)
    sys.stdout.write(text)
    return code


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
