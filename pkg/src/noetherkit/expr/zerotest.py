from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .evaluate import DomainError, evaluate
from .nodes import Const, Expression, variables
from .simplify import simplify

#: seed shared by every randomized probe in the package
DEFAULT_SEED = 20240611
DEFAULT_SAMPLES = 100
DEFAULT_TOL = 1e-10
SAMPLE_BOX = (-2.0, 2.0)
MAX_REDRAWS = 1000


class UnableToDecide(RuntimeError):
    pass


@dataclass(frozen=True)
class ZeroTest:
    """Verdict of :func:`is_identically_zero`; truthy iff zero."""

    zero: bool
    path: str  # "structural" or "numeric"
    max_abs: float
    samples: int
    simplified: Expression

    def __bool__(self):
        return self.zero


def is_identically_zero(
    e: Expression,
    samples: int = DEFAULT_SAMPLES,
    tol: float = DEFAULT_TOL,
    seed: int | None = DEFAULT_SEED,
    fixed: dict | None = None,
) -> ZeroTest:
    """Decide whether ``e`` vanishes identically.

    Structural simplification first; if that does not produce the literal 0,
    probe ``samples`` seeded bindings drawn uniformly from [-2, 2] for every
    free variable (variables in ``fixed`` keep their given value).  Bindings
    that hit a singularity are redrawn, at most ``MAX_REDRAWS`` times in
    total.  ``seed=None`` means DEFAULT_SEED, so verdicts are reproducible.
    """
    if samples < 1 or tol <= 0:
        raise ValueError("need samples >= 1 and tol > 0")
    s = simplify(e)
    if isinstance(s, Const) and s.value == 0:
        return ZeroTest(True, "structural", 0.0, 0, s)
    fixed = dict(fixed or {})
    free = sorted((v for v in variables(s) if v not in fixed), key=lambda v: v.sort_key())
    rng = np.random.default_rng(DEFAULT_SEED if seed is None else seed)
    worst = 0.0
    redraws = 0
    done = 0
    while done < samples:
        b = dict(fixed)
        b.update(zip(free, rng.uniform(*SAMPLE_BOX, size=len(free))))
        try:
            value = float(evaluate(s, b))
        except DomainError:
            value = None
        if value is None or not np.isfinite(value):
            redraws += 1
            if redraws > MAX_REDRAWS:
                raise UnableToDecide(f"too many singular samples while probing {s}")
            continue
        worst = max(worst, abs(value))
        done += 1
        if worst > tol:
            break
    return ZeroTest(worst <= tol, "numeric", worst, done, s)
