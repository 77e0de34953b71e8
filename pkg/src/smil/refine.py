"""Fixed-integer polishing of a feasible point.

With the integer block pinned at its current value the feasible set is an
ordinary polytope, so the real block can be improved by a conditional
gradient loop: one LP per inner iteration supplies the best vertex for
the linearized objective, and an Armijo backtracking step along the
vertex direction guarantees the objective never increases.  The integer
block is returned bit-for-bit unchanged.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .lp import LpStatus, solve_lp
from .model import MixedIntegerPolyhedron, SmoothObjective

__all__ = ["RefineConfig", "RefineResult", "RefineError", "refine_fixed_integer"]


class RefineError(RuntimeError):
    """The inner LP engine failed while polishing."""


@dataclass(frozen=True)
class RefineConfig:
    tolerance: float = 1e-8          # conditional-gradient gap target
    max_iterations: int = 500
    armijo_coeff: float = 1e-4       # sufficient-decrease fraction of the gap
    backtrack_factor: float = 0.5

    def __post_init__(self):
        if not 0 < self.armijo_coeff < 1:
            raise ValueError("armijo_coeff must lie in (0, 1)")
        if not 0 < self.backtrack_factor < 1:
            raise ValueError("backtrack_factor must lie in (0, 1)")
        if self.tolerance < 0:
            raise ValueError("tolerance must be nonnegative")
        if self.max_iterations < 0:
            raise ValueError("max_iterations must be nonnegative")


@dataclass
class RefineResult:
    x: np.ndarray
    objective: float
    iterations: int
    lp_count: int
    gap: float                       # last evaluated linearization gap
    gaps: list[float] = field(default_factory=list)


def refine_fixed_integer(
    X: MixedIntegerPolyhedron,
    objective: SmoothObjective,
    x: np.ndarray,
    cfg: RefineConfig = RefineConfig(),
    feas_tol: float = 1e-9,
    opt_tol: float = 1e-9,
) -> RefineResult:
    """Improve the real block of feasible ``x`` without touching its integers.

    Stops once the linearization gap ``max_s <grad, x - s>`` over the
    fixed-integer polytope drops to ``cfg.tolerance``, or on the iteration
    budget; either way the returned point is feasible with a no-worse
    objective.
    """
    x = np.asarray(x, dtype=float).copy()
    lp = X.to_lp()
    for i in X.integer_indices:
        lp.set_bounds(i, x[i], x[i])  # exact current values, not re-rounded

    fx = objective.value(x)
    lp_count = 0
    gaps: list[float] = []
    gap = np.inf

    for iteration in range(cfg.max_iterations + 1):
        g = objective.gradient(x)
        lp.set_objective(g)
        outcome = solve_lp(lp, feas_tol, opt_tol)
        lp_count += 1
        if outcome.status != LpStatus.OPTIMAL:
            raise RefineError(f"fixed-integer LP ended with status {outcome.status.value}")
        vertex = outcome.x
        gap = float(g @ (x - vertex))
        gaps.append(gap)
        if gap <= cfg.tolerance or iteration == cfg.max_iterations:
            return RefineResult(x, fx, iteration, lp_count, gap, gaps)

        direction = vertex - x
        step = 1.0
        accepted = False
        while step > 1e-14:
            candidate = x + step * direction
            f_candidate = objective.value(candidate)
            if f_candidate <= fx - cfg.armijo_coeff * step * gap:
                x = candidate
                fx = f_candidate
                accepted = True
                break
            step *= cfg.backtrack_factor
        if not accepted:
            # flat to machine precision along the vertex direction
            return RefineResult(x, fx, iteration, lp_count, gap, gaps)

    return RefineResult(x, fx, cfg.max_iterations, lp_count, gap, gaps)
