"""Trust-region loop built on mixed-integer linear subproblems.

Each outer iteration linearizes the objective at the current feasible
point and minimizes that model over the feasible set intersected with a
partial-localization ball (the ball constrains only the real variables).
The optimizer of the subproblem doubles as a criticality certificate: the
predicted decrease is the criticality measure, and the run stops once it
falls below the requested tolerance.  Acceptance compares the actual
change of an exponentially averaged merit value against the prediction;
rejected steps shrink the radius like a backtracking line search.
"""

from __future__ import annotations

import time
from dataclasses import dataclass, field
from enum import Enum
from typing import Optional, Union

import numpy as np

from .lp import INF, LinearProgram, Sense
from .milp import Milp, MilpOutcome, MilpStatus, solve_milp
from .model import MixedIntegerPolyhedron, PlNorm, SmoothObjective, check_feasible
from .refine import RefineConfig, refine_fixed_integer

__all__ = [
    "ClassicUpdate",
    "ResetUpdate",
    "SolverConfig",
    "IterationRecord",
    "SolveStatus",
    "SolveResult",
    "InfeasibleProblemError",
    "NegativeCriticalityError",
    "SubproblemError",
    "build_tr_subproblem",
    "criticality_measure",
    "initial_projection",
    "projected_gradient_step",
    "tr_update",
    "solve",
]


class InfeasibleProblemError(RuntimeError):
    """The feasible set is empty (the initial projection found nothing)."""


class NegativeCriticalityError(RuntimeError):
    """The criticality measure came out below the round-off allowance."""


class SubproblemError(RuntimeError):
    """A trust-region subproblem solve did not end optimal."""

    def __init__(self, status: MilpStatus):
        super().__init__(f"subproblem ended with status {status.value}")
        self.status = status


# ---------------------------------------------------------------------------
# radius update rules


@dataclass(frozen=True)
class ClassicUpdate:
    """Three-branch radius update keyed on the achieved/predicted ratio."""

    rho1: float = 0.1
    rho2: float = 0.2
    kappa: float = 0.5

    def __post_init__(self):
        if not 0 < self.kappa < 1:
            raise ValueError("kappa must lie in (0, 1)")
        if not self.rho1 < self.rho2 < 1:
            raise ValueError("need rho1 < rho2 < 1")


@dataclass(frozen=True)
class ResetUpdate:
    """Line-search-like reset: grow the radius, then clamp into a fixed band."""

    delta_min: float = 1e-6
    delta_max: float = 1e3
    growth: float = 2.0

    def __post_init__(self):
        if not 0 < self.delta_min <= self.delta_max:
            raise ValueError("need 0 < delta_min <= delta_max")
        if self.growth < 1:
            raise ValueError("growth must be >= 1")


TrustRegionRule = Union[ClassicUpdate, ResetUpdate]


def tr_update(rho_ratio: float, delta: float, rule: TrustRegionRule) -> float:
    """Next radius from the acceptance ratio and the current radius."""
    if delta <= 0:
        raise ValueError("radius must be positive")
    if isinstance(rule, ClassicUpdate):
        if rho_ratio < rule.rho1:
            return rule.kappa * delta
        if rho_ratio < rule.rho2:
            return delta
        return delta / rule.kappa
    return min(max(delta * rule.growth, rule.delta_min), rule.delta_max)


# ---------------------------------------------------------------------------
# subproblem construction


def _clamped(X: MixedIntegerPolyhedron, x: np.ndarray) -> np.ndarray:
    # guards against iterates sitting epsilon outside a bound
    return np.minimum(np.maximum(x, X.lo), X.hi)


def build_tr_subproblem(
    X: MixedIntegerPolyhedron,
    x_bar: np.ndarray,
    g: np.ndarray,
    delta: float,
    norm: PlNorm,
) -> Milp:
    """MILP minimizing ``<g, x>`` over X within the PL-ball around ``x_bar``.

    The ball never constrains integer variables.  For the max-norm the
    ball tightens the real-variable bounds in place; the 1-norm version
    appends one auxiliary column per real variable carrying its absolute
    deviation, plus the single budget row that their sum stays below
    ``delta``.
    """
    if delta <= 0:
        raise ValueError(f"trust-region radius must be positive, got {delta}")
    x_bar = _clamped(X, np.asarray(x_bar, dtype=float))
    g = np.asarray(g, dtype=float)
    n = X.n_vars
    reals = norm.real_indices

    if norm.p == INF:
        lp = X.to_lp(g)
        for i in reals:
            lp.set_bounds(i, max(X.lo[i], x_bar[i] - delta), min(X.hi[i], x_bar[i] + delta))
        return Milp(lp, X.integer_indices)

    r = len(reals)
    lp = LinearProgram(n + r, len(X.rows) + 2 * r + (1 if r else 0))
    for i in range(n):
        lp.set_bounds(i, X.lo[i], X.hi[i])
    objective = np.zeros(n + r)
    objective[:n] = g
    lp.set_objective(objective)
    for row_index, row in enumerate(X.rows):
        lp.set_row(row_index, row.sense, row.rhs)
        for i, v in row.coeffs:
            lp.add_entry(row_index, i, v)
    base = len(X.rows)
    for k, i in enumerate(reals):
        t = n + k
        lp.set_bounds(t, 0.0, delta)
        lp.set_row(base + 2 * k, Sense.LE, x_bar[i])        # x_i - t_k <= xbar_i
        lp.add_entry(base + 2 * k, i, 1.0)
        lp.add_entry(base + 2 * k, t, -1.0)
        lp.set_row(base + 2 * k + 1, Sense.GE, x_bar[i])    # x_i + t_k >= xbar_i
        lp.add_entry(base + 2 * k + 1, i, 1.0)
        lp.add_entry(base + 2 * k + 1, t, 1.0)
    if r:
        budget = len(X.rows) + 2 * r
        lp.set_row(budget, Sense.LE, delta)
        for k in range(r):
            lp.add_entry(budget, n + k, 1.0)
    return Milp(lp, X.integer_indices)


def criticality_measure(
    X: MixedIntegerPolyhedron,
    objective: SmoothObjective,
    x: np.ndarray,
    delta: float,
    p: float = INF,
    neg_tol: float = 1e-9,
    **milp_options,
) -> float:
    """Largest linearized decrease over the PL-ball of radius ``delta``.

    One MILP solve; nonnegative by construction for feasible ``x``.  A
    value below ``-neg_tol`` raises :class:`NegativeCriticalityError`
    (values inside the allowance are treated as solver round-off and
    clamped to zero).  The zero-radius ball is the point itself, so the
    measure is zero there by convention.
    """
    if delta < 0:
        raise ValueError(f"radius must be nonnegative, got {delta}")
    if delta == 0:
        return 0.0
    x = np.asarray(x, dtype=float)
    g = objective.gradient(x)
    norm = PlNorm.for_set(X, p)
    outcome = solve_milp(build_tr_subproblem(X, x, g, delta, norm), **milp_options)
    if outcome.status != MilpStatus.OPTIMAL:
        raise SubproblemError(outcome.status)
    psi = float(g @ (x - outcome.x[: X.n_vars]))
    if psi < -neg_tol:
        raise NegativeCriticalityError(f"criticality measure {psi} below -{neg_tol}")
    return max(psi, 0.0)


def initial_projection(
    X: MixedIntegerPolyhedron,
    x0: np.ndarray,
    int_tol: float = 1e-6,
    gap_abs: float = 1e-8,
    gap_rel: float = 1e-8,
    node_limit: int = 200000,
    feas_tol: float = 1e-9,
    opt_tol: float = 1e-9,
) -> np.ndarray:
    """Closest feasible point to ``x0`` in the 1-norm, found by one MILP.

    Auxiliary columns carry the absolute deviations per coordinate.
    Raises :class:`InfeasibleProblemError` when the feasible set is empty.
    """
    x0 = np.asarray(x0, dtype=float)
    n = X.n_vars
    lp = LinearProgram(2 * n, len(X.rows) + 2 * n)
    for i in range(n):
        lp.set_bounds(i, X.lo[i], X.hi[i])
        lp.set_bounds(n + i, 0.0, INF)
    objective = np.zeros(2 * n)
    objective[n:] = 1.0
    lp.set_objective(objective)
    for row_index, row in enumerate(X.rows):
        lp.set_row(row_index, row.sense, row.rhs)
        for i, v in row.coeffs:
            lp.add_entry(row_index, i, v)
    base = len(X.rows)
    for i in range(n):
        lp.set_row(base + 2 * i, Sense.LE, x0[i])        # x_i - t_i <= x0_i
        lp.add_entry(base + 2 * i, i, 1.0)
        lp.add_entry(base + 2 * i, n + i, -1.0)
        lp.set_row(base + 2 * i + 1, Sense.GE, x0[i])    # x_i + t_i >= x0_i
        lp.add_entry(base + 2 * i + 1, i, 1.0)
        lp.add_entry(base + 2 * i + 1, n + i, 1.0)
    outcome = solve_milp(
        Milp(lp, X.integer_indices), int_tol, gap_abs, gap_rel, node_limit, feas_tol, opt_tol
    )
    if outcome.status == MilpStatus.INFEASIBLE:
        raise InfeasibleProblemError("the feasible set is empty")
    if outcome.status != MilpStatus.OPTIMAL:
        raise SubproblemError(outcome.status)
    return outcome.x[:n].copy()


def projected_gradient_step(
    X: MixedIntegerPolyhedron,
    objective: SmoothObjective,
    x_bar: np.ndarray,
    gamma: float,
    p: float = INF,
    **milp_options,
) -> np.ndarray:
    """Closest feasible point to the gradient-step target, in the full p-norm.

    Minimizes ``|| xbar - gamma grad - x ||_p`` over X via one MILP.  The
    distance bound ``||x+ - xbar||_p <= 2 gamma ||grad||_p`` follows from
    feasibility of ``x_bar`` itself and the triangle inequality.
    """
    if gamma <= 0:
        raise ValueError(f"stepsize must be positive, got {gamma}")
    x_bar = np.asarray(x_bar, dtype=float)
    target = x_bar - gamma * objective.gradient(x_bar)
    n = X.n_vars

    if p == 1:
        aux = n
    elif p == INF:
        aux = 1
    else:
        raise ValueError(f"p must be 1 or inf, got {p}")

    lp = LinearProgram(n + aux, len(X.rows) + 2 * n)
    for i in range(n):
        lp.set_bounds(i, X.lo[i], X.hi[i])
    for j in range(aux):
        lp.set_bounds(n + j, 0.0, INF)
    objective_vec = np.zeros(n + aux)
    objective_vec[n:] = 1.0
    lp.set_objective(objective_vec)
    for row_index, row in enumerate(X.rows):
        lp.set_row(row_index, row.sense, row.rhs)
        for i, v in row.coeffs:
            lp.add_entry(row_index, i, v)
    base = len(X.rows)
    for i in range(n):
        t = n + (i if p == 1 else 0)
        lp.set_row(base + 2 * i, Sense.LE, target[i])
        lp.add_entry(base + 2 * i, i, 1.0)
        lp.add_entry(base + 2 * i, t, -1.0)
        lp.set_row(base + 2 * i + 1, Sense.GE, target[i])
        lp.add_entry(base + 2 * i + 1, i, 1.0)
        lp.add_entry(base + 2 * i + 1, t, 1.0)
    outcome = solve_milp(Milp(lp, X.integer_indices), **milp_options)
    if outcome.status != MilpStatus.OPTIMAL:
        raise SubproblemError(outcome.status)
    return outcome.x[:n].copy()


# ---------------------------------------------------------------------------
# the outer loop


@dataclass
class SolverConfig:
    """Knobs of the outer loop; defaults follow the experimental protocol."""

    eps: float = 1e-8              # criticality tolerance
    delta0: float = 1.0            # initial radius
    rho: float = 0.1               # acceptance threshold on achieved/predicted
    kappa: float = 0.5             # radius backtracking factor
    kappa_m: float = 0.5           # merit averaging weight (1 = monotone)
    p: float = INF                 # partial-localization norm, 1 or inf
    tr_rule: Optional[TrustRegionRule] = None  # default: classic(rho, 2 rho, kappa)
    max_outer_iterations: int = 500
    max_backtracks: int = 60
    refine_enabled: bool = False
    refine: Optional[RefineConfig] = None      # default tolerance follows eps
    f_floor: float = -1e12         # divergence sentinel on the objective
    neg_tol: float = 1e-9          # round-off allowance before failing
    int_tol: float = 1e-6
    gap_abs: float = 1e-8
    gap_rel: float = 1e-8
    node_limit: int = 200000
    feas_tol: float = 1e-9
    opt_tol: float = 1e-9
    check_feas_tol: float = 1e-8   # feasibility screening of iterates

    def __post_init__(self):
        if self.eps <= 0:
            raise ValueError("eps must be positive")
        if self.delta0 <= 0:
            raise ValueError("delta0 must be positive")
        if not 0 < self.rho < 1:
            raise ValueError("rho must lie in (0, 1)")
        if not 0 < self.kappa < 1:
            raise ValueError("kappa must lie in (0, 1)")
        if not 0 < self.kappa_m <= 1:
            raise ValueError("kappa_m must lie in (0, 1]")
        if self.p not in (1, 1.0, INF):
            raise ValueError("p must be 1 or inf")
        rule = self.rule()
        if isinstance(rule, ClassicUpdate) and not self.rho <= rule.rho1:
            raise ValueError("need rho <= rho1")

    def rule(self) -> TrustRegionRule:
        if self.tr_rule is not None:
            return self.tr_rule
        return ClassicUpdate(self.rho, 2 * self.rho, self.kappa)

    def refine_config(self) -> RefineConfig:
        if self.refine is not None:
            return self.refine
        return RefineConfig(tolerance=self.eps)


@dataclass(frozen=True)
class IterationRecord:
    """State at the start of iteration ``k`` plus the step taken from it."""

    k: int
    x: np.ndarray                  # iterate the step started from
    f: float                       # objective there
    m: float                       # merit value there
    delta: float                   # accepted (post-backtracking) radius
    psi: float                     # criticality measure of the solved subproblem
    a: float                       # merit minus trial objective, pre-refinement
    rho_ratio: float               # a / psi
    backtracks: int                # rejected radii before acceptance
    milp_nodes: int                # branch-and-bound nodes across the attempts
    refined: bool


class SolveStatus(str, Enum):
    CRITICAL = "critical"
    ITERATION_LIMIT = "iteration_limit"
    BACKTRACK_LIMIT = "backtrack_limit"
    MILP_SUBPROBLEM_INFEASIBLE = "milp_subproblem_infeasible"
    NEGATIVE_CRITICALITY = "negative_criticality"
    OBJECTIVE_DIVERGING = "objective_diverging"


@dataclass
class SolveResult:
    status: SolveStatus
    x: np.ndarray
    objective: float
    iterations: list[IterationRecord] = field(default_factory=list)
    milp_count: int = 0            # trust-region subproblem solves, all attempts
    milp_nodes: int = 0
    refinement_count: int = 0
    projected: bool = False
    projection_distance: float = 0.0
    final_psi: float = float("nan")
    final_delta: float = float("nan")
    accepted_count: int = 0        # accepted steps; trace may add a terminal row
    runtime_seconds: float = 0.0
    projection_seconds: float = 0.0
    detail: str = ""


def _integer_blocks_equal(X: MixedIntegerPolyhedron, a: np.ndarray, b: np.ndarray) -> bool:
    return all(round(a[i]) == round(b[i]) for i in X.integer_indices)


def solve(
    X: MixedIntegerPolyhedron,
    objective: SmoothObjective,
    x0: np.ndarray,
    config: SolverConfig = SolverConfig(),
) -> SolveResult:
    """Run the sequential linearization loop from ``x0``.

    Parameters
    ----------
    X : MixedIntegerPolyhedron
        Feasible set; must be nonempty (an empty set raises
        :class:`InfeasibleProblemError` out of the initial projection).
    objective : SmoothObjective
        Smooth-in-reals, linear-in-integers objective.
    x0 : array
        Starting point.  Infeasible starts are projected onto the set by
        a 1-norm MILP before the loop begins.
    config : SolverConfig
        Tolerances, radius rule and refinement switches.

    Returns a :class:`SolveResult`; the ``critical`` status certifies that
    the last criticality measure was at most ``config.eps`` at a feasible
    point.  Merit values decrease strictly across accepted steps and every
    iterate stays feasible, whatever the final status.
    """
    x = np.asarray(x0, dtype=float).copy()
    if x.shape != (X.n_vars,):
        raise ValueError(f"x0 has shape {x.shape}, expected ({X.n_vars},)")

    result = SolveResult(SolveStatus.ITERATION_LIMIT, x, float("nan"))
    milp_options = dict(
        int_tol=config.int_tol,
        gap_abs=config.gap_abs,
        gap_rel=config.gap_rel,
        node_limit=config.node_limit,
        feas_tol=config.feas_tol,
        opt_tol=config.opt_tol,
    )

    projection_start = time.perf_counter()
    report = check_feasible(X, x, config.check_feas_tol, config.int_tol)
    if not report.feasible:
        x = initial_projection(X, x, **milp_options)
        result.projected = True
        result.projection_distance = float(np.sum(np.abs(x - np.asarray(x0, dtype=float))))
    result.projection_seconds = time.perf_counter() - projection_start

    start = time.perf_counter()
    norm = PlNorm.for_set(X, config.p)
    rule = config.rule()
    refine_cfg = config.refine_config()

    fx = objective.value(x)
    g = objective.gradient(x)
    m = fx
    delta = config.delta0

    def finish(status: SolveStatus, point: np.ndarray, value: float, detail: str = "") -> SolveResult:
        result.status = status
        result.x = point
        result.objective = value
        result.detail = detail
        result.runtime_seconds = time.perf_counter() - start
        return result

    for k in range(config.max_outer_iterations):
        backtracks = 0
        nodes_this_iteration = 0
        while True:
            subproblem = build_tr_subproblem(X, x, g, delta, norm)
            outcome = solve_milp(subproblem, **milp_options)
            result.milp_count += 1
            nodes_this_iteration += outcome.node_count
            result.milp_nodes += outcome.node_count
            if outcome.status != MilpStatus.OPTIMAL:
                return finish(
                    SolveStatus.MILP_SUBPROBLEM_INFEASIBLE,
                    x,
                    fx,
                    f"subproblem status {outcome.status.value} at iteration {k}",
                )
            trial = outcome.x[: X.n_vars]
            psi = float(g @ (x - trial))
            if psi < -config.neg_tol:
                result.final_psi = psi
                result.final_delta = delta
                return finish(
                    SolveStatus.NEGATIVE_CRITICALITY, x, fx, f"criticality measure {psi}"
                )
            psi = max(psi, 0.0)
            f_trial = objective.value(trial)
            a = m - f_trial

            if psi <= config.eps:
                result.final_psi = psi
                result.final_delta = delta
                ratio = a / psi if psi > 0 else float("nan")
                result.iterations.append(
                    IterationRecord(
                        k, x.copy(), fx, m, delta, psi, a, ratio, backtracks,
                        nodes_this_iteration, False,
                    )
                )
                return finish(SolveStatus.CRITICAL, x, fx)

            if a >= config.rho * psi:
                break
            backtracks += 1
            if backtracks > config.max_backtracks:
                result.final_psi = psi
                result.final_delta = delta
                return finish(
                    SolveStatus.BACKTRACK_LIMIT,
                    x,
                    fx,
                    f"no acceptable radius after {backtracks - 1} backtracks",
                )
            delta *= config.kappa

        x_next = trial.copy()
        f_next = f_trial
        refined = False
        if config.refine_enabled and _integer_blocks_equal(X, x, x_next):
            polished = refine_fixed_integer(
                X, objective, x_next, refine_cfg, config.feas_tol, config.opt_tol
            )
            x_next = polished.x
            f_next = polished.objective
            refined = True
            result.refinement_count += 1

        ratio = a / psi
        result.iterations.append(
            IterationRecord(
                k, x.copy(), fx, m, delta, psi, a, ratio, backtracks,
                nodes_this_iteration, refined,
            )
        )
        result.accepted_count += 1

        m = (1.0 - config.kappa_m) * m + config.kappa_m * f_next
        delta = tr_update(ratio, delta, rule)
        x = x_next
        fx = f_next
        g = objective.gradient(x)

        if fx < config.f_floor:
            result.final_psi = psi
            result.final_delta = delta
            return finish(
                SolveStatus.OBJECTIVE_DIVERGING, x, fx, f"objective {fx} below the floor"
            )

    result.final_delta = delta
    return finish(SolveStatus.ITERATION_LIMIT, x, fx, "outer iteration budget exhausted")
