"""Branch-and-bound solver for mixed-integer linear programs.

Relaxations are solved by the deterministic simplex engine in
:mod:`smil.lp`.  Branching is most-fractional, node selection is
best-bound-first with a depth-first tie-break, and ties between incumbents
of equal objective are resolved first-found-wins, so the search order and
the returned optimizer are reproducible.
"""

from __future__ import annotations

import heapq
from dataclasses import dataclass, field
from enum import Enum
from typing import Optional

import numpy as np

from .lp import INF, LinearProgram, LpStatus, solve_lp

__all__ = ["Milp", "MilpStatus", "MilpOutcome", "solve_milp"]


class MilpStatus(str, Enum):
    OPTIMAL = "optimal"
    INFEASIBLE = "infeasible"
    NODE_LIMIT = "node_limit"
    SOLVER_FAILURE = "solver_failure"


@dataclass(frozen=True)
class Milp:
    """A linear program plus an integrality requirement on some columns.

    Every integer column must carry finite bounds; without that the
    enumeration implicit in branch and bound has no floor.
    """

    base: LinearProgram
    integer_indices: tuple[int, ...]

    def __post_init__(self):
        seen = set()
        for i in self.integer_indices:
            if not 0 <= i < self.base.n_vars:
                raise ValueError(f"integer index {i} out of range")
            if i in seen:
                raise ValueError(f"integer index {i} repeated")
            seen.add(i)
            if not (self.base.lo[i] > -INF and self.base.hi[i] < INF):
                raise ValueError(f"integer column {i} must have finite bounds")


@dataclass
class MilpOutcome:
    status: MilpStatus
    x: Optional[np.ndarray]
    objective: float
    node_count: int
    best_bound: float
    # (parent relaxation bound, child relaxation bound) per solved child node
    bound_pairs: list[tuple[float, float]] = field(default_factory=list)


@dataclass(order=True)
class _Node:
    bound: float
    neg_depth: int
    counter: int
    lo: np.ndarray = field(compare=False)
    hi: np.ndarray = field(compare=False)


def _fractionality(x: np.ndarray, integer_indices):
    # most-fractional column; ties go to the smallest index
    worst = -1.0
    worst_index = -1
    for i in integer_indices:
        frac = abs(x[i] - round(x[i]))
        if frac > worst:
            worst = frac
            worst_index = i
    return worst_index, worst


def solve_milp(
    problem: Milp,
    int_tol: float = 1e-6,
    gap_abs: float = 1e-8,
    gap_rel: float = 1e-8,
    node_limit: int = 200000,
    feas_tol: float = 1e-9,
    opt_tol: float = 1e-9,
    collect_bound_pairs: bool = False,
) -> MilpOutcome:
    """Minimize ``problem`` by LP-based branch and bound.

    On :data:`MilpStatus.OPTIMAL` the incumbent is integral within
    ``int_tol``, feasible within ``feas_tol`` and its objective is within
    ``max(gap_abs, gap_rel * |objective|)`` of the proven bound.  A node
    budget exhaustion returns :data:`MilpStatus.NODE_LIMIT` with the best
    incumbent found (if any); failures of the inner LP engine surface as
    :data:`MilpStatus.SOLVER_FAILURE`.
    """
    base = problem.base
    integer_indices = problem.integer_indices
    if not integer_indices:
        outcome = solve_lp(base, feas_tol, opt_tol)
        if outcome.status == LpStatus.OPTIMAL:
            return MilpOutcome(MilpStatus.OPTIMAL, outcome.x, outcome.objective, 1, outcome.objective)
        if outcome.status == LpStatus.INFEASIBLE:
            return MilpOutcome(MilpStatus.INFEASIBLE, None, float("nan"), 1, INF)
        return MilpOutcome(MilpStatus.SOLVER_FAILURE, None, float("nan"), 1, -INF)

    incumbent_x: Optional[np.ndarray] = None
    incumbent_obj = INF
    lowest_open = INF  # tightest bound among nodes pruned by the gap rule
    node_count = 0
    counter = 0
    bound_pairs: list[tuple[float, float]] = []

    heap: list[_Node] = []
    root = _Node(-INF, 0, counter, base.lo.copy(), base.hi.copy())
    heapq.heappush(heap, root)

    work = base.copy()

    def cutoff() -> float:
        if incumbent_x is None:
            return INF
        return incumbent_obj - max(gap_abs, gap_rel * abs(incumbent_obj))

    while heap:
        if node_count >= node_limit:
            open_bounds = [node.bound for node in heap]
            best_bound = min([lowest_open, incumbent_obj] + open_bounds)
            status = MilpStatus.NODE_LIMIT
            return MilpOutcome(status, incumbent_x, incumbent_obj if incumbent_x is not None else float("nan"), node_count, best_bound, bound_pairs)

        node = heapq.heappop(heap)
        if node.bound >= cutoff():
            lowest_open = min(lowest_open, node.bound)
            continue

        work.lo = node.lo
        work.hi = node.hi
        outcome = solve_lp(work, feas_tol, opt_tol)
        node_count += 1
        if outcome.status == LpStatus.INFEASIBLE:
            continue
        if outcome.status != LpStatus.OPTIMAL:
            # unbounded relaxations mean unbounded continuous directions
            # (a modeling bug under bounded integers); engine failures land
            # here as well and both abort the search
            return MilpOutcome(MilpStatus.SOLVER_FAILURE, None, float("nan"), node_count, -INF, bound_pairs)

        if collect_bound_pairs and node.counter > 0:
            bound_pairs.append((node.bound, outcome.objective))
        if outcome.objective >= cutoff():
            lowest_open = min(lowest_open, max(node.bound, outcome.objective))
            continue

        branch_var, frac = _fractionality(outcome.x, integer_indices)
        if frac <= int_tol:
            if outcome.objective < incumbent_obj - 1e-12:  # first found wins ties
                incumbent_obj = outcome.objective
                incumbent_x = outcome.x.copy()
            continue

        value = outcome.x[branch_var]
        depth = -node.neg_depth + 1
        down = _Node(outcome.objective, -depth, counter + 1, node.lo.copy(), node.hi.copy())
        down.hi[branch_var] = np.floor(value)
        up = _Node(outcome.objective, -depth, counter + 2, node.lo.copy(), node.hi.copy())
        up.lo[branch_var] = np.ceil(value)
        counter += 2
        if down.lo[branch_var] <= down.hi[branch_var]:
            heapq.heappush(heap, down)
        if up.lo[branch_var] <= up.hi[branch_var]:
            heapq.heappush(heap, up)

    if incumbent_x is None:
        return MilpOutcome(MilpStatus.INFEASIBLE, None, float("nan"), node_count, INF, bound_pairs)
    best_bound = min(incumbent_obj, lowest_open)
    return MilpOutcome(MilpStatus.OPTIMAL, incumbent_x, incumbent_obj, node_count, best_bound, bound_pairs)
