"""Brute-force baselines used to validate the solver engines.

These deliberately avoid the branch-and-bound and trust-region code
paths: the LP oracle enumerates active sets, and the integer oracles fix
every integer combination explicitly.  They only call the simplex engine
(for the continuous subproblems of the enumeration) and the fixed-integer
polishing loop.
"""

from __future__ import annotations

from dataclasses import dataclass
from itertools import combinations, product
from typing import Optional, Sequence

import numpy as np

from .lp import INF, LinearProgram, LpOutcome, LpStatus, Sense, solve_lp
from .milp import Milp, MilpOutcome, MilpStatus
from .model import MixedIntegerPolyhedron, SmoothObjective
from .refine import RefineConfig, refine_fixed_integer

__all__ = [
    "lp_basis_oracle",
    "enumerate_milp",
    "MinlpEnumeration",
    "enumerate_minlp",
]

_ORACLE_FEAS_TOL = 1e-7


def _constraint_stack(lp: LinearProgram):
    """All constraints of ``lp`` as unit-normalized (normal, rhs) pairs.

    Returns (normals, rhs, kinds, contradiction) where kind 0 marks an
    equality row, 1 a <= row, 2 a >= row, 3 a lower bound and 4 an upper
    bound.  Zero rows are dropped: redundant ones silently, contradictory
    ones by raising the ``contradiction`` flag (the set is empty).
    """
    A = lp.matrix()
    normals = []
    rhs = []
    kinds = []
    contradiction = False
    for i in range(lp.n_rows):
        row = A[i]
        scale = np.linalg.norm(row)
        if scale == 0.0:
            b = lp.b[i]
            if lp.senses[i] == Sense.LE and b < -_ORACLE_FEAS_TOL:
                contradiction = True
            elif lp.senses[i] == Sense.GE and b > _ORACLE_FEAS_TOL:
                contradiction = True
            elif lp.senses[i] == Sense.EQ and abs(b) > _ORACLE_FEAS_TOL:
                contradiction = True
            continue
        normals.append(row / scale)
        rhs.append(lp.b[i] / scale)
        if lp.senses[i] == Sense.EQ:
            kinds.append(0)
        elif lp.senses[i] == Sense.LE:
            kinds.append(1)
        else:
            kinds.append(2)
    for j in range(lp.n_vars):
        if lp.lo[j] > -INF:
            e = np.zeros(lp.n_vars)
            e[j] = 1.0
            normals.append(e)
            rhs.append(lp.lo[j])
            kinds.append(3)
        if lp.hi[j] < INF:
            e = np.zeros(lp.n_vars)
            e[j] = 1.0
            normals.append(e)
            rhs.append(lp.hi[j])
            kinds.append(4)
    if not normals:
        return np.zeros((0, lp.n_vars)), np.zeros(0), np.zeros(0, dtype=int), contradiction
    return np.asarray(normals), np.asarray(rhs), np.asarray(kinds, dtype=int), contradiction


def _feasible_mask(candidates: np.ndarray, normals, rhs, kinds, tol: float) -> np.ndarray:
    values = candidates @ normals.T
    ok = np.ones(len(candidates), dtype=bool)
    eq = kinds == 0
    if np.any(eq):
        ok &= np.all(np.abs(values[:, eq] - rhs[eq]) <= tol, axis=1)
    le = kinds == 1
    if np.any(le):
        ok &= np.all(values[:, le] <= rhs[le] + tol, axis=1)
    ge = (kinds == 2) | (kinds == 3)
    if np.any(ge):
        ok &= np.all(values[:, ge] >= rhs[ge] - tol, axis=1)
    up = kinds == 4
    if np.any(up):
        ok &= np.all(values[:, up] <= rhs[up] + tol, axis=1)
    return ok


def lp_basis_oracle(lp: LinearProgram, size_limit: int = 14) -> LpOutcome:
    """Exact optimum of a pointed LP by enumerating candidate vertices.

    Every vertex is the solution of ``n`` linearly independent active
    constraints, so all size-``n`` active sets (equality rows forced) are
    enumerated and checked.  Valid whenever an optimal vertex exists,
    which holds for the bounded instances this oracle guards; feasible
    sets without vertices are outside its contract.  Infeasibility is
    reported when no candidate survives the feasibility check.
    """
    lp.validate()
    n = lp.n_vars
    if n + lp.n_rows > size_limit:
        raise ValueError(f"oracle limited to n + m <= {size_limit}")

    normals, rhs, kinds, contradiction = _constraint_stack(lp)
    if contradiction:
        return LpOutcome(LpStatus.INFEASIBLE, None, float("nan"), 0)
    total = len(normals)
    mandatory = [i for i in range(total) if kinds[i] == 0]
    optional = [i for i in range(total) if kinds[i] != 0]

    candidate_sets: list[tuple[int, ...]] = []
    if len(mandatory) >= n:
        for extra in combinations(mandatory, n):
            candidate_sets.append(extra)
    else:
        need = n - len(mandatory)
        for extra in combinations(optional, need):
            candidate_sets.append(tuple(mandatory) + extra)

    if not candidate_sets:
        return LpOutcome(LpStatus.INFEASIBLE, None, float("nan"), 0)

    sets = np.asarray(candidate_sets)
    mats = normals[sets]                   # (K, n, n)
    vecs = rhs[sets]                       # (K, n)
    dets = np.abs(np.linalg.det(mats))
    keep = dets > 1e-9
    if not np.any(keep):
        return LpOutcome(LpStatus.INFEASIBLE, None, float("nan"), 0)
    solutions = np.linalg.solve(mats[keep], vecs[keep][..., None])[..., 0]

    feasible = _feasible_mask(solutions, normals, rhs, kinds, _ORACLE_FEAS_TOL)
    if not np.any(feasible):
        return LpOutcome(LpStatus.INFEASIBLE, None, float("nan"), 0)
    points = solutions[feasible]
    objectives = points @ lp.c
    best = int(np.argmin(objectives))
    return LpOutcome(LpStatus.OPTIMAL, points[best].copy(), float(objectives[best]), 0)


# ---------------------------------------------------------------------------
# integer enumeration


def _integer_ranges(lo: np.ndarray, hi: np.ndarray, indices: Sequence[int]):
    ranges = []
    for i in indices:
        low = int(np.ceil(lo[i] - 1e-9))
        high = int(np.floor(hi[i] + 1e-9))
        ranges.append(range(low, high + 1))
    return ranges


def enumerate_milp(problem: Milp, combo_limit: int = 4096, feas_tol: float = 1e-9, opt_tol: float = 1e-9) -> MilpOutcome:
    """Exact mixed-integer optimum by trying every integer combination.

    Combinations are visited in lexicographic order and ties between
    equal objectives keep the first (lexicographically smallest) one, so
    the outcome is deterministic and invariant to row permutations.
    """
    base = problem.base
    indices = problem.integer_indices
    if not indices:
        outcome = solve_lp(base, feas_tol, opt_tol)
        if outcome.status == LpStatus.OPTIMAL:
            return MilpOutcome(MilpStatus.OPTIMAL, outcome.x, outcome.objective, 1, outcome.objective)
        if outcome.status == LpStatus.INFEASIBLE:
            return MilpOutcome(MilpStatus.INFEASIBLE, None, float("nan"), 1, INF)
        return MilpOutcome(MilpStatus.SOLVER_FAILURE, None, float("nan"), 1, -INF)

    ranges = _integer_ranges(base.lo, base.hi, indices)
    count = 1
    for r in ranges:
        count *= len(r)
        if count > combo_limit:
            raise ValueError(f"combination count exceeds the limit {combo_limit}")
    if count == 0:
        return MilpOutcome(MilpStatus.INFEASIBLE, None, float("nan"), 0, INF)

    work = base.copy()
    best_x: Optional[np.ndarray] = None
    best_obj = INF
    solved = 0
    for combo in product(*ranges):
        for i, value in zip(indices, combo):
            work.lo[i] = float(value)
            work.hi[i] = float(value)
        outcome = solve_lp(work, feas_tol, opt_tol)
        solved += 1
        if outcome.status == LpStatus.INFEASIBLE:
            continue
        if outcome.status != LpStatus.OPTIMAL:
            return MilpOutcome(MilpStatus.SOLVER_FAILURE, None, float("nan"), solved, -INF)
        if outcome.objective < best_obj - 1e-12:
            best_obj = outcome.objective
            best_x = outcome.x.copy()
    if best_x is None:
        return MilpOutcome(MilpStatus.INFEASIBLE, None, float("nan"), solved, INF)
    return MilpOutcome(MilpStatus.OPTIMAL, best_x, best_obj, solved, best_obj)


@dataclass
class MinlpEnumeration:
    x: Optional[np.ndarray]
    objective: float
    feasible_count: int
    total_count: int
    # one row per combination: (integer values, feasible flag, best objective)
    table: list[tuple[tuple[int, ...], bool, float]]


def enumerate_minlp(
    X: MixedIntegerPolyhedron,
    objective: SmoothObjective,
    combo_limit: int = 4096,
    starts_per_combo: int = 10,
    cfg: RefineConfig = RefineConfig(),
    seed: int = 0,
    feas_tol: float = 1e-9,
    opt_tol: float = 1e-9,
) -> MinlpEnumeration:
    """Baseline minimization: feasibility-check every integer combination,
    then polish the real block from several randomized starts.

    Starts are interior-leaning points obtained by blending the vertices
    that minimize a random linear objective and its negation.  The global
    winner breaks ties toward the lexicographically smallest combination.
    """
    indices = X.integer_indices
    ranges = _integer_ranges(X.lo, X.hi, indices)
    count = 1
    for r in ranges:
        count *= len(r)
        if count > combo_limit:
            raise ValueError(f"combination count exceeds the limit {combo_limit}")

    rng = np.random.default_rng(seed)
    lp = X.to_lp(np.zeros(X.n_vars))
    best_x: Optional[np.ndarray] = None
    best_obj = INF
    feasible_count = 0
    table: list[tuple[tuple[int, ...], bool, float]] = []

    for combo in product(*ranges) if ranges else [()]:
        for i, value in zip(indices, combo):
            lp.lo[i] = float(value)
            lp.hi[i] = float(value)
        probe = solve_lp(lp, feas_tol, opt_tol)
        if probe.status != LpStatus.OPTIMAL:
            table.append((tuple(combo), False, float("nan")))
            continue
        feasible_count += 1
        combo_best: Optional[np.ndarray] = None
        combo_obj = INF
        for _ in range(max(starts_per_combo, 1)):
            direction = rng.standard_normal(X.n_vars)
            weight = rng.uniform(0.2, 0.8)
            lp.set_objective(direction)
            lo_vertex = solve_lp(lp, feas_tol, opt_tol)
            lp.set_objective(-direction)
            hi_vertex = solve_lp(lp, feas_tol, opt_tol)
            lp.set_objective(np.zeros(X.n_vars))
            if lo_vertex.status != LpStatus.OPTIMAL or hi_vertex.status != LpStatus.OPTIMAL:
                continue
            start = weight * lo_vertex.x + (1.0 - weight) * hi_vertex.x
            for i, value in zip(indices, combo):
                start[i] = float(value)  # keep the integer block exact under blending
            refined = refine_fixed_integer(X, objective, start, cfg, feas_tol, opt_tol)
            if refined.objective < combo_obj - 1e-12:
                combo_obj = refined.objective
                combo_best = refined.x
        table.append((tuple(combo), True, combo_obj))
        if combo_best is not None and combo_obj < best_obj - 1e-12:
            best_obj = combo_obj
            best_x = combo_best
    return MinlpEnumeration(best_x, best_obj, feasible_count, count, table)
