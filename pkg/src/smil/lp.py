"""Deterministic linear-programming engine.

A two-phase revised simplex for problems in the form

    min c.x   s.t.  A x {<=,=,>=} b,   lo <= x <= hi

with general (possibly infinite) variable bounds.  Rows are turned into
equalities with one slack column each; phase 1 drives per-row artificial
columns to zero.  Pricing is Dantzig (most negative reduced cost) with a
switch to Bland's rule after a streak of degenerate pivots, so the engine
cannot cycle.  All tie-breaks are index-based: identical inputs produce
identical outcomes.

The pivot loop is JIT-compiled; the basis inverse is kept up to date by
product-form updates with periodic refactorization.
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum
from typing import Optional

import numpy as np
from numba import njit

__all__ = [
    "Sense",
    "LpStatus",
    "LinearProgram",
    "LpOutcome",
    "solve_lp",
]

INF = float("inf")


class Sense(str, Enum):
    LE = "<="
    EQ = "="
    GE = ">="


class LpStatus(str, Enum):
    OPTIMAL = "optimal"
    INFEASIBLE = "infeasible"
    UNBOUNDED = "unbounded"
    ITERATION_LIMIT = "iteration_limit"


@dataclass(frozen=True)
class LpOutcome:
    status: LpStatus
    x: Optional[np.ndarray]
    objective: float
    iterations: int


class LinearProgram:
    """Sparse-triplet LP description.

    Duplicate ``(row, col)`` triplets are summed when the matrix is
    assembled, so after assembly each position holds a single value.
    """

    def __init__(self, n_vars: int, n_rows: int):
        if n_vars < 0 or n_rows < 0:
            raise ValueError("dimensions must be nonnegative")
        self.n_vars = n_vars
        self.n_rows = n_rows
        self.c = np.zeros(n_vars)
        self.lo = np.full(n_vars, -INF)
        self.hi = np.full(n_vars, INF)
        self.senses: list[Sense] = [Sense.LE] * n_rows
        self.b = np.zeros(n_rows)
        self._rows: list[int] = []
        self._cols: list[int] = []
        self._vals: list[float] = []
        self._dense: Optional[np.ndarray] = None
        self._transpose: Optional[np.ndarray] = None

    def add_entry(self, row: int, col: int, value: float):
        if not (0 <= row < self.n_rows and 0 <= col < self.n_vars):
            raise IndexError(f"triplet ({row}, {col}) outside {self.n_rows}x{self.n_vars}")
        self._rows.append(row)
        self._cols.append(col)
        self._vals.append(float(value))
        self._dense = None
        self._transpose = None

    def set_row(self, row: int, sense: Sense, rhs: float):
        if not 0 <= row < self.n_rows:
            raise IndexError(f"row {row} out of range")
        self.senses[row] = Sense(sense)
        self.b[row] = float(rhs)

    def set_bounds(self, col: int, lo: float, hi: float):
        if lo > hi:
            raise ValueError(f"lower bound {lo} exceeds upper bound {hi} for column {col}")
        self.lo[col] = lo
        self.hi[col] = hi

    def set_objective(self, coeffs) -> None:
        coeffs = np.asarray(coeffs, dtype=float)
        if coeffs.shape != (self.n_vars,):
            raise ValueError(f"objective length {coeffs.shape} != {self.n_vars}")
        self.c = coeffs.copy()

    def matrix(self) -> np.ndarray:
        if self._dense is None:
            dense = np.zeros((self.n_rows, self.n_vars))
            if self._rows:
                np.add.at(
                    dense,
                    (np.asarray(self._rows), np.asarray(self._cols)),
                    np.asarray(self._vals),
                )
            self._dense = dense
        return self._dense

    def matrix_transpose(self) -> np.ndarray:
        if self._transpose is None:
            self._transpose = np.ascontiguousarray(self.matrix().T)
        return self._transpose

    def validate(self):
        if np.any(self.lo > self.hi):
            bad = int(np.argmax(self.lo > self.hi))
            raise ValueError(f"lower bound exceeds upper bound for column {bad}")

    def copy(self) -> "LinearProgram":
        out = LinearProgram(self.n_vars, self.n_rows)
        out.c = self.c.copy()
        out.lo = self.lo.copy()
        out.hi = self.hi.copy()
        out.senses = list(self.senses)
        out.b = self.b.copy()
        out._rows = list(self._rows)
        out._cols = list(self._cols)
        out._vals = list(self._vals)
        return out


# ---------------------------------------------------------------------------
# jitted pivot loop
#
# Columns are [structural | slack | artificial]; slack r is the unit vector
# of row r, artificial r the same scaled by art_sign[r].  Nonbasic statuses
# are 0 (at lower / parked free) and 1 (at upper); basic is 2.

_OPTIMAL, _UNBOUNDED, _ITER_LIMIT, _SINGULAR = 0, 1, 3, 4
_DEGENERATE_STREAK = 30
_REFACTOR_EVERY = 150


@njit(cache=True)
def _refactorize(AT, art_sign, basis, binv, n, m):
    # a singular basis raises out of np.linalg.inv and aborts the solve
    B = np.zeros((m, m))
    for r in range(m):
        jb = basis[r]
        if jb < n:
            for i in range(m):
                B[i, r] = AT[jb, i]
        elif jb < n + m:
            B[jb - n, r] = 1.0
        else:
            B[jb - n - m, r] = art_sign[jb - n - m]
    binv[:, :] = np.linalg.inv(B)


@njit(cache=True)
def _recompute_basics(AT, b, art_sign, x, status, basis, binv, n, m):
    resid = b.copy()
    ncols = n + 2 * m
    for j in range(ncols):
        if status[j] == 2:
            continue
        xj = x[j]
        if xj == 0.0:
            continue
        if j < n:
            for i in range(m):
                resid[i] -= AT[j, i] * xj
        elif j < n + m:
            resid[j - n] -= xj
        else:
            resid[j - n - m] -= art_sign[j - n - m] * xj
    xb = binv @ resid
    for r in range(m):
        x[basis[r]] = xb[r]


@njit(cache=True)
def _run_phase(AT, b, lo, hi, art_sign, x, status, basis, binv, costs,
               opt_tol, max_iters, start_iterations):
    n, m = AT.shape
    ncols = n + 2 * m
    iterations = start_iterations
    degenerate_streak = 0
    use_bland = False
    pivots_since_refactor = 0
    w = np.empty(m)
    cb = np.empty(m)

    while True:
        if iterations >= max_iters:
            return _ITER_LIMIT, iterations

        # reduced costs: pi = binv^T c_B, d_j = c_j - pi . col_j
        for r in range(m):
            cb[r] = costs[basis[r]]
        pi = np.dot(cb, binv)
        d_struct = costs[:n] - np.dot(AT, pi)

        entering = -1
        direction = 1.0
        best_violation = opt_tol
        for j in range(ncols):
            if status[j] == 2:
                continue
            l = lo[j]
            h = hi[j]
            if l == h:
                continue
            if j < n:
                dj = d_struct[j]
            elif j < n + m:
                dj = costs[j] - pi[j - n]
            else:
                dj = costs[j] - art_sign[j - n - m] * pi[j - n - m]
            if status[j] == 0:
                if dj < -opt_tol:
                    if use_bland:
                        entering = j
                        direction = 1.0
                        break
                    if -dj > best_violation:
                        best_violation = -dj
                        entering = j
                        direction = 1.0
                elif dj > opt_tol and l == -np.inf and h == np.inf:
                    if use_bland:
                        entering = j
                        direction = -1.0
                        break
                    if dj > best_violation:
                        best_violation = dj
                        entering = j
                        direction = -1.0
            else:
                if dj > opt_tol:
                    if use_bland:
                        entering = j
                        direction = -1.0
                        break
                    if dj > best_violation:
                        best_violation = dj
                        entering = j
                        direction = -1.0
        if entering < 0:
            return _OPTIMAL, iterations

        # direction of change of the basic values: w = binv @ col(entering)
        if entering < n:
            w[:] = np.dot(binv, AT[entering])
        elif entering < n + m:
            r0 = entering - n
            for i in range(m):
                w[i] = binv[i, r0]
        else:
            r0 = entering - n - m
            sign = art_sign[r0]
            for i in range(m):
                w[i] = sign * binv[i, r0]

        # ratio test: smallest blocking step, then the largest pivot
        # magnitude among near-ties for stability
        piv_tol = 1e-10
        best = np.inf
        for i in range(m):
            di = direction * w[i]
            jb = basis[i]
            if di > piv_tol:
                li = lo[jb]
                if li > -np.inf:
                    r = (x[jb] - li) / di
                    if r < 0.0:
                        r = 0.0
                    if r < best:
                        best = r
            elif di < -piv_tol:
                hb = hi[jb]
                if hb < np.inf:
                    r = (x[jb] - hb) / di
                    if r < 0.0:
                        r = 0.0
                    if r < best:
                        best = r

        span = hi[entering] - lo[entering]
        if span < best:
            # bound flip: entering crosses to its other bound, basis unchanged
            iterations += 1
            for i in range(m):
                x[basis[i]] -= span * direction * w[i]
            if direction > 0.0:
                x[entering] = hi[entering]
                status[entering] = 1
            else:
                x[entering] = lo[entering]
                status[entering] = 0
            if span <= 1e-11:
                degenerate_streak += 1
                if degenerate_streak > _DEGENERATE_STREAK:
                    use_bland = True
            else:
                degenerate_streak = 0
                use_bland = False
            continue
        if best == np.inf:
            return _UNBOUNDED, iterations

        best_pos = -1
        best_piv = 0.0
        best_upper = False
        threshold = best + 1e-9
        for i in range(m):
            di = direction * w[i]
            jb = basis[i]
            if di > piv_tol:
                li = lo[jb]
                if li > -np.inf:
                    r = (x[jb] - li) / di
                    if r < 0.0:
                        r = 0.0
                    if r <= threshold and abs(di) > best_piv:
                        best_piv = abs(di)
                        best_pos = i
                        best_upper = False
            elif di < -piv_tol:
                hb = hi[jb]
                if hb < np.inf:
                    r = (x[jb] - hb) / di
                    if r < 0.0:
                        r = 0.0
                    if r <= threshold and abs(di) > best_piv:
                        best_piv = abs(di)
                        best_pos = i
                        best_upper = True

        iterations += 1
        step = best
        for i in range(m):
            x[basis[i]] -= step * direction * w[i]
        x[entering] = x[entering] + step * direction
        leaving = basis[best_pos]
        if best_upper:
            x[leaving] = hi[leaving]
            status[leaving] = 1
        else:
            x[leaving] = lo[leaving]
            status[leaving] = 0
        status[entering] = 2
        basis[best_pos] = entering

        if step <= 1e-11:
            degenerate_streak += 1
            if degenerate_streak > _DEGENERATE_STREAK:
                use_bland = True
        else:
            degenerate_streak = 0
            use_bland = False

        # product-form update of the basis inverse
        piv = w[best_pos]
        inv_piv = 1.0 / piv
        for j in range(m):
            binv[best_pos, j] *= inv_piv
        for i in range(m):
            if i == best_pos:
                continue
            wi = w[i]
            if wi != 0.0:
                for j in range(m):
                    binv[i, j] -= wi * binv[best_pos, j]

        pivots_since_refactor += 1
        if pivots_since_refactor >= _REFACTOR_EVERY:
            _refactorize(AT, art_sign, basis, binv, n, m)
            _recompute_basics(AT, b, art_sign, x, status, basis, binv, n, m)
            pivots_since_refactor = 0


# ---------------------------------------------------------------------------
# setup and the public entry point


def _slack_bounds(senses):
    m = len(senses)
    lo = np.empty(m)
    hi = np.empty(m)
    for i, sense in enumerate(senses):
        if sense == Sense.LE:
            lo[i], hi[i] = 0.0, INF
        elif sense == Sense.GE:
            lo[i], hi[i] = -INF, 0.0
        else:
            lo[i], hi[i] = 0.0, 0.0
    return lo, hi


def _initial_state(A, b, lo_s, hi_s, lo_structural, hi_structural):
    m, n = A.shape
    ncols = n + 2 * m
    lo = np.empty(ncols)
    hi = np.empty(ncols)
    lo[:n] = lo_structural
    hi[:n] = hi_structural
    lo[n : n + m] = lo_s
    hi[n : n + m] = hi_s
    lo[n + m :] = 0.0
    hi[n + m :] = INF

    x = np.zeros(ncols)
    status = np.full(ncols, 0, dtype=np.int8)
    # structural columns start at the finite bound nearest zero (0 if free)
    for j in range(n):
        if lo[j] > -INF and (hi[j] == INF or abs(lo[j]) <= abs(hi[j])):
            x[j], status[j] = lo[j], 0
        elif hi[j] < INF:
            x[j], status[j] = hi[j], 1
        else:
            x[j], status[j] = 0.0, 0

    art_sign = np.ones(m)
    basis = np.empty(m, dtype=np.int64)
    binv = np.eye(m)
    residual = b - A @ x[:n]
    for i in range(m):
        slack = n + i
        value = residual[i]
        if lo[slack] <= value <= hi[slack]:
            basis[i] = slack
            x[slack] = value
            status[slack] = 2
            hi[n + m + i] = 0.0  # artificial never needed for this row
        else:
            clipped = min(max(value, lo[slack]), hi[slack])
            x[slack] = clipped
            status[slack] = 0 if clipped == lo[slack] else 1
            gap = value - clipped
            art_sign[i] = 1.0 if gap >= 0 else -1.0
            art = n + m + i
            basis[i] = art
            x[art] = abs(gap)
            status[art] = 2
            if art_sign[i] < 0:
                binv[i, i] = -1.0  # diagonal +-1 initial basis
    return lo, hi, x, status, basis, binv, art_sign


def _box_only_solve(lp: LinearProgram) -> LpOutcome:
    # no rows: each variable independently sits at its cheaper bound
    x = np.empty(lp.n_vars)
    for j in range(lp.n_vars):
        cj = lp.c[j]
        if cj > 0:
            if lp.lo[j] == -INF:
                return LpOutcome(LpStatus.UNBOUNDED, None, -INF, 0)
            x[j] = lp.lo[j]
        elif cj < 0:
            if lp.hi[j] == INF:
                return LpOutcome(LpStatus.UNBOUNDED, None, -INF, 0)
            x[j] = lp.hi[j]
        else:
            if lp.lo[j] > -INF and (lp.hi[j] == INF or abs(lp.lo[j]) <= abs(lp.hi[j])):
                x[j] = lp.lo[j]
            elif lp.hi[j] < INF:
                x[j] = lp.hi[j]
            else:
                x[j] = 0.0
    return LpOutcome(LpStatus.OPTIMAL, x, float(lp.c @ x), 0)


def solve_lp(
    lp: LinearProgram,
    feas_tol: float = 1e-9,
    opt_tol: float = 1e-9,
    max_iters: int = 100000,
) -> LpOutcome:
    """Solve ``lp`` to proven optimality or report why that is impossible.

    Parameters
    ----------
    lp : LinearProgram
        Problem data; duplicate triplets are summed during assembly.
    feas_tol : float
        Row and bound feasibility tolerance of the returned point.
    opt_tol : float
        Reduced-cost tolerance for declaring optimality.
    max_iters : int
        Pivot budget across both phases; exhaustion is reported as the
        distinct :data:`LpStatus.ITERATION_LIMIT` failure status (numeric
        breakdowns in the basis factorization land there as well).

    The result is deterministic for identical input: pricing, ratio and
    degeneracy tie-breaks are all index-based.
    """
    lp.validate()
    if lp.n_rows == 0:
        return _box_only_solve(lp)

    A = lp.matrix()
    AT = lp.matrix_transpose()
    m, n = A.shape
    lo_s, hi_s = _slack_bounds(lp.senses)
    lo, hi, x, status, basis, binv, art_sign = _initial_state(
        A, lp.b, lo_s, hi_s, lp.lo, lp.hi
    )
    b = lp.b.astype(float)
    iterations = 0

    try:
        if np.any(basis >= n + m):
            costs1 = np.zeros(n + 2 * m)
            costs1[n + m :] = 1.0
            code, iterations = _run_phase(
                AT, b, lo, hi, art_sign, x, status, basis, binv, costs1,
                opt_tol, max_iters, iterations,
            )
            if code == _ITER_LIMIT:
                return LpOutcome(LpStatus.ITERATION_LIMIT, None, float("nan"), iterations)
            if code == _UNBOUNDED:  # phase-1 objective is bounded below by zero
                return LpOutcome(LpStatus.ITERATION_LIMIT, None, float("nan"), iterations)
            infeasibility = float(np.sum(x[n + m :]))
            if infeasibility > feas_tol * (1.0 + float(np.max(np.abs(b), initial=0.0))):
                return LpOutcome(LpStatus.INFEASIBLE, None, float("nan"), iterations)
        # artificials are pinned at zero for good
        hi[n + m :] = 0.0
        x[n + m :][np.abs(x[n + m :]) <= feas_tol] = 0.0

        costs2 = np.zeros(n + 2 * m)
        costs2[:n] = lp.c
        code, iterations = _run_phase(
            AT, b, lo, hi, art_sign, x, status, basis, binv, costs2,
            opt_tol, max_iters, iterations,
        )
        if code == _UNBOUNDED:
            return LpOutcome(LpStatus.UNBOUNDED, None, -INF, iterations)
        if code == _ITER_LIMIT:
            return LpOutcome(LpStatus.ITERATION_LIMIT, None, float("nan"), iterations)

        # final cleanup: fresh factorization and recomputed basic values
        _refactorize(AT, art_sign, basis, binv, n, m)
        _recompute_basics(AT, b, art_sign, x, status, basis, binv, n, m)
    except np.linalg.LinAlgError:
        return LpOutcome(LpStatus.ITERATION_LIMIT, None, float("nan"), iterations)
    solution = x[:n].copy()
    objective = float(lp.c @ solution)
    return LpOutcome(LpStatus.OPTIMAL, solution, objective, iterations)
