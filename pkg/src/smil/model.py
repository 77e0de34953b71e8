"""Problem data for mixed-integer linearly constrained minimization.

Holds the feasible set (a polyhedron intersected with integrality
requirements), objectives that are smooth in the real variables and linear
in the integer ones, partial-localization seminorms, a feasibility
reporter, and the encoders that turn logical clauses and guarded
equalities into linear rows.  All types are immutable after construction
and safe to share across threads.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Optional, Sequence

import numpy as np

from . import expr as expressions
from .lp import INF, LinearProgram, Sense
from .milp import Milp

__all__ = [
    "LinearConstraint",
    "MixedIntegerPolyhedron",
    "SmoothObjective",
    "PlNorm",
    "pl_norm",
    "FeasibilityReport",
    "check_feasible",
    "encode_clause",
    "encode_xor",
    "encode_bigm_equality",
]


@dataclass(frozen=True)
class LinearConstraint:
    """One row ``sum coeffs[i] * x_i  (sense)  rhs`` with sparse coefficients."""

    coeffs: tuple[tuple[int, float], ...]
    sense: Sense
    rhs: float

    @classmethod
    def make(cls, coeffs: dict[int, float], sense: Sense, rhs: float) -> "LinearConstraint":
        items = tuple(sorted((int(k), float(v)) for k, v in coeffs.items()))
        return cls(items, Sense(sense), float(rhs))

    def value(self, x: np.ndarray) -> float:
        return float(sum(v * x[i] for i, v in self.coeffs))

    def violation(self, x: np.ndarray) -> float:
        lhs = self.value(x)
        if self.sense == Sense.LE:
            return max(0.0, lhs - self.rhs)
        if self.sense == Sense.GE:
            return max(0.0, self.rhs - lhs)
        return abs(lhs - self.rhs)


class MixedIntegerPolyhedron:
    """The feasible set: linear rows, variable bounds, integer index set.

    Instances are frozen; trust-region and projection subproblems are
    built as fresh programs with copied data, never by mutating the set
    (the solver re-solves against it with many different radii).
    """

    def __init__(
        self,
        n_vars: int,
        rows: Sequence[LinearConstraint],
        lo: Sequence[float],
        hi: Sequence[float],
        integer_indices: Sequence[int],
    ):
        self.n_vars = int(n_vars)
        self.rows = tuple(rows)
        self.lo = np.asarray(lo, dtype=float).copy()
        self.hi = np.asarray(hi, dtype=float).copy()
        self.integer_indices = tuple(sorted(int(i) for i in integer_indices))
        if self.lo.shape != (self.n_vars,) or self.hi.shape != (self.n_vars,):
            raise ValueError("bound arrays must match the variable count")
        if np.any(self.lo > self.hi):
            bad = int(np.argmax(self.lo > self.hi))
            raise ValueError(f"lower bound exceeds upper bound for variable {bad}")
        seen = set()
        for i in self.integer_indices:
            if not 0 <= i < self.n_vars:
                raise ValueError(f"integer index {i} out of range")
            if i in seen:
                raise ValueError(f"integer index {i} repeated")
            seen.add(i)
            if not (self.lo[i] > -INF and self.hi[i] < INF):
                raise ValueError(
                    f"integer variable {i} needs finite bounds, got [{self.lo[i]}, {self.hi[i]}]"
                )
        for row in self.rows:
            for i, _ in row.coeffs:
                if not 0 <= i < self.n_vars:
                    raise ValueError(f"constraint touches unknown variable {i}")
        self.lo.flags.writeable = False
        self.hi.flags.writeable = False

    @property
    def real_indices(self) -> tuple[int, ...]:
        integer = set(self.integer_indices)
        return tuple(i for i in range(self.n_vars) if i not in integer)

    def to_lp(self, objective: Optional[np.ndarray] = None) -> LinearProgram:
        """A fresh LinearProgram over this set (integrality dropped)."""
        lp = LinearProgram(self.n_vars, len(self.rows))
        for i in range(self.n_vars):
            lp.set_bounds(i, self.lo[i], self.hi[i])
        for r, row in enumerate(self.rows):
            lp.set_row(r, row.sense, row.rhs)
            for i, v in row.coeffs:
                lp.add_entry(r, i, v)
        if objective is not None:
            lp.set_objective(objective)
        return lp

    def to_milp(self, objective: Optional[np.ndarray] = None) -> Milp:
        return Milp(self.to_lp(objective), self.integer_indices)


class SmoothObjective:
    """Objective of the form f1(real block) + <f2, integer block>.

    ``f1`` touches only non-integer coordinates; the gradient's integer
    block is the constant vector ``f2`` by construction.  Built either
    from an expression tree (exact derivatives) or from native value and
    gradient callables over the full point.
    """

    def __init__(
        self,
        n_vars: int,
        integer_indices: Sequence[int],
        f1_value: Callable[[np.ndarray], float],
        f1_gradient: Callable[[np.ndarray], np.ndarray],
        f2: Sequence[float],
    ):
        self.n_vars = int(n_vars)
        self.integer_indices = tuple(sorted(int(i) for i in integer_indices))
        self._f1_value = f1_value
        self._f1_gradient = f1_gradient
        self.f2 = np.asarray(f2, dtype=float).copy()
        if self.f2.shape != (len(self.integer_indices),):
            raise ValueError(
                f"f2 has length {self.f2.shape[0]}, expected {len(self.integer_indices)}"
            )
        self.f2.flags.writeable = False

    @classmethod
    def from_expression(
        cls,
        n_vars: int,
        integer_indices: Sequence[int],
        f1: expressions.Expression,
        f2: Sequence[float],
    ) -> "SmoothObjective":
        integer_set = {int(i) for i in integer_indices}
        used = expressions.variable_indices(f1)
        for index in used:
            if index > n_vars:
                raise ValueError(f"f1 references x{index} beyond dimension {n_vars}")
            if index - 1 in integer_set:
                raise ValueError(f"f1 references integer variable x{index}")

        def value(x: np.ndarray) -> float:
            return expressions.evaluate(f1, x)

        def grad(x: np.ndarray) -> np.ndarray:
            out = np.zeros(len(x))
            out[: len(x)] = expressions.gradient(f1, x)
            return out

        obj = cls(n_vars, integer_indices, value, grad, f2)
        obj.f1_expression = f1
        return obj

    def value(self, x: np.ndarray) -> float:
        x = np.asarray(x, dtype=float)
        total = float(self._f1_value(x))
        for k, i in enumerate(self.integer_indices):
            total += self.f2[k] * x[i]
        return total

    def gradient(self, x: np.ndarray) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        g = np.asarray(self._f1_gradient(x), dtype=float).copy()
        if g.shape != (self.n_vars,):
            raise ValueError(f"f1 gradient has shape {g.shape}, expected ({self.n_vars},)")
        for k, i in enumerate(self.integer_indices):
            g[i] = self.f2[k]
        return g


@dataclass(frozen=True)
class PlNorm:
    """Partial-localization seminorm: an l1 or l-infinity norm applied to
    the real-valued coordinates only.  It vanishes on vectors supported on
    the integer block, but stays subadditive and absolutely homogeneous.
    """

    p: float  # 1 or inf
    real_indices: tuple[int, ...]

    def __post_init__(self):
        if self.p not in (1, 1.0, INF):
            raise ValueError(f"p must be 1 or inf, got {self.p}")

    @classmethod
    def for_set(cls, X: MixedIntegerPolyhedron, p: float) -> "PlNorm":
        return cls(float(p), X.real_indices)


def pl_norm(norm: PlNorm, x: Sequence[float]) -> float:
    """Seminorm value; 0 when there are no real coordinates."""
    x = np.asarray(x, dtype=float)
    if not norm.real_indices:
        return 0.0
    reals = x[list(norm.real_indices)]
    if norm.p == 1:
        return float(np.sum(np.abs(reals)))
    return float(np.max(np.abs(reals)))


@dataclass(frozen=True)
class FeasibilityReport:
    max_row_violation: float
    max_bound_violation: float
    max_integrality_violation: float
    feasible: bool


def check_feasible(
    X: MixedIntegerPolyhedron,
    x: Sequence[float],
    feas_tol: float = 1e-8,
    int_tol: float = 1e-6,
) -> FeasibilityReport:
    """Violation report for ``x`` against rows, bounds and integrality."""
    x = np.asarray(x, dtype=float)
    if x.shape != (X.n_vars,):
        raise ValueError(f"point has shape {x.shape}, expected ({X.n_vars},)")
    row_violation = max((row.violation(x) for row in X.rows), default=0.0)
    bound_violation = float(
        np.max(np.maximum(np.maximum(X.lo - x, x - X.hi), 0.0), initial=0.0)
    )
    int_violation = max(
        (abs(x[i] - round(x[i])) for i in X.integer_indices), default=0.0
    )
    feasible = (
        row_violation <= feas_tol
        and bound_violation <= feas_tol
        and int_violation <= int_tol
    )
    return FeasibilityReport(row_violation, bound_violation, int_violation, feasible)


# ---------------------------------------------------------------------------
# logical and big-M encoders


def encode_clause(positives: Sequence[int], negatives: Sequence[int]) -> LinearConstraint:
    """Linear row admitting exactly the satisfying assignments of the clause
    ``OR_i z_i OR_j (not z_j)`` over binary variables.

    The clause holds iff ``sum_pos z_i + sum_neg (1 - z_j) >= 1``, returned
    with the constant terms moved to the right-hand side.
    """
    positives = tuple(int(i) for i in positives)
    negatives = tuple(int(j) for j in negatives)
    if not positives and not negatives:
        raise ValueError("empty clause")
    overlap = set(positives) & set(negatives)
    if overlap:
        raise ValueError(f"literals {sorted(overlap)} appear with both signs")
    coeffs: dict[int, float] = {}
    for i in positives:
        coeffs[i] = coeffs.get(i, 0.0) + 1.0
    for j in negatives:
        coeffs[j] = coeffs.get(j, 0.0) - 1.0
    return LinearConstraint.make(coeffs, Sense.GE, 1.0 - len(negatives))


def encode_xor(i: int, j: int) -> LinearConstraint:
    """Exactly one of two binary variables: z_i + z_j = 1."""
    if i == j:
        raise ValueError("xor needs two distinct variables")
    return LinearConstraint.make({int(i): 1.0, int(j): 1.0}, Sense.EQ, 1.0)


def encode_bigm_equality(
    guard: int,
    polarity: bool,
    expr_coeffs: dict[int, float],
    M: float,
) -> tuple[LinearConstraint, LinearConstraint]:
    """Two rows forcing a linear expression to zero when a guard literal holds.

    With ``polarity=True`` the literal is the guard itself (z_guard = 1
    pins the expression); with ``polarity=False`` it is the negation
    (z_guard = 0 pins it).  The relaxed side is free within ``[-M, M]``:

        expr <= M * s   and   expr >= -M * s,
        s = (1 - z_guard) if polarity else z_guard.
    """
    if M <= 0:
        raise ValueError(f"big-M constant must be positive, got {M}")
    guard = int(guard)
    upper = {int(k): float(v) for k, v in expr_coeffs.items()}
    lower = {int(k): float(v) for k, v in expr_coeffs.items()}
    if polarity:
        # expr <= M (1 - z)  and  expr >= -M (1 - z)
        upper[guard] = upper.get(guard, 0.0) + M
        lower[guard] = lower.get(guard, 0.0) - M
        return (
            LinearConstraint.make(upper, Sense.LE, M),
            LinearConstraint.make(lower, Sense.GE, -M),
        )
    # expr <= M z  and  expr >= -M z
    upper[guard] = upper.get(guard, 0.0) - M
    lower[guard] = lower.get(guard, 0.0) + M
    return (
        LinearConstraint.make(upper, Sense.LE, 0.0),
        LinearConstraint.make(lower, Sense.GE, 0.0),
    )


def max_variable_index(expr: expressions.Expression) -> int:
    used = expressions.variable_indices(expr)
    return max(used) if used else 0


def _is_integral(value: float, tol: float) -> bool:
    return abs(value - round(value)) <= tol


def snap_integers(X: MixedIntegerPolyhedron, x: np.ndarray, int_tol: float = 1e-6) -> np.ndarray:
    """Round near-integral integer coordinates; leaves others untouched."""
    out = np.asarray(x, dtype=float).copy()
    for i in X.integer_indices:
        if _is_integral(out[i], int_tol):
            out[i] = round(out[i])
    return out
