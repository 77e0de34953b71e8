"""Benchmark problem builders.

The main instance is a point-to-point maneuver of a double-integrator car
whose turbo charger switches with hysteresis: trapezoidal transcription
of the dynamics, big-M rows for the two thrust modes, clause-derived
big-M rows for the switching logic, and a control-effort objective that
is quadratic in acceleration and cubic in braking.  A small
complementarity set and a seeded random-instance generator support the
property and regression tests.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .lp import INF, Sense
from .model import (
    LinearConstraint,
    MixedIntegerPolyhedron,
    SmoothObjective,
    encode_bigm_equality,
)

__all__ = [
    "TurboParams",
    "build_turbo",
    "turbo_variable_indices",
    "decode_turbo_trajectory",
    "build_complementarity",
    "linear_objective",
    "RandomInstance",
    "random_instance",
]


@dataclass(frozen=True)
class TurboParams:
    """Data of the hysteretic turbo-car maneuver."""

    n_intervals: int = 25
    horizon: float = 10.0          # seconds
    accel_weight: float = 1.0      # effort weight on acceleration^2
    brake_weight: float = 1e-2     # effort weight on brake^3
    q_end: float = 150.0           # target position
    a_max: float = 5.0
    b_max: float = 10.0
    v_max: float = 25.0
    v_on: float = 10.0             # turbo engages above this speed
    v_off: float = 5.0             # turbo drops out below this speed
    big_m: float = 20.0

    def __post_init__(self):
        if self.n_intervals < 1:
            raise ValueError("need at least one interval")
        for name in ("horizon", "q_end", "a_max", "b_max", "v_max", "big_m"):
            if getattr(self, name) <= 0:
                raise ValueError(f"{name} must be positive")
        if not self.v_off < self.v_on:
            raise ValueError("the drop-out speed must sit below the engage speed")


def turbo_variable_indices(n_intervals: int) -> dict[str, np.ndarray]:
    """Column layout: position, velocity, thrust, accel, brake blocks, then
    the binary turbo states."""
    grid = n_intervals + 1
    names = ("q", "v", "f", "a", "b", "w")
    return {name: np.arange(k * grid, (k + 1) * grid) for k, name in enumerate(names)}


def build_turbo(params: TurboParams) -> tuple[MixedIntegerPolyhedron, SmoothObjective]:
    """Transcribe the turbo-car maneuver on a uniform grid.

    For ``N`` intervals the instance has ``5 (N+1)`` real and ``N+1``
    binary columns, ``2 N`` equality rows (trapezoidal dynamics), and
    ``4 (N+1) + 4 N`` inequality rows (thrust big-M plus hysteresis
    clauses); bounds and boundary conditions live on the columns.
    """
    N = params.n_intervals
    grid = N + 1
    h = params.horizon / N
    idx = turbo_variable_indices(N)
    q, v, f, a, b, w = (idx[name] for name in ("q", "v", "f", "a", "b", "w"))
    n_vars = 6 * grid
    M = params.big_m

    lo = np.full(n_vars, -INF)
    hi = np.full(n_vars, INF)
    lo[a], hi[a] = 0.0, params.a_max
    lo[b], hi[b] = 0.0, params.b_max
    lo[v], hi[v] = -params.v_max, params.v_max
    lo[w], hi[w] = 0.0, 1.0
    # boundary conditions: start at rest with the turbo off, hit the target
    lo[q[0]] = hi[q[0]] = 0.0
    lo[v[0]] = hi[v[0]] = 0.0
    lo[w[0]] = hi[w[0]] = 0.0
    lo[q[N]] = hi[q[N]] = params.q_end
    lo[v[N]] = hi[v[N]] = 0.0

    rows: list[LinearConstraint] = []
    for k in range(N):
        rows.append(
            LinearConstraint.make(
                {q[k + 1]: 1.0, q[k]: -1.0, v[k + 1]: -h / 2, v[k]: -h / 2}, Sense.EQ, 0.0
            )
        )
        rows.append(
            LinearConstraint.make(
                {
                    v[k + 1]: 1.0,
                    v[k]: -1.0,
                    f[k + 1]: -h / 2,
                    f[k]: -h / 2,
                    b[k + 1]: h / 2,
                    b[k]: h / 2,
                },
                Sense.EQ,
                0.0,
            )
        )
    for k in range(grid):
        # thrust equals the pedal with the turbo off, triple with it on
        rows.extend(encode_bigm_equality(w[k], False, {f[k]: 1.0, a[k]: -1.0}, M))
        rows.extend(encode_bigm_equality(w[k], True, {f[k]: 1.0, a[k]: -3.0}, M))
    for k in range(N):
        # switching logic as clause big-Ms: fast forces on, slow forces off,
        # and the state holds between the thresholds
        rows.append(
            LinearConstraint.make(
                {v[k]: 1.0, w[k]: -M, w[k + 1]: -M}, Sense.LE, params.v_on
            )
        )
        rows.append(
            LinearConstraint.make(
                {v[k]: 1.0, w[k]: -M, w[k + 1]: -M}, Sense.GE, params.v_off - 2 * M
            )
        )
        rows.append(
            LinearConstraint.make(
                {v[k]: 1.0, w[k]: M, w[k + 1]: -M}, Sense.GE, params.v_on - M
            )
        )
        rows.append(
            LinearConstraint.make(
                {v[k]: 1.0, w[k]: M, w[k + 1]: -M}, Sense.LE, params.v_off + M
            )
        )

    X = MixedIntegerPolyhedron(n_vars, rows, lo, hi, w.tolist())

    weights = np.ones(grid)
    weights[0] = weights[-1] = 0.5  # trapezoidal endpoint halving
    accel_scale = params.accel_weight * h * weights
    brake_scale = params.brake_weight * h * weights

    def value(x: np.ndarray) -> float:
        return float(accel_scale @ x[a] ** 2 + brake_scale @ x[b] ** 3)

    def grad(x: np.ndarray) -> np.ndarray:
        g = np.zeros(n_vars)
        g[a] = 2.0 * accel_scale * x[a]
        g[b] = 3.0 * brake_scale * x[b] ** 2
        return g

    objective = SmoothObjective(n_vars, w.tolist(), value, grad, np.zeros(grid))
    return X, objective


def decode_turbo_trajectory(params: TurboParams, x: np.ndarray) -> dict[str, np.ndarray]:
    """Split a solution vector into named trajectories on the time grid."""
    idx = turbo_variable_indices(params.n_intervals)
    h = params.horizon / params.n_intervals
    out = {name: np.asarray(x, dtype=float)[cols].copy() for name, cols in idx.items()}
    out["t"] = h * np.arange(params.n_intervals + 1)
    return out


def build_complementarity(U: float) -> MixedIntegerPolyhedron:
    """Lifted description of ``0 <= u1 perp u2 >= 0`` inside the box [0, U]^2.

    Variables (u1, u2, z): the binary selects which of the two rays is
    open, via ``u1 <= U z`` and ``u2 <= U (1 - z)``.
    """
    if U <= 0:
        raise ValueError(f"box size must be positive, got {U}")
    rows = [
        LinearConstraint.make({0: 1.0, 2: -U}, Sense.LE, 0.0),
        LinearConstraint.make({1: 1.0, 2: U}, Sense.LE, U),
    ]
    lo = np.array([0.0, 0.0, 0.0])
    hi = np.array([U, U, 1.0])
    return MixedIntegerPolyhedron(3, rows, lo, hi, (2,))


def linear_objective(
    n_vars: int, integer_indices, coeffs: np.ndarray
) -> SmoothObjective:
    """Objective ``<coeffs, x>`` in the smooth-plus-linear split."""
    coeffs = np.asarray(coeffs, dtype=float).copy()
    integer_indices = tuple(sorted(int(i) for i in integer_indices))
    real_coeffs = coeffs.copy()
    if integer_indices:
        real_coeffs[list(integer_indices)] = 0.0

    def value(x: np.ndarray) -> float:
        return float(real_coeffs @ x)

    def grad(x: np.ndarray) -> np.ndarray:
        return real_coeffs.copy()

    f2 = coeffs[list(integer_indices)] if integer_indices else np.zeros(0)
    return SmoothObjective(n_vars, integer_indices, value, grad, f2)


@dataclass(frozen=True)
class RandomInstance:
    X: MixedIntegerPolyhedron
    objective: SmoothObjective
    planted: np.ndarray  # feasible by construction


def random_instance(
    seed: int,
    n_real: int = 4,
    n_int: int = 2,
    m_rows: int = 5,
    coupled: bool = True,
) -> RandomInstance:
    """Bounded, feasible-by-construction instance with a convex quadratic
    objective on the real block plus a random linear integer part.

    A planted interior-leaning point fixes the right-hand sides, so the
    set is never empty.  With ``coupled=False`` every row touches either
    only real or only integer columns (block-separable constraints).
    The same seed reproduces the same instance bit for bit.
    """
    if n_real + n_int > 12:
        raise ValueError("generator intended for small instances (n <= 12)")
    rng = np.random.default_rng(seed)
    n = n_real + n_int
    reals = np.arange(n_real)
    ints = np.arange(n_real, n)

    lo = np.empty(n)
    hi = np.empty(n)
    lo[reals] = -rng.uniform(1.0, 3.0, n_real)
    hi[reals] = rng.uniform(1.0, 3.0, n_real)
    int_lo = rng.integers(-2, 1, n_int)
    int_hi = int_lo + rng.integers(1, 5, n_int)  # ranges of at most 4
    lo[ints] = int_lo
    hi[ints] = int_hi

    planted = np.empty(n)
    planted[reals] = rng.uniform(lo[reals] + 0.25 * (hi[reals] - lo[reals]),
                                 hi[reals] - 0.25 * (hi[reals] - lo[reals]))
    planted[ints] = rng.integers(int_lo, int_hi + 1)

    rows = []
    for r in range(m_rows):
        if coupled:
            support = np.arange(n)
        else:
            support = reals if r % 2 == 0 or n_int == 0 else ints
        coeffs = {int(i): float(c) for i, c in zip(support, rng.normal(size=len(support)))}
        activity = sum(c * planted[i] for i, c in coeffs.items())
        margin = rng.uniform(0.3, 1.5)
        if coupled and rng.uniform() < 0.2:
            rows.append(LinearConstraint.make(coeffs, Sense.EQ, activity))
        elif rng.uniform() < 0.5:
            rows.append(LinearConstraint.make(coeffs, Sense.LE, activity + margin))
        else:
            rows.append(LinearConstraint.make(coeffs, Sense.GE, activity - margin))

    X = MixedIntegerPolyhedron(n, rows, lo, hi, ints.tolist())

    R = rng.normal(size=(n_real, n_real))
    Q = R.T @ R / n_real + 0.3 * np.eye(n_real)
    center = planted[reals] + 0.7 * rng.normal(size=n_real)
    f2 = 0.5 * rng.normal(size=n_int)

    def value(x: np.ndarray) -> float:
        d = x[reals] - center
        return float(0.5 * d @ Q @ d)

    def grad(x: np.ndarray) -> np.ndarray:
        g = np.zeros(n)
        g[reals] = Q @ (x[reals] - center)
        return g

    objective = SmoothObjective(n, ints.tolist(), value, grad, f2)
    return RandomInstance(X, objective, planted)
