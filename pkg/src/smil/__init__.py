"""Minimization of smooth objectives over mixed-integer linear constraints.

The solver linearizes the objective at feasible points and minimizes the
model over the feasible set within a partial-localization trust region,
so every subproblem is a mixed-integer linear program.  The package is
self-contained: it ships its own simplex and branch-and-bound engines,
enumeration baselines for validating them, a fixed-integer polishing
step, benchmark builders and a command-line interface.
"""

from .expr import (
    DomainError,
    Expression,
    ParseError,
    evaluate,
    gradient,
    parse,
    to_string,
    variable_indices,
)
from .lp import LinearProgram, LpOutcome, LpStatus, Sense, solve_lp
from .milp import Milp, MilpOutcome, MilpStatus, solve_milp
from .model import (
    FeasibilityReport,
    LinearConstraint,
    MixedIntegerPolyhedron,
    PlNorm,
    SmoothObjective,
    check_feasible,
    encode_bigm_equality,
    encode_clause,
    encode_xor,
    pl_norm,
)
from .oracle import MinlpEnumeration, enumerate_milp, enumerate_minlp, lp_basis_oracle
from .refine import RefineConfig, RefineResult, refine_fixed_integer
from .solver import (
    ClassicUpdate,
    InfeasibleProblemError,
    IterationRecord,
    NegativeCriticalityError,
    ResetUpdate,
    SolveResult,
    SolveStatus,
    SolverConfig,
    SubproblemError,
    build_tr_subproblem,
    criticality_measure,
    initial_projection,
    projected_gradient_step,
    solve,
    tr_update,
)
from .bench import (
    RandomInstance,
    TurboParams,
    build_complementarity,
    build_turbo,
    decode_turbo_trajectory,
    linear_objective,
    random_instance,
)

__version__ = "0.1.0"

__all__ = [
    "DomainError",
    "Expression",
    "ParseError",
    "evaluate",
    "gradient",
    "parse",
    "to_string",
    "variable_indices",
    "LinearProgram",
    "LpOutcome",
    "LpStatus",
    "Sense",
    "solve_lp",
    "Milp",
    "MilpOutcome",
    "MilpStatus",
    "solve_milp",
    "FeasibilityReport",
    "LinearConstraint",
    "MixedIntegerPolyhedron",
    "PlNorm",
    "SmoothObjective",
    "check_feasible",
    "encode_bigm_equality",
    "encode_clause",
    "encode_xor",
    "pl_norm",
    "MinlpEnumeration",
    "enumerate_milp",
    "enumerate_minlp",
    "lp_basis_oracle",
    "RefineConfig",
    "RefineResult",
    "refine_fixed_integer",
    "ClassicUpdate",
    "InfeasibleProblemError",
    "IterationRecord",
    "NegativeCriticalityError",
    "ResetUpdate",
    "SolveResult",
    "SolveStatus",
    "SolverConfig",
    "SubproblemError",
    "build_tr_subproblem",
    "criticality_measure",
    "initial_projection",
    "projected_gradient_step",
    "solve",
    "tr_update",
    "RandomInstance",
    "TurboParams",
    "build_complementarity",
    "build_turbo",
    "decode_turbo_trajectory",
    "linear_objective",
    "random_instance",
]
