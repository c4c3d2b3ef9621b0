"""Convex subproblem solving with reported accuracy.

The convexified SCA subproblems are second-order/power-cone programs.  They
are modelled with cvxpy in parametrized form (compiled once, re-solved with
new linearization data) and handed to the Clarabel interior-point solver.
The raw solver record is kept so the primal/dual objective gap and KKT
residuals can be reported alongside the iterate.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field

import cvxpy as cp
import numpy as np

from .errors import SolverError

_OK = {"Solved"}
_INACCURATE = {"AlmostSolved", "MaxIterations", "MaxTime", "InsufficientProgress"}


@dataclass
class ConvexSubproblem:
    """A parametrized convex program plus named handles to its unknowns."""

    problem: cp.Problem
    unknowns: dict[str, cp.Variable]
    parameters: dict[str, cp.Parameter] = field(default_factory=dict)
    constant: float = 0.0

    def set(self, **values) -> None:
        for name, value in values.items():
            self.parameters[name].value = value


@dataclass
class SubproblemResult:
    values: dict[str, np.ndarray]
    objective: float
    duality_gap: float
    kkt_residual: float
    iterations: int
    status: str

    @property
    def degraded(self) -> bool:
        return self.status not in _OK


def solve_convex_subproblem(sub: ConvexSubproblem, tol: float = 1e-8, max_iter: int = 200) -> SubproblemResult:
    """Solve ``sub`` to relative gap and feasibility ``tol``.

    Returns the iterate even when the solver stops early (``degraded`` is then
    set); raises :class:`SolverError` when no usable iterate exists.
    """
    opts = {"tol_gap_abs": tol, "tol_gap_rel": tol, "tol_feas": tol, "max_iter": max_iter}
    try:
        data, chain, inverse = sub.problem.get_problem_data(cp.CLARABEL, solver_opts=opts)
        raw = chain.solve_via_data(sub.problem, data, solver_opts=opts)
    except (cp.error.SolverError, cp.error.DPPError, ValueError) as exc:
        raise SolverError(f"convex subproblem could not be solved: {exc}") from exc
    status = str(raw.status).split(".")[-1]
    if status not in _OK | _INACCURATE:
        raise SolverError(f"convex subproblem returned status {status}")
    with warnings.catch_warnings():
        # inaccurate solves are reported through ``status``/``degraded``
        warnings.simplefilter("ignore", UserWarning)
        sub.problem.unpack_results(raw, chain, inverse)
    values = {name: np.array(var.value, dtype=float) for name, var in sub.unknowns.items()}
    if any(not np.all(np.isfinite(v)) for v in values.values()):
        raise SolverError(f"convex subproblem returned a non-finite iterate (status {status})")
    return SubproblemResult(
        values=values,
        objective=float(sub.problem.value) + sub.constant,
        duality_gap=abs(float(raw.obj_val) - float(raw.obj_val_dual)),
        kkt_residual=max(float(raw.r_prim), float(raw.r_dual)),
        iterations=int(raw.iterations),
        status=status,
    )
