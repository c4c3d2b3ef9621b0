"""Visiting order of the ground users.

The order is an assignment of users to stages: ``w[k, l] = 1`` when user
``l`` is served in stage ``k``, and ``v[k, l, i] = w[k-1, l] * w[k, i]`` marks
the leg ``l -> i`` flown in stage ``k``.  :func:`solve_order_dual` runs a
projected subgradient method on the Lagrangian of the relaxed program and
repairs each iterate into a permutation with an optimal assignment.
:func:`solve_order_exhaustive` enumerates every permutation and serves as
the reference optimum for small ``K``.

Internally stages and users are 0-based; orders exposed to callers use
1-based user ids, matching the energy-matrix index (0 is the depot).
"""

from __future__ import annotations

import io
import itertools
import math
from collections.abc import Callable, Sequence
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import linear_sum_assignment

from .errors import InvalidParameterError, PlannerError, SolverError

MAX_EXHAUSTIVE_USERS = 10


@dataclass(frozen=True)
class EnergyMatrix:
    """Flight energy between every pair of points; index 0 is the depot."""

    entries: np.ndarray

    def __post_init__(self) -> None:
        e = np.array(self.entries, dtype=float)
        if e.ndim != 2 or e.shape[0] != e.shape[1] or e.shape[0] < 2:
            raise InvalidParameterError("entries", e.shape, "must be a square (K+1)x(K+1) matrix with K >= 1")
        if not np.all(np.isfinite(e)) or np.any(e < 0):
            raise InvalidParameterError("entries", "negative/non-finite", "entries must be finite and >= 0")
        scale = max(1.0, float(np.max(e)))
        if np.max(np.abs(e - e.T)) > 1e-9 * scale:
            raise InvalidParameterError("entries", "asymmetric", "must be symmetric")
        if np.any(np.diag(e) != 0):
            raise InvalidParameterError("entries", "diagonal", "diagonal must be zero")
        e.flags.writeable = False
        object.__setattr__(self, "entries", e)

    @property
    def users(self) -> int:
        return self.entries.shape[0] - 1


@dataclass(frozen=True)
class AssignmentState:
    w: np.ndarray  # (K, K): stage x user
    v: np.ndarray  # (K, K, K): stage x from-user x to-user; stage 0 unused


@dataclass
class DualState:
    beta: np.ndarray
    gamma: np.ndarray
    lam: np.ndarray
    mu: np.ndarray
    step_scale: float

    @classmethod
    def zeros(cls, users: int, step_scale: float) -> DualState:
        shape = (users, users, users)
        return cls(np.zeros(users), np.zeros(shape), np.zeros(shape), np.zeros(shape), step_scale)


@dataclass(frozen=True)
class VisitOrder:
    order: tuple[int, ...]
    total_energy: float
    method: str = "exhaustive"
    repaired: bool = False

    def __post_init__(self) -> None:
        object.__setattr__(self, "order", tuple(int(u) for u in self.order))
        if sorted(self.order) != list(range(1, len(self.order) + 1)):
            raise InvalidParameterError("order", self.order, "must be a permutation of 1..K")


@dataclass(frozen=True)
class DualSettings:
    max_iter: int = 5000
    rel_tol: float = 1e-6
    window: int = 20
    step0: float | None = None
    polish: bool = False

    def __post_init__(self) -> None:
        if self.max_iter < 1:
            raise InvalidParameterError("max_iter", self.max_iter, "must be >= 1")
        if not self.rel_tol > 0:
            raise InvalidParameterError("rel_tol", self.rel_tol)
        if self.window < 1:
            raise InvalidParameterError("window", self.window, "must be >= 1")
        if self.step0 is not None and not self.step0 > 0:
            raise InvalidParameterError("step0", self.step0)


@dataclass
class DualTrace:
    dual_objective: list[float] = field(default_factory=list)
    primal_cost: list[float] = field(default_factory=list)
    infeasibility: list[int] = field(default_factory=list)
    final: DualState | None = None
    assignment: AssignmentState | None = None
    stopped_by: str = ""

    @property
    def iterations(self) -> int:
        return len(self.dual_objective)

    def to_csv(self) -> str:
        out = io.StringIO()
        out.write("iter,dual_objective,primal_cost,infeasibility_count\n")
        for j, (d, p, n) in enumerate(zip(self.dual_objective, self.primal_cost, self.infeasibility), start=1):
            out.write(f"{j},{d!r},{p!r},{n}\n")
        return out.getvalue()


def _matrix(energy) -> np.ndarray:
    return energy.entries if isinstance(energy, EnergyMatrix) else EnergyMatrix(energy).entries


def tour_cost(energy, order: Sequence[int]) -> float:
    """Depot -> users in ``order`` (1-based) -> depot."""
    return _tour_cost(_matrix(energy), order)


def _tour_cost(e: np.ndarray, order: Sequence[int]) -> float:
    path = [0, *order, 0]
    return float(sum(e[a, b] for a, b in zip(path[:-1], path[1:])))


def pairwise_energy_matrix(
    positions: Sequence[tuple[float, float]], planner: Callable[[float], float]
) -> EnergyMatrix:
    """Energy matrix from planar positions (``positions[0]`` is the depot).

    ``planner(distance)`` returns the straight-flight energy for one hop; it is
    called once per unordered pair, so the result is symmetric by construction.
    """
    pts = np.asarray(positions, dtype=float)
    if pts.ndim != 2 or pts.shape[1] != 2 or pts.shape[0] < 2:
        raise InvalidParameterError("positions", pts.shape, "need the depot plus at least one user as (x, y)")
    if not np.all(np.isfinite(pts)):
        raise InvalidParameterError("positions", "non-finite", "positions must be finite")
    n = pts.shape[0]
    e = np.zeros((n, n))
    for l, i in itertools.combinations(range(n), 2):
        d = float(np.hypot(*(pts[i] - pts[l])))
        if d == 0.0:
            continue
        try:
            e[l, i] = e[i, l] = planner(d)
        except SolverError as exc:
            raise SolverError(f"pair ({l}, {i}), distance {d:.6g} m: {exc}", exc.trace) from exc
        except PlannerError as exc:
            raise PlannerError(f"pair ({l}, {i}), distance {d:.6g} m: {exc}") from exc
    return EnergyMatrix(e)


def solve_order_exhaustive(energy) -> VisitOrder:
    """Global optimum by enumerating all ``K!`` orders (``K <= 10``).

    Among equal-cost orders the lexicographically smallest wins.
    """
    e = _matrix(energy)
    users = e.shape[0] - 1
    if users > MAX_EXHAUSTIVE_USERS:
        raise InvalidParameterError("users", users, f"exhaustive search limited to K <= {MAX_EXHAUSTIVE_USERS}")
    best_cost, best_order = math.inf, None
    perms = itertools.permutations(range(1, users + 1))
    tol = 1e-12 * max(1.0, float(e.max()) * (users + 1))
    while True:
        chunk = np.array(list(itertools.islice(perms, 200_000)), dtype=np.int64)
        if chunk.size == 0:
            break
        cost = e[0, chunk[:, 0]] + e[chunk[:, -1], 0]
        if users > 1:
            cost = cost + e[chunk[:, :-1], chunk[:, 1:]].sum(axis=1)
        j = int(np.argmax(cost <= cost.min() + tol))
        if cost[j] < best_cost - tol:
            best_cost, best_order = float(cost[j]), tuple(int(u) for u in chunk[j])
    return VisitOrder(best_order, best_cost, method="exhaustive")


def recover_assignment(cost) -> np.ndarray:
    """Minimum-cost one-to-one assignment of stages (rows) to users (columns).

    Returns ``perm`` with ``perm[k]`` the 0-based user served in stage ``k``.
    """
    c = np.asarray(cost, dtype=float)
    if c.ndim != 2 or c.shape[0] != c.shape[1] or not np.all(np.isfinite(c)):
        raise InvalidParameterError("cost", c.shape, "must be a finite square matrix")
    rows, cols = linear_sum_assignment(c)
    perm = np.empty(c.shape[0], dtype=int)
    perm[rows] = cols
    return perm


def stage_costs(e: np.ndarray, dual: DualState) -> np.ndarray:
    """Coefficient of ``w[k, l]`` in the Lagrangian, shape (stage, user)."""
    users = e.shape[0] - 1
    c = np.zeros((users, users))
    c[0] += e[0, 1:]
    c[users - 1] += e[1:, 0]
    c += dual.beta[:, None]
    if users > 1:
        g, lam, mu = dual.gamma[1:], dual.lam[1:], dual.mu[1:]
        # w[k, l] as the "from" end of the leg flown in stage k+1
        c[:-1] += (g - lam).sum(axis=2)
        # w[k, l] as the "to" end of the leg flown in stage k
        c[1:] += (g - mu).sum(axis=1)
    return c


def _best_response(e: np.ndarray, dual: DualState):
    users = e.shape[0] - 1
    c = stage_costs(e, dual)
    stage = np.argmin(c, axis=0)  # first minimum = smallest stage index
    w = np.zeros((users, users))
    w[stage, np.arange(users)] = 1.0
    eu = np.broadcast_to(e[1:, 1:], (users, users, users))
    coef = dual.gamma - dual.lam - dual.mu
    v = np.zeros_like(coef)
    pos = eu > 0
    v[pos] = np.maximum(coef[pos], 0.0) / (2.0 * eu[pos])
    v[~pos] = (coef[~pos] > 0).astype(float)  # linear in v: sits on a bound of [0, 1]
    v[0] = 0.0
    dual_value = (
        float(np.sum(c[stage, np.arange(users)]))
        - float(dual.beta.sum())
        - float(dual.gamma[1:].sum())
        + float(np.sum(eu[1:] * v[1:] ** 2 - coef[1:] * v[1:]))
    )
    return c, AssignmentState(w, v), dual_value


def _subgradient_step(dual: DualState, state: AssignmentState, phi: float) -> None:
    w, v = state.w, state.v
    dual.beta += phi * (w.sum(axis=1) - 1.0)
    if w.shape[0] > 1:
        prev = w[:-1, :, None]
        cur = w[1:, None, :]
        vk = v[1:]
        dual.gamma[1:] = np.maximum(dual.gamma[1:] + phi * (prev + cur - 1.0 - vk), 0.0)
        dual.lam[1:] = np.maximum(dual.lam[1:] + phi * (vk - prev), 0.0)
        dual.mu[1:] = np.maximum(dual.mu[1:] + phi * (vk - cur), 0.0)


def two_opt(energy, order: Sequence[int]) -> tuple[tuple[int, ...], float]:
    """Segment-reversal local search; returns the improved order and its cost."""
    e = _matrix(energy)
    tour = [0, *order, 0]
    improved = True
    while improved:
        improved = False
        for a in range(1, len(tour) - 2):
            for b in range(a + 1, len(tour) - 1):
                delta = (
                    e[tour[a - 1], tour[b]] + e[tour[a], tour[b + 1]] - e[tour[a - 1], tour[a]] - e[tour[b], tour[b + 1]]
                )
                if delta < -1e-9:
                    tour[a : b + 1] = tour[a : b + 1][::-1]
                    improved = True
    order = tuple(tour[1:-1])
    return order, _tour_cost(e, order)


def solve_order_dual(energy, settings: DualSettings | None = None) -> tuple[VisitOrder, DualTrace]:
    """Projected subgradient method on the relaxed assignment program.

    Every iterate's stage costs are repaired into a permutation with an
    optimal assignment; the cheapest one seen is returned.  ``repaired`` is
    set when the final best response itself is not a permutation.
    """
    settings = settings or DualSettings()
    e = _matrix(energy)
    users = e.shape[0] - 1
    trace = DualTrace()
    if users == 1:
        order = VisitOrder((1,), _tour_cost(e, (1,)), method="dual")
        trace.stopped_by = "trivial"
        return order, trace
    step0 = settings.step0 if settings.step0 is not None else float(np.mean(e)) / users
    if step0 <= 0:
        step0 = 1.0
    dual = DualState.zeros(users, step0)
    scale = max(1.0, float(e.max()))
    tol = 1e-12 * scale * (users + 1)
    best_cost, best_order = math.inf, None
    state = None
    for j in range(1, settings.max_iter + 1):
        c, state, dual_value = _best_response(e, dual)
        perm = recover_assignment(c)
        order = tuple(int(u) + 1 for u in perm)
        cost = _tour_cost(e, order)
        if cost < best_cost - tol or (cost <= best_cost + tol and order < best_order):
            best_cost, best_order = cost, order
        trace.dual_objective.append(dual_value)
        trace.primal_cost.append(cost)
        trace.infeasibility.append(int(np.count_nonzero(state.w.sum(axis=1) != 1.0)))
        if dual_value >= best_cost - tol:
            trace.stopped_by = "gap_closed"
            break
        if j > settings.window:
            old = trace.dual_objective[-1 - settings.window]
            if abs(dual_value - old) <= settings.rel_tol * max(1.0, abs(dual_value)):
                trace.stopped_by = "rel_tol"
                break
        phi = step0 / math.sqrt(j)
        dual.step_scale = phi
        _subgradient_step(dual, state, phi)
    else:
        trace.stopped_by = "max_iter"
    trace.final = dual
    trace.assignment = state
    repaired = bool(trace.infeasibility[-1]) if trace.infeasibility else False
    method = "dual"
    if settings.polish:
        polished, cost = two_opt(e, best_order)
        if cost < best_cost - tol:
            best_order, best_cost, method = polished, cost, "dual+2opt"
    return VisitOrder(best_order, best_cost, method=method, repaired=repaired), trace
