import itertools
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from uavwpcn.errors import InvalidParameterError, PlannerError, SolverError
from uavwpcn.visit_order import (
    AssignmentState,
    DualSettings,
    DualState,
    EnergyMatrix,
    VisitOrder,
    _best_response,
    pairwise_energy_matrix,
    recover_assignment,
    solve_order_dual,
    solve_order_exhaustive,
    tour_cost,
    two_opt,
)


def planar_matrix(rng, users, side=500.0):
    pts = np.vstack([[0.0, 0.0], rng.uniform(-side, side, size=(users, 2))])
    d = np.hypot(*(pts[:, None, :] - pts[None, :, :]).transpose(2, 0, 1))
    # concave in distance, like hop energy: a fixed take-off cost plus a sublinear term
    e = np.where(d > 0, 300.0 + 8.0 * d**0.9, 0.0)
    return EnergyMatrix(e)


def brute_force(e, users):
    best = min(itertools.permutations(range(1, users + 1)), key=lambda p: (tour_cost(e, p), p))
    return best, tour_cost(e, best)


def lagrangian(e, dual, w, v):
    """Relaxed objective plus multiplier terms, written out with loops."""
    k_n = w.shape[0]
    total = sum(e[0, l + 1] * w[0, l] + e[l + 1, 0] * w[k_n - 1, l] for l in range(k_n))
    for k in range(k_n):
        total += dual.beta[k] * (w[k].sum() - 1.0)
    for k in range(1, k_n):
        for l in range(k_n):
            for i in range(k_n):
                prev, cur, x = w[k - 1, l], w[k, i], v[k, l, i]
                total += e[l + 1, i + 1] * x * x
                total += dual.gamma[k, l, i] * (prev + cur - 1.0 - x)
                total += dual.lam[k, l, i] * (x - prev)
                total += dual.mu[k, l, i] * (x - cur)
    return total


def random_dual(rng, users, scale=50.0):
    shape = (users, users, users)
    return DualState(
        rng.normal(0, scale, users),
        rng.uniform(0, scale, shape),
        rng.uniform(0, scale, shape),
        rng.uniform(0, scale, shape),
        1.0,
    )


# ---------------------------------------------------------------- data types


def test_energy_matrix_validation():
    with pytest.raises(InvalidParameterError):
        EnergyMatrix(np.zeros((2, 3)))
    with pytest.raises(InvalidParameterError):
        EnergyMatrix(np.array([[0.0, 1.0], [2.0, 0.0]]))
    with pytest.raises(InvalidParameterError):
        EnergyMatrix(np.array([[1.0, 1.0], [1.0, 0.0]]))
    with pytest.raises(InvalidParameterError):
        EnergyMatrix(np.array([[0.0, -1.0], [-1.0, 0.0]]))
    m = EnergyMatrix(np.array([[0.0, 3.0], [3.0, 0.0]]))
    assert m.users == 1
    with pytest.raises(ValueError):
        m.entries[0, 1] = 2.0


def test_visit_order_must_be_permutation():
    with pytest.raises(InvalidParameterError):
        VisitOrder((1, 1, 3), 0.0)
    with pytest.raises(InvalidParameterError):
        VisitOrder((0, 1), 0.0)


@pytest.mark.parametrize("kw", [{"max_iter": 0}, {"rel_tol": 0.0}, {"window": 0}, {"step0": -1.0}])
def test_dual_settings_validation(kw):
    with pytest.raises(InvalidParameterError):
        DualSettings(**kw)


def test_tour_cost():
    e = np.array([[0, 1, 2], [1, 0, 4], [2, 4, 0]], float)
    assert tour_cost(e, (1, 2)) == 7.0
    assert tour_cost(e, (2, 1)) == 7.0


# ---------------------------------------------------------------- exhaustive


@pytest.mark.parametrize("users", [1, 2, 3, 4, 5, 6])
def test_exhaustive_matches_brute_force(users):
    rng = np.random.default_rng(users)
    for _ in range(5):
        e = planar_matrix(rng, users)
        order, cost = brute_force(e, users)
        got = solve_order_exhaustive(e)
        assert got.total_energy == pytest.approx(cost, rel=1e-12)
        assert got.order == order


def test_exhaustive_tie_break_is_lexicographic():
    e = np.ones((4, 4)) - np.eye(4)
    assert solve_order_exhaustive(e).order == (1, 2, 3)


def test_exhaustive_limit():
    with pytest.raises(InvalidParameterError):
        solve_order_exhaustive(np.ones((12, 12)) - np.eye(12))


# ---------------------------------------------------------------- assignment repair


@settings(max_examples=60, deadline=None)
@given(st.integers(1, 6), st.integers(0, 2**32 - 1))
def test_recover_assignment_is_optimal(n, seed):
    c = np.random.default_rng(seed).normal(size=(n, n))
    perm = recover_assignment(c)
    assert sorted(perm) == list(range(n))
    brute = min(sum(c[k, p[k]] for k in range(n)) for p in itertools.permutations(range(n)))
    assert sum(c[k, perm[k]] for k in range(n)) == pytest.approx(brute)


def test_recover_assignment_rejects_bad_input():
    with pytest.raises(InvalidParameterError):
        recover_assignment(np.array([[0.0, np.inf], [1.0, 0.0]]))


# ---------------------------------------------------------------- Lagrangian


@pytest.mark.parametrize("users", [2, 3, 4])
def test_best_response_attains_dual_value(users):
    rng = np.random.default_rng(10 + users)
    e = planar_matrix(rng, users).entries
    for _ in range(5):
        dual = random_dual(rng, users)
        _, state, value = _best_response(e, dual)
        assert lagrangian(e, dual, state.w, state.v) == pytest.approx(value, rel=1e-9, abs=1e-6)


@pytest.mark.parametrize("users", [2, 3, 4])
def test_best_response_minimizes_lagrangian(users):
    rng = np.random.default_rng(20 + users)
    e = planar_matrix(rng, users).entries
    dual = random_dual(rng, users)
    _, _, value = _best_response(e, dual)
    for _ in range(300):
        # any user-to-stage map with v in [0, 1] is in the relaxed set
        stage = rng.integers(0, users, size=users)
        w = np.zeros((users, users))
        w[stage, np.arange(users)] = 1.0
        v = rng.uniform(0, 1, (users, users, users))
        v[0] = 0.0
        assert lagrangian(e, dual, w, v) >= value - 1e-6


@pytest.mark.parametrize("users", [3, 5, 6])
def test_weak_duality_along_trace(users):
    rng = np.random.default_rng(30 + users)
    e = planar_matrix(rng, users)
    optimum = solve_order_exhaustive(e).total_energy
    _, trace = solve_order_dual(e, DualSettings(max_iter=300))
    assert max(trace.dual_objective) <= optimum + 1e-6
    assert min(trace.primal_cost) >= optimum - 1e-6


# ---------------------------------------------------------------- dual method


def test_dual_single_user():
    order, trace = solve_order_dual(np.array([[0.0, 5.0], [5.0, 0.0]]))
    assert order.order == (1,) and order.total_energy == 10.0
    assert trace.stopped_by == "trivial"


def test_dual_two_users_exact():
    e = planar_matrix(np.random.default_rng(1), 2)
    order, _ = solve_order_dual(e)
    assert order.total_energy == pytest.approx(solve_order_exhaustive(e).total_energy)


@pytest.mark.parametrize("seed", range(6))
def test_dual_returns_valid_order(seed):
    rng = np.random.default_rng(seed)
    users = 4 + seed % 3
    e = planar_matrix(rng, users)
    order, trace = solve_order_dual(e)
    assert sorted(order.order) == list(range(1, users + 1))
    assert order.total_energy == pytest.approx(tour_cost(e, order.order))
    assert order.total_energy == pytest.approx(min(trace.primal_cost))
    assert trace.stopped_by in {"gap_closed", "rel_tol", "max_iter"}
    assert trace.iterations == len(trace.primal_cost) == len(trace.infeasibility)


def test_dual_is_deterministic():
    e = planar_matrix(np.random.default_rng(7), 6)
    a, ta = solve_order_dual(e)
    b, tb = solve_order_dual(e)
    assert a == b and ta.dual_objective == tb.dual_objective


def test_polish_never_hurts():
    for seed in range(4):
        e = planar_matrix(np.random.default_rng(seed), 7)
        plain, _ = solve_order_dual(e)
        polished, _ = solve_order_dual(e, DualSettings(polish=True))
        assert polished.total_energy <= plain.total_energy + 1e-9
        assert polished.method in {"dual", "dual+2opt"}


@settings(max_examples=40, deadline=None)
@given(st.integers(3, 7), st.integers(0, 2**32 - 1))
def test_two_opt_never_increases_cost(users, seed):
    rng = np.random.default_rng(seed)
    e = planar_matrix(rng, users)
    start = tuple(int(u) for u in rng.permutation(users) + 1)
    order, cost = two_opt(e, start)
    assert sorted(order) == list(range(1, users + 1))
    assert cost <= tour_cost(e, start) + 1e-9


def test_trace_csv():
    _, trace = solve_order_dual(planar_matrix(np.random.default_rng(3), 4), DualSettings(max_iter=5))
    lines = trace.to_csv().splitlines()
    assert lines[0] == "iter,dual_objective,primal_cost,infeasibility_count"
    assert len(lines) == trace.iterations + 1
    assert isinstance(trace.assignment, AssignmentState)


# ---------------------------------------------------------------- pairwise matrix


def test_pairwise_matrix_symmetric_and_calls_once():
    calls = []

    def planner(d):
        calls.append(d)
        return 2.0 * d

    m = pairwise_energy_matrix([(0, 0), (3, 4), (6, 8)], planner)
    assert m.entries[0, 1] == 10.0 and m.entries[1, 2] == 10.0 and m.entries[0, 2] == 20.0
    assert len(calls) == 3


def test_pairwise_matrix_skips_coincident_points():
    m = pairwise_energy_matrix([(0, 0), (0, 0), (1, 0)], lambda d: 1.0 + d)
    assert m.entries[0, 1] == 0.0


def test_pairwise_matrix_errors_carry_pair():
    def failing(d):
        raise SolverError("boom", trace="t")

    with pytest.raises(SolverError, match=r"pair \(0, 1\)") as err:
        pairwise_energy_matrix([(0, 0), (1, 0)], failing)
    assert err.value.trace == "t"

    def bad(d):
        raise InvalidParameterError("distance", d)

    with pytest.raises(PlannerError, match="pair"):
        pairwise_energy_matrix([(0, 0), (1, 0)], bad)
    with pytest.raises(InvalidParameterError):
        pairwise_energy_matrix([(0, 0), (math.nan, 0)], bad)
