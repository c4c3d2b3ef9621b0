import math
from dataclasses import replace

import numpy as np
import pytest

from uavwpcn import hover_comm
from uavwpcn.errors import InfeasibleError, InvalidParameterError
from uavwpcn.hover_comm import RadioParams, UserComm
from uavwpcn.kinematics import KinematicLimits, validate
from uavwpcn.mission import (
    SWEEP_COLUMNS,
    HeightGrid,
    MissionPlan,
    Scenario,
    SolverSettings,
    UserSpec,
    VerticalCurve,
    candidate_heights,
    check_users,
    choose_order,
    energy_matrix,
    feasible_leg_energy,
    height_limit,
    optimize_stage_height,
    order_energy,
    plan_mission,
    random_users,
    straight_leg,
    sweep,
    vertical_curve,
    with_axis,
)
from uavwpcn.trajectory_sca import optimize_straight
from uavwpcn.visit_order import tour_cost


@pytest.fixture(scope="module")
def single():
    return Scenario(users=(UserSpec((300.0, 400.0)),))


@pytest.fixture(scope="module")
def plan_single(single):
    return plan_mission(single)


@pytest.fixture(scope="module")
def trio():
    return Scenario(users=(UserSpec((100.0, 0.0)), UserSpec((200.0, 0.0)), UserSpec((300.0, 0.0))))


# ---------------------------------------------------------------- scenario types


def test_scenario_validation():
    with pytest.raises(InvalidParameterError):
        Scenario(users=())
    with pytest.raises(InvalidParameterError):
        Scenario(users=(UserSpec((0, 1)),), mode="XD")
    with pytest.raises(InvalidParameterError):
        Scenario(users=(UserSpec((0, 1)),), cruise_altitude=0.0)
    with pytest.raises(InvalidParameterError):
        UserSpec((0.0, math.nan))
    assert Scenario(users=(UserSpec((0, 1)),), mode="fd").mode == "FD"


@pytest.mark.parametrize("kw", [{"step": 0.0}, {"margin": -1.0}, {"heights": ()}, {"heights": (1.0, -2.0)}])
def test_height_grid_validation(kw):
    with pytest.raises(InvalidParameterError):
        HeightGrid(**kw)


def test_random_users_reproducible():
    a, b = random_users(5, 1000.0, 3), random_users(5, 1000.0, 3)
    assert a == b and a != random_users(5, 1000.0, 4)
    assert all(0 <= x <= 1000 and 0 <= y <= 1000 for u in a for x, y in [u.position])


# ---------------------------------------------------------------- level flight


def test_collinear_matrix_matches_direct_pairs(trio):
    m = energy_matrix(trio).entries
    for d, (i, j) in [(100.0, (0, 1)), (200.0, (0, 2)), (300.0, (0, 3)), (100.0, (1, 2)), (200.0, (1, 3))]:
        assert m[i, j] == pytest.approx(feasible_leg_energy(d, trio.limits, trio.consts), rel=1e-12)
    refined = energy_matrix(replace(trio, solver=replace(trio.solver, refine_matrix=True))).entries
    direct = optimize_straight(200.0, trio.limits, trio.consts)[1]
    assert refined[0, 2] == pytest.approx(direct, rel=1e-9)
    assert np.all(refined <= m + 1e-6)


def test_coincident_users_cost_nothing():
    sc = Scenario(users=(UserSpec((50.0, 0.0)), UserSpec((50.0, 0.0))))
    assert energy_matrix(sc).entries[1, 2] == 0.0


def test_straight_leg_cached(single):
    a = straight_leg(500.0, single)
    assert straight_leg(500.0, single)[0] is a[0]


# ---------------------------------------------------------------- vertical curve


def test_vertical_curve_non_increasing(single):
    curve = vertical_curve(single)
    energies = [curve(h) for h in (0.5, 1.0, 2.0, 5.0)]
    assert np.all(np.diff(energies) < 0)


def test_vertical_curve_order_independent(single):
    a, b = VerticalCurve(single), VerticalCurve(single)
    forward = [a(h) for h in (0.3, 0.6, 0.9)]
    backward = [b(h) for h in (0.9, 0.6, 0.3)][::-1]
    assert forward == backward


def test_vertical_curve_smooth(single):
    curve = vertical_curve(single)
    hs = 0.1 + 0.05 * np.arange(40)
    e = np.array([curve(h) for h in hs])
    assert np.max(np.abs(np.diff(e, 2))) < 1e-2
    slope = np.diff(e) / 0.05
    assert np.all((slope > -60) & (slope < -40))


def test_vertical_curve_off_lattice_between_neighbours(single):
    curve = vertical_curve(single)
    mid = curve(1.025)
    assert curve(1.05) < mid < curve(1.0)


def test_vertical_curve_legs_valid(single):
    res = vertical_curve(single).result(2.0)
    for leg in (res.descent, res.climb):
        assert validate(leg, single.limits, (0.0, 118.0)).ok


# ---------------------------------------------------------------- stage height


def test_candidate_heights_respect_limit(single):
    hs = candidate_heights(single.users[0], single)
    top = height_limit(single.users[0], single)
    assert top == pytest.approx(8.23916 - 0.01, rel=1e-5)
    assert hs[0] == pytest.approx(0.1) and hs[-1] <= top
    fixed = replace(single, solver=replace(single.solver, height=HeightGrid(heights=(0.5, 1.0, 50.0))))
    assert candidate_heights(fixed.users[0], fixed).tolist() == [0.5, 1.0]


def test_stage_height_beats_every_grid_point(single):
    stage = optimize_stage_height(1, single)
    curve = vertical_curve(single)
    best = stage.local_energy
    for h in candidate_heights(single.users[0], single)[::7]:
        hover = hover_comm.solve("HD", h, single.channel, single.radio, single.users[0].comm, single.consts.hover_watt)
        assert best <= curve(h) + hover.hover_energy + 1e-9
    assert stage.descent_energy + stage.climb_energy == pytest.approx(curve(stage.hover_height))


def test_stage_height_fd_near_bound(single):
    fd = replace(single, mode="FD")
    stage = optimize_stage_height(1, fd)
    assert stage.hover_height <= height_limit(fd.users[0], fd) + 1e-12
    assert stage.hover.mode == "FD" and stage.hover.hover_time > 2.0


def test_stage_height_accepts_spec(single):
    stage = optimize_stage_height(single.users[0], single)
    assert stage.user == 0 and stage.flight_energy == 0.0


def test_infeasible_users_listed():
    weak = UserComm(rx_circuit_power=1.0)
    sc = Scenario(users=(UserSpec((10.0, 0.0)), UserSpec((20.0, 0.0), weak), UserSpec((30.0, 0.0), weak)))
    with pytest.raises(InfeasibleError) as err:
        check_users(sc)
    assert err.value.users == [2, 3]
    with pytest.raises(InfeasibleError):
        plan_mission(sc)


def test_fixed_heights_that_all_fail_demand():
    # self-interference at 0 dB swamps the uplink, so no hover time is long enough
    sc = Scenario(
        users=(UserSpec((10.0, 0.0)),),
        mode="FD",
        radio=RadioParams(self_interference=1.0),
        solver=SolverSettings(height=HeightGrid(heights=(0.3, 0.39))),
    )
    with pytest.raises(InfeasibleError, match="demand"):
        optimize_stage_height(1, sc)


# ---------------------------------------------------------------- mission


def test_single_user_plan_totals(plan_single, single):
    plan = plan_single
    assert isinstance(plan, MissionPlan) and plan.order.order == (1,)
    stage = plan.stages[0]
    assert stage.flight_energy == pytest.approx(plan.return_energy)
    parts = stage.flight_energy + stage.descent_energy + stage.hover_energy + stage.climb_energy
    assert stage.stage_energy == pytest.approx(parts)
    assert plan.total_energy == pytest.approx(parts + plan.return_energy)
    assert plan.hover_energy == stage.hover_energy and plan.local_energy == stage.local_energy
    assert all(t > 0 for t in stage.times)
    assert validate(stage.inbound, single.limits, (0.0, 500.0)).ok


def test_hd_optimal_height_low_and_falls_with_demand(single):
    heights = []
    for d in (1e6, 5e6, 10e6):
        sc = with_axis(single, "D", d)
        heights.append(optimize_stage_height(1, sc).hover_height)
    assert heights[0] > heights[1] > heights[2]
    assert heights[0] < height_limit(single.users[0], single) / 2


def test_hd_not_worse_than_fd(plan_single, single):
    fd = plan_mission(replace(single, mode="FD"))
    assert plan_single.total_energy <= fd.total_energy
    assert plan_single.local_energy < fd.local_energy


def test_choose_order_uses_exhaustive_when_better(trio):
    order, notes = choose_order(trio)
    assert order.total_energy == pytest.approx(notes["exhaustive_cost"])
    assert notes["order_method"] in {"dual", "exhaustive"}
    assert order.total_energy <= notes["dual_cost"] + 1e-9


def test_plan_order_is_optimal_for_the_matrix(trio):
    plan = plan_mission(trio)
    m = energy_matrix(trio)
    assert tour_cost(m, plan.order.order) == pytest.approx(plan.notes["exhaustive_cost"])
    assert order_energy(plan, trio, plan.order.order) == pytest.approx(plan.total_energy, rel=1e-9)


# ---------------------------------------------------------------- sweeps


def test_with_axis(single):
    assert with_axis(single, "H", 80.0).cruise_altitude == 80.0
    assert with_axis(single, "D", 2e6).users[0].comm.demand_bits == 2e6
    assert with_axis(single, "B", 1e6).radio.bandwidth == 1e6
    assert with_axis(single, "P", 2.0).radio.uav_tx_power == 2.0
    with pytest.raises(InvalidParameterError):
        with_axis(single, "Q", 1.0)


def test_sweep_records_failures_and_continues(single):
    rows = sweep(single, "P", [1.0, 1e-9], modes=["HD"])
    assert [r.axis_value for r in rows] == [1.0, 1e-9]
    assert rows[0].error == "" and rows[0].total_J > 0
    assert rows[1].error.startswith("InfeasibleError") and math.isnan(rows[1].total_J)
    assert len(rows[0].as_tuple()) == len(SWEEP_COLUMNS)


def test_sweep_both_modes(single):
    rows = sweep(single, "D", [1e6], modes=["hd", "fd"])
    assert [r.mode for r in rows] == ["HD", "FD"]
    for r in rows:
        assert r.total_J == pytest.approx(r.hover_J + r.flight_J)
        assert r.stage_J < r.total_J


def test_sweep_argument_checks(single):
    with pytest.raises(InvalidParameterError):
        sweep(single, "D", [])
    with pytest.raises(InvalidParameterError):
        sweep(single, "Z", [1.0])


def test_limits_shared_with_kinematics(single):
    assert single.limits == KinematicLimits()
