import csv
import io
from dataclasses import replace

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from uavwpcn.errors import ScenarioParseError
from uavwpcn.hover_comm import UserComm, db_to_ratio, dbm_per_hz_to_watt
from uavwpcn.mission import HeightGrid, Scenario, SweepRow, UserSpec, plan_mission
from uavwpcn.scenario_io import PLAN_COLUMNS, emit_plan, emit_scenario, emit_sweep, parse_scenario, plan_rows

MINIMAL = """
mode: fd
users:
  - position: [10, 20]
  - position: [30, 40]
    demand_bits: 2e6
"""


def test_minimal_document_gets_defaults():
    sc = parse_scenario(MINIMAL)
    assert sc.mode == "FD"
    assert sc.cruise_altitude == 120.0
    assert sc.radio.bandwidth == 20e6 and sc.radio.uav_tx_power == 1.0
    assert sc.users[0].comm == UserComm()
    assert sc.users[1].comm.demand_bits == 2e6
    assert sc.users[1].position == (30.0, 40.0)
    assert sc.radio.noise_psd == dbm_per_hz_to_watt(-174.0)


def test_log_units_converted():
    sc = parse_scenario(
        "users: [{position: [0, 1]}]\nradio: {noise_psd_dbm_hz: -170, self_interference_db: -90}\n"
    )
    assert sc.radio.noise_psd == pytest.approx(1e-20)
    assert sc.radio.self_interference == pytest.approx(1e-9)
    linear = parse_scenario("users: [{position: [0, 1]}]\nradio: {self_interference: 1e-9}\n")
    assert linear.radio.self_interference == 1e-9


def test_random_layout_uses_seed():
    doc = "users: {count: 4, side: 200, demand_bits: 3e6}\nsolver: {seed: 7}\n"
    a, b = parse_scenario(doc), parse_scenario(doc)
    assert a == b and len(a.users) == 4
    assert all(u.comm.demand_bits == 3e6 for u in a.users)
    other = parse_scenario(doc.replace("seed: 7", "seed: 8"))
    assert other.users != a.users


def test_nested_solver_sections():
    sc = parse_scenario(
        "users: [{position: [0, 1]}]\n"
        "solver:\n  sca: {objective_tol: 1e-5, slots: 40}\n  dual: {max_iter: 10, polish: true}\n"
        "  height: {heights: [0.5, 1.5], refine: false}\n  refine_matrix: true\n"
    )
    assert sc.solver.sca.objective_tol == 1e-5 and sc.solver.sca.slots == 40
    assert sc.solver.dual.max_iter == 10 and sc.solver.dual.polish
    assert sc.solver.height.heights == (0.5, 1.5)
    assert sc.solver.refine_matrix


@pytest.mark.parametrize(
    "text,path,line",
    [
        ("users: [{position: [0, 1]}]\nbogus: 1\n", "bogus", 2),
        ("users: [{position: [0, 1]}]\nlimits:\n  v_max: -3\n", "limits.v_max", 3),
        ("users: [{position: [0, 1]}]\nlimits:\n  v_max: fast\n", "limits.v_max", 3),
        ("users:\n  - position: [0]\n", "users[0].position", 2),
        ("users:\n  - position: [0, 1]\n    demand_bits: 0\n", "users[0].demand_bits", 3),
        ("mode: XD\nusers: [{position: [0, 1]}]\n", "mode", 1),
        ("users: []\n", "users", 1),
        ("mode: HD\n", "users", None),
        ("users: {side: 3}\n", "users", 1),
        ("users: [{position: [0, 1]}]\nradio: {self_interference_db: -90, self_interference: 1e-9}\n", "radio.self_interference", 2),
        ("users: [{position: [0, 1]}]\nsolver: {refine_matrix: 3}\n", "solver.refine_matrix", 2),
        ("users: [{position: [0, 1]}]\nsolver:\n  sca: {max_outer_iters: 2.5}\n", "solver.sca.max_outer_iters", 3),
    ],
)
def test_errors_carry_path_and_line(text, path, line):
    with pytest.raises(ScenarioParseError) as err:
        parse_scenario(text)
    assert err.value.path == path
    assert err.value.line == line
    assert path in str(err.value)


def test_invalid_yaml():
    with pytest.raises(ScenarioParseError, match="invalid YAML") as err:
        parse_scenario("users: [\n")
    assert err.value.line is not None


def test_round_trip_default_scenario():
    sc = Scenario(users=(UserSpec((1.5, -2.0)), UserSpec((3.0, 4.0), UserComm(demand_bits=5e6))), mode="FD")
    assert parse_scenario(emit_scenario(sc)) == sc


def test_round_trip_keeps_linear_values_exact():
    sc = Scenario(users=(UserSpec((0.0, 1.0)),))
    odd = replace(sc, radio=replace(sc.radio, noise_psd=3.3e-21, self_interference=db_to_ratio(-97.3)))
    odd = replace(odd, solver=replace(odd.solver, height=HeightGrid(heights=(0.5, 1.0))))
    back = parse_scenario(emit_scenario(odd))
    assert back == odd


@settings(max_examples=40, deadline=None)
@given(
    st.lists(st.tuples(st.floats(-1e4, 1e4), st.floats(-1e4, 1e4)), min_size=1, max_size=5),
    st.floats(10, 500),
    st.sampled_from(["HD", "FD"]),
    st.floats(1e3, 1e9),
)
def test_round_trip_property(points, altitude, mode, demand):
    sc = Scenario(
        users=tuple(UserSpec(p, UserComm(demand_bits=demand)) for p in points), mode=mode, cruise_altitude=altitude
    )
    assert parse_scenario(emit_scenario(sc)) == sc


# ---------------------------------------------------------------- output


@pytest.fixture(scope="module")
def small_plan():
    return plan_mission(Scenario(users=(UserSpec((0.0, 200.0)), UserSpec((150.0, 200.0)))))


def test_plan_csv_schema(small_plan):
    rows = list(csv.reader(io.StringIO(emit_plan(small_plan, "csv"))))
    assert tuple(rows[0]) == PLAN_COLUMNS
    assert [r[0] for r in rows[1:]] == ["1", "2", "return"]
    last = rows[-1]
    assert last[PLAN_COLUMNS.index("E1_J")] == last[PLAN_COLUMNS.index("E_stage_J")]
    assert all(last[PLAN_COLUMNS.index(c)] == "" for c in ("E2_J", "E3_J", "E4_J"))
    total = sum(float(r[-1]) for r in rows[1:])
    assert total == pytest.approx(small_plan.total_energy, rel=1e-12)


def test_plan_csv_values_round_trip(small_plan):
    rows = list(csv.DictReader(io.StringIO(emit_plan(small_plan, "csv"))))
    stage = small_plan.stages[0]
    assert float(rows[0]["h_m"]) == stage.hover_height
    assert float(rows[0]["rho"]) == stage.hover.time_split
    assert float(rows[0]["E3_J"]) == stage.hover_energy


def test_plan_human(small_plan):
    text = emit_plan(small_plan)
    assert text.startswith("# seed=0 mode=HD\n")
    assert "order: depot ->" in text and "return" in text
    assert len(plan_rows(small_plan)) == 3
    with pytest.raises(ValueError):
        emit_plan(small_plan, "xml")


def test_sweep_csv():
    rows = [SweepRow(60.0, "HD", 1.0, 0.5, 0.5, 2.0, 0.7), SweepRow(80.0, "FD", error="InfeasibleError: x")]
    text = emit_sweep(rows, "H", seed=3)
    lines = text.splitlines()
    assert lines[0] == "# axis=H seed=3"
    assert lines[1] == "axis_value,total_J,hover_J,flight_J,mean_h_m,mode,stage_J,error"
    assert lines[2] == "60.0,1.0,0.5,0.5,2.0,HD,0.7,"
    assert lines[3] == "80.0,,,,,FD,,InfeasibleError: x"
    assert emit_sweep(rows).splitlines()[0].startswith("axis_value")
