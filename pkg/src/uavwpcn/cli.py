"""Command-line front end.

Exit codes: 0 success, 2 parse/validation error, 3 infeasible scenario,
4 solver failure.
"""

from __future__ import annotations

import argparse
import dataclasses
import sys
from pathlib import Path

from . import hover_comm, mission
from .errors import InfeasibleError, InvalidParameterError, PlannerError, ScenarioParseError, SolverError
from .kinematics import KinematicLimits, validate
from .mission import Scenario
from .propulsion import AirframeParams, derive_constants
from .scenario_io import emit_plan, emit_sweep, parse_scenario
from .trajectory_sca import ScaSettings, optimize_straight, optimize_vertical
from .visit_order import solve_order_dual, solve_order_exhaustive

EXIT_OK, EXIT_PARSE, EXIT_INFEASIBLE, EXIT_SOLVER = 0, 2, 3, 4


def _load(path: str, mode: str | None = None) -> Scenario:
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise ScenarioParseError(f"cannot read scenario: {exc.strerror}", path) from exc
    scenario = parse_scenario(text)
    if mode:
        scenario = dataclasses.replace(scenario, mode=mode.upper())
    return scenario


def _write(text: str, out: str | None) -> None:
    if out:
        Path(out).write_text(text)
    else:
        sys.stdout.write(text)


def cmd_plan(args) -> int:
    scenario = _load(args.scenario, args.mode)
    plan = mission.plan_mission(scenario)
    if args.out:
        Path(args.out).write_text(emit_plan(plan, "csv"))
    sys.stdout.write(emit_plan(plan, args.format))
    return EXIT_OK


def cmd_order(args) -> int:
    scenario = _load(args.scenario)
    matrix = mission.energy_matrix(scenario)
    if args.exhaustive:
        order = solve_order_exhaustive(matrix)
    else:
        order, trace = solve_order_dual(matrix, scenario.solver.dual)
        if args.trace:
            Path(args.trace).write_text(trace.to_csv())
        print(f"# dual iterations={trace.iterations} stop={trace.stopped_by} repaired={order.repaired}")
    print(f"order: {' '.join(map(str, order.order))}")
    print(f"flight energy: {order.total_energy:.6f} J ({order.method})")
    return EXIT_OK


def cmd_hover(args) -> int:
    scenario = _load(args.scenario, args.mode)
    if not 1 <= args.user <= len(scenario.users):
        raise InvalidParameterError("user", args.user, f"must be in 1..{len(scenario.users)}")
    user = scenario.users[args.user - 1]
    sol = hover_comm.solve(
        scenario.mode, args.height, scenario.channel, scenario.radio, user.comm, scenario.consts.hover_watt
    )
    for name in ("mode", "height", "hover_time", "harvest_time", "transmit_time", "time_split", "user_tx_power",
                 "hover_energy", "harvested_energy", "consumed_energy", "delivered_bits"):  # fmt: skip
        print(f"{name}: {getattr(sol, name)}")
    return EXIT_OK


def cmd_trajectory(args) -> int:
    airframe = AirframeParams()
    consts = derive_constants(airframe)
    limits = KinematicLimits(args.v_max, args.a_max)
    settings = ScaSettings(fixed_duration_rule=args.rule)
    if args.vertical:
        result = optimize_vertical(args.distance, limits, consts, airframe, settings)
        legs = {"descent": (result.descent, result.descent_energy), "climb": (result.climb, result.climb_energy)}
        trace = result.traces[0]
        energy = result.energy
    else:
        traj, energy, trace = optimize_straight(args.distance, limits, consts, settings)
        legs = {"straight": (traj, energy)}
    for name, (traj, e) in legs.items():
        ok = bool(validate(traj, limits, (0.0, args.distance)))
        print(f"{name}: energy={e:.6f} J duration={traj.duration:.4f} s slots={traj.slots} valid={ok}")
    print(f"total: {energy:.6f} J, outer iterations={trace.iterations}, stop={trace.stopped_by}")
    if args.trace:
        Path(args.trace).write_text(trace.to_csv())
    if args.csv:
        traj = next(iter(legs.values()))[0]
        rows = ["t_s,q_m,v_mps,a_mps2"]
        samples = zip(traj.positions.tolist(), traj.velocities.tolist(), traj.accels.tolist())
        rows += [f"{n * traj.step!r},{q!r},{v!r},{a!r}" for n, (q, v, a) in enumerate(samples)]
        Path(args.csv).write_text("\n".join(rows) + "\n")
    return EXIT_OK


def cmd_sweep(args) -> int:
    scenario = _load(args.scenario)
    modes = ["HD", "FD"] if args.mode == "both" else [(args.mode or scenario.mode).upper()]
    rows = mission.sweep(scenario, args.axis, args.values, modes)
    print(f"# axis={args.axis} seed={scenario.solver.seed}", file=sys.stderr)
    _write(emit_sweep(rows), args.out)
    return EXIT_OK


def cmd_validate(args) -> int:
    scenario = _load(args.scenario, args.mode)
    mission.check_users(scenario)
    for k, user in enumerate(scenario.users, start=1):
        top = mission.height_limit(user, scenario)
        print(f"user {k}: position={user.position} height limit={top:.4f} m")
    print(f"ok: {len(scenario.users)} users, mode {scenario.mode}, H={scenario.cruise_altitude} m")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="uavwpcn", description="Energy-minimal UAV data-collection mission planner")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("plan", help="plan a full mission")
    p.add_argument("scenario")
    p.add_argument("--mode", type=str.lower, choices=["hd", "fd"])
    p.add_argument("--out", help="also write the plan CSV here")
    p.add_argument("--format", choices=["human", "csv"], default="human")
    p.set_defaults(func=cmd_plan)

    p = sub.add_parser("order", help="visiting order only")
    p.add_argument("scenario")
    p.add_argument("--exhaustive", action="store_true")
    p.add_argument("--trace", help="write the dual iteration trace CSV here")
    p.set_defaults(func=cmd_order)

    p = sub.add_parser("hover", help="hover schedule for one user at one height")
    p.add_argument("scenario")
    p.add_argument("--user", type=int, required=True, help="1-based user index")
    p.add_argument("--height", type=float, required=True)
    p.add_argument("--mode", type=str.lower, choices=["hd", "fd"])
    p.set_defaults(func=cmd_hover)

    p = sub.add_parser("trajectory", help="optimize one rest-to-rest leg")
    p.add_argument("--distance", type=float, required=True)
    p.add_argument("--vertical", action="store_true", help="descent and climb instead of level flight")
    p.add_argument("--v-max", type=float, default=30.0)
    p.add_argument("--a-max", type=float, default=5.0)
    p.add_argument("--rule", choices=["search", "shortest", "energy_bound", "multiple_of_feasible"], default="search")
    p.add_argument("--trace", help="write the outer-iteration trace CSV here")
    p.add_argument("--csv", help="write the sampled trajectory here")
    p.set_defaults(func=cmd_trajectory)

    p = sub.add_parser("sweep", help="re-plan over one parameter")
    p.add_argument("scenario")
    p.add_argument("--axis", choices=["H", "D", "B", "P"], required=True)
    p.add_argument("--values", type=float, nargs="+", required=True)
    p.add_argument("--mode", type=str.lower, choices=["hd", "fd", "both"])
    p.add_argument("--out")
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("validate", help="parse a scenario and check every user can be served")
    p.add_argument("scenario")
    p.add_argument("--mode", type=str.lower, choices=["hd", "fd"])
    p.set_defaults(func=cmd_validate)
    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (ScenarioParseError, InvalidParameterError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_PARSE
    except InfeasibleError as exc:
        print(f"infeasible: {exc}", file=sys.stderr)
        return EXIT_INFEASIBLE
    except (SolverError, PlannerError) as exc:
        print(f"solver failure: {exc}", file=sys.stderr)
        return EXIT_SOLVER


if __name__ == "__main__":
    sys.exit(main())
