"""Scenario documents (YAML) and plan/sweep output (human text or CSV).

Units in documents: metres, seconds, watts, hertz and bits, except
``radio.noise_psd_dbm_hz`` (dBm/Hz) and ``radio.self_interference_db`` (dB).
Every omitted field takes its default.
"""

from __future__ import annotations

import csv
import dataclasses
import io
import math
from typing import Any

import numpy as np
import yaml

from .errors import PlannerError, ScenarioParseError
from .hover_comm import ChannelParams, RadioParams, UserComm, db_to_ratio, dbm_per_hz_to_watt, ratio_to_db, watt_to_dbm_per_hz
from .kinematics import KinematicLimits
from .mission import SWEEP_COLUMNS, HeightGrid, MissionPlan, Scenario, SolverSettings, SweepRow, UserSpec, random_users
from .propulsion import AirframeParams
from .trajectory_sca import ScaSettings
from .visit_order import DualSettings

PLAN_COLUMNS = (
    "stage", "user", "h_m", "t1_s", "t2_s", "t3_s", "t4_s", "rho", "p_user_W",
    "E1_J", "E2_J", "E3_J", "E4_J", "E_stage_J",
)  # fmt: skip

TOP_KEYS = ("mode", "cruise_altitude", "depot", "airframe", "limits", "channel", "radio", "solver", "users")
USER_COMM_KEYS = tuple(f.name for f in dataclasses.fields(UserComm))
RADIO_KEYS = ("uav_tx_power", "bandwidth", "harvest_efficiency")
OPTIONAL_INT = {"slots"}
OPTIONAL_FLOAT = {"step0"}


class _Doc:
    """Parsed YAML plus a path -> line map for error messages."""

    def __init__(self, text: str):
        try:
            node = yaml.compose(text, Loader=yaml.SafeLoader)
            self.data = yaml.safe_load(text)
        except yaml.YAMLError as exc:
            mark = getattr(exc, "problem_mark", None)
            raise ScenarioParseError(f"invalid YAML: {getattr(exc, 'problem', exc)}", line=mark.line + 1 if mark else None) from exc
        self.lines: dict[str, int] = {}
        if node is not None:
            self._index(node, "")

    def _index(self, node, path: str) -> None:
        self.lines[path] = node.start_mark.line + 1
        if isinstance(node, yaml.MappingNode):
            for key, value in node.value:
                child = f"{path}.{key.value}" if path else str(key.value)
                self.lines[child] = key.start_mark.line + 1
                self._index(value, child)
                self.lines[child] = key.start_mark.line + 1
        elif isinstance(node, yaml.SequenceNode):
            for i, value in enumerate(node.value):
                self._index(value, f"{path}[{i}]")

    def error(self, path: str, message: str) -> ScenarioParseError:
        probe = path
        while probe and probe not in self.lines:
            probe = probe.rsplit(".", 1)[0] if "." in probe else ""
        return ScenarioParseError(message, path, self.lines.get(probe))


def _number(doc: _Doc, path: str, value: Any, kind=float):
    if isinstance(value, bool):
        raise doc.error(path, f"expected a number, got {value!r}")
    if isinstance(value, str):
        try:
            value = float(value.strip())
        except ValueError:
            raise doc.error(path, f"expected a number, got {value!r}") from None
    if not isinstance(value, (int, float)):
        raise doc.error(path, f"expected a number, got {type(value).__name__}")
    if kind is int:
        if float(value) != int(value):
            raise doc.error(path, f"expected an integer, got {value!r}")
        return int(value)
    if not math.isfinite(float(value)):
        raise doc.error(path, f"expected a finite number, got {value!r}")
    return float(value)


def _mapping(doc: _Doc, path: str, value: Any, allowed) -> dict:
    if value is None:
        return {}
    if not isinstance(value, dict):
        raise doc.error(path, "expected a mapping")
    for key in value:
        if key not in allowed:
            raise doc.error(f"{path}.{key}" if path else str(key), f"unknown key {key!r} (allowed: {', '.join(allowed)})")
    return value


def _build(doc: _Doc, path: str, cls, kwargs: dict):
    try:
        return cls(**kwargs)
    except (PlannerError, ValueError, TypeError) as exc:
        field = getattr(exc, "field", None)
        raise doc.error(f"{path}.{field}" if field else path, str(exc)) from exc


def _section(doc: _Doc, path: str, value: Any, cls):
    """Dataclass section: every key must be a field; types follow the field defaults."""
    defaults = {f.name: f.default for f in dataclasses.fields(cls)}
    raw = _mapping(doc, path, value, tuple(defaults))
    kwargs = {}
    for key, item in raw.items():
        p = f"{path}.{key}"
        default = defaults[key]
        if key in OPTIONAL_INT or key in OPTIONAL_FLOAT:
            kwargs[key] = None if item is None else _number(doc, p, item, int if key in OPTIONAL_INT else float)
        elif isinstance(default, bool):
            if not isinstance(item, bool):
                raise doc.error(p, f"expected true/false, got {item!r}")
            kwargs[key] = item
        elif isinstance(default, int):
            kwargs[key] = _number(doc, p, item, int)
        elif isinstance(default, float):
            kwargs[key] = _number(doc, p, item)
        elif key == "heights":
            if item is not None and not isinstance(item, list):
                raise doc.error(p, "expected a list of heights")
            kwargs[key] = None if item is None else tuple(_number(doc, f"{p}[{i}]", h) for i, h in enumerate(item))
        else:
            kwargs[key] = item
    return _build(doc, path, cls, kwargs)


def _pair(doc: _Doc, path: str, value: Any) -> tuple[float, float]:
    if not isinstance(value, (list, tuple)) or len(value) != 2:
        raise doc.error(path, "expected [x, y] in metres")
    return (_number(doc, f"{path}[0]", value[0]), _number(doc, f"{path}[1]", value[1]))


def _radio(doc: _Doc, value: Any) -> RadioParams:
    keys = (*RADIO_KEYS, "noise_psd_dbm_hz", "noise_psd_w_hz", "self_interference_db", "self_interference")
    raw = _mapping(doc, "radio", value, keys)
    kwargs = {k: _number(doc, f"radio.{k}", raw[k]) for k in RADIO_KEYS if k in raw}
    for log_key, lin_key, field_name, to_linear in (
        ("noise_psd_dbm_hz", "noise_psd_w_hz", "noise_psd", dbm_per_hz_to_watt),
        ("self_interference_db", "self_interference", "self_interference", db_to_ratio),
    ):
        if log_key in raw and lin_key in raw:
            raise doc.error(f"radio.{lin_key}", f"give either {log_key} or {lin_key}, not both")
        if log_key in raw:
            kwargs[field_name] = to_linear(_number(doc, f"radio.{log_key}", raw[log_key]))
        elif lin_key in raw:
            kwargs[field_name] = _number(doc, f"radio.{lin_key}", raw[lin_key])
    return _build(doc, "radio", RadioParams, kwargs)


def _users(doc: _Doc, value: Any, seed: int) -> tuple[UserSpec, ...]:
    if isinstance(value, dict):
        raw = _mapping(doc, "users", value, ("count", "side", *USER_COMM_KEYS))
        if "count" not in raw:
            raise doc.error("users", "missing required key 'count' for a random layout")
        count = _number(doc, "users.count", raw["count"], int)
        if count < 1:
            raise doc.error("users.count", "at least one user is required")
        side = _number(doc, "users.side", raw.get("side", 1000.0))
        comm = _section(doc, "users", {k: raw[k] for k in USER_COMM_KEYS if k in raw}, UserComm)
        return tuple(dataclasses.replace(u, comm=comm) for u in random_users(count, side, seed))
    if not isinstance(value, list):
        raise doc.error("users", "expected a list of users or a {count, side} random layout")
    if not value:
        raise doc.error("users", "at least one user is required")
    users = []
    for i, item in enumerate(value):
        path = f"users[{i}]"
        raw = _mapping(doc, path, item, ("position", *USER_COMM_KEYS))
        if "position" not in raw:
            raise doc.error(path, "missing required key 'position'")
        comm = _section(doc, path, {k: raw[k] for k in USER_COMM_KEYS if k in raw}, UserComm)
        users.append(UserSpec(_pair(doc, f"{path}.position", raw["position"]), comm))
    return tuple(users)


def parse_scenario(text: str) -> Scenario:
    """Validated scenario from a YAML document; errors carry the key path and line."""
    doc = _Doc(text)
    data = _mapping(doc, "", doc.data, TOP_KEYS)
    if "users" not in data:
        raise ScenarioParseError("missing required key 'users'", "users", None)
    solver_raw = _mapping(doc, "solver", data.get("solver"), ("sca", "dual", "height", "refine_matrix", "seed"))
    seed = _number(doc, "solver.seed", solver_raw.get("seed", 0), int)
    refine = solver_raw.get("refine_matrix", False)
    if not isinstance(refine, bool):
        raise doc.error("solver.refine_matrix", f"expected true/false, got {refine!r}")
    solver = SolverSettings(
        sca=_section(doc, "solver.sca", solver_raw.get("sca"), ScaSettings),
        dual=_section(doc, "solver.dual", solver_raw.get("dual"), DualSettings),
        height=_section(doc, "solver.height", solver_raw.get("height"), HeightGrid),
        refine_matrix=refine,
        seed=seed,
    )
    kwargs: dict[str, Any] = {
        "users": _users(doc, data["users"], seed),
        "airframe": _section(doc, "airframe", data.get("airframe"), AirframeParams),
        "limits": _section(doc, "limits", data.get("limits"), KinematicLimits),
        "channel": _section(doc, "channel", data.get("channel"), ChannelParams),
        "radio": _radio(doc, data.get("radio")),
        "solver": solver,
    }
    if "mode" in data:
        mode = str(data["mode"]).upper()
        if mode not in ("HD", "FD"):
            raise doc.error("mode", f"mode must be HD or FD, got {data['mode']!r}")
        kwargs["mode"] = mode
    if "cruise_altitude" in data:
        kwargs["cruise_altitude"] = _number(doc, "cruise_altitude", data["cruise_altitude"])
    if "depot" in data:
        kwargs["depot"] = _pair(doc, "depot", data["depot"])
    return _build(doc, "", Scenario, kwargs)


def _exact_log(value: float, to_log, to_linear, ulps: int = 4) -> float | None:
    """A log-unit number that converts back to exactly ``value``, if one exists nearby."""
    guess = to_log(value)
    up = down = guess
    for _ in range(ulps + 1):
        for candidate in (up, down):
            if to_linear(candidate) == value:
                return candidate
        up, down = float(np.nextafter(up, math.inf)), float(np.nextafter(down, -math.inf))
    return None


def _fields(obj) -> dict:
    out = {}
    for f in dataclasses.fields(obj):
        value = getattr(obj, f.name)
        out[f.name] = list(value) if isinstance(value, tuple) else value
    return out


def scenario_document(scenario: Scenario) -> dict:
    radio: dict[str, Any] = {k: getattr(scenario.radio, k) for k in RADIO_KEYS}
    noise = _exact_log(scenario.radio.noise_psd, watt_to_dbm_per_hz, dbm_per_hz_to_watt)
    if noise is None:
        radio["noise_psd_w_hz"] = scenario.radio.noise_psd
    else:
        radio["noise_psd_dbm_hz"] = noise
    gamma = _exact_log(scenario.radio.self_interference, ratio_to_db, db_to_ratio)
    if gamma is None:
        radio["self_interference"] = scenario.radio.self_interference
    else:
        radio["self_interference_db"] = gamma
    solver = scenario.solver
    return {
        "mode": scenario.mode,
        "cruise_altitude": scenario.cruise_altitude,
        "depot": list(scenario.depot),
        "airframe": _fields(scenario.airframe),
        "limits": _fields(scenario.limits),
        "channel": _fields(scenario.channel),
        "radio": radio,
        "solver": {
            "sca": _fields(solver.sca),
            "dual": _fields(solver.dual),
            "height": _fields(solver.height),
            "refine_matrix": solver.refine_matrix,
            "seed": solver.seed,
        },
        "users": [{"position": list(u.position), **_fields(u.comm)} for u in scenario.users],
    }


def emit_scenario(scenario: Scenario) -> str:
    return yaml.safe_dump(scenario_document(scenario), sort_keys=False)


def plan_rows(plan: MissionPlan) -> list[tuple]:
    rows = []
    for k, s in enumerate(plan.stages, start=1):
        t1, t2, t3, t4 = s.times
        rows.append((
            k, s.user, s.hover_height, t1, t2, t3, t4, s.hover.time_split, s.hover.user_tx_power,
            s.flight_energy, s.descent_energy, s.hover_energy, s.climb_energy, s.stage_energy,
        ))  # fmt: skip
    t_back = plan.return_leg.duration
    rows.append(("return", 0, "", t_back, "", "", "", "", "", plan.return_energy, "", "", "", plan.return_energy))
    return rows


def emit_plan(plan: MissionPlan, fmt: str = "human") -> str:
    if fmt == "csv":
        out = io.StringIO()
        writer = csv.writer(out, lineterminator="\n")
        writer.writerow(PLAN_COLUMNS)
        writer.writerows(plan_rows(plan))
        return out.getvalue()
    if fmt != "human":
        raise ValueError(f"unknown format {fmt!r} (human or csv)")
    lines = [
        f"# seed={plan.seed} mode={plan.mode}",
        f"order: {' -> '.join(['depot', *map(str, plan.order.order), 'depot'])}  ({plan.order.method})",
        f"total energy: {plan.total_energy:.3f} J",
        "",
        f"{'stage':>6} {'user':>4} {'h[m]':>7} {'t1[s]':>8} {'t2[s]':>7} {'t3[s]':>8} {'t4[s]':>7} "
        f"{'rho':>6} {'p[W]':>10} {'E1[J]':>10} {'E2[J]':>9} {'E3[J]':>8} {'E4[J]':>9} {'E[J]':>10}",
    ]
    for s_row in plan_rows(plan):
        k, user, h, t1, t2, t3, t4, rho, p, e1, e2, e3, e4, e = s_row
        if k == "return":
            lines.append(f"{'return':>6} {'-':>4} {'':>7} {t1:8.2f} {'':>7} {'':>8} {'':>7} {'':>6} {'':>10} {e1:10.2f} {'':>9} {'':>8} {'':>9} {e:10.2f}")
        else:
            lines.append(
                f"{k:>6} {user:>4} {h:7.3f} {t1:8.2f} {t2:7.2f} {t3:8.4f} {t4:7.2f} {rho:6.4f} {p:10.3e} "
                f"{e1:10.2f} {e2:9.2f} {e3:8.2f} {e4:9.2f} {e:10.2f}"
            )
    return "\n".join(lines) + "\n"


def emit_sweep(rows: list[SweepRow], axis: str = "", seed: int | None = None) -> str:
    out = io.StringIO()
    if seed is not None:
        out.write(f"# axis={axis} seed={seed}\n")
    writer = csv.writer(out, lineterminator="\n")
    writer.writerow(SWEEP_COLUMNS)
    for row in rows:
        writer.writerow(["" if isinstance(v, float) and math.isnan(v) else v for v in row.as_tuple()])
    return out.getvalue()
