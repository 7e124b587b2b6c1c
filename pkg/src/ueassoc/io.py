"""File formats: JSON instances, CSV stations/routes/results.

CSV files may start with ``#`` comment lines carrying provenance
(``# seed=..., config=...``); readers skip them. Floats are written with 17
significant digits so they parse back bit-exactly.
"""
from __future__ import annotations

import csv
import hashlib
import io
import json
import math
from pathlib import Path
from typing import Iterable, Optional

import numpy as np

from .model import BaseStation, CostMode, Instance, User
from .mobility import RoutePoint

INSTANCE_FORMAT = "ueassoc-instance/1"
STATION_FIELDS = ("id", "x", "y", "radius", "capacity", "avg_handover")
ROUTE_FIELDS = ("t", "x", "y")


def fmt(x) -> str:
    if isinstance(x, (bool, np.bool_)):
        return str(bool(x))
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    if isinstance(x, (float, np.floating)):
        return format(float(x), ".17g")
    return str(x)


def config_hash(config: dict) -> str:
    blob = json.dumps(config, sort_keys=True, separators=(",", ":"), default=str)
    return hashlib.sha256(blob.encode()).hexdigest()[:16]


def provenance_line(seed, config: dict) -> str:
    return f"# seed={seed}, config={config_hash(config)}"


# instances -----------------------------------------------------------------

def _num(x: float):
    # JSON has no infinity; null stands for an unlimited capacity
    return None if math.isinf(x) else x


def instance_to_dict(inst: Instance, seed=None, spec: Optional[dict] = None) -> dict:
    return {
        "format": INSTANCE_FORMAT,
        "seed": seed,
        "spec": spec,
        "config_hash": config_hash({"spec": spec, "seed": seed}),
        "cost_mode": inst.cost_mode.value,
        "rsrq_params": {"theta_min": inst.theta_min, "theta_max": inst.theta_max},
        "users": [{"id": u.id, "x": u.pos[0], "y": u.pos[1]} for u in inst.users],
        "stations": [{"id": s.id, "x": s.pos[0], "y": s.pos[1], "radius": s.radius,
                      "capacity": _num(s.capacity), "avg_handover": s.avg_handover}
                     for s in inst.stations],
        "demand": inst.demand.tolist(),
        "handover_matrix": None if inst.handover_matrix is None else inst.handover_matrix.tolist(),
    }


def instance_from_dict(d: dict) -> Instance:
    if d.get("format") != INSTANCE_FORMAT:
        raise ValueError(f"not a {INSTANCE_FORMAT} document")
    users = [User(int(u["id"]), (float(u["x"]), float(u["y"]))) for u in d["users"]]
    stations = [BaseStation(int(s["id"]), (float(s["x"]), float(s["y"])), float(s["radius"]),
                            math.inf if s["capacity"] is None else float(s["capacity"]),
                            None if s["avg_handover"] is None else float(s["avg_handover"]))
                for s in d["stations"]]
    hm = d.get("handover_matrix")
    demand = np.array(d["demand"], dtype=np.float64).reshape(len(users), len(stations))
    return Instance(users, stations, demand,
                    handover_matrix=None if hm is None else np.array(hm, dtype=np.float64),
                    theta_min=float(d["rsrq_params"]["theta_min"]),
                    theta_max=float(d["rsrq_params"]["theta_max"]),
                    cost_mode=CostMode(d["cost_mode"]))


def save_instance(path, inst: Instance, seed=None, spec: Optional[dict] = None) -> None:
    Path(path).write_text(json.dumps(instance_to_dict(inst, seed, spec), indent=1) + "\n")


def load_instance(path) -> Instance:
    return instance_from_dict(json.loads(Path(path).read_text()))


# CSV -------------------------------------------------------------------------

def _data_lines(text: str) -> list[str]:
    return [ln for ln in text.splitlines() if ln.strip() and not ln.lstrip().startswith("#")]


def read_csv_rows(text: str) -> list[dict]:
    return list(csv.DictReader(_data_lines(text)))


def write_csv(path, header: Iterable[str], rows: Iterable[Iterable], comment: Optional[str] = None) -> None:
    buf = io.StringIO()
    if comment:
        buf.write(comment + "\n")
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(list(header))
    for row in rows:
        w.writerow([fmt(v) for v in row])
    Path(path).write_text(buf.getvalue())


def _require(rows: list[dict], fields, what: str) -> None:
    if not rows:
        raise ValueError(f"{what} CSV has no rows")
    missing = set(fields) - set(rows[0].keys())
    if missing:
        raise ValueError(f"{what} CSV lacks columns {sorted(missing)}")


def parse_stations_csv(text: str) -> list[BaseStation]:
    rows = read_csv_rows(text)
    _require(rows, STATION_FIELDS, "station")
    return [BaseStation(int(r["id"]), (float(r["x"]), float(r["y"])), float(r["radius"]),
                        float(r["capacity"]), float(r["avg_handover"])) for r in rows]


def parse_route_csv(text: str) -> list[RoutePoint]:
    rows = read_csv_rows(text)
    _require(rows, ROUTE_FIELDS, "route")
    return [RoutePoint(float(r["t"]), (float(r["x"]), float(r["y"]))) for r in rows]


def load_stations(path) -> list[BaseStation]:
    return parse_stations_csv(Path(path).read_text())


def load_route(path) -> list[RoutePoint]:
    return parse_route_csv(Path(path).read_text())


def save_stations(path, stations, comment: Optional[str] = None) -> None:
    write_csv(path, STATION_FIELDS,
              ([s.id, s.pos[0], s.pos[1], s.radius, s.capacity, s.avg_handover] for s in stations),
              comment)


def save_route(path, route, comment: Optional[str] = None) -> None:
    write_csv(path, ROUTE_FIELDS, ([p.t, p.pos[0], p.pos[1]] for p in route), comment)
