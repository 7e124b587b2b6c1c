"""Route replay: per-step association, handover accounting and RSRQ tracing.

At every route point the chosen strategy names a preferred station for the
tracked UE. The UE hands over only when that preference is strictly better
than staying put; ties keep the current station.

Strategies:

``ils``      cost-model association solved with ILS-VND each step
``exact``    the same association solved with branch-and-bound
``predict``  route-prediction baseline: ``rsrq + direction + coverage`` where
             ``direction`` is 1 when the UE got closer to the station since
             the previous step and ``coverage`` is the fraction of the
             remaining route (current point included) inside the station's
             radius
"""
from __future__ import annotations

import enum
import math
import xml.etree.ElementTree as ET
from collections import Counter
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace
from typing import Optional, Sequence

import numpy as np

from .exact import Status, solve_bnb
from .ils import IlsParams, ils_solve
from .model import (DEFAULT_THETA_MAX, DEFAULT_THETA_MIN, BaseStation, CostMode, Instance,
                    ModelError, User, rsrq_array)

PREF_EPS = 1e-9


class Strategy(str, enum.Enum):
    ILS_VND = "ils"
    EXACT = "exact"
    PREDICT = "predict"


@dataclass(frozen=True)
class RoutePoint:
    t: float
    pos: tuple[float, float]


@dataclass
class Scenario:
    stations: Sequence[BaseStation]
    route: Sequence[RoutePoint]
    region: tuple[float, float]
    theta_min: float = DEFAULT_THETA_MIN
    theta_max: float = DEFAULT_THETA_MAX
    demand: float = 1.0
    strategy: Strategy = Strategy.ILS_VND
    cost_mode: CostMode = CostMode.MAGNITUDE
    # other UEs sharing the stations; each must have as many points as ``route``
    extra_routes: Sequence[Sequence[RoutePoint]] = ()
    ils_iterations: int = 10

    def __post_init__(self):
        self.stations = tuple(self.stations)
        self.route = tuple(self.route)
        self.strategy = Strategy(self.strategy)
        self.cost_mode = CostMode(self.cost_mode)
        if not self.route:
            raise ModelError("scenario route is empty")
        if not self.stations:
            raise ModelError("scenario has no stations")
        if any(s.avg_handover is None for s in self.stations):
            raise ModelError("scenario stations need avg_handover")
        ts = [p.t for p in self.route]
        if any(b <= a for a, b in zip(ts, ts[1:])):
            raise ModelError("route times must be strictly increasing")
        for r in self.extra_routes:
            if len(r) != len(self.route):
                raise ModelError("extra routes must match the tracked route's length")


@dataclass(frozen=True)
class HandoverEvent:
    step: int
    from_station: int
    to_station: int


@dataclass
class SimResult:
    serving: np.ndarray
    rsrq_series: np.ndarray
    handovers: list
    shares: dict = field(default_factory=dict)

    @property
    def mean_rsrq(self) -> float:
        return math.fsum(self.rsrq_series.tolist()) / self.rsrq_series.size


def _route_xy(route) -> np.ndarray:
    return np.array([p.pos for p in route], dtype=np.float64).reshape(-1, 2)


def _dist(xy: np.ndarray, station_xy: np.ndarray) -> np.ndarray:
    diff = xy[:, None, :] - station_xy[None, :, :]
    return np.hypot(diff[..., 0], diff[..., 1])


def coverage_ratio(dist: np.ndarray, radius: np.ndarray) -> np.ndarray:
    """``[step, station]`` fraction of route points from ``step`` on within the radius."""
    inside = (dist <= radius[None, :]).astype(np.int64)
    remaining = np.cumsum(inside[::-1], axis=0)[::-1]
    counts = np.arange(dist.shape[0], 0, -1)[:, None]
    return remaining / counts


def predict_scores(sc: Scenario, dist: Optional[np.ndarray] = None) -> np.ndarray:
    """Baseline score for every (step, station)."""
    station_xy = np.array([s.pos for s in sc.stations], dtype=np.float64)
    radius = np.array([s.radius for s in sc.stations], dtype=np.float64)
    if dist is None:
        dist = _dist(_route_xy(sc.route), station_xy)
    theta = rsrq_array(dist, radius[None, :], sc.theta_min, sc.theta_max)
    direction = np.zeros_like(dist)
    direction[1:] = dist[1:] < dist[:-1]
    return theta + direction + coverage_ratio(dist, radius)


def predict_score(sc: Scenario, step: int, station: int, prev_pos=None) -> float:
    """Score of one station at one step.

    ``prev_pos`` overrides the previous route point used for the direction
    term; with neither (step 0) the term is 0.
    """
    station_xy = np.array([s.pos for s in sc.stations], dtype=np.float64)
    radius = np.array([s.radius for s in sc.stations], dtype=np.float64)
    xy = _route_xy(sc.route)
    dist = _dist(xy[step:], station_xy[station:station + 1])[:, 0]
    theta = rsrq_array(dist[0], radius[station], sc.theta_min, sc.theta_max)
    if prev_pos is None and step > 0:
        prev_pos = sc.route[step - 1].pos
    direction = 0.0
    if prev_pos is not None:
        prev_d = math.hypot(prev_pos[0] - station_xy[station, 0], prev_pos[1] - station_xy[station, 1])
        direction = 1.0 if dist[0] < prev_d else 0.0
    ratio = float(np.count_nonzero(dist <= radius[station])) / dist.size
    return float(theta) + direction + ratio


def _step_instance(sc: Scenario, positions: np.ndarray) -> Instance:
    users = [User(k, (float(x), float(y))) for k, (x, y) in enumerate(positions)]
    demand = np.full((len(users), len(sc.stations)), float(sc.demand))
    return Instance(users, sc.stations, demand, theta_min=sc.theta_min, theta_max=sc.theta_max,
                    cost_mode=sc.cost_mode)


def _cost_model_run(sc: Scenario, seed: int) -> np.ndarray:
    routes = [_route_xy(sc.route)] + [_route_xy(r) for r in sc.extra_routes]
    rng = np.random.default_rng(seed)
    current: Optional[np.ndarray] = None
    serving = np.empty(len(sc.route), dtype=np.int64)
    for step in range(len(sc.route)):
        inst = _step_instance(sc, np.array([r[step] for r in routes]))
        step_seed = int(rng.integers(0, 2**63))
        if sc.strategy is Strategy.EXACT:
            res = solve_bnb(inst)
            if res.status is not Status.OPTIMAL:
                raise ModelError(f"step {step}: exact association {res.status.value}")
            cand = res.assignment.station_of
        else:
            res = ils_solve(inst, IlsParams(max_iterations=sc.ils_iterations, seed=step_seed))
            cand = res.best.station_of
        if current is None:
            current = cand.copy()
        else:
            cost = inst.cost_matrix()
            rows = np.arange(inst.n_users)
            load = np.bincount(current, weights=inst.demand[rows, current], minlength=inst.n_stations)
            stay_ok = bool(np.all(load <= inst.capacity))
            if not stay_ok or cost[rows, cand].sum() < cost[rows, current].sum() - PREF_EPS:
                current = cand.copy()
        serving[step] = current[0]
    return serving


def _predict_run(sc: Scenario) -> np.ndarray:
    scores = predict_scores(sc)
    serving = np.empty(len(sc.route), dtype=np.int64)
    cur = int(np.argmax(scores[0]))
    serving[0] = cur
    for step in range(1, len(sc.route)):
        best = int(np.argmax(scores[step]))
        if scores[step, best] > scores[step, cur] + PREF_EPS:
            cur = best
        serving[step] = cur
    return serving


def connection_shares(r: SimResult | np.ndarray) -> dict:
    serving = r.serving if isinstance(r, SimResult) else np.asarray(r)
    counts = Counter(int(s) for s in serving)
    return {s: c / serving.size for s, c in sorted(counts.items())}


def handover_events(serving) -> list:
    return [HandoverEvent(k, int(serving[k - 1]), int(serving[k]))
            for k in range(1, len(serving)) if serving[k] != serving[k - 1]]


def simulate(sc: Scenario, seed: int = 0, strategy: Optional[Strategy] = None) -> SimResult:
    if strategy is not None:
        sc = replace(sc, strategy=Strategy(strategy))
    if not sc.route:
        raise ModelError("scenario route is empty")
    if sc.strategy is Strategy.PREDICT:
        serving = _predict_run(sc)
    else:
        serving = _cost_model_run(sc, seed)
    station_xy = np.array([s.pos for s in sc.stations], dtype=np.float64)
    radius = np.array([s.radius for s in sc.stations], dtype=np.float64)
    xy = _route_xy(sc.route)
    d = np.hypot(*(xy - station_xy[serving]).T)
    series = rsrq_array(d, radius[serving], sc.theta_min, sc.theta_max)
    res = SimResult(serving, series, handover_events(serving))
    res.shares = connection_shares(res)
    return res


def place_stations(template: Scenario, rng: np.random.Generator) -> Scenario:
    """Same stations (radius, capacity, handover) at uniform random spots in the region."""
    w, h = template.region
    xy = rng.uniform((0.0, 0.0), (w, h), size=(len(template.stations), 2))
    stations = [replace(s, pos=(float(x), float(y))) for s, (x, y) in zip(template.stations, xy)]
    return replace(template, stations=stations)


@dataclass(frozen=True)
class PlacementRow:
    instance: int
    ils_mean_rsrq: float
    predict_mean_rsrq: float
    ils_handovers: int
    predict_handovers: int


def _placement_one(args) -> PlacementRow:
    template, seed, idx = args
    rng = np.random.default_rng([seed, idx])
    sc = place_stations(template, rng)
    ils = simulate(sc, seed=int(rng.integers(0, 2**63)), strategy=Strategy.ILS_VND)
    pred = simulate(sc, strategy=Strategy.PREDICT)
    return PlacementRow(idx, ils.mean_rsrq, pred.mean_rsrq, len(ils.handovers), len(pred.handovers))


def random_placement_experiment(n_instances: int, template: Scenario, seed: int = 0,
                                workers: int = 1) -> list[PlacementRow]:
    """Re-place the template's stations ``n_instances`` times and compare both strategies.

    Instance ``i`` draws from ``default_rng([seed, i])``, so rows do not depend
    on ``workers`` or completion order.
    """
    if n_instances < 1:
        raise ModelError("n_instances must be >= 1")
    jobs = [(template, seed, i) for i in range(n_instances)]
    if workers > 1:
        with ProcessPoolExecutor(workers) as pool:
            rows = list(pool.map(_placement_one, jobs))
    else:
        rows = [_placement_one(j) for j in jobs]
    return sorted(rows, key=lambda r: r.instance)


class TraceError(ValueError):
    pass


class MalformedTraceError(TraceError):
    pass


class MissingVehicleError(TraceError):
    pass


class NonMonotonicTraceError(TraceError):
    pass


def ingest_fcd(document: str | bytes, vehicle_id: str) -> list[RoutePoint]:
    """Route of one vehicle from a SUMO floating-car-data XML document."""
    try:
        root = ET.fromstring(document)
    except ET.ParseError as exc:
        raise MalformedTraceError(f"malformed FCD XML: {exc}") from exc
    points = []
    for ts in root.iter("timestep"):
        try:
            t = float(ts.attrib["time"])
        except (KeyError, ValueError) as exc:
            raise MalformedTraceError("timestep without a numeric time attribute") from exc
        for veh in ts.iter("vehicle"):
            if veh.attrib.get("id") != vehicle_id:
                continue
            try:
                points.append(RoutePoint(t, (float(veh.attrib["x"]), float(veh.attrib["y"]))))
            except (KeyError, ValueError) as exc:
                raise MalformedTraceError(f"vehicle {vehicle_id!r} at t={t} lacks numeric x/y") from exc
    if not points:
        raise MissingVehicleError(f"vehicle {vehicle_id!r} not found in trace")
    for a, b in zip(points, points[1:]):
        if b.t <= a.t:
            raise NonMonotonicTraceError(f"time {b.t} follows {a.t} for vehicle {vehicle_id!r}")
    return points
