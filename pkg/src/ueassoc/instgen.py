"""Seeded GAP-style benchmark instances (types A, B and B').

All randomness comes from one ``numpy.random.Generator`` (PCG64) seeded with
the spec's seed, drawn in a fixed order: demands, handover matrix, station
positions, user positions. Same seed, same instance.
"""
from __future__ import annotations

import enum
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .model import DEFAULT_RADIUS, BaseStation, CostMode, Instance, ModelError, User

REGION_SIDE = 2000.0
MAX_REROLLS = 10

# (users, stations) per row of the standard table
AB_SHAPES = ((100, 5), (100, 10), (100, 20), (200, 5), (200, 10), (200, 20))
BPRIME_SHAPES = ((1200, 5), (1200, 10), (1200, 20), (1500, 5), (1500, 10), (1500, 20))


class InstanceType(str, enum.Enum):
    A = "A"
    B = "B"
    BPRIME = "Bprime"


class GenerationError(RuntimeError):
    pass


@dataclass(frozen=True)
class InstanceSpec:
    type_tag: InstanceType
    num_users: int
    num_stations: int
    seed: int = 0
    demand_range: tuple[int, int] = (5, 25)
    handover_range: tuple[float, float] = (0.0, 1.0)
    region_side: float = REGION_SIDE
    radius: float = DEFAULT_RADIUS
    cost_mode: CostMode = CostMode.MAGNITUDE

    def __post_init__(self):
        object.__setattr__(self, "type_tag", InstanceType(self.type_tag))
        object.__setattr__(self, "cost_mode", CostMode(self.cost_mode))
        object.__setattr__(self, "demand_range", tuple(int(v) for v in self.demand_range))
        object.__setattr__(self, "handover_range", tuple(float(v) for v in self.handover_range))
        if self.num_stations < 2:
            raise ModelError(f"need at least 2 stations, got {self.num_stations}")
        if self.num_users < self.num_stations:
            raise ModelError(f"need num_users >= num_stations, got {self.num_users} < {self.num_stations}")
        lo, hi = self.demand_range
        if lo < 1 or hi < lo:
            raise ModelError(f"bad demand range {self.demand_range}")
        hlo, hhi = self.handover_range
        if hlo < 0 or hhi < hlo:
            raise ModelError(f"bad handover range {self.handover_range}")
        if self.seed < 0 or self.seed >= 2**64:
            raise ModelError("seed must be a 64-bit unsigned integer")

    @property
    def label(self) -> str:
        return f"{self.type_tag.value}-{self.num_users}x{self.num_stations}"

    def rng(self) -> np.random.Generator:
        return np.random.default_rng(self.seed)


def gen_demands(spec: InstanceSpec, rng: Optional[np.random.Generator] = None) -> np.ndarray:
    rng = spec.rng() if rng is None else rng
    lo, hi = spec.demand_range
    return rng.integers(lo, hi, size=(spec.num_users, spec.num_stations), endpoint=True).astype(np.float64)


def l_max(demand) -> float:
    """Sum over users of their largest demand across stations."""
    demand = np.asarray(demand, dtype=np.float64)
    if demand.size == 0:
        raise ModelError("empty demand matrix")
    return float(demand.max(axis=1).sum())


def capacities(spec: InstanceSpec, demand) -> np.ndarray:
    n_u, n_s = spec.num_users, spec.num_stations
    cap = 0.6 * (n_u / n_s) * 15 + 0.4 * l_max(demand)
    if spec.type_tag is not InstanceType.A:
        cap = 0.7 * cap
    return np.full(n_s, cap, dtype=np.float64)


def gen_handover_matrix(spec: InstanceSpec, rng: Optional[np.random.Generator] = None) -> np.ndarray:
    rng = spec.rng() if rng is None else rng
    lo, hi = spec.handover_range
    n = spec.num_stations
    h = rng.uniform(lo, hi, size=(n, n)) if hi > lo else np.full((n, n), lo)
    np.fill_diagonal(h, 0.0)
    return h


def feasibility_certificate(demand: np.ndarray, cap: np.ndarray) -> Optional[np.ndarray]:
    """A capacity-respecting assignment found greedily, or None.

    Users go in descending order of their smallest demand; each takes the
    station where it needs least, ties to the one with most room left. None
    does not prove infeasibility, only that this packing failed.
    """
    n, m = demand.shape
    left = cap.astype(np.float64).copy()
    station_of = np.empty(n, dtype=np.int64)
    for k in np.argsort(-demand.min(axis=1), kind="stable"):
        fits = demand[k] <= left
        if not fits.any():
            return None
        key = np.where(fits, demand[k], np.inf)
        best = np.flatnonzero(key == key.min())
        i = int(best[np.argmax(left[best])])
        station_of[k] = i
        left[i] -= demand[k, i]
    return station_of


def plausibly_feasible(demand: np.ndarray, cap: np.ndarray) -> bool:
    return bool(cap.sum() >= demand.min(axis=1).sum()) and feasibility_certificate(demand, cap) is not None


def gen_instance(spec: InstanceSpec) -> Instance:
    rng = spec.rng()
    for _ in range(MAX_REROLLS):
        demand = gen_demands(spec, rng)
        h = gen_handover_matrix(spec, rng)
        station_xy = rng.uniform(0.0, spec.region_side, size=(spec.num_stations, 2))
        user_xy = rng.uniform(0.0, spec.region_side, size=(spec.num_users, 2))
        cap = capacities(spec, demand)
        if plausibly_feasible(demand, cap):
            break
    else:
        raise GenerationError(f"{spec.label} seed={spec.seed}: no plausible instance in {MAX_REROLLS} draws")
    stations = [BaseStation(i, (float(x), float(y)), spec.radius, float(cap[i]), None)
                for i, (x, y) in enumerate(station_xy)]
    users = [User(k, (float(x), float(y))) for k, (x, y) in enumerate(user_xy)]
    return Instance(users, stations, demand, handover_matrix=h, cost_mode=spec.cost_mode)


def standard_specs(base_seed: int = 0, **overrides) -> list[InstanceSpec]:
    """The 18 table shapes: A rows 1-6, B rows 1-6, B' rows 1-6; seed = base_seed + ordinal."""
    rows = ([(InstanceType.A, s) for s in AB_SHAPES] + [(InstanceType.B, s) for s in AB_SHAPES]
            + [(InstanceType.BPRIME, s) for s in BPRIME_SHAPES])
    return [InstanceSpec(tag, u, n, base_seed + ordinal, **overrides)
            for ordinal, (tag, (u, n)) in enumerate(rows)]


def standard_suite(base_seed: int = 0, **overrides) -> list[tuple[InstanceSpec, Instance]]:
    return [(spec, gen_instance(spec)) for spec in standard_specs(base_seed, **overrides)]
