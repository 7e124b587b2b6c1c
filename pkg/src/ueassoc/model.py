"""Domain types and the association cost model.

A user (UE) ``k`` attached to a base station (eNB) ``i`` costs
``avg_handover[i] + |rsrq(d_ki)|`` in the default ``magnitude`` mode, or
``avg_handover[i] + rsrq(d_ki)`` in ``raw`` mode. Every user is served by
exactly one station and each station's summed bandwidth demand must stay
within its capacity.
"""
from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

DEFAULT_THETA_MIN = -12.0
DEFAULT_THETA_MAX = -5.0
DEFAULT_RADIUS = 500.0


class ModelError(ValueError):
    """Raised when inputs violate the model's invariants."""


class CostMode(str, enum.Enum):
    MAGNITUDE = "magnitude"
    RAW = "raw"


class SignalLevel(str, enum.Enum):
    EXCELLENT = "Excellent"
    GOOD = "Good"
    FAIR = "Fair"
    POOR = "Poor"


@dataclass(frozen=True)
class BaseStation:
    id: int
    pos: tuple[float, float]
    radius: float = DEFAULT_RADIUS
    capacity: float = math.inf
    # None when the owning instance derives it from a handover matrix
    avg_handover: Optional[float] = 0.0

    def __post_init__(self):
        if not self.radius > 0:
            raise ModelError(f"station {self.id}: radius must be > 0, got {self.radius}")
        if not self.capacity >= 0:
            raise ModelError(f"station {self.id}: capacity must be >= 0, got {self.capacity}")
        if self.avg_handover is not None and not self.avg_handover >= 0:
            raise ModelError(f"station {self.id}: avg_handover must be >= 0")


@dataclass(frozen=True)
class User:
    id: int
    pos: tuple[float, float]


def distance(u: User, e: BaseStation) -> float:
    # np.hypot, like the vectorised paths, so scalar and matrix values agree bit for bit
    return float(np.hypot(u.pos[0] - e.pos[0], u.pos[1] - e.pos[1]))


def _check_thetas(theta_min: float, theta_max: float) -> None:
    if not theta_min < theta_max < 0:
        raise ModelError(f"need theta_min < theta_max < 0, got ({theta_min}, {theta_max})")


def rsrq(d: float, R: float, theta_min: float = DEFAULT_THETA_MIN,
         theta_max: float = DEFAULT_THETA_MAX) -> float:
    """RSRQ in dB at distance ``d`` from a station of radius ``R``.

    Linear in ``d``: ``theta_max`` at the station, ``theta_min`` at the cell
    edge, and extrapolated below ``theta_min`` beyond it.
    """
    if not R > 0:
        raise ModelError(f"radius must be > 0, got {R}")
    if d < 0:
        raise ModelError(f"distance must be >= 0, got {d}")
    _check_thetas(theta_min, theta_max)
    return -((d / R) * (abs(theta_min) - abs(theta_max)) + abs(theta_max))


def rsrq_array(d: np.ndarray, R: np.ndarray, theta_min: float = DEFAULT_THETA_MIN,
               theta_max: float = DEFAULT_THETA_MAX) -> np.ndarray:
    """Vectorised :func:`rsrq`; ``d`` and ``R`` broadcast against each other."""
    d = np.asarray(d, dtype=np.float64)
    R = np.asarray(R, dtype=np.float64)
    if np.any(R <= 0):
        raise ModelError("radius must be > 0")
    if np.any(d < 0):
        raise ModelError("distance must be >= 0")
    _check_thetas(theta_min, theta_max)
    return -((d / R) * (abs(theta_min) - abs(theta_max)) + abs(theta_max))


def classify_rsrq(theta: float) -> SignalLevel:
    # plain float comparisons; -9 belongs to Good, -12 to Fair
    if theta >= -5.0:
        return SignalLevel.EXCELLENT
    if theta >= -9.0:
        return SignalLevel.GOOD
    if theta >= -12.0:
        return SignalLevel.FAIR
    return SignalLevel.POOR


def avg_handover(h, i: int) -> float:
    """Mean handover frequency from station ``i`` to every other station."""
    h = np.asarray(h, dtype=np.float64)
    n = h.shape[0]
    if h.ndim != 2 or h.shape[1] != n:
        raise ModelError(f"handover matrix must be square, got shape {h.shape}")
    if n < 2:
        raise ModelError("average handover frequency needs at least 2 stations")
    row = h[i]
    return float((row.sum() - row[i]) / (n - 1))


def avg_handover_all(h) -> np.ndarray:
    h = np.asarray(h, dtype=np.float64)
    n = h.shape[0]
    if h.ndim != 2 or h.shape[1] != n:
        raise ModelError(f"handover matrix must be square, got shape {h.shape}")
    if n < 2:
        raise ModelError("average handover frequency needs at least 2 stations")
    return (h.sum(axis=1) - np.diag(h)) / (n - 1)


@dataclass(eq=False)
class Instance:
    """Full association problem: users, stations, demands and cost settings.

    ``demand[k, i]`` is the bandwidth user ``k`` needs when served by station
    ``i``. Station handover penalties come either from each station's
    ``avg_handover`` or, when ``handover_matrix`` is given, from its row means.
    """

    users: Sequence[User]
    stations: Sequence[BaseStation]
    demand: np.ndarray
    handover_matrix: Optional[np.ndarray] = None
    theta_min: float = DEFAULT_THETA_MIN
    theta_max: float = DEFAULT_THETA_MAX
    cost_mode: CostMode = CostMode.MAGNITUDE
    _cost: Optional[np.ndarray] = field(default=None, init=False, repr=False)

    def __post_init__(self):
        self.users = tuple(self.users)
        self.stations = tuple(self.stations)
        self.cost_mode = CostMode(self.cost_mode)
        n_u, n_s = len(self.users), len(self.stations)
        self.demand = np.asarray(self.demand, dtype=np.float64).reshape(n_u, -1) if n_u else \
            np.zeros((0, n_s), dtype=np.float64)
        if self.demand.shape != (n_u, n_s):
            raise ModelError(f"demand must be {n_u}x{n_s}, got {self.demand.shape}")
        if np.any(self.demand <= 0):
            raise ModelError("every demand entry must be > 0")
        _check_thetas(self.theta_min, self.theta_max)
        if len({u.id for u in self.users}) != n_u:
            raise ModelError("user ids must be unique")
        if n_s == 0:
            raise ModelError("an instance needs at least one station")
        if self.handover_matrix is not None:
            h = np.asarray(self.handover_matrix, dtype=np.float64)
            if h.shape != (n_s, n_s):
                raise ModelError(f"handover matrix must be {n_s}x{n_s}, got {h.shape}")
            if np.any(h < 0):
                raise ModelError("handover matrix entries must be >= 0")
            if any(s.avg_handover is not None for s in self.stations):
                raise ModelError("give either per-station avg_handover or a handover matrix, not both")
            self.handover_matrix = h
        elif any(s.avg_handover is None for s in self.stations):
            raise ModelError("stations lack avg_handover and no handover matrix was given")

    @property
    def n_users(self) -> int:
        return len(self.users)

    @property
    def n_stations(self) -> int:
        return len(self.stations)

    @property
    def user_xy(self) -> np.ndarray:
        return np.array([u.pos for u in self.users], dtype=np.float64).reshape(-1, 2)

    @property
    def station_xy(self) -> np.ndarray:
        return np.array([s.pos for s in self.stations], dtype=np.float64).reshape(-1, 2)

    @property
    def radius(self) -> np.ndarray:
        return np.array([s.radius for s in self.stations], dtype=np.float64)

    @property
    def capacity(self) -> np.ndarray:
        return np.array([s.capacity for s in self.stations], dtype=np.float64)

    @property
    def avg_handover(self) -> np.ndarray:
        if self.handover_matrix is not None:
            return avg_handover_all(self.handover_matrix)
        return np.array([s.avg_handover for s in self.stations], dtype=np.float64)

    def distances(self) -> np.ndarray:
        diff = self.user_xy[:, None, :] - self.station_xy[None, :, :]
        return np.hypot(diff[..., 0], diff[..., 1])

    def rsrq_matrix(self) -> np.ndarray:
        return rsrq_array(self.distances(), self.radius[None, :], self.theta_min, self.theta_max)

    def cost_matrix(self) -> np.ndarray:
        """``pair_cost`` for every (user, station), cached; treat as read-only."""
        if self._cost is None:
            theta = self.rsrq_matrix()
            if self.cost_mode is CostMode.MAGNITUDE:
                theta = np.abs(theta)
            cost = self.avg_handover[None, :] + theta
            cost.setflags(write=False)
            self._cost = cost
        return self._cost

    def __eq__(self, other):
        if not isinstance(other, Instance):
            return NotImplemented
        hm_eq = (self.handover_matrix is None and other.handover_matrix is None) or (
            self.handover_matrix is not None and other.handover_matrix is not None
            and np.array_equal(self.handover_matrix, other.handover_matrix))
        return (self.users == other.users and self.stations == other.stations
                and np.array_equal(self.demand, other.demand) and hm_eq
                and self.theta_min == other.theta_min and self.theta_max == other.theta_max
                and self.cost_mode == other.cost_mode)


def pair_cost(inst: Instance, k: int, i: int) -> float:
    u, e = inst.users[k], inst.stations[i]
    theta = rsrq(distance(u, e), e.radius, inst.theta_min, inst.theta_max)
    if inst.cost_mode is CostMode.MAGNITUDE:
        theta = abs(theta)
    return float(inst.avg_handover[i]) + theta


class Assignment:
    """Dense association: ``station_of[k]`` serves user ``k``; ``load`` caches demand per station."""

    __slots__ = ("station_of", "load")

    def __init__(self, station_of, load):
        self.station_of = np.asarray(station_of, dtype=np.int64)
        self.load = np.asarray(load, dtype=np.float64)

    @classmethod
    def from_stations(cls, inst: Instance, station_of) -> "Assignment":
        so = np.asarray(station_of, dtype=np.int64)
        if so.shape != (inst.n_users,):
            raise ModelError(f"need one station per user ({inst.n_users}), got shape {so.shape}")
        if so.size and (so.min() < 0 or so.max() >= inst.n_stations):
            raise ModelError("station index out of range")
        return cls(so.copy(), compute_load(inst, so))

    def copy(self) -> "Assignment":
        return Assignment(self.station_of.copy(), self.load.copy())

    def move(self, inst: Instance, k: int, i: int) -> None:
        old = self.station_of[k]
        self.load[old] -= inst.demand[k, old]
        self.load[i] += inst.demand[k, i]
        self.station_of[k] = i

    def swap(self, inst: Instance, u: int, v: int) -> None:
        i, j = self.station_of[u], self.station_of[v]
        self.move(inst, u, j)
        self.move(inst, v, i)

    def __eq__(self, other):
        if not isinstance(other, Assignment):
            return NotImplemented
        return np.array_equal(self.station_of, other.station_of)

    def __repr__(self):
        return f"Assignment(station_of={self.station_of.tolist()})"


def compute_load(inst: Instance, station_of) -> np.ndarray:
    so = np.asarray(station_of, dtype=np.int64)
    per_user = inst.demand[np.arange(so.size), so]
    return np.bincount(so, weights=per_user, minlength=inst.n_stations).astype(np.float64)


def total_cost(inst: Instance, a) -> float:
    """Objective value; feasibility is not required.

    Summed with :func:`math.fsum`, so the result depends only on the
    assignment and not on summation order.
    """
    so = a.station_of if isinstance(a, Assignment) else np.asarray(a, dtype=np.int64)
    if so.size == 0:
        return 0.0
    return math.fsum(inst.cost_matrix()[np.arange(so.size), so].tolist())


@dataclass(frozen=True)
class Violation:
    station: int
    load: float
    capacity: float


def check_feasibility(inst: Instance, a) -> list[Violation]:
    """Capacity violations; an empty list means the assignment is feasible."""
    so = a.station_of if isinstance(a, Assignment) else np.asarray(a, dtype=np.int64)
    load = compute_load(inst, so)
    cap = inst.capacity
    return [Violation(int(i), float(load[i]), float(cap[i]))
            for i in np.flatnonzero(load > cap)]


def is_feasible(inst: Instance, a) -> bool:
    return not check_feasibility(inst, a)
