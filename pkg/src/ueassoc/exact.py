"""Exact solvers: exhaustive enumeration (oracle) and depth-first branch-and-bound."""
from __future__ import annotations

import enum
import time
from dataclasses import dataclass
from typing import Optional

import numpy as np

from . import kernels
from .model import Assignment, Instance, ModelError, compute_load, total_cost

ENUMERATION_CAP = 10**7
DEFAULT_TIME_LIMIT = 60.0
# nodes per kernel call between wall-clock checks
NODE_CHUNK = 1 << 18


class Status(str, enum.Enum):
    OPTIMAL = "Optimal"
    INFEASIBLE = "Infeasible"
    TIMED_OUT = "TimedOut"


@dataclass
class SolveResult:
    assignment: Optional[Assignment]
    cost: float
    status: Status
    nodes_explored: int
    elapsed_ms: float


def _arrays(inst: Instance):
    return (np.ascontiguousarray(inst.cost_matrix()), np.ascontiguousarray(inst.demand),
            np.ascontiguousarray(inst.capacity))


def solve_bruteforce(inst: Instance, cap: int = ENUMERATION_CAP) -> SolveResult:
    """Enumerate every assignment; ties go to the lexicographically smallest one."""
    n, m = inst.n_users, inst.n_stations
    if m ** n > cap:
        raise ModelError(f"{m}^{n} assignments exceed the enumeration cap {cap}")
    cost, demand, capacity = _arrays(inst)
    t0 = time.perf_counter()
    best_of, best = kernels.bruteforce(cost, demand, capacity)
    elapsed = (time.perf_counter() - t0) * 1e3
    if not np.isfinite(best):
        return SolveResult(None, float("inf"), Status.INFEASIBLE, m ** n, elapsed)
    a = Assignment.from_stations(inst, best_of)
    return SolveResult(a, total_cost(inst, a), Status.OPTIMAL, m ** n, elapsed)


def branching_order(cost: np.ndarray) -> np.ndarray:
    """Users by descending regret (second-best minus best cost); stable on ties."""
    if cost.shape[1] < 2:
        return np.arange(cost.shape[0], dtype=np.int64)
    two = np.partition(cost, 1, axis=1)[:, :2]
    regret = two[:, 1] - two[:, 0]
    return np.argsort(-regret, kind="stable").astype(np.int64)


def lower_bounds(cost: np.ndarray, order: np.ndarray) -> np.ndarray:
    """``rest[d]``: capacity-ignoring minimum cost of the users ``order[d:]``."""
    mins = cost.min(axis=1)[order] if order.size else np.zeros(0)
    rest = np.zeros(order.size + 1)
    rest[:-1] = np.cumsum(mins[::-1])[::-1]
    return rest


def solve_bnb(inst: Instance, time_limit: float = DEFAULT_TIME_LIMIT,
              incumbent: Optional[Assignment] = None) -> SolveResult:
    """Branch-and-bound over users in descending-regret order.

    Children are tried by ascending cost; a node is pruned when its partial
    cost plus the unconstrained minimum of the unassigned users reaches the
    incumbent. ``time_limit`` is in seconds; on expiry the incumbent (if any)
    comes back with status ``TimedOut``. An optional feasible ``incumbent``
    seeds the search.
    """
    t0 = time.perf_counter()
    n, m = inst.n_users, inst.n_stations
    cost, demand, capacity = _arrays(inst)
    order = branching_order(cost)
    children = np.argsort(cost, axis=1, kind="stable").astype(np.int64)
    rest = lower_bounds(cost, order)

    station_of = np.full(n, -1, dtype=np.int64)
    load = np.zeros(m)
    partial = np.zeros(n + 1)
    ptr = np.zeros(n + 1, dtype=np.int64)
    state = np.zeros(2, dtype=np.int64)
    best_of = np.full(n, -1, dtype=np.int64)
    best = np.array([np.inf])
    if incumbent is not None:
        if np.any(compute_load(inst, incumbent.station_of) > capacity):
            raise ModelError("seed incumbent is infeasible")
        best_of[:] = incumbent.station_of
        best[0] = float(cost[np.arange(n), incumbent.station_of].sum())

    done = False
    while not done:
        done = kernels.bnb_search(cost, demand, capacity, order, children, rest, station_of, load,
                                  partial, ptr, state, best_of, best, NODE_CHUNK)
        if not done and time.perf_counter() - t0 > time_limit:
            break
    elapsed = (time.perf_counter() - t0) * 1e3
    nodes = int(state[1])
    if not np.isfinite(best[0]):
        status = Status.INFEASIBLE if done else Status.TIMED_OUT
        return SolveResult(None, float("inf"), status, nodes, elapsed)
    a = Assignment.from_stations(inst, best_of)
    return SolveResult(a, total_cost(inst, a), Status.OPTIMAL if done else Status.TIMED_OUT,
                       nodes, elapsed)
