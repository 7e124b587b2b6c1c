"""Iterated local search with variable neighbourhood descent (ILS-VND)."""
from __future__ import annotations

import time
from dataclasses import dataclass
from typing import Optional

import numpy as np

from . import kernels
from .model import Assignment, Instance, ModelError, compute_load, total_cost

CONSTRUCTION_ATTEMPTS = 50
PERTURB_TRIES = 100
# cost tolerance for acceptance and best-solution bookkeeping
COST_TOL = 1e-9


class ConstructionError(RuntimeError):
    """No capacity-respecting greedy solution found; the instance is likely infeasible."""


@dataclass(frozen=True)
class IlsParams:
    time_budget: float = 2.0
    restart_threshold: int = 2
    perturbation_strength: int = 2
    seed: int = 0
    # when set, run exactly this many iterations and ignore the clock
    max_iterations: Optional[int] = None
    # True: any accepted solution resets the stall counter (the default);
    # False: only strict improvements do
    reset_on_equal: bool = True
    # re-verify feasibility and cost after every step (slow, for testing)
    check: bool = False

    def __post_init__(self):
        if not self.time_budget > 0:
            raise ModelError("time_budget must be > 0")
        if self.restart_threshold < 1:
            raise ModelError("restart_threshold must be >= 1")
        if self.perturbation_strength < 1:
            raise ModelError("perturbation_strength must be >= 1")
        if self.max_iterations is not None and self.max_iterations < 0:
            raise ModelError("max_iterations must be >= 0")


@dataclass
class IlsResult:
    best: Assignment
    best_cost: float
    iterations: int
    restarts: int
    elapsed: float  # seconds, whole run
    time_to_best: float  # seconds until ``best`` was first reached
    history: list  # (iteration, cost) each time the best improved


def _arrays(inst: Instance):
    return (np.ascontiguousarray(inst.cost_matrix()), np.ascontiguousarray(inst.demand),
            np.ascontiguousarray(inst.capacity))


def initial_solution(inst: Instance, rng: np.random.Generator,
                     attempts: int = CONSTRUCTION_ATTEMPTS) -> Assignment:
    """Greedy construction over shuffled users; each takes its cheapest station with room left."""
    cost, demand, cap = _arrays(inst)
    station_of, load, ok = kernels.construct(cost, demand, cap, rng, attempts)
    if not ok:
        raise ConstructionError(f"no feasible greedy construction after {attempts} shuffles")
    return Assignment(station_of, load)


def _scan(kernel, inst: Instance, a: Assignment) -> bool:
    cost, demand, cap = _arrays(inst)
    u, x, _ = kernel(cost, demand, cap, a.station_of, a.load)
    if u < 0:
        return False
    apply = kernels.apply_swap if kernel is kernels.swap_first else kernels.apply_insert
    apply(demand, a.station_of, a.load, u, x)
    return True


def swap_ue(inst: Instance, a: Assignment) -> Optional[Assignment]:
    """First improving feasible swap of two users' stations, or None."""
    out = a.copy()
    return out if _scan(kernels.swap_first, inst, out) else None


def insert_ue(inst: Instance, a: Assignment) -> Optional[Assignment]:
    """First improving feasible relocation of one user, or None."""
    out = a.copy()
    return out if _scan(kernels.insert_first, inst, out) else None


def vnd(inst: Instance, a: Assignment) -> Assignment:
    cost, demand, cap = _arrays(inst)
    out = a.copy()
    kernels.vnd(cost, demand, cap, out.station_of, out.load, 0.0)
    return out


def perturb(inst: Instance, a: Assignment, strength: int, rng: np.random.Generator) -> Assignment:
    cost, demand, cap = _arrays(inst)
    out = a.copy()
    kernels.perturb(cost, demand, cap, out.station_of, out.load, 0.0, strength, rng, PERTURB_TRIES)
    return out


def _verify(inst: Instance, station_of, load, running: float, where: str) -> None:
    if np.any(load > inst.capacity):
        raise AssertionError(f"infeasible solution after {where}")
    if not np.allclose(load, compute_load(inst, station_of), rtol=0, atol=1e-9):
        raise AssertionError(f"stale load cache after {where}")
    exact = total_cost(inst, station_of)
    if abs(exact - running) > 1e-9 * max(1.0, abs(exact)):
        raise AssertionError(f"running cost {running!r} != {exact!r} after {where}")


def ils_solve(inst: Instance, params: IlsParams = IlsParams()) -> IlsResult:
    t0 = time.perf_counter()
    cost, demand, cap = _arrays(inst)
    rng = np.random.default_rng(params.seed)
    n = inst.n_users
    rows = np.arange(n)

    def fresh():
        so, ld, ok = kernels.construct(cost, demand, cap, rng, CONSTRUCTION_ATTEMPTS)
        if not ok:
            raise ConstructionError(
                f"no feasible greedy construction after {CONSTRUCTION_ATTEMPTS} shuffles")
        c = float(cost[rows, so].sum())
        if params.check:
            _verify(inst, so, ld, c, "construction")
        c, _ = kernels.vnd(cost, demand, cap, so, ld, c)
        if params.check:
            _verify(inst, so, ld, c, "local search")
        return so, ld, c

    cur_of, cur_load, cur = fresh()
    best_of, best = cur_of.copy(), cur
    time_to_best = time.perf_counter() - t0
    history = [(0, best)]
    work_of = np.empty_like(cur_of)
    work_load = np.empty_like(cur_load)
    iterations = restarts = stall = 0
    while True:
        if params.max_iterations is not None:
            if iterations >= params.max_iterations:
                break
        elif time.perf_counter() - t0 > params.time_budget:
            break
        new = kernels.ils_step(cost, demand, cap, cur_of, cur_load, cur, work_of, work_load,
                               params.perturbation_strength, rng, PERTURB_TRIES)
        if params.check:
            _verify(inst, work_of, work_load, new, "perturbation + local search")
        iterations += 1
        stall += 1
        if new <= cur + COST_TOL:
            if params.reset_on_equal or new < cur - COST_TOL:
                stall = 0
            cur_of, work_of = work_of, cur_of
            cur_load, work_load = work_load, cur_load
            # resync so sideways moves cannot accumulate drift
            cur = float(cost[rows, cur_of].sum())
        elif stall >= params.restart_threshold:
            cur_of, cur_load, cur = fresh()
            restarts += 1
            stall = 0
        if cur < best - COST_TOL:
            best_of[:] = cur_of
            best = cur
            time_to_best = time.perf_counter() - t0
            history.append((iterations, best))
    elapsed = time.perf_counter() - t0
    a = Assignment.from_stations(inst, best_of)
    return IlsResult(a, total_cost(inst, a), iterations, restarts, elapsed, time_to_best, history)
