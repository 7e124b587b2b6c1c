import math

import numpy as np
import pytest

from ueassoc import kernels
from ueassoc.exact import (Status, branching_order, lower_bounds, solve_bnb, solve_bruteforce)
from ueassoc.instgen import InstanceSpec, gen_instance
from ueassoc.model import Assignment, Instance, ModelError, is_feasible, total_cost

from conftest import make_instance, oracle_optimum, random_small_instance


def two_cost_instance(capacity=math.inf):
    # one user on top of both stations; handover penalties make the costs 5 and 7
    return make_instance([(0, 0)], [(0, 0), (0, 0)], avg_handover=[0.0, 2.0], capacity=capacity)


def test_bruteforce_single_user():
    r = solve_bruteforce(two_cost_instance())
    assert r.status is Status.OPTIMAL
    assert r.assignment.station_of.tolist() == [0]
    assert r.cost == 5.0


def test_bruteforce_infeasible():
    inst = make_instance([(0, 0), (1, 0)], [(0, 0)], demand=6, capacity=10)
    r = solve_bruteforce(inst)
    assert r.status is Status.INFEASIBLE and r.assignment is None
    assert solve_bnb(inst).status is Status.INFEASIBLE


def test_bruteforce_cap():
    inst = gen_instance(InstanceSpec("A", 12, 4))
    with pytest.raises(ModelError):
        solve_bruteforce(inst)
    with pytest.raises(ModelError):
        solve_bruteforce(gen_instance(InstanceSpec("A", 6, 3)), cap=100)


def test_bruteforce_lexicographic_tie_break():
    # all users and stations co-located with equal penalties: every assignment ties
    inst = make_instance([(0, 0)] * 3, [(0, 0)] * 3, demand=1, capacity=[1, 1, 5])
    assert solve_bruteforce(inst).assignment.station_of.tolist() == [0, 1, 2]
    inst = make_instance([(0, 0)] * 3, [(0, 0)] * 3)
    assert solve_bruteforce(inst).assignment.station_of.tolist() == [0, 0, 0]


def test_three_by_three_solvers_agree():
    rng = np.random.default_rng(3)
    inst = random_small_instance(rng, 3, 3)
    assert solve_bnb(inst).cost == solve_bruteforce(inst).cost


def test_solvers_match_itertools_oracle():
    rng = np.random.default_rng(2024)
    for _ in range(60):
        inst = random_small_instance(rng, 6, 4)
        best, _ = oracle_optimum(inst)
        for r in (solve_bruteforce(inst), solve_bnb(inst)):
            if math.isinf(best):
                assert r.status is Status.INFEASIBLE
            else:
                assert r.status is Status.OPTIMAL
                assert abs(r.cost - best) <= 1e-9
                assert is_feasible(inst, r.assignment)
                assert r.cost == total_cost(inst, r.assignment)


def test_uncapacitated_optimum_is_sum_of_minima():
    inst = gen_instance(InstanceSpec("A", 200, 10, seed=8))
    # every station can hold the whole demand
    stations = [s.__class__(s.id, s.pos, s.radius, float(inst.demand.sum()), None) for s in inst.stations]
    free = Instance(inst.users, stations, inst.demand, handover_matrix=inst.handover_matrix)
    r = solve_bnb(free)
    assert r.status is Status.OPTIMAL
    assert math.isclose(r.cost, math.fsum(free.cost_matrix().min(axis=1)), rel_tol=0, abs_tol=1e-9)


def test_bnb_table_instance_one_within_budget():
    r = solve_bnb(gen_instance(InstanceSpec("A", 100, 5, seed=0)), time_limit=60)
    assert r.status is Status.OPTIMAL
    assert r.elapsed_ms < 60_000


def test_relaxing_capacity_never_raises_optimum():
    rng = np.random.default_rng(5)
    for _ in range(30):
        inst = random_small_instance(rng, 7, 3)
        loose = Instance(inst.users, [s.__class__(s.id, s.pos, s.radius, math.inf, None) for s in inst.stations],
                         inst.demand, handover_matrix=inst.handover_matrix)
        tight = solve_bnb(inst)
        assert solve_bnb(loose).cost <= tight.cost


def test_bound_admissible_along_optimal_path():
    """partial + rest never exceeds the optimum on the prefixes of the optimal assignment."""
    rng = np.random.default_rng(11)
    for _ in range(40):
        inst = random_small_instance(rng, 8, 4)
        r = solve_bnb(inst)
        if r.status is not Status.OPTIMAL:
            continue
        cost = inst.cost_matrix()
        order = branching_order(cost)
        rest = lower_bounds(cost, order)
        partial = 0.0
        for depth, k in enumerate(order):
            assert partial + rest[depth] <= r.cost + 1e-9
            partial += cost[k, r.assignment.station_of[k]]


def test_branching_order_descending_regret():
    cost = np.array([[5.0, 6.0], [5.0, 9.0], [7.0, 7.5], [1.0, 1.0]])
    assert branching_order(cost).tolist() == [1, 0, 2, 3]
    assert lower_bounds(cost, branching_order(cost)).tolist() == [18.0, 13.0, 8.0, 1.0, 0.0]


def test_bnb_time_limit_reports_timeout():
    # tight B' instance with a binding capacity: the weak bound cannot close it in a blink
    inst = gen_instance(InstanceSpec("Bprime", 1200, 5, seed=100 + 12))
    r = solve_bnb(inst, time_limit=0.05)
    assert r.status in (Status.TIMED_OUT, Status.OPTIMAL)
    if r.status is Status.TIMED_OUT:
        assert r.assignment is None or is_feasible(inst, r.assignment)
        assert r.elapsed_ms < 5_000


def test_bnb_accepts_incumbent():
    rng = np.random.default_rng(9)
    inst = random_small_instance(rng, 6, 3)
    plain = solve_bnb(inst)
    if plain.status is Status.OPTIMAL:
        seeded = solve_bnb(inst, incumbent=plain.assignment)
        assert seeded.cost == plain.cost
        bad = Assignment.from_stations(inst, [0] * inst.n_users)
        if not is_feasible(inst, bad):
            with pytest.raises(ModelError):
                solve_bnb(inst, incumbent=bad)


def test_bruteforce_backends_agree():
    rng = np.random.default_rng(4)
    for _ in range(20):
        inst = random_small_instance(rng, 7, 4)
        args = (np.ascontiguousarray(inst.cost_matrix()), inst.demand, inst.capacity)
        so1, c1 = kernels.bruteforce_loop(*args)
        so2, c2 = kernels.bruteforce_vec(*args, chunk=37)
        assert (math.isinf(c1) and math.isinf(c2)) or (so1.tolist() == so2.tolist() and abs(c1 - c2) < 1e-9)
