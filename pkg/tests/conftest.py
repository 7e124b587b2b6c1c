import itertools
import math

import numpy as np
import pytest

from ueassoc.model import BaseStation, Instance, User


def make_instance(user_pos, station_pos, demand=None, capacity=None, avg_handover=None,
                  radius=500.0, **kw):
    """Small hand-built instance; scalars broadcast over stations/users."""
    m = len(station_pos)
    n = len(user_pos)
    capacity = [math.inf] * m if capacity is None else np.broadcast_to(capacity, (m,)).tolist()
    avg_handover = [0.0] * m if avg_handover is None else np.broadcast_to(avg_handover, (m,)).tolist()
    radius = np.broadcast_to(radius, (m,)).tolist()
    stations = [BaseStation(i, tuple(map(float, p)), radius[i], capacity[i], avg_handover[i])
                for i, p in enumerate(station_pos)]
    users = [User(k, tuple(map(float, p))) for k, p in enumerate(user_pos)]
    demand = np.ones((n, m)) if demand is None else np.broadcast_to(np.asarray(demand, float), (n, m))
    return Instance(users, stations, demand, **kw)


def random_small_instance(rng, max_users=8, max_stations=4, cost_mode="magnitude"):
    """Random tiny instance with capacities ranging from loose to binding."""
    n = int(rng.integers(1, max_users + 1))
    m = int(rng.integers(2, max_stations + 1))
    demand = rng.integers(5, 26, size=(n, m)).astype(float)
    tight = rng.uniform(0.9, 2.5)
    cap = np.full(m, max(demand.max(), tight * demand.min(axis=1).sum() / m))
    cap = np.floor(cap * rng.uniform(0.9, 1.1, size=m))
    h = rng.uniform(0, 1, size=(m, m))
    np.fill_diagonal(h, 0)
    stations = [BaseStation(i, tuple(rng.uniform(0, 2000, 2)), 500.0, float(cap[i]), None)
                for i in range(m)]
    users = [User(k, tuple(rng.uniform(0, 2000, 2))) for k in range(n)]
    return Instance(users, stations, demand, handover_matrix=h, cost_mode=cost_mode)


def oracle_optimum(inst):
    """Plain itertools enumeration, independent of the solver kernels."""
    cost = inst.cost_matrix()
    best, best_of = math.inf, None
    for combo in itertools.product(range(inst.n_stations), repeat=inst.n_users):
        load = np.zeros(inst.n_stations)
        for k, i in enumerate(combo):
            load[i] += inst.demand[k, i]
        if np.any(load > inst.capacity):
            continue
        c = math.fsum(cost[k, i] for k, i in enumerate(combo))
        if c < best:
            best, best_of = c, combo
    return best, best_of


def improving_moves(inst, station_of, tol=1e-9):
    """Every feasible swap or insert that lowers the from-scratch cost by more than ``tol``."""
    cost = inst.cost_matrix()
    so = list(station_of)

    def value(s):
        return math.fsum(cost[k, i] for k, i in enumerate(s))

    def feasible(s):
        load = np.zeros(inst.n_stations)
        for k, i in enumerate(s):
            load[i] += inst.demand[k, i]
        return bool(np.all(load <= inst.capacity))

    base = value(so)
    found = []
    for u in range(len(so)):
        for v in range(u + 1, len(so)):
            if so[u] == so[v]:
                continue
            s = so.copy()
            s[u], s[v] = s[v], s[u]
            if feasible(s) and value(s) < base - tol:
                found.append(("swap", u, v))
        for j in range(inst.n_stations):
            if j == so[u]:
                continue
            s = so.copy()
            s[u] = j
            if feasible(s) and value(s) < base - tol:
                found.append(("insert", u, j))
    return found


@pytest.fixture
def rng():
    return np.random.default_rng(12345)
