"""Hot loops for the local search, construction and tree search.

Every kernel exists as a loop version compiled with numba (``*_loop``) and,
where the work vectorises, a numpy version (``*_vec``). The public names
(``swap_first``, ``insert_first``, ...) point at the loop version on the numba
backend and at the numpy version otherwise; see :mod:`ueassoc._jit`.

Arrays follow one layout throughout: ``cost`` and ``demand`` are
``(n_users, n_stations)`` float64, ``cap`` and ``load`` are ``(n_stations,)``
float64, ``station_of`` is ``(n_users,)`` int64. Kernels mutate
``station_of``/``load`` in place and return the running cost.
"""
from __future__ import annotations

import numpy as np

from ._jit import USE_NUMBA, njit

# a move must lower the cost by more than this to count as an improvement
IMPROVE_EPS = 1e-10


def _swap_first_loop(cost, demand, cap, station_of, load):
    n, m = cost.shape
    cur = np.empty(n)
    for v in range(n):
        cur[v] = cost[v, station_of[v]]
    gain = np.empty(m)
    for u in range(n - 1):
        i = station_of[u]
        for s in range(m):
            gain[s] = cost[u, s] - cur[u]
        # same-station partners can never qualify
        gain[i] = np.inf
        for v in range(u + 1, n):
            delta = gain[station_of[v]] + (cost[v, i] - cur[v])
            if delta < -IMPROVE_EPS:
                j = station_of[v]
                if load[i] - demand[u, i] + demand[v, i] <= cap[i] and load[j] - demand[v, j] + demand[u, j] <= cap[j]:
                    return u, v, delta
    return -1, -1, 0.0


def swap_first_vec(cost, demand, cap, station_of, load):
    n = station_of.shape[0]
    cur = cost[np.arange(n), station_of]
    for u in range(n - 1):
        i = station_of[u]
        v = np.arange(u + 1, n)
        j = station_of[u + 1:]
        gain = cost[u] - cur[u]
        gain[i] = np.inf
        delta = gain[j] + (cost[v, i] - cur[v])
        ok = ((delta < -IMPROVE_EPS)
              & (load[i] - demand[u, i] + demand[v, i] <= cap[i])
              & (load[j] - demand[v, j] + demand[u, j] <= cap[j]))
        hit = np.flatnonzero(ok)
        if hit.size:
            return u, int(v[hit[0]]), float(delta[hit[0]])
    return -1, -1, 0.0


def _insert_first_loop(cost, demand, cap, station_of, load):
    n, m = cost.shape
    for u in range(n):
        i = station_of[u]
        cui = cost[u, i]
        for j in range(m):
            if j == i:
                continue
            delta = cost[u, j] - cui
            if delta < -IMPROVE_EPS and load[j] + demand[u, j] <= cap[j]:
                return u, j, delta
    return -1, -1, 0.0


def insert_first_vec(cost, demand, cap, station_of, load):
    n, m = cost.shape
    if n == 0:
        return -1, -1, 0.0
    rows = np.arange(n)
    delta = cost - cost[rows, station_of][:, None]
    ok = (delta < -IMPROVE_EPS) & (load[None, :] + demand <= cap[None, :])
    ok[rows, station_of] = False
    flat = np.flatnonzero(ok.ravel())
    if flat.size == 0:
        return -1, -1, 0.0
    u, j = divmod(int(flat[0]), m)
    return u, j, float(delta[u, j])


@njit
def apply_swap(demand, station_of, load, u, v):
    i = station_of[u]
    j = station_of[v]
    load[i] += demand[v, i] - demand[u, i]
    load[j] += demand[u, j] - demand[v, j]
    station_of[u] = j
    station_of[v] = i


@njit
def apply_insert(demand, station_of, load, u, j):
    i = station_of[u]
    load[i] -= demand[u, i]
    load[j] += demand[u, j]
    station_of[u] = j


swap_first_loop = njit(_swap_first_loop)
insert_first_loop = njit(_insert_first_loop)
if USE_NUMBA:
    swap_first = swap_first_loop
    insert_first = insert_first_loop
else:
    swap_first = swap_first_vec
    insert_first = insert_first_vec


def _vnd(cost, demand, cap, station_of, load, total):
    # neighbourhood order: swap, then insert; any improvement restarts at swap
    moves = 0
    while True:
        u, v, delta = swap_first(cost, demand, cap, station_of, load)
        if u >= 0:
            apply_swap(demand, station_of, load, u, v)
            total += delta
            moves += 1
            continue
        u, j, delta = insert_first(cost, demand, cap, station_of, load)
        if u >= 0:
            apply_insert(demand, station_of, load, u, j)
            total += delta
            moves += 1
            continue
        return total, moves


def _vnd_loop(cost, demand, cap, station_of, load, total):
    """Same moves as the plain descent, without rescanning settled swap pairs.

    After a swap hit at ``(ru, rv)`` with no improving-but-infeasible pair
    before it, every earlier pair not touching the two moved users is still
    non-improving (its delta is bit-identical), so the next first-improvement
    search only rechecks pairs with the moved users before ``(ru, rv)`` and
    resumes the ordinary scan from there. Any blocked pair forces a full scan.
    """
    n, m = cost.shape
    cur = np.empty(n)
    for v in range(n):
        cur[v] = cost[v, station_of[v]]
    gain = np.empty(m)
    moves = 0
    ru = 0
    rv = 0
    s1 = -1
    s2 = -1
    while True:
        hu = -1
        hv = -1
        hd = 0.0
        bu = n
        bv = n
        for t in range(2):
            x = s1 if t == 0 else s2
            if x < 0:
                continue
            for y in range(n):
                if y == x:
                    continue
                a = min(x, y)
                b = max(x, y)
                if not (a < ru or (a == ru and b < rv)):
                    continue
                i = station_of[a]
                j = station_of[b]
                if i == j:
                    continue
                delta = (cost[a, j] - cur[a]) + (cost[b, i] - cur[b])
                if delta < -IMPROVE_EPS:
                    if load[i] - demand[a, i] + demand[b, i] <= cap[i] and \
                            load[j] - demand[b, j] + demand[a, j] <= cap[j]:
                        if hu < 0 or a < hu or (a == hu and b < hv):
                            hu = a
                            hv = b
                            hd = delta
                    elif a < bu or (a == bu and b < bv):
                        bu = a
                        bv = b
        if hu >= 0:
            blocked = bu < hu or (bu == hu and bv < hv)
        else:
            blocked = bu < n
            for u in range(ru, n - 1):
                i = station_of[u]
                for s in range(m):
                    gain[s] = cost[u, s] - cur[u]
                gain[i] = np.inf
                start = max(rv, u + 1) if u == ru else u + 1
                for v in range(start, n):
                    delta = gain[station_of[v]] + (cost[v, i] - cur[v])
                    if delta < -IMPROVE_EPS:
                        j = station_of[v]
                        if load[i] - demand[u, i] + demand[v, i] <= cap[i] and \
                                load[j] - demand[v, j] + demand[u, j] <= cap[j]:
                            hu = u
                            hv = v
                            hd = delta
                            break
                        blocked = True
                if hu >= 0:
                    break
        if hu >= 0:
            apply_swap(demand, station_of, load, hu, hv)
            cur[hu] = cost[hu, station_of[hu]]
            cur[hv] = cost[hv, station_of[hv]]
            total += hd
            moves += 1
            if blocked:
                ru, rv, s1, s2 = 0, 0, -1, -1
            else:
                ru, rv, s1, s2 = hu, hv, hu, hv
            continue
        u, j, delta = insert_first_loop(cost, demand, cap, station_of, load)
        if u >= 0:
            apply_insert(demand, station_of, load, u, j)
            cur[u] = cost[u, j]
            total += delta
            moves += 1
            if blocked:
                ru, rv, s1, s2 = 0, 0, -1, -1
            else:
                ru, rv, s1, s2 = n, n, u, -1
            continue
        return total, moves


vnd_plain = njit(_vnd)
vnd = njit(_vnd_loop) if USE_NUMBA else _vnd


@njit
def perturb(cost, demand, cap, station_of, load, total, strength, rng, max_tries):
    """Apply up to ``strength`` random feasible swap/insert moves, ignoring cost.

    Each move draws a kind (0 swap, 1 insert) and operands uniformly, and
    retries up to ``max_tries`` times to hit a feasible one; a move that never
    does is skipped.
    """
    n, m = cost.shape
    if n == 0:
        return total
    for _ in range(strength):
        for _t in range(max_tries):
            kind = rng.integers(0, 2)
            if kind == 0:
                u = rng.integers(0, n)
                v = rng.integers(0, n)
                i = station_of[u]
                j = station_of[v]
                if i == j:
                    continue
                if load[i] - demand[u, i] + demand[v, i] <= cap[i] and \
                        load[j] - demand[v, j] + demand[u, j] <= cap[j]:
                    total += (cost[u, j] - cost[u, i]) + (cost[v, i] - cost[v, j])
                    apply_swap(demand, station_of, load, u, v)
                    break
            else:
                u = rng.integers(0, n)
                j = rng.integers(0, m)
                i = station_of[u]
                if j == i:
                    continue
                if load[j] + demand[u, j] <= cap[j]:
                    total += cost[u, j] - cost[u, i]
                    apply_insert(demand, station_of, load, u, j)
                    break
    return total


@njit
def ils_step(cost, demand, cap, station_of, load, total, work_of, work_load, strength, rng, max_tries):
    """Perturb a copy of the current solution into ``work_*`` and descend; returns its cost."""
    work_of[:] = station_of
    work_load[:] = load
    t = perturb(cost, demand, cap, work_of, work_load, total, strength, rng, max_tries)
    t, _ = vnd(cost, demand, cap, work_of, work_load, t)
    return t


def _construct_loop(cost, demand, cap, rng, attempts):
    n, m = cost.shape
    station_of = np.full(n, -1, dtype=np.int64)
    load = np.zeros(m, dtype=np.float64)
    for _ in range(attempts):
        users = rng.permutation(n)
        stations = rng.permutation(m)
        station_of[:] = -1
        load[:] = 0.0
        ok = True
        for u in users:
            best = -1
            best_c = np.inf
            for s in stations:
                if load[s] + demand[u, s] <= cap[s] and cost[u, s] < best_c:
                    best = s
                    best_c = cost[u, s]
            if best < 0:
                ok = False
                break
            station_of[u] = best
            load[best] += demand[u, best]
        if ok:
            return station_of, load, True
    return station_of, load, False


def construct_vec(cost, demand, cap, rng, attempts):
    n, m = cost.shape
    station_of = np.full(n, -1, dtype=np.int64)
    load = np.zeros(m, dtype=np.float64)
    for _ in range(attempts):
        users = rng.permutation(n)
        stations = rng.permutation(m)
        station_of[:] = -1
        load[:] = 0.0
        ok = True
        for u in users:
            fits = load[stations] + demand[u, stations] <= cap[stations]
            if not fits.any():
                ok = False
                break
            pick = stations[int(np.argmin(np.where(fits, cost[u, stations], np.inf)))]
            station_of[u] = pick
            load[pick] += demand[u, pick]
        if ok:
            return station_of, load, True
    return station_of, load, False


construct_loop = njit(_construct_loop)
construct = construct_loop if USE_NUMBA else construct_vec


@njit
def bnb_search(cost, demand, cap, order, children, rest, station_of, load, partial, ptr, state,
               best_of, best, max_nodes):
    """Resumable depth-first branch-and-bound.

    ``order`` is the branching order of users, ``children[u]`` the stations of
    user ``u`` by ascending cost and ``rest[d]`` the sum of per-user minimum
    costs of ``order[d:]``. ``state = [depth, nodes]`` and ``best = [incumbent]``
    carry the search across calls. Returns True once the tree is exhausted,
    False when ``max_nodes`` more nodes have been created.
    """
    n = order.shape[0]
    m = cost.shape[1]
    d = state[0]
    budget = state[1] + max_nodes
    while True:
        if d == n:
            if partial[n] < best[0]:
                best[0] = partial[n]
                best_of[:] = station_of
            d -= 1
            if d < 0:
                state[0] = 0
                return True
            u = order[d]
            s = station_of[u]
            load[s] -= demand[u, s]
            station_of[u] = -1
            continue
        u = order[d]
        advanced = False
        while ptr[d] < m:
            s = children[u, ptr[d]]
            ptr[d] += 1
            c = partial[d] + cost[u, s]
            if c + rest[d + 1] >= best[0]:
                # children come in ascending cost: the rest are no better
                ptr[d] = m
                break
            if load[s] + demand[u, s] <= cap[s]:
                station_of[u] = s
                load[s] += demand[u, s]
                partial[d + 1] = c
                state[1] += 1
                d += 1
                ptr[d] = 0
                advanced = True
                break
        if not advanced:
            if d == 0:
                state[0] = 0
                return True
            d -= 1
            u = order[d]
            s = station_of[u]
            load[s] -= demand[u, s]
            station_of[u] = -1
        if state[1] >= budget:
            state[0] = d
            return False


def _bruteforce_loop(cost, demand, cap):
    n, m = cost.shape
    digits = np.zeros(n, dtype=np.int64)
    best_of = np.full(n, -1, dtype=np.int64)
    best = np.inf
    load = np.zeros(m, dtype=np.float64)
    while True:
        load[:] = 0.0
        c = 0.0
        for k in range(n):
            c += cost[k, digits[k]]
            load[digits[k]] += demand[k, digits[k]]
        feasible = True
        for s in range(m):
            if load[s] > cap[s]:
                feasible = False
                break
        if feasible and c < best:
            best = c
            best_of[:] = digits
        k = n - 1
        while k >= 0:
            digits[k] += 1
            if digits[k] < m:
                break
            digits[k] = 0
            k -= 1
        if k < 0:
            return best_of, best


def bruteforce_vec(cost, demand, cap, chunk=1 << 16):
    n, m = cost.shape
    total = m ** n
    weights = m ** np.arange(n - 1, -1, -1, dtype=np.int64)
    rows = np.arange(n)
    best_of = np.full(n, -1, dtype=np.int64)
    best = np.inf
    for start in range(0, total, chunk):
        idx = np.arange(start, min(start + chunk, total), dtype=np.int64)
        digits = (idx[:, None] // weights[None, :]) % m
        c = cost[rows, digits].sum(axis=1)
        dem = demand[rows, digits]
        feasible = np.ones(idx.size, dtype=bool)
        for s in range(m):
            feasible &= (dem * (digits == s)).sum(axis=1) <= cap[s]
        if not feasible.any():
            continue
        c = np.where(feasible, c, np.inf)
        pos = int(np.argmin(c))
        if c[pos] < best:
            best = float(c[pos])
            best_of = digits[pos].copy()
    return best_of, best


bruteforce_loop = njit(_bruteforce_loop)
bruteforce = bruteforce_loop if USE_NUMBA else bruteforce_vec
