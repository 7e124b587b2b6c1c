"""Compare the numba kernels against the pure-numpy fallback.

Kernel timings run in-process (both variants are importable side by side);
end-to-end solver timings run each backend in a subprocess, since the backend
is fixed at import time by ``UEASSOC_DISABLE_NUMBA``.

    python3 benchmarks/bench_backends.py --repeat 5
"""
from __future__ import annotations

import argparse
import json
import os
import statistics
import subprocess
import sys
import time

import numpy as np

from ueassoc import kernels
from ueassoc.ils import CONSTRUCTION_ATTEMPTS
from ueassoc.instgen import InstanceSpec, gen_instance

E2E_SCRIPT = """
import json, sys, time
from ueassoc import BACKEND, IlsParams, InstanceSpec, gen_instance, ils_solve, solve_bnb
spec = InstanceSpec(sys.argv[1], int(sys.argv[2]), int(sys.argv[3]), seed=int(sys.argv[4]))
inst = gen_instance(spec)
iters, repeat = int(sys.argv[5]), int(sys.argv[6])
ils_solve(inst, IlsParams(max_iterations=1))
solve_bnb(inst)
out = {"backend": BACKEND, "ils": [], "bnb": [], "cost": None}
for r in range(repeat):
    res = ils_solve(inst, IlsParams(max_iterations=iters, seed=r))
    out["ils"].append(res.elapsed * 1e3)
    out["cost"] = res.best_cost
    out["bnb"].append(solve_bnb(inst).elapsed_ms)
print(json.dumps(out))
"""


def _time(fn, repeat):
    fn()
    samples = []
    for _ in range(repeat):
        t = time.perf_counter()
        fn()
        samples.append((time.perf_counter() - t) * 1e3)
    return statistics.median(samples)


def kernel_rows(repeat: int):
    inst = gen_instance(InstanceSpec("B", 1200, 10, seed=3))
    cost = np.ascontiguousarray(inst.cost_matrix())
    demand, cap = inst.demand, inst.capacity
    so, load, _ = kernels.construct_vec(cost, demand, cap, np.random.default_rng(0), CONSTRUCTION_ATTEMPTS)
    # a local optimum makes both scans exhaustive, the worst case
    kernels.vnd_plain(cost, demand, cap, so, load, float(cost[np.arange(so.size), so].sum()))

    def rng():
        return np.random.default_rng(1)

    small = gen_instance(InstanceSpec("A", 8, 4, seed=5))
    sc, sd, sk = np.ascontiguousarray(small.cost_matrix()), small.demand, small.capacity
    pairs = {
        "swap scan (1200x10)": (lambda: kernels.swap_first_loop(cost, demand, cap, so, load),
                                lambda: kernels.swap_first_vec(cost, demand, cap, so, load)),
        "insert scan (1200x10)": (lambda: kernels.insert_first_loop(cost, demand, cap, so, load),
                                  lambda: kernels.insert_first_vec(cost, demand, cap, so, load)),
        "construction (1200x10)": (lambda: kernels.construct_loop(cost, demand, cap, rng(), 50),
                                   lambda: kernels.construct_vec(cost, demand, cap, rng(), 50)),
        "brute force (8x4)": (lambda: kernels.bruteforce_loop(sc, sd, sk),
                              lambda: kernels.bruteforce_vec(sc, sd, sk)),
    }
    if not kernels.USE_NUMBA:
        print("numba unavailable; loop kernels run as plain Python", file=sys.stderr)
    return [(name, _time(a, repeat), _time(b, repeat)) for name, (a, b) in pairs.items()]


def e2e(backend_off: bool, args) -> dict:
    env = dict(os.environ)
    env["UEASSOC_DISABLE_NUMBA"] = "1" if backend_off else "0"
    cmd = [sys.executable, "-c", E2E_SCRIPT, args.type, str(args.users), str(args.stations),
           str(args.seed), str(args.iters), str(args.repeat)]
    return json.loads(subprocess.run(cmd, env=env, check=True, capture_output=True, text=True).stdout)


def main(argv=None) -> int:
    p = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    p.add_argument("--repeat", type=int, default=5)
    p.add_argument("--type", default="A")
    p.add_argument("--users", type=int, default=200)
    p.add_argument("--stations", type=int, default=10)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--iters", type=int, default=50, help="ILS iterations per end-to-end run")
    args = p.parse_args(argv)

    print(f"{'kernel':<26}{'numba ms':>12}{'numpy ms':>12}{'ratio':>9}")
    for name, jit_ms, np_ms in kernel_rows(args.repeat):
        print(f"{name:<26}{jit_ms:>12.3f}{np_ms:>12.3f}{np_ms / jit_ms:>9.1f}")

    fast, slow = e2e(False, args), e2e(True, args)
    same = fast["cost"] == slow["cost"]
    print(f"\nend to end, {args.type}-{args.users}x{args.stations}, {args.iters} ILS iterations, "
          f"median of {args.repeat}")
    print(f"{'solver':<26}{'numba ms':>12}{'numpy ms':>12}{'ratio':>9}")
    for key in ("ils", "bnb"):
        a, b = statistics.median(fast[key]), statistics.median(slow[key])
        print(f"{key:<26}{a:>12.3f}{b:>12.3f}{b / a:>9.1f}")
    print(f"identical ILS result across backends: {same}")
    return 0 if same else 1


if __name__ == "__main__":
    sys.exit(main())
