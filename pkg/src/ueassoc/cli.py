"""Command-line interface: ``ueassoc {generate,solve,simulate,experiment,bench}``.

Exit codes: 0 success, 1 validation error, 2 infeasible or timed-out outcome,
3 I/O error.
"""
from __future__ import annotations

import argparse
import json
import logging
import statistics
import sys
from dataclasses import asdict, dataclass
from importlib import resources
from pathlib import Path
from typing import Optional

from . import io as uio
from ._jit import BACKEND
from .exact import Status, solve_bnb, solve_bruteforce
from .ils import ConstructionError, IlsParams, ils_solve
from .instgen import InstanceSpec, gen_instance, standard_specs
from .mobility import (Scenario, Strategy, TraceError, ingest_fcd, random_placement_experiment,
                       simulate)
from .model import CostMode, ModelError
from .stats import ks_two_sample, summarize

log = logging.getLogger("ueassoc")

EXIT_OK, EXIT_INVALID, EXIT_OUTCOME, EXIT_IO = 0, 1, 2, 3
BUNDLED = {"corridor": (1000.0, 1.0), "region26": (1947.65, 1878.95)}
RESULT_FIELDS = ("instance", "solver", "cost", "status", "elapsed_ms", "seed")


@dataclass
class ResultRecord:
    instance: str
    solver: str
    cost: float
    status: str
    elapsed_ms: float
    seed: Optional[int]


def _emit(args, header, rows, config, payload=None) -> None:
    """Write rows (CSV) or ``payload`` (JSON) to ``--out`` or stdout."""
    if args.format == "json":
        doc = {"seed": getattr(args, "seed", None), "config_hash": uio.config_hash(config),
               "config": config}
        doc.update(payload if payload is not None else {"rows": [dict(zip(header, r)) for r in rows]})
        text = json.dumps(doc, indent=1, default=str) + "\n"
    else:
        import csv
        import io as _io
        buf = _io.StringIO()
        buf.write(uio.provenance_line(getattr(args, "seed", None), config) + "\n")
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(header)
        for r in rows:
            w.writerow(["" if v is None else uio.fmt(v) for v in r])
        text = buf.getvalue()
    if args.out:
        Path(args.out).write_text(text)
    else:
        sys.stdout.write(text)


def _config(args, *exclude) -> dict:
    skip = {"func", "out", "format", "verbose", "workers", *exclude}
    return {k: v for k, v in sorted(vars(args).items()) if k not in skip}


def _ils_params(args, seed: int) -> IlsParams:
    if args.iter_budget is not None:
        return IlsParams(seed=seed, max_iterations=args.iter_budget)
    return IlsParams(seed=seed, time_budget=args.time_budget_ms / 1e3)


# generate ------------------------------------------------------------------

def cmd_generate(args) -> int:
    out = Path(args.out)
    overrides = {"cost_mode": CostMode(args.cost_mode or "magnitude")}
    if args.suite:
        out.mkdir(parents=True, exist_ok=True)
        specs = standard_specs(args.seed, **overrides)
        for ordinal, spec in enumerate(specs):
            path = out / f"{ordinal + 1:02d}_{spec.label}.json"
            uio.save_instance(path, gen_instance(spec), spec.seed, _spec_dict(spec))
            log.info("wrote %s", path)
        return EXIT_OK
    spec = InstanceSpec(args.type, args.users, args.stations, args.seed, **overrides)
    uio.save_instance(out, gen_instance(spec), spec.seed, _spec_dict(spec))
    log.info("wrote %s", out)
    return EXIT_OK


def _spec_dict(spec: InstanceSpec) -> dict:
    d = asdict(spec)
    d["type_tag"] = spec.type_tag.value
    d["cost_mode"] = spec.cost_mode.value
    return d


# solve ---------------------------------------------------------------------

def solve_records(inst, label: str, solver: str, seed: int, runs: int, params_for,
                  time_limit: float) -> list[ResultRecord]:
    if solver == "bruteforce":
        r = solve_bruteforce(inst)
        return [ResultRecord(label, solver, r.cost, r.status.value, r.elapsed_ms, None)]
    if solver == "bnb":
        r = solve_bnb(inst, time_limit)
        return [ResultRecord(label, solver, r.cost, r.status.value, r.elapsed_ms, None)]
    records = []
    for run in range(runs):
        s = seed + run
        try:
            r = ils_solve(inst, params_for(s))
            records.append(ResultRecord(label, "ils", r.best_cost, "Feasible", r.elapsed * 1e3, s))
        except ConstructionError:
            records.append(ResultRecord(label, "ils", float("inf"), Status.INFEASIBLE.value, 0.0, s))
    return records


def cmd_solve(args) -> int:
    inst = uio.load_instance(args.instance)
    if args.cost_mode and CostMode(args.cost_mode) is not inst.cost_mode:
        inst = type(inst)(inst.users, inst.stations, inst.demand, inst.handover_matrix,
                          inst.theta_min, inst.theta_max, CostMode(args.cost_mode))
    label = Path(args.instance).stem
    warmup()
    records = solve_records(inst, label, args.solver, args.seed, args.runs,
                            lambda s: _ils_params(args, s), args.time_limit)
    _emit(args, RESULT_FIELDS, [astuple_record(r) for r in records], _config(args))
    bad = any(r.status in (Status.INFEASIBLE.value, Status.TIMED_OUT.value) for r in records)
    return EXIT_OUTCOME if bad else EXIT_OK


def astuple_record(r: ResultRecord) -> tuple:
    return (r.instance, r.solver, r.cost, r.status, r.elapsed_ms, r.seed)


# scenarios -----------------------------------------------------------------

def bundled_scenario(name: str, **kw) -> Scenario:
    if name not in BUNDLED:
        raise ModelError(f"unknown bundled scenario {name!r}; choose from {sorted(BUNDLED)}")
    data = resources.files("ueassoc") / "data"
    stations = uio.parse_stations_csv((data / f"{name}_stations.csv").read_text())
    route = uio.parse_route_csv((data / f"{name}_route.csv").read_text())
    return Scenario(stations, route, BUNDLED[name], **kw)


def _scenario_from_args(args) -> Scenario:
    kw = {"cost_mode": CostMode(args.cost_mode or "magnitude")}
    if args.iter_budget is not None:
        kw["ils_iterations"] = args.iter_budget
    if args.scenario:
        sc = bundled_scenario(args.scenario, **kw)
    else:
        if not args.stations or not (args.route or args.fcd):
            raise ModelError("give --scenario, or --stations with --route or --fcd")
        stations = uio.load_stations(args.stations)
        if args.fcd:
            if not args.vehicle:
                raise ModelError("--fcd needs --vehicle")
            route = ingest_fcd(Path(args.fcd).read_bytes(), args.vehicle)
        else:
            route = uio.load_route(args.route)
        if args.region:
            region = tuple(args.region)
        else:
            xs = [s.pos[0] for s in stations] + [p.pos[0] for p in route]
            ys = [s.pos[1] for s in stations] + [p.pos[1] for p in route]
            region = (max(xs), max(ys))
        sc = Scenario(stations, route, region, **kw)
    return sc


def cmd_simulate(args) -> int:
    sc = _scenario_from_args(args)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    comment = uio.provenance_line(args.seed, _config(args))
    for name in args.strategy:
        res = simulate(sc, seed=args.seed, strategy=Strategy(name))
        uio.write_csv(out / f"{name}_rsrq.csv", ("step", "serving", "rsrq_db"),
                      zip(range(res.serving.size), res.serving.tolist(), res.rsrq_series.tolist()), comment)
        uio.write_csv(out / f"{name}_handovers.csv", ("step", "from_station", "to_station"),
                      ((h.step, h.from_station, h.to_station) for h in res.handovers), comment)
        uio.write_csv(out / f"{name}_shares.csv", ("station", "share"), res.shares.items(), comment)
        log.info("%s: %d handovers, mean RSRQ %.3f dB", name, len(res.handovers), res.mean_rsrq)
    return EXIT_OK


# experiment ------------------------------------------------------------------

EXPERIMENT_FIELDS = ("instance", "ils_mean_rsrq", "predict_mean_rsrq", "ils_handovers",
                     "predict_handovers", "ks_d", "ks_p")


def experiment_report(rows) -> dict:
    ils = [r.ils_mean_rsrq for r in rows]
    pred = [r.predict_mean_rsrq for r in rows]
    ks = ks_two_sample(ils, pred)
    return {"ils_mean_rsrq": summarize(ils).mean, "predict_mean_rsrq": summarize(pred).mean,
            "ils_handovers": summarize([r.ils_handovers for r in rows]).mean,
            "predict_handovers": summarize([r.predict_handovers for r in rows]).mean,
            "ks_d": ks.d_stat, "ks_p": ks.p_value}


def cmd_experiment(args) -> int:
    if args.n < 2:
        raise ModelError("--n must be >= 2")
    template = _scenario_from_args(args)
    rows = random_placement_experiment(args.n, template, args.seed, workers=args.workers)
    summary = experiment_report(rows)
    table = [(r.instance, r.ils_mean_rsrq, r.predict_mean_rsrq, r.ils_handovers,
              r.predict_handovers, None, None) for r in rows]
    table.append(("summary",) + tuple(summary[k] for k in EXPERIMENT_FIELDS[1:]))
    payload = {"rows": [asdict(r) for r in rows], "summary": summary}
    _emit(args, EXPERIMENT_FIELDS, table, _config(args), payload)
    log.info("ILS %.3f dB vs predict %.3f dB, KS p=%.4f", summary["ils_mean_rsrq"],
             summary["predict_mean_rsrq"], summary["ks_p"])
    return EXIT_OK


# bench -----------------------------------------------------------------------

BENCH_FIELDS = ("instance", "type", "users", "stations", "seed", "bnb_best", "bnb_status", "bnb_ms",
                "ils_best", "ils_worst", "ils_hits", "ils_runs", "ils_ms", "ils_run_ms", "time_reduction_pct")


def warmup() -> None:
    """Load or compile every kernel once so that timed runs measure solving only."""
    inst = gen_instance(InstanceSpec("B", 12, 3, seed=0))
    solve_bnb(inst)
    ils_solve(inst, IlsParams(max_iterations=3))


def bench_rows(base_seed: int, runs: int, params_for, time_limit: float, cost_mode="magnitude",
               only=None) -> list[dict]:
    """One row per standard instance: exact optimum and ILS statistics.

    ``ils_ms`` is the mean time until a run first held its final best solution
    (its initial local search included); ``ils_run_ms`` is the mean full run.
    """
    warmup()
    rows = []
    for ordinal, spec in enumerate(standard_specs(base_seed, cost_mode=cost_mode)):
        if only is not None and ordinal not in only:
            continue
        inst = gen_instance(spec)
        inst.cost_matrix()
        exact = solve_bnb(inst, time_limit)
        results = [ils_solve(inst, params_for(base_seed * 1000 + r)) for r in range(runs)]
        costs = [r.best_cost for r in results]
        hits = sum(abs(c - exact.cost) <= 1e-9 for c in costs) if exact.status is Status.OPTIMAL else None
        rows.append({"instance": ordinal % 6 + 1, "type": spec.type_tag.value, "users": spec.num_users,
                     "stations": spec.num_stations, "seed": spec.seed, "bnb_best": exact.cost,
                     "bnb_status": exact.status.value, "bnb_ms": exact.elapsed_ms,
                     "ils_best": min(costs), "ils_worst": max(costs), "ils_hits": hits, "ils_runs": runs,
                     "ils_ms": statistics.fmean(r.time_to_best * 1e3 for r in results),
                     "ils_run_ms": statistics.fmean(r.elapsed * 1e3 for r in results)})
        log.info("%s: bnb %.4f (%s, %.2f ms), ils %.4f (%.2f ms)", spec.label, exact.cost,
                 exact.status.value, exact.elapsed_ms, min(costs), rows[-1]["ils_ms"])
    return rows


def bench_summary(rows) -> dict:
    bnb = statistics.fmean(r["bnb_ms"] for r in rows)
    ils = statistics.fmean(r["ils_ms"] for r in rows)
    return {"bnb_mean_ms": bnb, "ils_mean_ms": ils, "time_reduction_pct": 100.0 * (1.0 - ils / bnb)}


def cmd_bench(args) -> int:
    rows = bench_rows(args.seed, args.runs, lambda s: _ils_params(args, s), args.time_limit,
                      args.cost_mode or "magnitude")
    summary = bench_summary(rows)
    table = [tuple(r.get(k) for k in BENCH_FIELDS) for r in rows]
    table.append(("summary", None, None, None, args.seed, None, None, summary["bnb_mean_ms"], None, None,
                  None, None, summary["ils_mean_ms"], None, summary["time_reduction_pct"]))
    _emit(args, BENCH_FIELDS, table, _config(args), {"rows": rows, "summary": summary})
    log.info("mean bnb %.3f ms, mean ils %.3f ms, reduction %.1f%%", summary["bnb_mean_ms"],
             summary["ils_mean_ms"], summary["time_reduction_pct"])
    timed_out = any(r["bnb_status"] != Status.OPTIMAL.value for r in rows)
    return EXIT_OUTCOME if timed_out else EXIT_OK


# parser ------------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="ueassoc", description="Vehicular user association toolkit")
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True)

    def common(sp, seed_default=0):
        sp.add_argument("--seed", type=int, default=seed_default)
        sp.add_argument("--out", default=None)
        sp.add_argument("--cost-mode", choices=[m.value for m in CostMode], default=None)

    def ils_opts(sp):
        sp.add_argument("--time-budget-ms", type=float, default=2000.0)
        sp.add_argument("--iter-budget", type=int, default=None)

    def fmt_opt(sp):
        sp.add_argument("--format", choices=["csv", "json"], default="csv")

    def scenario_opts(sp):
        sp.add_argument("--scenario", choices=sorted(BUNDLED))
        sp.add_argument("--stations")
        sp.add_argument("--route")
        sp.add_argument("--fcd")
        sp.add_argument("--vehicle")
        sp.add_argument("--region", type=float, nargs=2, metavar=("W", "H"))

    g = sub.add_parser("generate", help="write benchmark instance(s) as JSON")
    common(g)
    g.add_argument("--type", choices=["A", "B", "Bprime"], default="A")
    g.add_argument("--users", type=int, default=100)
    g.add_argument("--stations", type=int, default=5)
    g.add_argument("--suite", action="store_true", help="all 18 standard instances into --out dir")
    g.set_defaults(func=cmd_generate)

    s = sub.add_parser("solve", help="solve an instance file")
    s.add_argument("instance")
    common(s)
    ils_opts(s)
    fmt_opt(s)
    s.add_argument("--solver", choices=["bruteforce", "bnb", "ils"], default="ils")
    s.add_argument("--runs", type=int, default=1)
    s.add_argument("--time-limit", type=float, default=60.0, help="bnb limit, seconds")
    s.set_defaults(func=cmd_solve)

    m = sub.add_parser("simulate", help="replay a route under one or more strategies")
    common(m)
    scenario_opts(m)
    m.add_argument("--strategy", nargs="+", choices=[x.value for x in Strategy],
                   default=[Strategy.ILS_VND.value, Strategy.PREDICT.value])
    m.add_argument("--iter-budget", type=int, default=None, help="ILS iterations per step")
    m.set_defaults(func=cmd_simulate)

    e = sub.add_parser("experiment", help="random station placements, ILS vs predict")
    common(e)
    scenario_opts(e)
    fmt_opt(e)
    e.add_argument("--n", type=int, default=100)
    e.add_argument("--workers", type=int, default=1)
    e.add_argument("--iter-budget", type=int, default=None, help="ILS iterations per step")
    e.set_defaults(func=cmd_experiment)

    b = sub.add_parser("bench", help="exact vs ILS on the 18 standard instances")
    common(b)
    ils_opts(b)
    fmt_opt(b)
    b.add_argument("--runs", type=int, default=30)
    b.add_argument("--time-limit", type=float, default=60.0, help="bnb limit, seconds")
    b.set_defaults(func=cmd_bench)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s", stream=sys.stderr)
    log.info("kernel backend: %s", BACKEND)
    if args.command == "experiment" and not (args.scenario or args.stations):
        args.scenario = "region26"
    try:
        return args.func(args)
    except (ModelError, TraceError, ValueError, KeyError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INVALID
    except OSError as exc:
        print(f"I/O error: {exc}", file=sys.stderr)
        return EXIT_IO


if __name__ == "__main__":
    sys.exit(main())
