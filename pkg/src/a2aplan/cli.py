"""Command-line front end.

Subcommands cover the whole pipeline: workload generation, planning, R
sweeps, lower-bound tables, strategy verification, simulation, and the
reproduction suite.  Structured outputs are JSON (stdout or file), tables
are CSV.  Exit codes: 0 ok, 2 validation failure or failed check, 3
internal error.  Validation errors are emitted as one JSON object on
stderr.  All randomized behavior is seeded; the default seed is 0.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
import tempfile
from dataclasses import replace

import numpy as np

from . import __version__, acceptance
from .baselines import direct_circuits, greedy_bvn_strategy, static_shortest_path
from .core import (
    CostModel,
    NetworkParams,
    TrafficMatrix,
    strategy_from_json,
    strategy_to_json,
    traffic_from_json,
    traffic_to_json,
)
from .cost import power_sum, strategy_cost, verify_decomposition
from .schedule import check_contention_free
from .sim import SimConfig, simulate
from .strategize import (
    PlanRequest,
    SweepResult,
    best_strategy_for_d,
    select_d,
    sweep_r,
)
from .topology import shift_power_sums
from .cost import lower_bound_hop_term
from .workloads import KINDS, WorkloadSpec, gen_traffic

EXIT_OK = 0
EXIT_VALIDATION = 2
EXIT_INTERNAL = 3


def _fail(kind: str, message: str, code: int) -> int:
    json.dump({"error": kind, "message": message}, sys.stderr)
    sys.stderr.write("\n")
    return code


def _write_text(path: str, text: str) -> None:
    """Write atomically; '-' means stdout."""
    if path == "-":
        sys.stdout.write(text)
        if not text.endswith("\n"):
            sys.stdout.write("\n")
        return
    d = os.path.dirname(os.path.abspath(path))
    fd, tmp = tempfile.mkstemp(dir=d, prefix=".a2aplan.")
    try:
        with os.fdopen(fd, "w") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        os.unlink(tmp)
        raise


def _read_text(path: str) -> str:
    if path == "-":
        return sys.stdin.read()
    with open(path) as fh:
        return fh.read()


def _dump(obj) -> str:
    return json.dumps(obj, indent=2, sort_keys=True)


def _cost_model(args) -> CostModel:
    cm = CostModel(alpha=args.alpha, beta=args.beta, chunk_bytes=args.chunk_bytes)
    if args.R is not None:
        rv = args.R
        in_T = args.R_in_T
        if isinstance(rv, str):
            if rv.lower().endswith("t"):
                rv = rv[:-1]
                in_T = True
            rv = float(rv)
        R = rv * cm.T if in_T else rv
        cm = replace(cm, reconfig_delay=R)
    return cm


def _add_cost_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--alpha", type=float, default=CostModel.alpha,
                   help="per-hop latency, seconds (default %(default)g)")
    p.add_argument("--beta", type=float, default=CostModel.beta,
                   help="inverse bandwidth, seconds per byte (default %(default)g)")
    p.add_argument("--chunk-bytes", type=int, default=CostModel.chunk_bytes,
                   help="chunk size in bytes (default %(default)d)")
    p.add_argument("--R", default=None,
                   help="reconfiguration delay, seconds; append 'T' or pass "
                        "--R-in-T to give it in units of the per-chunk hop time")
    p.add_argument("--R-in-T", action="store_true",
                   help="interpret --R as a multiple of T instead of seconds")


def _add_traffic_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--traffic", default=None,
                   help="traffic JSON file ('-' for stdin); omit to generate from "
                        "--kind/--mean-chunks/--seed")
    p.add_argument("--kind", choices=KINDS, default="uniform")
    p.add_argument("--mean-chunks", type=int, default=1)
    p.add_argument("--seed", type=int, default=0, help="workload RNG seed (default 0)")
    p.add_argument("--zipf-factor", type=float, default=0.4)


def _load_traffic(args, n: int) -> TrafficMatrix:
    if args.traffic is not None:
        tm = traffic_from_json(_read_text(args.traffic))
        if tm.n != n:
            raise ValueError(f"traffic is for n={tm.n}, command asked for n={n}")
        return tm
    spec = WorkloadSpec(n, args.kind, args.mean_chunks, seed=args.seed,
                        zipf_exponent=args.zipf_factor)
    return gen_traffic(spec)


def _cmd_gen_traffic(args) -> int:
    spec = WorkloadSpec(args.n, args.kind, args.mean_chunks, seed=args.seed,
                        zipf_exponent=args.zipf_factor)
    tm = gen_traffic(spec)
    _write_text(args.out, _dump(traffic_to_json(tm)))
    return EXIT_OK


def _summary_obj(res, cm: CostModel) -> dict:
    cb = res.cost
    return {
        "chosenD": res.d,
        "family": res.family,
        "powerSumUnits": cb.power_sum,
        "reconfigSeconds": cb.reconfig_seconds,
        "transmitSeconds": cb.transmit_seconds,
        "totalSeconds": cb.total_seconds,
        "T": cm.T,
        "totalT": cb.total_seconds / cm.T,
    }


def _cmd_plan(args) -> int:
    params = NetworkParams(args.n, args.k)
    cm = _cost_model(args)
    traffic = _load_traffic(args, args.n)
    req = PlanRequest(params, traffic, cm, relabel=not args.no_relabel)
    if args.d is not None:
        # narrow the candidate set so a forced d does not build the others
        req = replace(req, d_candidates=(args.d,))
        res = best_strategy_for_d(req, args.d)
    else:
        res = select_d(req)
    summary = _summary_obj(res, cm)
    if args.out == "-" and not args.summary:
        _write_text("-", _dump(strategy_to_json(res.strategy)))
    else:
        if args.out != "-":
            _write_text(args.out, _dump(strategy_to_json(res.strategy)))
        _write_text("-", _dump(summary))
    return EXIT_OK


def _cmd_sweep(args) -> int:
    params = NetworkParams(args.n, args.k)
    cm = _cost_model(args)
    traffic = _load_traffic(args, args.n)
    req = PlanRequest(params, traffic, cm, relabel=not args.no_relabel)
    grid = None
    if args.grid is not None:
        lo, hi, pts = args.grid
        grid = np.geomspace(float(lo), float(hi), int(pts))
    sw: SweepResult = sweep_r(req, grid)
    _write_text(args.out, sw.to_csv())
    return EXIT_OK


def _cmd_lower_bound(args) -> int:
    n = args.n
    d_max = args.d_max if args.d_max is not None else n - 1
    if not 1 <= d_max <= n - 1:
        raise ValueError(f"--d-max must be in 1..{n - 1}")
    sums = shift_power_sums(n, d_max)
    lines = ["n,d,power_sum_units,hop_term_units,ratio"]
    for d in range(1, d_max + 1):
        hop = lower_bound_hop_term(n, d)
        lines.append(f"{n},{d},{sums[d - 1]},{hop},{sums[d - 1] / hop:.6f}")
    _write_text(args.out, "\n".join(lines) + "\n")
    return EXIT_OK


def _cmd_verify(args) -> int:
    S = strategy_from_json(_read_text(args.strategy))
    tm = traffic_from_json(_read_text(args.traffic))
    ok, dec = verify_decomposition(S, tm.chunks)
    con = check_contention_free(S)
    report = {
        "ok": bool(ok and con.ok),
        "terms": len(dec.terms),
        "roundsChecked": con.rounds_checked,
        "powerSumUnits": power_sum(S),
    }
    if dec.failure:
        report["failure"] = dec.failure
    if con.violations:
        report["contentionViolations"] = list(con.violations[:10])
    _write_text(args.out, _dump(report))
    if not report["ok"]:
        return _fail("verification", dec.failure or con.violations[0], EXIT_VALIDATION)
    return EXIT_OK


def _cmd_simulate(args) -> int:
    S = strategy_from_json(_read_text(args.strategy))
    tm = traffic_from_json(_read_text(args.traffic))
    cm = _cost_model(args)
    trace_fh = open(args.trace, "w") if args.trace else None
    try:
        rep = simulate(S, tm.chunks, SimConfig(cost_model=cm, trace=trace_fh))
    finally:
        if trace_fh:
            trace_fh.close()
    model = strategy_cost(S, cm)
    report = {
        "totalSeconds": rep.total_seconds,
        "totalUnits": rep.total_units,
        "perStageSeconds": list(rep.per_stage_seconds),
        "reconfigEvents": rep.reconfig_events,
        "demandMatched": rep.demand_matched,
        "violations": list(rep.violations[:10]),
        "modelTotalSeconds": model.total_seconds,
    }
    _write_text(args.out, _dump(report))
    if rep.violations or not rep.demand_matched:
        first = rep.violations[0] if rep.violations else "demand not fully served"
        return _fail("simulation", str(first), EXIT_VALIDATION)
    return EXIT_OK


def _cmd_baseline(args) -> int:
    params = NetworkParams(args.n, args.k)
    traffic = _load_traffic(args, args.n)
    if args.family == "direct":
        S = direct_circuits(params, traffic.chunks)
    elif args.family == "bvn":
        S = greedy_bvn_strategy(params, traffic.chunks)
    else:
        S = static_shortest_path(params, traffic.chunks, args.family)
    _write_text(args.out, _dump(strategy_to_json(S)))
    return EXIT_OK


def _cmd_reproduce(args) -> int:
    numbers = None
    if args.criteria:
        numbers = sorted({int(x) for x in args.criteria.split(",")})
        bad = [x for x in numbers if x not in acceptance.CRITERIA]
        if bad:
            raise ValueError(f"unknown criteria {bad}; valid: 1..{len(acceptance.CRITERIA)}")
    results = acceptance.run_all(numbers)
    print(acceptance.format_table(results))
    return EXIT_OK if all(r.passed for r in results) else EXIT_VALIDATION


def build_parser() -> argparse.ArgumentParser:
    top = argparse.ArgumentParser(
        prog="a2aplan",
        description="Plan, cost, verify, and simulate reconfigurable-network "
                    "schedules for all-to-all traffic.",
    )
    top.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = top.add_subparsers(dest="command", required=True)

    p = sub.add_parser("gen-traffic", help="generate a traffic matrix JSON")
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--kind", choices=KINDS, default="uniform")
    p.add_argument("--mean-chunks", type=int, default=1)
    p.add_argument("--seed", type=int, default=0, help="RNG seed (default 0)")
    p.add_argument("--zipf-factor", type=float, default=0.4)
    p.add_argument("-o", "--out", default="-")
    p.set_defaults(fn=_cmd_gen_traffic)

    p = sub.add_parser("plan", help="synthesize a strategy (choose d, build, cost)")
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--k", type=int, default=1)
    p.add_argument("--d", type=int, default=None,
                   help="force a reconfiguration count instead of selecting one")
    p.add_argument("--no-relabel", action="store_true",
                   help="skip size-aware node relabeling")
    p.add_argument("--summary", action="store_true",
                   help="print the cost summary instead of the strategy JSON")
    _add_traffic_flags(p)
    _add_cost_flags(p)
    p.add_argument("-o", "--out", default="-",
                   help="strategy JSON destination; with a file here the "
                        "summary still goes to stdout")
    p.set_defaults(fn=_cmd_plan)

    p = sub.add_parser("sweep", help="cost vs reconfiguration delay, CSV")
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--k", type=int, default=1)
    p.add_argument("--no-relabel", action="store_true")
    p.add_argument("--grid", nargs=3, metavar=("LO", "HI", "POINTS"), default=None,
                   help="geometric R grid in seconds (default 1e-7..1e-1, 25 points)")
    _add_traffic_flags(p)
    _add_cost_flags(p)
    p.add_argument("-o", "--out", default="-")
    p.set_defaults(fn=_cmd_sweep)

    p = sub.add_parser("lower-bound",
                       help="per-d hop-count lower bound vs generated power sums, CSV")
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--d-max", type=int, default=None)
    p.add_argument("-o", "--out", default="-")
    p.set_defaults(fn=_cmd_lower_bound)

    p = sub.add_parser("verify", help="check a strategy serves its demand cleanly")
    p.add_argument("--strategy", required=True, help="strategy JSON ('-' for stdin)")
    p.add_argument("--traffic", required=True, help="traffic JSON ('-' for stdin)")
    p.add_argument("-o", "--out", default="-")
    p.set_defaults(fn=_cmd_verify)

    p = sub.add_parser("simulate", help="store-and-forward simulation of a strategy")
    p.add_argument("--strategy", required=True)
    p.add_argument("--traffic", required=True)
    p.add_argument("--trace", default=None, help="write per-chunk hop events CSV here")
    _add_cost_flags(p)
    p.add_argument("-o", "--out", default="-")
    p.set_defaults(fn=_cmd_simulate)

    p = sub.add_parser("baseline", help="emit a baseline strategy JSON")
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--k", type=int, default=1)
    p.add_argument("--family", required=True,
                   choices=("cycle", "circulant", "genkautz", "direct", "bvn"))
    _add_traffic_flags(p)
    p.add_argument("-o", "--out", default="-")
    p.set_defaults(fn=_cmd_baseline)

    p = sub.add_parser("reproduce", help="run the pinned acceptance checks")
    p.add_argument("--criteria", default=None,
                   help="comma-separated subset, e.g. 1,2,9 (default: all)")
    p.set_defaults(fn=_cmd_reproduce)

    return top


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.fn(args)
    except (ValueError, KeyError, FileNotFoundError, json.JSONDecodeError) as exc:
        return _fail("validation", str(exc), EXIT_VALIDATION)
    except BrokenPipeError:
        return EXIT_OK
    except Exception as exc:  # noqa: BLE001 - last-resort boundary
        return _fail("internal", f"{type(exc).__name__}: {exc}", EXIT_INTERNAL)


if __name__ == "__main__":
    sys.exit(main())
