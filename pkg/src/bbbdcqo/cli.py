"""Command-line entry point: generate, solve, bench, quadratize, verify-reduction.

Exit codes: 0 success, 2 bad input, 3 a solver cap or budget was exceeded.

Seeds: ``--seed S`` drives everything. ``solve`` hands S to the solver
(annealing reads use streams (S, r); BF-DCQO iteration k uses (S, k); tree
children use (S, depth, branch)). A warm-start anneal uses
``derive_seed(S, 1000)``. ``bench`` runs instance i with ``derive_seed(S, i)``
for every solver, so a solver compared with itself ties everywhere.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import os
import sys
import tempfile
import time
from dataclasses import replace
from pathlib import Path

import numpy as np

from . import bfdcqo
from .bbb import BbbConfig, approximate_bbb, brute_force_relaxation, exact_bbb, trivial_relaxation
from .bfdcqo import BfdcqoConfig
from .cd import Schedule
from .classical import GreedyConfig, SaConfig, brute_force, greedy_local_search, simulated_annealing
from .hubo import CapExceededError, HuboProblem, InstanceSpec, ProblemError, energy, generate, parse, serialize
from .ledger import FunctionEvalCounter, derive_rng, derive_seed
from .quadratize import default_penalty, hubo_to_qubo, verify_reduction

SOLVERS = ("sa", "greedy", "bfdcqo", "bbb", "exact-bbb", "brute")
BUDGET_TOLERANCE = 0.05
WARM_START_STREAM = 1000


class UsageError(ValueError):
    pass


def write_atomic(path: str | None, text: str) -> None:
    if path is None or path == "-":
        sys.stdout.write(text)
        return
    target = Path(path)
    target.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=target.parent, prefix=f".{target.name}.")
    with os.fdopen(fd, "w", encoding="utf-8") as fh:
        fh.write(text)
    os.replace(tmp, target)


def load_instance(path: str) -> HuboProblem:
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise UsageError(f"cannot read {path}: {exc}") from exc
    return parse(text)


# -- solver dispatch ----------------------------------------------------------


def bf_config_from(args, seed: int) -> BfdcqoConfig:
    post = None
    if args.post_process:
        post = GreedyConfig(sweeps=args.pp_sweeps, top_k=args.pp_top_k)
    return BfdcqoConfig(
        iterations=args.iterations,
        n_shots=args.shots,
        cvar_fraction=args.cvar,
        schedule=Schedule(args.T),
        quadrature_panels=args.panels,
        hx_value=args.hx,
        rng_seed=seed,
        post_process=post,
        max_qubits=args.max_qubits,
    )


def sa_config_from(args, seed: int, sweeps: int | None = None) -> SaConfig:
    return SaConfig(
        sweeps=sweeps or args.sa_sweeps,
        reads=args.sa_reads,
        t_initial=args.t_initial,
        t_final=args.t_final,
        rng_seed=seed,
    )


def solver_config_echo(args, solver: str, seed: int, sa_sweeps: int | None = None) -> dict:
    if solver == "sa":
        cfg = sa_config_from(args, seed, sa_sweeps)
        return {"sweeps": cfg.sweeps, "reads": cfg.reads, "t_initial": cfg.t_initial,
                "t_final": cfg.t_final}
    if solver == "greedy":
        return {"sweeps": args.greedy_sweeps, "reads": args.greedy_reads}
    if solver == "brute":
        return {}
    echo = {
        "iterations": args.iterations, "shots": args.shots, "cvar_fraction": args.cvar,
        "T": args.T, "quadrature_panels": args.panels, "hx": args.hx,
        "post_process": ({"sweeps": args.pp_sweeps, "top_k": args.pp_top_k}
                         if args.post_process else None),
    }
    if solver == "bbb":
        echo.update(K=args.K, W=args.W, rescale_cap=args.rescale_cap,
                    warm_start_sa=args.warm_start_sa, warm_start_scale=args.warm_scale)
    if solver == "exact-bbb":
        echo.update(oracle=args.oracle)
    return echo


def run_solver(problem: HuboProblem, solver: str, args, seed: int, sa_sweeps=None) -> dict:
    """Run one solver and return the (timing-free) result record."""
    extra: dict = {}
    if solver == "sa":
        res = simulated_annealing(problem, sa_config_from(args, seed, sa_sweeps))
        z, e = res.samples.best
        evals = res.evals
        extra["t_initial"], extra["t_final"] = res.t_initial, res.t_final
        extra["per_read"] = res.per_read_rows()
    elif solver == "greedy":
        cfg = GreedyConfig(sweeps=args.greedy_sweeps, rng_seed=seed)
        best_z, best_e, used = None, np.inf, 0
        for r in range(args.greedy_reads):
            rng = derive_rng(seed, r)
            start = rng.choice(np.array([-1, 1], dtype=np.int8), size=problem.n)
            zr, u = greedy_local_search(problem, start, cfg, rng=rng)
            used += u
            er = energy(problem, zr)
            if er < best_e:
                best_z, best_e = zr, er
        z, e = best_z, best_e
        evals = FunctionEvalCounter(greedy_flips=used)
    elif solver == "bfdcqo":
        res = bfdcqo.run(problem, np.zeros(problem.n), bf_config_from(args, seed))
        z, e, evals = res.best_spins, res.best_energy, res.evals
        extra["history"] = res.history
    elif solver == "bbb":
        warm, warm_evals = None, FunctionEvalCounter()
        if args.warm_start_sa:
            sweeps, reads = args.warm_start_sa
            ws = simulated_annealing(
                problem,
                SaConfig(sweeps=sweeps, reads=reads, rng_seed=derive_seed(seed, WARM_START_STREAM)),
            )
            warm, _ = ws.samples.best
            warm_evals = ws.evals
        cfg = BbbConfig(
            K=args.K, W=args.W, rescale_cap=args.rescale_cap,
            bf_config=bf_config_from(args, seed), warm_start=warm,
            warm_start_scale=args.warm_scale, warm_start_evals=warm_evals,
            max_runs=args.max_runs,
        )
        res = approximate_bbb(problem, cfg)
        z, e, evals = res.best_spins, res.best_energy, res.evals
        extra["bfdcqo_runs"] = res.runs
        extra["tree"] = res.tree.dump()
    elif solver == "exact-bbb":
        oracle = brute_force_relaxation if args.oracle == "brute" else trivial_relaxation
        res = exact_bbb(problem, oracle, bf_config_from(args, seed))
        z, e, evals = res.best_spins, res.best_energy, res.evals
        extra["node_count"] = res.node_count
    elif solver == "brute":
        res = brute_force(problem)
        z, e, evals = res.spins, res.energy, FunctionEvalCounter()
    else:
        raise UsageError(f"unknown solver {solver!r}")
    return {
        "solver": solver,
        "seed": seed,
        "config": solver_config_echo(args, solver, seed, sa_sweeps),
        "n": problem.n,
        "best_energy": float(e),
        "best_assignment": [int(v) for v in z],
        "evals": evals.as_dict(),
        **extra,
    }


def _dump_json(obj) -> str:
    return json.dumps(obj, indent=2, sort_keys=True) + "\n"


# -- commands -----------------------------------------------------------------


def cmd_generate(args) -> int:
    spec = InstanceSpec(
        n=args.n, topology=args.topology, n2=args.n2, n3=args.n3,
        low=args.low, high=args.high, seed=args.seed,
    )
    problem = generate(spec)
    write_atomic(args.out, serialize(problem, seed=args.seed, metadata=spec.metadata()))
    return 0


def _record_csv(record: dict) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    if record["solver"] == "bfdcqo":
        w.writerow(["iteration", "best_energy", "mean_energy", "cvar_energy", "evals"])
        for row in record["history"]:
            w.writerow([row["iteration"], repr(row["best_energy"]), repr(row["mean_energy"]),
                        repr(row["cvar_energy"]), row["evals"]])
        return buf.getvalue()
    if record["solver"] == "bbb":
        return record["tree"]
    if record["solver"] == "sa" and "per_read" in record:
        w.writerow(["read", "final_energy", "flips"])
        for row in record["per_read"]:
            w.writerow([row[0], repr(row[1]), row[2]])
        return buf.getvalue()
    w.writerow(["solver", "seed", "best_energy", "evals_total"])
    w.writerow([record["solver"], record["seed"], repr(record["best_energy"]),
                record["evals"]["total"]])
    return buf.getvalue()


def cmd_solve(args) -> int:
    problem = load_instance(args.instance)
    start = time.perf_counter()
    record = run_solver(problem, args.solver, args, args.seed)
    record["instance"] = args.instance
    if args.timing:
        record["wall_time_s"] = time.perf_counter() - start
    write_atomic(args.out, _dump_json(record) if args.format == "json" else _record_csv(record))
    return 0


def _bench_instances(args) -> list[tuple[str, HuboProblem]]:
    out = [(p, load_instance(p)) for p in args.instances]
    if args.generate_count:
        for k in range(args.generate_count):
            spec = InstanceSpec(
                n=args.generate_n, topology=args.topology, n2=args.n2, n3=args.n3,
                seed=args.instance_seed + k,
            )
            out.append((f"generated:{args.topology}:n={args.generate_n}:seed={spec.seed}",
                        generate(spec)))
    if not out:
        raise UsageError("bench needs at least one instance")
    return out


def approximation_ratio(e_min: float, e_ref: float):
    """e_min / e_ref when both are negative, else None (report the gap instead)."""
    if e_ref < 0 and e_min < 0:
        return e_min / e_ref
    return None


def cmd_bench(args) -> int:
    instances = _bench_instances(args)
    solvers = args.solvers
    for s in solvers:
        if s not in SOLVERS:
            raise UsageError(f"unknown solver {s!r}")
    rows = []
    results: dict[tuple[int, str], dict] = {}
    for k, (name, problem) in enumerate(instances):
        seed = derive_seed(args.seed, k)
        e_ref = None
        if args.reference == "brute":
            e_ref = brute_force(problem).energy
        first_total = None
        for pos, solver in enumerate(solvers):
            sa_sweeps = None
            if args.budget_match and solver == "sa" and pos > 0 and first_total:
                sa_sweeps = max(1, round(first_total / (problem.n * args.sa_reads)))
            rec = run_solver(problem, solver, args, seed, sa_sweeps)
            if pos == 0:
                first_total = rec["evals"]["total"]
            results[(k, solver)] = rec
            ratio = approximation_ratio(rec["best_energy"], e_ref) if e_ref is not None else None
            rows.append({
                "instance": name, "solver": solver, "seed": seed,
                "best_energy": rec["best_energy"],
                "reference_energy": e_ref,
                "approx_ratio": ratio,
                "gap": None if e_ref is None else rec["best_energy"] - e_ref,
                **{f"evals_{key}": v for key, v in rec["evals"].items()},
            })
    summary = {"instances": len(instances), "solvers": solvers}
    if len(solvers) >= 2:
        a, b = solvers[0], solvers[1]
        wins = ties = losses = 0
        deltas = []
        uneven = []
        for k, (name, problem) in enumerate(instances):
            ra, rb = results[(k, a)], results[(k, b)]
            tol = 1e-9 * (1.0 + problem.abs_coefficient_sum())
            d = rb["best_energy"] - ra["best_energy"]
            deltas.append(d)
            if d > tol:
                wins += 1
            elif d < -tol:
                losses += 1
            else:
                ties += 1
            ta, tb = ra["evals"]["total"], rb["evals"]["total"]
            if max(ta, tb) > 0 and abs(ta - tb) > BUDGET_TOLERANCE * max(ta, tb):
                uneven.append(name)
        summary.update({
            "first": a, "second": b,
            "delta_definition": f"E_{b} - E_{a}",
            "deltas": deltas,
            "first_wins": wins, "ties": ties, "second_wins": losses,
            "uneven_budgets": uneven,
        })
        if uneven and not args.allow_uneven:
            print(f"error: evaluation budgets differ by more than "
                  f"{BUDGET_TOLERANCE:.0%} on {len(uneven)} instance(s); "
                  f"use --budget-match or --allow-uneven", file=sys.stderr)
            return 2
    fields = ["instance", "solver", "seed", "best_energy", "reference_energy", "approx_ratio",
              "gap", "evals_quantum_shots", "evals_sa_flips", "evals_greedy_flips", "evals_total"]
    buf = io.StringIO()
    w = csv.DictWriter(buf, fieldnames=fields, lineterminator="\n")
    w.writeheader()
    for row in rows:
        w.writerow({f: ("" if row[f] is None else
                        repr(row[f]) if isinstance(row[f], float) else row[f]) for f in fields})
    if args.format == "json":
        write_atomic(args.out, _dump_json({"rows": rows, "summary": summary}))
    else:
        write_atomic(args.out, buf.getvalue())
    if args.summary:
        write_atomic(args.summary, _dump_json(summary))
    return 0


def cmd_quadratize(args) -> int:
    problem = load_instance(args.instance)
    penalty = args.penalty if args.penalty else default_penalty(problem)
    qubo, rmap = hubo_to_qubo(problem, penalty)
    write_atomic(args.out, qubo.dumps(rmap))
    return 0


def cmd_verify_reduction(args) -> int:
    problem = load_instance(args.instance)
    penalty = args.penalty if args.penalty else default_penalty(problem)
    qubo, rmap = hubo_to_qubo(problem, penalty)
    rep = verify_reduction(problem, qubo, rmap, find_minimal_penalty=not args.no_bisect)
    out = {
        "penalty": penalty,
        "variables": qubo.m,
        "auxiliaries": len(rmap.aux),
        "hubo_minimum": float(rep.hubo_minimum),
        "qubo_minimum": float(rep.qubo_minimum),
        "minima_equal": rep.minima_equal,
        "constraints_satisfied": rep.constraints_satisfied,
        "projection_optimal": rep.projection_optimal,
        "passed": rep.passed,
        "minimal_penalty": rep.minimal_penalty,
    }
    write_atomic(args.out, _dump_json(out))
    return 0


# -- argument parsing ---------------------------------------------------------


def _solver_flags(p: argparse.ArgumentParser) -> None:
    g = p.add_argument_group("annealing")
    g.add_argument("--sa-sweeps", "--sweeps", type=int, default=1000)
    g.add_argument("--sa-reads", "--reads", type=int, default=100)
    g.add_argument("--t-initial", type=float, default=None)
    g.add_argument("--t-final", type=float, default=None)
    g = p.add_argument_group("greedy")
    g.add_argument("--greedy-sweeps", type=int, default=15)
    g.add_argument("--greedy-reads", type=int, default=100)
    g = p.add_argument_group("bf-dcqo")
    g.add_argument("--iterations", type=int, default=3)
    g.add_argument("--shots", type=int, default=1000)
    g.add_argument("--cvar", type=float, default=0.1)
    g.add_argument("--T", type=float, default=1.0)
    g.add_argument("--panels", type=int, default=64, help="Simpson panels (2*panels+1 nodes)")
    g.add_argument("--hx", type=float, default=-1.0)
    g.add_argument("--max-qubits", type=int, default=24)
    g.add_argument("--post-process", action="store_true")
    g.add_argument("--pp-sweeps", type=int, default=15)
    g.add_argument("--pp-top-k", type=int, default=150)
    g = p.add_argument_group("branch-and-bound")
    g.add_argument("--K", type=int, default=3)
    g.add_argument("--W", type=float, default=1.0)
    g.add_argument("--rescale-cap", type=float, default=3.0)
    g.add_argument("--warm-start-sa", type=int, nargs=2, metavar=("SWEEPS", "READS"))
    g.add_argument("--warm-scale", type=float, default=1.0)
    g.add_argument("--max-runs", type=int, default=None)
    g.add_argument("--oracle", choices=("brute", "trivial"), default="brute")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="bbbdcqo", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("generate", help="write a random instance")
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--topology", choices=("sparse-chain", "dense"), default="sparse-chain")
    p.add_argument("--n2", type=int)
    p.add_argument("--n3", type=int)
    p.add_argument("--low", type=float, default=-1.0)
    p.add_argument("--high", type=float, default=1.0)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out")
    p.set_defaults(func=cmd_generate)

    p = sub.add_parser("solve", help="run one solver on one instance")
    p.add_argument("solver", choices=SOLVERS)
    p.add_argument("instance")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out")
    p.add_argument("--format", choices=("json", "csv"), default="json")
    p.add_argument("--timing", action="store_true", help="add wall time (breaks byte-identity)")
    _solver_flags(p)
    p.set_defaults(func=cmd_solve)

    p = sub.add_parser("bench", help="compare solvers over an instance set")
    p.add_argument("instances", nargs="*")
    p.add_argument("--solvers", nargs="+", default=["bbb", "sa"])
    p.add_argument("--generate-count", type=int, default=0)
    p.add_argument("--generate-n", type=int, default=12)
    p.add_argument("--topology", choices=("sparse-chain", "dense"), default="sparse-chain")
    p.add_argument("--n2", type=int)
    p.add_argument("--n3", type=int)
    p.add_argument("--instance-seed", type=int, default=0)
    p.add_argument("--reference", choices=("brute", "none"), default="brute")
    p.add_argument("--budget-match", action="store_true",
                   help="size annealing sweeps to the first solver's evaluation count")
    p.add_argument("--allow-uneven", action="store_true")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out")
    p.add_argument("--summary")
    p.add_argument("--format", choices=("json", "csv"), default="csv")
    _solver_flags(p)
    p.set_defaults(func=cmd_bench)

    p = sub.add_parser("quadratize", help="reduce to a QUBO with product auxiliaries")
    p.add_argument("instance")
    p.add_argument("--penalty", type=float, help="default: 10 x max binary coefficient")
    p.add_argument("--out")
    p.set_defaults(func=cmd_quadratize)

    p = sub.add_parser("verify-reduction", help="exhaustively check a reduction")
    p.add_argument("instance")
    p.add_argument("--penalty", type=float)
    p.add_argument("--no-bisect", action="store_true")
    p.add_argument("--out")
    p.set_defaults(func=cmd_verify_reduction)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except CapExceededError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 3
    except (ProblemError, UsageError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
