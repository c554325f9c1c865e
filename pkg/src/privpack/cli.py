"""Command-line entry points.

Subcommands: ``solve`` (one solver, one instance file), ``sweep`` (a config
grid to CSV), ``audit`` (privacy and concentration diagnostics), ``reduce``
(counting-query release end to end), ``oracle`` (exhaustive OPT).

Data goes to stdout or files; problems go to stderr as one machine-parsable
line ``error: {"type": ..., "message": ...}``. Exit codes: 0 success, 1
validation error, 2 parameter-guard or runtime error. Seeds accept decimal
or 0x-prefixed hex, 64-bit. Reports omit wall-clock timing unless
``--timing`` is given, so identical seeds produce byte-identical output.
"""

from __future__ import annotations

import argparse
import json
import math
import sys

from .dmw import run_dmw, run_dmw_exact_feasible
from .domw import run_domw
from .errors import InstanceFormatError, ParameterGuardError, PrivpackError, SolverRuntimeError
from .experiment import ExperimentConfig, run_experiment
from .hardness import (
    build_reduction_instance,
    evaluate_release_accuracy,
    load_workload,
    opt_lower_bound,
    release_queries,
)
from .model import evaluate_allocation, load_instance
from .privacy import (
    PrivacySpec,
    audit_laplace,
    adaptive_sum_concentration,
    truncation_overflow_concentration,
)
from .reference import brute_force_opt

SOLVE_CHOICES = ("dmw", "dmw-exact", "domw", "domw-online", "noiseless", "brute")


def parse_seed(text: str) -> int:
    value = int(text, 16) if text.lower().startswith("0x") else int(text, 10)
    if not 0 <= value < 2**64:
        raise argparse.ArgumentTypeError("seed must fit in 64 unsigned bits")
    return value


def _emit(doc) -> None:
    print(json.dumps(doc, indent=1))


def _allocation_doc(alloc) -> list:
    return [xi.tolist() for xi in alloc.x]


def cmd_solve(args) -> int:
    instance = load_instance(args.instance)
    spec = None
    if args.solver in ("dmw", "dmw-exact", "domw", "domw-online"):
        if args.eps is None or args.delta is None:
            raise InstanceFormatError(f"solver {args.solver!r} requires --eps and --delta")
        spec = PrivacySpec(epsilon=args.eps, delta=args.delta)
    if args.solver in ("dmw", "dmw-exact", "noiseless", "domw", "domw-online") and args.alpha is None:
        raise InstanceFormatError(f"solver {args.solver!r} requires --alpha")

    trace = None
    if args.solver in ("dmw", "dmw-exact", "noiseless"):
        runner = run_dmw_exact_feasible if args.solver == "dmw-exact" else run_dmw
        result = runner(
            instance,
            spec,
            args.alpha,
            args.seed,
            t_override=args.t_override,
            trace=args.trace is not None,
            force=args.force,
            backend=args.backend,
        )
        report, alloc, trace = result.report, result.allocation, result.trace
    elif args.solver in ("domw", "domw-online"):
        result = run_domw(
            instance,
            spec,
            args.alpha,
            args.seed,
            mode=args.mode,
            dummy_reset=args.dummy_reset,
            force=args.force,
            backend="python" if args.solver == "domw-online" else args.backend,
        )
        report, alloc = result.report, result.allocation
        if args.solver == "domw-online":
            report.solver = "domw-online"
            report.params["engine"] = "online-equivalent"
    else:  # brute
        oracle = brute_force_opt(instance)
        metrics = evaluate_allocation(instance, oracle.allocation)
        from .report import SolverReport

        alloc = oracle.allocation
        report = SolverReport(
            solver="brute",
            objective=oracle.opt_value,
            max_violation=metrics.max_violation,
            feasible=metrics.feasible,
            best_response_evals=oracle.enumerations,
            seed=args.seed,
            params={"n": instance.n, "m": instance.m, "supply_used": instance.supply_b},
        )

    if args.trace is not None and trace is not None:
        trace.to_csv(args.trace, include_gradients=args.trace_gradients)
    if args.save_allocation:
        with open(args.save_allocation, "w", encoding="utf-8") as fh:
            json.dump(_allocation_doc(alloc), fh)
            fh.write("\n")
    print(report.to_json(include_timing=args.timing))
    return 0


def cmd_oracle(args) -> int:
    instance = load_instance(args.instance)
    oracle = brute_force_opt(instance)
    _emit(
        {
            "opt_value": oracle.opt_value,
            "method": oracle.method,
            "enumerations": oracle.enumerations,
        }
    )
    return 0


def cmd_audit(args) -> int:
    doc = {}
    if args.what in ("mechanism", "all"):
        res = audit_laplace(
            math.inf if args.scale_zero else args.eps_step, args.trials, args.seed
        )
        doc["mechanism"] = {
            "eps_step": "inf" if args.scale_zero else args.eps_step,
            "epsilon_hat": "inf" if math.isinf(res.epsilon_hat) else res.epsilon_hat,
            "raw_epsilon_hat": "inf" if math.isinf(res.raw_epsilon_hat) else res.raw_epsilon_hat,
            "non_private": res.non_private,
            "bins_used": res.bins_used,
            "trials": res.trials,
        }
    if args.what in ("adaptive-sum", "all"):
        res = adaptive_sum_concentration(
            args.p_max, args.eps_step, args.rounds, args.m, args.beta, args.trials, args.seed
        )
        doc["adaptive_sum"] = {
            "violation_rate": res.violation_rate,
            "threshold": res.threshold,
            "trials": res.trials,
        }
    if args.what in ("overflow", "all"):
        res = truncation_overflow_concentration(
            args.p_max, args.eps_step, args.rounds, args.m, args.beta, args.trials, args.seed
        )
        doc["overflow"] = {
            "violation_rate": res.violation_rate,
            "threshold": res.threshold,
            "trials": res.trials,
        }
    _emit(doc)
    return 0


def cmd_reduce(args) -> int:
    workload = load_workload(args.workload)
    reduction = build_reduction_instance(workload, args.b)
    instance = reduction.packing
    if args.solver == "brute":
        alloc = brute_force_opt(instance).allocation
        objective = evaluate_allocation(instance, alloc).objective
    elif args.solver == "noiseless":
        result = run_dmw(instance, None, args.alpha, args.seed, t_override=args.t_override)
        alloc, objective = result.allocation, result.report.objective
    elif args.solver in ("dmw", "dmw-exact"):
        if args.eps is None or args.delta is None:
            raise InstanceFormatError("noisy solvers require --eps and --delta")
        spec = PrivacySpec(epsilon=args.eps, delta=args.delta)
        runner = run_dmw_exact_feasible if args.solver == "dmw-exact" else run_dmw
        result = runner(instance, spec, args.alpha, args.seed, t_override=args.t_override)
        alloc, objective = result.allocation, result.report.objective
    else:
        raise InstanceFormatError(f"unsupported reduce solver {args.solver!r}")

    released = release_queries(reduction, alloc, reduction.supply_b)
    _emit(
        {
            "released": released.tolist(),
            "true_counts": workload.true_counts().tolist(),
            "average_error": evaluate_release_accuracy(workload, released),
            "objective": objective,
            "opt_lower_bound": opt_lower_bound(workload, args.b),
            "n_agents": instance.n,
        }
    )
    return 0


def cmd_sweep(args) -> int:
    config = ExperimentConfig.from_json(args.config)
    if args.workers is not None:
        import dataclasses

        config = dataclasses.replace(config, workers=args.workers)
    rows = run_experiment(config, output=args.output)
    bad = sum(1 for r in rows if r["status"] != "ok")
    print(
        json.dumps(
            {
                "rows": len(rows),
                "failures": bad,
                "output": args.output if args.output is not None else config.output,
            }
        )
    )
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="privpack",
        description="Jointly differentially private packing solvers and diagnostics.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    solve = sub.add_parser("solve", help="run one solver on one instance file")
    solve.add_argument("--instance", required=True)
    solve.add_argument("--solver", required=True, choices=SOLVE_CHOICES)
    solve.add_argument("--eps", type=float)
    solve.add_argument("--delta", type=float)
    solve.add_argument("--alpha", type=float)
    solve.add_argument("--seed", type=parse_seed, default=0)
    solve.add_argument("--t-override", type=int, dest="t_override")
    solve.add_argument("--mode", choices=("pure", "approx"))
    solve.add_argument("--dummy-reset", action="store_true", dest="dummy_reset")
    solve.add_argument("--force", action="store_true")
    solve.add_argument("--backend", choices=("python", "compiled"))
    solve.add_argument("--trace", help="write a per-round CSV trace here")
    solve.add_argument("--trace-gradients", action="store_true", dest="trace_gradients")
    solve.add_argument("--save-allocation", dest="save_allocation")
    solve.add_argument("--timing", action="store_true", help="include wall time in the report")
    solve.set_defaults(func=cmd_solve)

    oracle = sub.add_parser("oracle", help="exhaustive integral OPT of an instance")
    oracle.add_argument("--instance", required=True)
    oracle.set_defaults(func=cmd_oracle)

    audit = sub.add_parser("audit", help="privacy audit and concentration checks")
    audit.add_argument("--what",
                       choices=("mechanism", "adaptive-sum", "overflow", "all"),
                       default="all")
    audit.add_argument("--eps-step", type=float, default=1.0, dest="eps_step")
    audit.add_argument("--trials", type=int, default=10**5)
    audit.add_argument("--seed", type=parse_seed, default=0)
    audit.add_argument("--p-max", type=float, default=4.0, dest="p_max")
    audit.add_argument("--rounds", type=int, default=1000)
    audit.add_argument("--m", type=int, default=4)
    audit.add_argument("--beta", type=float, default=0.05)
    audit.add_argument("--scale-zero", action="store_true", dest="scale_zero",
                       help="audit the deterministic zero-noise control")
    audit.set_defaults(func=cmd_audit)

    reduce_p = sub.add_parser("reduce", help="counting-query release via packing")
    reduce_p.add_argument("--workload", required=True)
    reduce_p.add_argument("--b", type=int, required=True)
    reduce_p.add_argument("--solver", default="noiseless",
                          choices=("noiseless", "dmw", "dmw-exact", "brute"))
    reduce_p.add_argument("--alpha", type=float, default=0.02)
    reduce_p.add_argument("--eps", type=float)
    reduce_p.add_argument("--delta", type=float)
    reduce_p.add_argument("--seed", type=parse_seed, default=0)
    reduce_p.add_argument("--t-override", type=int, default=20000, dest="t_override")
    reduce_p.set_defaults(func=cmd_reduce)

    sweep = sub.add_parser("sweep", help="run an experiment grid to CSV")
    sweep.add_argument("--config", required=True)
    sweep.add_argument("--output", help="override the config's output path")
    sweep.add_argument("--workers", type=int)
    sweep.set_defaults(func=cmd_sweep)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (InstanceFormatError, ValueError) as exc:
        _fail("validation", exc)
        return 1
    except (ParameterGuardError, SolverRuntimeError, PrivpackError) as exc:
        _fail(type(exc).__name__, exc)
        return 2
    except OSError as exc:
        _fail("io", exc)
        return 1


def _fail(kind: str, exc: Exception) -> None:
    print(f"error: {json.dumps({'type': kind, 'message': str(exc)})}", file=sys.stderr)


if __name__ == "__main__":
    sys.exit(main())
