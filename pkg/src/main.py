#!/usr/bin/env python3
# -*- coding: utf-8 -*-

"""
compobo - Main Entry

Command-line front end: single runs, sweeps, summaries and the task and
optimiser registries.
"""

import argparse
import json
import logging
import os
import sys

# Add project root directory to Python path
current_dir = os.path.dirname(os.path.abspath(__file__))
project_root = os.path.dirname(current_dir)
if project_root not in sys.path:
    sys.path.append(project_root)

import config
from src.bo.tasks import make_task
from src.runner.report import all_ok, emit, load_records, summarise
from src.runner.sweep import ExperimentConfig, ExperimentTuple, run_sweep
from src.utils.constants import OPTIMISERS, TASK_NAMES
from src.utils.errors import BenchError
from src.utils.helpers import setup_logging

logger = logging.getLogger(__name__)

# run flag -> protocol field
_RUN_PROTOCOL_FLAGS = {
    "q": "q", "steps": "n_steps", "t_opt": "t_opt", "minibatch": "minibatch", "pool_size": "pool_size",
    "n_raw": "n_raw", "n_restarts": "n_restarts", "n_init": "n_init", "k1": "k1", "k2": "k2",
    "restart_strategy": "restart_strategy",
}


def build_parser():
    """Create the argument parser with all subcommands"""
    parser = argparse.ArgumentParser(prog="compobo", description="Compositional acquisition benchmark")
    parser.add_argument("--debug", action="store_true", help="enable debug logging")
    sub = parser.add_subparsers(dest="command", required=True)

    run = sub.add_parser("run", help="run one configuration for one seed")
    run.add_argument("--config", help="JSON file whose defaults and first tuple are the base settings")
    run.add_argument("--task", help=f"task id ({', '.join(TASK_NAMES)})")
    run.add_argument("--dim", type=int, help="task dimension")
    run.add_argument("--acq", help="acquisition kind: ei, pi, sr or ucb")
    run.add_argument("--form", help="acquisition form: erm, fsm, comp or comp_me")
    run.add_argument("--opt", help="optimiser id (see list-optimisers)")
    run.add_argument("--params", help="optimiser hyperparameters as a JSON object")
    run.add_argument("--q", type=int, help="batch size")
    run.add_argument("--steps", type=int, help="acquisition steps N")
    run.add_argument("--t-opt", type=int, help="inner optimiser steps T")
    run.add_argument("--minibatch", type=int, help="draws per gradient m")
    run.add_argument("--pool-size", type=int, help="sample pool size M")
    run.add_argument("--n-raw", type=int, help="raw restart batches")
    run.add_argument("--n-restarts", type=int, help="selected restart batches")
    run.add_argument("--n-init", type=int, help="initial design size")
    run.add_argument("--k1", type=int, help="compositional gradient minibatch")
    run.add_argument("--k2", type=int, help="compositional inner minibatch")
    run.add_argument("--restart-strategy", choices=("boltzmann", "topk"), help="restart selection")
    run.add_argument("--seed", type=int, default=0, help="seed")
    run.add_argument("--out", default=config.OUTPUT_DIR, help="output directory")
    run.add_argument("--no-timing", action="store_true", help="leave timing columns empty")

    sweep = sub.add_parser("sweep", help="run every tuple of a JSON sweep for every seed")
    sweep.add_argument("--config", required=True, help="sweep JSON file")
    sweep.add_argument("--jobs", type=int, help="worker processes (default BO_BENCH_JOBS)")
    sweep.add_argument("--seeds", type=int, nargs="+", help="override the seeds of the file")
    sweep.add_argument("--out", help="output directory (overrides the file)")
    sweep.add_argument("--no-timing", action="store_true", help="leave timing columns empty")

    summary = sub.add_parser("summarise", help="summarise an emitted CSV")
    summary.add_argument("--csv", required=True, help="CSV written by run or sweep")
    summary.add_argument("--out", help="also write the summary JSON to this file")

    sub.add_parser("list-optimisers", help="show the optimiser registry")
    sub.add_parser("list-tasks", help="show the benchmark tasks")
    return parser


def _run_tuple(args):
    base = {}
    if args.config:
        with open(args.config, "r", encoding="utf-8") as handle:
            data = json.load(handle)
        tuples = data.get("tuples", [])
        base = {**data.get("defaults", {}), **(tuples[0] if tuples else {})}
    flags = {"task": args.task, "dim": args.dim, "acq": args.acq, "form": args.form, "optimizer": args.opt}
    base.update({key: value for key, value in flags.items() if value is not None})
    if args.params:
        base["params"] = json.loads(args.params)
    protocol = {key: base.pop(key) for key in list(base) if key in _RUN_PROTOCOL_FLAGS.values()}
    for flag, key in _RUN_PROTOCOL_FLAGS.items():
        value = getattr(args, flag)
        if value is not None:
            protocol[key] = value
    missing = [key for key in ("task", "dim", "acq", "form", "optimizer") if key not in base]
    if missing:
        raise BenchError(f"run needs --{', --'.join('opt' if m == 'optimizer' else m for m in missing)}")
    return ExperimentTuple(protocol=protocol, **base)


def cmd_run(args):
    experiment = ExperimentConfig((_run_tuple(args),), (args.seed,), args.out, 1)
    records = run_sweep(experiment, jobs=1, debug=args.debug)
    emit(records, args.out, include_timing=not args.no_timing)
    for record in records:
        final = record.final_regret
        print(f"{record.tuple_id} seed={record.seed} status={record.status}"
              + (f" final_regret={final:.6g}" if final is not None else ""))
    return 0 if all_ok(records) else 1


def cmd_sweep(args):
    experiment = ExperimentConfig.load(args.config)
    out = args.out or experiment.output
    if args.seeds:
        experiment = ExperimentConfig(experiment.tuples, tuple(args.seeds), out, experiment.jobs)
    jobs = args.jobs or experiment.jobs
    records = run_sweep(experiment, jobs=jobs, debug=args.debug)
    emit(records, out, include_timing=not args.no_timing)
    failed = [r for r in records if not r.ok]
    print(f"{len(records)} runs, {len(failed)} failed, results in {out}")
    return 0 if all_ok(records) else 1


def cmd_summarise(args):
    summary = summarise(load_records(args.csv))
    text = json.dumps(summary, indent=2)
    if args.out:
        with open(args.out, "w", encoding="utf-8", newline="") as handle:
            handle.write(text + "\n")
    print(text)
    return 0


def cmd_list_optimisers(args):
    for algo, (name, family, forms) in OPTIMISERS.items():
        print(f"{algo:<10} {name:<28} {family:<7} {','.join(forms)}")
    return 0


def cmd_list_tasks(args):
    for name in TASK_NAMES:
        task = make_task(name, 4)
        print(f"{name:<16} [{task.lower[0]:g}, {task.upper[0]:g}]^d  "
              f"optimum (d=4) {task.optimum_value:.6g}")
    return 0


COMMANDS = {
    "run": cmd_run,
    "sweep": cmd_sweep,
    "summarise": cmd_summarise,
    "list-optimisers": cmd_list_optimisers,
    "list-tasks": cmd_list_tasks,
}


def main(argv=None):
    """
    Command-line main function

    Args:
        argv (list, optional): Arguments, defaults to sys.argv[1:]

    Returns:
        int: Exit code, 0 iff every run finished with status ok
    """
    args = build_parser().parse_args(argv)
    setup_logging(args.debug or None)
    try:
        return COMMANDS[args.command](args)
    except (BenchError, OSError, json.JSONDecodeError) as exc:
        logger.error("%s: %s", type(exc).__name__, exc)
        return 2


if __name__ == "__main__":
    sys.exit(main())
