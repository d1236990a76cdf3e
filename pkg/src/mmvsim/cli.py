"""Command line: ``mmvsim {run,sweep,trace,validate}``.

Exit codes: 0 success, 2 invalid config or arguments, 3 a run aborted.
"""

from __future__ import annotations

import argparse
import logging
import sys
from pathlib import Path

from mmvsim.config import POLICIES, ConfigError, SimulationConfig, check, format_number, load_config
from mmvsim.engine import BACKENDS, RunAbort, run
from mmvsim.harness import run_experiment, trace_window, write_trace
from mmvsim.metrics import OBJECTIVES, subversion_trace

EXIT_OK, EXIT_INVALID, EXIT_ABORT = 0, 2, 3


def _config(args) -> SimulationConfig:
    cfg = load_config(args.config) if args.config else SimulationConfig()
    changes = {}
    if getattr(args, "seed", None) is not None:
        changes["seed"] = args.seed
    if getattr(args, "replications", None) is not None:
        changes["replications"] = args.replications
    if getattr(args, "arrivals", None) is not None:
        changes["total_arrivals"] = args.arrivals
    if getattr(args, "inter_arrival", None) is not None:
        changes["inter_arrival_mean"] = args.inter_arrival
    if getattr(args, "policy", None) and args.command != "sweep":
        changes["policy"] = args.policy
    return check(cfg.with_(**changes)) if changes else cfg


def _print_rows(rows) -> None:
    head = f"{'load':>7} {'policy':>10} " + " ".join(f"{n.split('_', 1)[0]:>12}" for n in OBJECTIVES)
    print(head)
    for r in rows:
        vals = []
        for n in OBJECTIVES:
            v, hw = r.get(n), r.get(n + "_hw98")
            vals.append(f"{format_number(v):>12}" if hw is None else f"{v:8.4f}±{hw:.3g}".rjust(12))
        print(f"{r['load']:7.4f} {r['policy']:>10} " + " ".join(vals))


def cmd_validate(args) -> int:
    cfg = _config(args)
    print(f"ok: {cfg.topology.node_count} nodes, {len(cfg.models)} models, policy {cfg.policy}")
    return EXIT_OK


def cmd_run(args) -> int:
    cfg = _config(args)
    rows = run_experiment(cfg, args.out_dir, sweep=(cfg.inter_arrival_mean,),
                          policies=(cfg.policy,), jobs=args.jobs, traces=args.traces,
                          backend=args.backend)
    _print_rows(rows)
    return EXIT_OK


def cmd_sweep(args) -> int:
    cfg = _config(args)
    policies = tuple(args.policy) if args.policy else None
    rows = run_experiment(cfg, args.out_dir, policies=policies, jobs=args.jobs,
                          traces=args.traces, backend=args.backend)
    _print_rows(rows)
    return EXIT_OK


def cmd_trace(args) -> int:
    cfg = _config(args)
    changes = {}
    if args.model is not None:
        changes["trace_model"] = args.model
    if args.window is not None:
        changes["trace_window"] = args.window
    if args.start is not None:
        changes["trace_start"] = args.start
    cfg = check(cfg.with_(**changes)) if changes else cfg
    try:
        result = run(cfg, backend=args.backend)
        trace = subversion_trace(result.traces, cfg.trace_model, trace_window(cfg))
    except ValueError as exc:
        raise ConfigError([str(exc)]) from None
    except Exception as exc:
        raise RunAbort(str(exc), cfg.inter_arrival_mean, (cfg.seed, 0)) from exc
    out = Path(args.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    path = out / f"trace_{cfg.policy}_model{cfg.trace_model}.csv"
    write_trace(path, trace)
    print(f"{len(trace)} entries written to {path}")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="mmvsim", description=__doc__.splitlines()[0])
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True)

    def common(sp, policy_multi=False):
        sp.add_argument("config", nargs="?", help="INI config (defaults when omitted)")
        sp.add_argument("--seed", type=int)
        if policy_multi:
            sp.add_argument("--policy", action="append", choices=POLICIES,
                            help="repeatable; default: the config's sweep policies")
        else:
            sp.add_argument("--policy", choices=POLICIES)
        sp.add_argument("--arrivals", type=int, help="override total_arrivals")
        sp.add_argument("--out-dir", default="out")
        sp.add_argument("--backend", choices=BACKENDS)

    sp = sub.add_parser("run", help="one config, all replications")
    common(sp)
    sp.add_argument("--inter-arrival", type=float)
    sp.add_argument("--replications", type=int)
    sp.add_argument("--jobs", type=int, default=1)
    sp.add_argument("--traces", action="store_true", help="write per-run trace windows")
    sp.set_defaults(func=cmd_run)

    sp = sub.add_parser("sweep", help="load sweep over policies")
    common(sp, policy_multi=True)
    sp.add_argument("--replications", type=int)
    sp.add_argument("--jobs", type=int, default=1)
    sp.add_argument("--traces", action="store_true")
    sp.set_defaults(func=cmd_sweep)

    sp = sub.add_parser("trace", help="served versions over an arrival window")
    common(sp)
    sp.add_argument("--inter-arrival", type=float)
    sp.add_argument("--model", type=int)
    sp.add_argument("--window", type=int)
    sp.add_argument("--start", type=int, help="first arrival index (default total/2)")
    sp.set_defaults(func=cmd_trace)

    sp = sub.add_parser("validate", help="check a config and exit")
    sp.add_argument("config")
    sp.set_defaults(func=cmd_validate)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(message)s")
    try:
        return args.func(args)
    except ConfigError as exc:
        for e in exc.errors:
            print(f"error: {e}", file=sys.stderr)
        return EXIT_INVALID
    except RunAbort as exc:
        print(f"run aborted (inter-arrival {exc.sweep_point}, seed {exc.seed}): {exc}",
              file=sys.stderr)
        return EXIT_ABORT


if __name__ == "__main__":
    sys.exit(main())
