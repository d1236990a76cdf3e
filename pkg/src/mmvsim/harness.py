"""Experiment orchestration: load sweeps over policies and replications.

Output layout under ``out_dir``::

    summary.csv                 one row per (load, policy), sorted
    runs.csv                    one row per run
    traces/<tag>.csv            served versions in the trace window (optional)
    qtables/<tag>.csv           Q-table after each qlearning run

``<tag>`` is ``ia<inter-arrival>_<policy>_rep<replication>``. Every float is
written with 9 significant digits, so identical inputs give identical files.
"""

from __future__ import annotations

import csv
import logging
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from pathlib import Path

from mmvsim.config import SimulationConfig, format_number
from mmvsim.engine import RunAbort, run
from mmvsim.metrics import OBJECTIVES, MetricsReport, aggregate, erlang_load, subversion_trace
from mmvsim.policy import QTable

log = logging.getLogger(__name__)

SUMMARY_COLUMNS = ("load", "inter_arrival_mean", "policy", "replications") + tuple(
    c for name in OBJECTIVES for c in (name, name + "_hw98"))
RUN_COLUMNS = ("load", "inter_arrival_mean", "policy", "replication", "requests") + OBJECTIVES + (
    "updates_taken", "spawns", "max_live_replicas", "violations")
TRACE_COLUMNS = ("arrival_index", "model_id", "main", "sub")


@dataclass(frozen=True)
class RunSpec:
    sweep_index: int
    inter_arrival_mean: float
    policy: str
    replication: int


@dataclass
class RunOutcome:
    spec: RunSpec
    report: MetricsReport | None
    counters: dict


def system_load(cfg: SimulationConfig, inter_arrival_mean: float | None = None) -> float:
    """Per-node load with the mean service time averaged over models."""
    ia = cfg.inter_arrival_mean if inter_arrival_mean is None else inter_arrival_mean
    service = sum(m.mean_service_time for m in cfg.models) / len(cfg.models)
    return erlang_load(1.0 / ia, 1.0 / service, cfg.topology.node_count)


def run_tag(spec: RunSpec) -> str:
    return f"ia{format_number(spec.inter_arrival_mean)}_{spec.policy}_rep{spec.replication}"


def trace_window(cfg: SimulationConfig) -> tuple[int, int]:
    start = cfg.total_arrivals // 2 if cfg.trace_start is None else cfg.trace_start
    return start, start + cfg.trace_window


def write_trace(path, trace) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(TRACE_COLUMNS)
        w.writerows(trace.entries())


def _initial_qtable(cfg: SimulationConfig) -> QTable | None:
    if cfg.policy != "qlearning" or not cfg.qtable_in:
        return None
    return QTable.load_csv(cfg.qtable_in, cfg.topology.node_count, cfg.model_ids,
                           cfg.qlearning.q_max)


def execute(cfg: SimulationConfig, spec: RunSpec, out_dir: Path | None = None,
            traces: bool = False, backend: str | None = None) -> RunOutcome:
    """One run of the experiment grid; failures become ``RunAbort``."""
    run_cfg = cfg.with_(inter_arrival_mean=spec.inter_arrival_mean, policy=spec.policy)
    try:
        result = run(run_cfg, spec.replication, spec.sweep_index, _initial_qtable(run_cfg),
                     backend=backend)
        if out_dir is not None:
            tag = run_tag(spec)
            if traces and len(result.traces):
                trace = subversion_trace(result.traces, cfg.trace_model, trace_window(cfg))
                write_trace(out_dir / "traces" / f"{tag}.csv", trace)
            if result.qtable is not None:
                result.qtable.export_csv(out_dir / "qtables" / f"{tag}.csv")
    except RunAbort:
        raise
    except Exception as exc:
        raise RunAbort(f"run {run_tag(spec)} failed: {exc}", sweep_point=spec.inter_arrival_mean,
                       seed=(cfg.seed, spec.replication)) from exc
    return RunOutcome(spec, result.report, result.counters)


def _execute_star(args):
    return execute(*args)


def plan(cfg: SimulationConfig, sweep=None, policies=None, replications=None) -> list[RunSpec]:
    sweep = tuple(cfg.sweep if sweep is None else sweep)
    policies = tuple(cfg.sweep_policies if policies is None else policies)
    reps = cfg.replications if replications is None else replications
    return [RunSpec(i, float(ia), p, r)
            for i, ia in enumerate(sweep) for p in policies for r in range(reps)]


def run_experiment(cfg: SimulationConfig, out_dir, sweep=None, policies=None,
                   replications=None, jobs: int = 1, traces: bool = False,
                   backend: str | None = None) -> list[dict]:
    """Run the grid and write the report files; returns the summary rows."""
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    (out_dir / "qtables").mkdir(exist_ok=True)
    if traces:
        (out_dir / "traces").mkdir(exist_ok=True)
    specs = plan(cfg, sweep, policies, replications)
    args = [(cfg, s, out_dir, traces, backend) for s in specs]
    log.info("running %d simulations with %d worker(s)", len(specs), jobs)
    if jobs > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            outcomes = list(pool.map(_execute_star, args))
    else:
        outcomes = [_execute_star(a) for a in args]

    groups: dict[tuple[float, str], list[RunOutcome]] = {}
    for o in outcomes:
        groups.setdefault((o.spec.inter_arrival_mean, o.spec.policy), []).append(o)

    rows = []
    for (ia, policy), group in groups.items():
        reports = [o.report for o in sorted(group, key=lambda o: o.spec.replication)
                   if o.report is not None]
        row = {"load": system_load(cfg, ia), "inter_arrival_mean": ia, "policy": policy,
               "replications": len(reports)}
        if reports:
            agg = aggregate(reports)
            for name in OBJECTIVES:
                row[name] = getattr(agg, name)
                row[name + "_hw98"] = agg.ci_halfwidths[name] if agg.ci_halfwidths else None
        rows.append(row)
    rows.sort(key=lambda r: (r["load"], r["policy"]))
    _write_rows(out_dir / "summary.csv", SUMMARY_COLUMNS, rows)

    run_rows = []
    for o in outcomes:
        s, c = o.spec, o.counters
        row = {"load": system_load(cfg, s.inter_arrival_mean),
               "inter_arrival_mean": s.inter_arrival_mean, "policy": s.policy,
               "replication": s.replication,
               "requests": o.report.total_requests if o.report else 0,
               "updates_taken": c["updates_taken"],
               "spawns": c["spawns_scale"] + c["spawns_update"],
               "max_live_replicas": c["max_live_replicas"],
               "violations": (c["delay_identity_violations"] + c["conservation_violations"]
                              + c["work_conservation_violations"])}
        if o.report:
            row.update(o.report.values())
        run_rows.append(row)
    run_rows.sort(key=lambda r: (r["load"], r["policy"], r["replication"]))
    _write_rows(out_dir / "runs.csv", RUN_COLUMNS, run_rows)
    return rows


def _cell(value) -> str:
    if value is None:
        return ""
    if isinstance(value, float):
        return format_number(value)
    return str(value)


def _write_rows(path: Path, columns, rows) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(columns)
        for row in rows:
            w.writerow([_cell(row.get(c)) for c in columns])


def read_summary(path) -> list[dict]:
    with open(path, newline="") as fh:
        return list(csv.DictReader(fh))
