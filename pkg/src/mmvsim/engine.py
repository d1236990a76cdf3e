"""Discrete-event simulation entry point.

Two interchangeable backends implement the event loop: the compiled
``mmvsim._kernel`` extension and the pure-Python ``mmvsim._pyengine``. The
compiled one is used when it imports; set ``MMVSIM_BACKEND=python`` to force the
fallback. Both produce identical results for identical inputs.
"""

from __future__ import annotations

import os
from dataclasses import dataclass, field
from typing import NamedTuple

import numpy as np

from mmvsim import _pyengine
from mmvsim.config import ConfigError, SimulationConfig, validate
from mmvsim.metrics import MetricsReport, objectives
from mmvsim.policy import QTable
from mmvsim.traces import TraceTable

try:
    from mmvsim import _kernel
except ImportError:  # extension not built
    _kernel = None

BACKENDS = ("cython", "python") if _kernel is not None else ("python",)


def default_backend() -> str:
    forced = os.environ.get("MMVSIM_BACKEND", "").strip().lower()
    if forced:
        if forced not in ("cython", "python"):
            raise ValueError(f"MMVSIM_BACKEND must be 'cython' or 'python', not {forced!r}")
        if forced == "cython" and _kernel is None:
            raise ImportError("MMVSIM_BACKEND=cython but mmvsim._kernel is not built")
        return forced
    return BACKENDS[0]


class Event(NamedTuple):
    """Heap entry of the reference engine; releases sort before other kinds at equal times."""

    time: float
    priority: int
    sequence: int
    kind: int
    payload: int


class RunAbort(RuntimeError):
    """A run failed; carries where in an experiment it happened."""

    def __init__(self, message, sweep_point=None, seed=None):
        self.sweep_point = sweep_point
        self.seed = seed
        super().__init__(message)

    def __reduce__(self):
        # keep the context when crossing a process pool
        return (type(self), (str(self), self.sweep_point, self.seed))


@dataclass
class RunResult:
    traces: TraceTable
    counters: dict
    qtable: QTable | None
    backend: str
    report: MetricsReport | None = None
    latest_versions: dict = field(default_factory=dict)

    @property
    def violations(self) -> int:
        c = self.counters
        return (c["delay_identity_violations"] + c["conservation_violations"]
                + c["work_conservation_violations"])


def run(cfg: SimulationConfig, replication: int = 0, sweep_index: int = 0,
        qtable: QTable | None = None, backend: str | None = None) -> RunResult:
    """Simulate one replication of ``cfg``.

    ``qtable`` seeds the Q-learning agent (it is updated in place when
    ``cfg.learn``); otherwise a fresh zero table is used. With zero arrivals
    the result has no traces and no report.
    """
    errors = [e for e in validate(cfg) if "total_arrivals" not in e]
    if errors:
        raise ConfigError(errors)
    if cfg.total_arrivals < 0:
        raise ConfigError(["total_arrivals must be >= 0"])
    backend = backend or default_backend()
    if cfg.policy == "qlearning" and qtable is None:
        qtable = QTable(cfg.topology.node_count, cfg.model_ids, cfg.qlearning.q_max)
    if backend == "python":
        traces, counters, qtable, repo = _pyengine.simulate(cfg, replication, sweep_index, qtable)
        latest = {m: repo.latest(m).version for m in repo.model_ids()}
    elif backend == "cython":
        if _kernel is None:
            raise ImportError("compiled kernel not available")
        traces, counters, latest = _kernel.simulate(cfg, replication, sweep_index, qtable)
    else:
        raise ValueError(f"unknown backend {backend!r}")
    report = objectives(traces) if len(traces) else None
    return RunResult(traces, counters, qtable if cfg.policy == "qlearning" else None,
                     backend, report, latest)


def same_result(a: RunResult, b: RunResult) -> bool:
    """Bit-for-bit equality of traces, counters and Q-tables."""
    if not a.traces.equals(b.traces) or a.counters != b.counters:
        return False
    if (a.qtable is None) != (b.qtable is None):
        return False
    if a.qtable is not None:
        return (np.array_equal(a.qtable.values, b.qtable.values)
                and np.array_equal(a.qtable.visits, b.qtable.visits))
    return True
