"""Objectives (mean delay, accuracy, security, reliability), load and confidence intervals."""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy import stats

from mmvsim.traces import RequestTrace, TraceTable

OBJECTIVES = ("o1_mean_delay", "o2_mean_accuracy", "o3_mean_security", "o4_mean_reliability")
_SOURCE = {"o1_mean_delay": "total", "o2_mean_accuracy": "accuracy",
           "o3_mean_security": "security", "o4_mean_reliability": "reliability"}


@dataclass
class MetricsReport:
    o1_mean_delay: float
    o2_mean_accuracy: float
    o3_mean_security: float
    o4_mean_reliability: float
    request_count: dict[int, int] = field(default_factory=dict)
    per_model: dict[int, dict[str, float]] = field(default_factory=dict)
    # filled only when aggregated across replications
    ci_halfwidths: dict[str, float] | None = None
    replications: int = 1

    def values(self) -> dict[str, float]:
        return {name: getattr(self, name) for name in OBJECTIVES}

    @property
    def total_requests(self) -> int:
        return sum(self.request_count.values())


@dataclass(frozen=True)
class SubversionTrace:
    arrival_index: np.ndarray
    model_id: int
    main: np.ndarray
    sub: np.ndarray

    def __len__(self) -> int:
        return len(self.arrival_index)

    def entries(self):
        return list(zip(self.arrival_index.tolist(), [self.model_id] * len(self),
                        self.main.tolist(), self.sub.tolist()))


def erlang_load(lam: float, mu: float, n: int) -> float:
    """Offered load per server of an M/M/n system."""
    if mu <= 0 or n < 1:
        raise ValueError("need mu > 0 and n >= 1")
    return lam / (n * mu)


def _mean(values: np.ndarray) -> float:
    # fsum is exactly rounded, hence independent of request order
    return math.fsum(values.tolist()) / len(values)


def objectives(traces) -> MetricsReport:
    """Means over all completed requests, plus the same per model."""
    if not isinstance(traces, TraceTable):
        traces = TraceTable.from_records(list(traces))
    if len(traces) == 0:
        raise ValueError("objectives need at least one completed request")
    overall = {name: _mean(getattr(traces, col)) for name, col in _SOURCE.items()}
    counts, per_model = {}, {}
    for m in np.unique(traces.model_id).tolist():
        sel = traces.model_id == m
        counts[m] = int(sel.sum())
        per_model[m] = {name: _mean(getattr(traces, col)[sel]) for name, col in _SOURCE.items()}
    return MetricsReport(**overall, request_count=counts, per_model=per_model)


def confidence_interval(samples, level: float = 0.98) -> tuple[float, float]:
    """Student-t interval over independent replication means: (mean, halfwidth)."""
    x = np.asarray(samples, dtype=float)
    n = len(x)
    if n < 2:
        raise ValueError("confidence interval needs at least 2 samples")
    mean = math.fsum(x.tolist()) / n
    s = float(np.std(x, ddof=1))
    t = float(stats.t.ppf(0.5 + level / 2, n - 1))
    return mean, t * s / math.sqrt(n)


def aggregate(reports: list[MetricsReport], level: float = 0.98) -> MetricsReport:
    """Combine per-replication reports; halfwidths only when there are >= 2."""
    if not reports:
        raise ValueError("no reports to aggregate")
    means, hws = {}, None
    if len(reports) >= 2:
        hws = {}
        for name in OBJECTIVES:
            means[name], hws[name] = confidence_interval([getattr(r, name) for r in reports], level)
    else:
        means = reports[0].values()
    counts: dict[int, int] = {}
    for r in reports:
        for m, c in r.request_count.items():
            counts[m] = counts.get(m, 0) + c
    return MetricsReport(**means, request_count=counts, ci_halfwidths=hws,
                         replications=len(reports))


def subversion_trace(traces: TraceTable, model_id: int, window: tuple[int, int]) -> SubversionTrace:
    """Versions served to ``model_id`` requests whose arrival index is in ``[start, end)``."""
    start, end = window
    if not 0 <= start < end:
        raise ValueError(f"empty or invalid window {window}")
    if start >= len(traces):
        raise ValueError(f"window {window} starts beyond the run ({len(traces)} arrivals)")
    idx = np.arange(start, min(end, len(traces)))
    idx = idx[traces.model_id[idx] == model_id]
    return SubversionTrace(idx, model_id, traces.main[idx], traces.sub[idx])


def weighted_initial_mean(request_count: dict[int, int], initial: dict[int, float]) -> float:
    """Request-count-weighted mean of a per-model constant (e.g. initial accuracy)."""
    total = sum(request_count.values())
    return math.fsum(request_count[m] * initial[m] for m in request_count) / total


def as_records(traces: TraceTable) -> list[RequestTrace]:
    return [traces.row(i) for i in range(len(traces))]
