"""Monitoring-based replica scaling: scale up on queue pressure, drop idle replicas."""

from __future__ import annotations

import math
from dataclasses import dataclass

TERMINATE = "terminate"
KEEP = "keep"


@dataclass(frozen=True)
class ScalingConfig:
    """``queue_threshold`` is waiting requests per live replica.

    An infinite threshold leaves only the cold-start spawn (no live replica,
    non-empty queue).
    """

    queue_threshold: float = 2.0
    min_replicas: int = 0

    def __post_init__(self):
        if not self.queue_threshold > 0:
            raise ValueError("queue_threshold must be > 0")
        if self.min_replicas < 0:
            raise ValueError("min_replicas must be >= 0")

    @property
    def scaling_enabled(self) -> bool:
        return not math.isinf(self.queue_threshold)


def scale_up_needed(queue_len: int, live_replicas: int, cfg: ScalingConfig) -> bool:
    if live_replicas == 0:
        return queue_len > 0
    return queue_len / live_replicas > cfg.queue_threshold


def on_replica_idle(queue_len: int, live_replicas: int, cfg: ScalingConfig) -> str:
    """Fate of a replica that just became idle.

    ``live_replicas`` counts this replica. A non-empty queue means the replica
    must take the next request, never be deleted.
    """
    if queue_len == 0 and live_replicas > cfg.min_replicas:
        return TERMINATE
    return KEEP
