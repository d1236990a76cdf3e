"""Seeded random streams.

Every stream is a PCG64 generator drawn in fixed-size blocks, so the compiled
kernel and the pure-Python engine consume identical sequences. Streams are
derived from a base seed with :class:`numpy.random.SeedSequence` spawn keys:

* workload streams (arrivals, service demands, releases) depend only on
  ``(base_seed, replication, purpose, model)``, so every policy and every load
  point of one replication sees the same requests and the same release history;
* the decision stream depends on ``(base_seed, replication, policy, sweep_index)``,
  so adding a policy or a sweep point never perturbs another run.
"""

from __future__ import annotations

import math

import numpy as np

BLOCK = 4096

PURPOSE_WORKLOAD = 0
PURPOSE_RELEASES = 1
PURPOSE_DECISIONS = 2

POLICY_CODES = {"never": 0, "always": 1, "random": 2, "qlearning": 3}


class RngStream:
    """Buffered uniform stream; ``random()`` is in [0, 1)."""

    def __init__(self, seed):
        if not isinstance(seed, np.random.SeedSequence):
            seed = np.random.SeedSequence(seed)
        self.seed = seed
        self._gen = np.random.Generator(np.random.PCG64(seed))
        self._buf = self._gen.random(BLOCK).tolist()
        self._pos = 0

    @property
    def generator(self) -> np.random.Generator:
        return self._gen

    def refill(self) -> np.ndarray:
        return self._gen.random(BLOCK)

    def random(self) -> float:
        if self._pos == BLOCK:
            self._buf = self._gen.random(BLOCK).tolist()
            self._pos = 0
        u = self._buf[self._pos]
        self._pos += 1
        return u

    def exponential(self, mean: float) -> float:
        return sample_exponential(mean, self)


def sample_exponential(mean: float, rng: RngStream) -> float:
    """Exponential draw by inversion, ``-mean * ln(u)`` with ``u`` in (0, 1]."""
    if not mean > 0:
        raise ValueError(f"exponential mean must be positive, got {mean}")
    return -mean * math.log(1.0 - rng.random())


def workload_seed(base_seed: int, replication: int, model_index: int) -> np.random.SeedSequence:
    return np.random.SeedSequence(base_seed, spawn_key=(replication, PURPOSE_WORKLOAD, model_index))


def release_seed(base_seed: int, replication: int, model_index: int) -> np.random.SeedSequence:
    return np.random.SeedSequence(base_seed, spawn_key=(replication, PURPOSE_RELEASES, model_index))


def decision_seed(base_seed: int, replication: int, policy: str,
                  sweep_index: int) -> np.random.SeedSequence:
    return np.random.SeedSequence(
        base_seed, spawn_key=(replication, PURPOSE_DECISIONS, POLICY_CODES[policy], sweep_index))
