"""Update decisions: always / never / random baselines and a tabular Q-learning agent.

Two decision points exist. At ``SPAWN`` the autoscaler is creating a replica and
the policy picks the latest version (1) or the initial version 0.0 (0). At
``POST_SERVICE`` a replica has just finished a request while a newer version is
available, and the policy either replaces it with a fresh latest-version replica
(1) or keeps serving with the current one (0).
"""

from __future__ import annotations

import csv
from dataclasses import dataclass

import numpy as np

from mmvsim.placement import NodeState, can_host
from mmvsim.versioning import ResourceDemand, UpdateFlags

SPAWN = "spawn"
POST_SERVICE = "post_service"

N_ACTIONS = 2
OMEGA_STATES = 16


@dataclass(frozen=True)
class StateKey:
    z: tuple[int, ...]
    f: int
    q: int
    e: int
    omega: UpdateFlags


@dataclass(frozen=True)
class RewardWeights:
    w1: float = 1.0
    w2: float = 10.0
    w3: float = 10.0
    w4: float = 10.0

    def __post_init__(self):
        ws = (self.w1, self.w2, self.w3, self.w4)
        if min(ws) < 0 or not any(ws):
            raise ValueError(f"reward weights must be non-negative and not all zero: {ws}")


@dataclass(frozen=True)
class RewardSample:
    psi: float
    theta_sec: float
    eta: float
    upsilon: float


@dataclass(frozen=True)
class QConfig:
    alpha: float = 0.01
    gamma: float = 0.99
    epsilon0: float = 1.0
    epsilon_min: float = 0.001
    # None: half of the run's arrivals
    decay_horizon: int | None = None
    q_max: int = 20

    def __post_init__(self):
        if not 0 < self.alpha <= 1:
            raise ValueError("alpha must be in (0, 1]")
        if not 0 <= self.gamma < 1:
            raise ValueError("gamma must be in [0, 1)")
        if not 0 <= self.epsilon_min <= self.epsilon0 <= 1:
            raise ValueError("need 0 <= epsilon_min <= epsilon0 <= 1")
        if self.q_max < 0:
            raise ValueError("q_max must be >= 0")

    def horizon_for(self, total_arrivals: int) -> int:
        if self.decay_horizon is not None:
            return self.decay_horizon
        return total_arrivals // 2


def reward(sample: RewardSample, w: RewardWeights) -> float:
    return -w.w1 * sample.psi + w.w2 * sample.theta_sec + w.w3 * sample.eta + w.w4 * sample.upsilon


def epsilon_at(event_index: int, cfg: QConfig, decay_horizon: int | None = None) -> float:
    """Linearly decayed exploration rate, flat at ``epsilon_min`` past the horizon."""
    h = cfg.decay_horizon if decay_horizon is None else decay_horizon
    if h is None:
        raise ValueError("decay horizon unknown; pass decay_horizon or set it in QConfig")
    if event_index >= h:
        return cfg.epsilon_min
    return cfg.epsilon0 + (cfg.epsilon_min - cfg.epsilon0) * (event_index / h)


def encode_state(nodes: list[NodeState], demand: ResourceDemand, model_id: int,
                 queue_len: int, event_bit: int, omega: UpdateFlags, q_max: int = 20) -> StateKey:
    z = tuple(int(can_host(n, demand)) for n in sorted(nodes, key=lambda n: n.id))
    return StateKey(z, model_id, min(queue_len, q_max), event_bit, omega)


class QTable:
    """Dense Q-table over the finite state space, zero-initialised.

    Rows are addressed by a packed state index; ``visits`` counts decisions per
    cell and marks which cells were reached.
    """

    def __init__(self, n_nodes: int, model_ids, q_max: int = 20):
        self.n_nodes = n_nodes
        self.model_ids = tuple(model_ids)
        self._model_pos = {m: i for i, m in enumerate(self.model_ids)}
        self.q_max = q_max
        self.n_states = (2 ** n_nodes) * len(self.model_ids) * (q_max + 1) * 2 * OMEGA_STATES
        self.values = np.zeros((self.n_states, N_ACTIONS))
        self.visits = np.zeros((self.n_states, N_ACTIONS), dtype=np.int64)

    def index(self, key: StateKey) -> int:
        if len(key.z) != self.n_nodes:
            raise ValueError(f"state has {len(key.z)} node bits, table has {self.n_nodes}")
        if not (0 <= key.q <= self.q_max and key.e in (0, 1)):
            raise ValueError(f"state out of range: q={key.q}, e={key.e}")
        if key.f not in self._model_pos:
            raise KeyError(f"model {key.f} not in the Q-table")
        z = 0
        for bit in key.z:
            z = (z << 1) | bit
        i = z * len(self.model_ids) + self._model_pos[key.f]
        i = i * (self.q_max + 1) + key.q
        i = i * 2 + key.e
        return i * OMEGA_STATES + key.omega.bits()

    def key_at(self, index: int) -> StateKey:
        index, omega = divmod(index, OMEGA_STATES)
        index, e = divmod(index, 2)
        index, q = divmod(index, self.q_max + 1)
        z, f_pos = divmod(index, len(self.model_ids))
        bits = tuple((z >> (self.n_nodes - 1 - i)) & 1 for i in range(self.n_nodes))
        return StateKey(bits, self.model_ids[f_pos], q, e, UpdateFlags.from_bits(omega))

    def __getitem__(self, item) -> float:
        key, a = item
        return float(self.values[self.index(key), a])

    def __setitem__(self, item, value: float) -> None:
        key, a = item
        self.values[self.index(key), a] = value

    def best_value(self, key: StateKey) -> float:
        row = self.values[self.index(key)]
        return max(float(row[0]), float(row[1]))

    def visited_indices(self) -> np.ndarray:
        """States with a decision recorded or a non-zero value."""
        return np.flatnonzero(self.visits.any(axis=1) | self.values.any(axis=1))

    @property
    def state_bound(self) -> int:
        return self.n_states

    def export_csv(self, path) -> None:
        """One row per touched cell: ``z,f,q,e,omega,action,q_value,visits``.

        ``z`` and ``omega`` are bit strings (node 1 first; main, security,
        reliability, accuracy). Values use 17 significant digits so a reload
        is exact.
        """
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["z", "f", "q", "e", "omega", "action", "q_value", "visits"])
            for i in self.visited_indices():
                key = self.key_at(int(i))
                z = "".join(map(str, key.z))
                om = "".join(map(str, key.omega))
                for a in range(N_ACTIONS):
                    if self.visits[i, a] or self.values[i, a]:
                        w.writerow([z, key.f, key.q, key.e, om, a,
                                    format(float(self.values[i, a]), ".17g"),
                                    int(self.visits[i, a])])

    @classmethod
    def load_csv(cls, path, n_nodes: int, model_ids, q_max: int = 20) -> QTable:
        table = cls(n_nodes, model_ids, q_max)
        with open(path, newline="") as fh:
            for row in csv.DictReader(fh):
                key = StateKey(
                    tuple(int(c) for c in row["z"]), int(row["f"]), int(row["q"]),
                    int(row["e"]), UpdateFlags(*(int(c) for c in row["omega"])))
                if len(key.z) != n_nodes:
                    raise ValueError(f"q-table row has {len(key.z)} node bits, expected {n_nodes}")
                i, a = table.index(key), int(row["action"])
                table.values[i, a] = float(row["q_value"])
                table.visits[i, a] = int(row.get("visits") or 0)
        return table


def select_action(qtable: QTable, key: StateKey, epsilon: float, rng) -> int:
    """Epsilon-greedy; greedy ties go to 0 (keep / initial version)."""
    if rng.random() < epsilon:
        return int(rng.random() < 0.5)
    row = qtable.values[qtable.index(key)]
    return int(row[1] > row[0])


def q_update(qtable: QTable, s: StateKey, a: int, r: float, s_next: StateKey, cfg: QConfig) -> float:
    i = qtable.index(s)
    old = qtable.values[i, a]
    target = r + cfg.gamma * qtable.best_value(s_next)
    new = old + cfg.alpha * (target - old)
    qtable.values[i, a] = new
    return float(new)


class UpdatePolicy:
    name = "base"
    learns = False

    def decide(self, point: str, key: StateKey, epsilon: float = 0.0) -> int:
        raise NotImplementedError

    def learn(self, s: StateKey, a: int, sample: RewardSample, s_next: StateKey) -> None:
        pass


class AlwaysUpdate(UpdatePolicy):
    name = "always"

    def decide(self, point, key, epsilon=0.0):
        return 1


class NeverUpdate(UpdatePolicy):
    name = "never"

    def decide(self, point, key, epsilon=0.0):
        return 0


class RandomUpdate(UpdatePolicy):
    name = "random"

    def __init__(self, rng):
        self.rng = rng

    def decide(self, point, key, epsilon=0.0):
        return int(self.rng.random() < 0.5)


class QLearningPolicy(UpdatePolicy):
    name = "qlearning"

    def __init__(self, qtable: QTable, cfg: QConfig, weights: RewardWeights, rng,
                 learn: bool = True):
        self.qtable = qtable
        self.cfg = cfg
        self.weights = weights
        self.rng = rng
        self.learns = learn

    def decide(self, point, key, epsilon=0.0):
        a = select_action(self.qtable, key, epsilon, self.rng)
        self.qtable.visits[self.qtable.index(key), a] += 1
        return a

    def learn(self, s, a, sample, s_next):
        if self.learns:
            q_update(self.qtable, s, a, reward(sample, self.weights), s_next, self.cfg)


def decide(policy: UpdatePolicy, point: str, key: StateKey, epsilon: float = 0.0) -> int:
    if point == POST_SERVICE and not key.omega.any():
        raise ValueError("post-service decision requires a pending update")
    if point not in (SPAWN, POST_SERVICE):
        raise ValueError(f"unknown decision point {point!r}")
    return policy.decide(point, key, epsilon)


def make_policy(name: str, *, rng=None, qtable: QTable | None = None,
                qcfg: QConfig | None = None, weights: RewardWeights | None = None,
                learn: bool = True) -> UpdatePolicy:
    if name == "always":
        return AlwaysUpdate()
    if name == "never":
        return NeverUpdate()
    if name == "random":
        return RandomUpdate(rng)
    if name == "qlearning":
        return QLearningPolicy(qtable, qcfg or QConfig(), weights or RewardWeights(), rng, learn)
    raise ValueError(f"unknown policy {name!r}")


def state_space_bound(n_nodes: int, n_models: int, q_max: int) -> int:
    return 2 ** n_nodes * n_models * (q_max + 1) * 2 * 2 ** 4

