"""Pure-Python simulation engine.

Built directly on the domain objects (repository, node states, first-fit,
autoscaler rules, policy objects). It is the fallback when the compiled kernel
is unavailable and the reference the kernel is tested against: for the same
config and seeds both produce identical traces, counters and Q-tables.
"""

from __future__ import annotations

import heapq
from collections import deque
from dataclasses import dataclass

from mmvsim import autoscaler
from mmvsim.placement import CapacityError, NodeState, allocate, first_fit, release
from mmvsim.policy import POST_SERVICE, SPAWN, QTable, RewardSample, encode_state, epsilon_at, make_policy
from mmvsim.rng import RngStream, decision_seed, release_seed, sample_exponential, workload_seed
from mmvsim.traces import TraceTable
from mmvsim.versioning import SUB_KINDS, VersionRecord, VersionRepository, apply_main_release, \
    apply_sub_release, update_flags

ARRIVAL, DEPARTURE, SPAWN_COMPLETE, MAIN_RELEASE, SUB_RELEASE = range(5)

SPAWNING, IDLE, BUSY = "spawning", "idle", "busy"

COUNTERS = (
    "events", "arrivals", "departures", "spawn_completions", "spawns_scale", "spawns_update",
    "terminations_idle", "terminations_update", "scaleups_dropped", "main_releases",
    "sub_releases", "decisions_spawn", "decisions_post", "updates_taken",
    "delay_identity_violations", "conservation_violations", "work_conservation_violations",
    "max_live_replicas",
)

# relative tolerance when reconciling summed delays with timestamps
TIME_TOL = 1e-9


@dataclass
class Replica:
    id: int
    model_pos: int
    record: VersionRecord
    record_index: int
    node_id: int
    state: str
    spawn_decision: int
    spawn_start: float
    spawn_end: float
    fresh: bool = True
    request: int = -1
    req_spawn: float = 0.0
    req_queuing: float = 0.0
    # (state key, action) awaiting the reward of this replica's next completion
    pending: tuple | None = None


def simulate(cfg, replication: int = 0, sweep_index: int = 0, qtable: QTable | None = None):
    """Run one replication. Returns ``(TraceTable, counters, qtable_or_None, repo)``."""
    models = list(cfg.models)
    K = len(models)
    demands = {m.id: m.demand for m in models}
    repo = VersionRepository(models, cfg.sub_step)
    nodes = [NodeState(n) for n in sorted(cfg.topology.nodes, key=lambda n: n.id)]
    node_by_id = {n.id: n for n in nodes}
    scaling = cfg.scaling
    q_max = cfg.qlearning.q_max
    horizon = cfg.decay_horizon
    total = cfg.total_arrivals

    work = [RngStream(workload_seed(cfg.seed, replication, k)) for k in range(K)]
    rel = [RngStream(release_seed(cfg.seed, replication, k)) for k in range(K)]
    dec = RngStream(decision_seed(cfg.seed, replication, cfg.policy, sweep_index))
    learning = cfg.policy == "qlearning"
    if learning and qtable is None:
        qtable = QTable(len(nodes), [m.id for m in models], q_max)
    policy = make_policy(cfg.policy, rng=dec, qtable=qtable, qcfg=cfg.qlearning,
                         weights=cfg.reward, learn=cfg.learn)

    c = dict.fromkeys(COUNTERS, 0)
    traces = TraceTable.empty(total)
    arrival_time = [0.0] * total
    service = [0.0] * total
    queues = [deque() for _ in range(K)]
    idle: list[list[Replica]] = [[] for _ in range(K)]
    live = [0] * K
    replicas: dict[int, Replica] = {}
    heap: list = []
    seq = 0
    pending_events = 0
    next_replica_id = 0
    accepted = 0
    processed = 0

    def push(t, kind, payload):
        nonlocal seq, pending_events
        prio = 0 if kind in (MAIN_RELEASE, SUB_RELEASE) else 1
        if prio:
            pending_events += 1
        heapq.heappush(heap, (t, prio, seq, kind, payload))
        seq += 1

    def check_node(node):
        used = node.used(demands)
        spec = node.spec
        held = (spec.cpu_capacity - node.residual_cpu, spec.ram_capacity - node.residual_ram,
                spec.disk_capacity - node.residual_disk)
        if any(abs(u - h) > TIME_TOL for u, h in zip(used, held)):
            c["conservation_violations"] += 1
        if min(node.residual_cpu, node.residual_ram, node.residual_disk) < -TIME_TOL:
            raise CapacityError(f"node {node.id} over capacity")

    def state_key(k, e, omega):
        m = models[k]
        return encode_state(nodes, m.demand, m.id, len(queues[k]), e, omega, q_max)

    def spawn(k, record, node_id, t, decision, pending, reason):
        nonlocal next_replica_id
        m = models[k]
        node = node_by_id[node_id]
        allocate(node, m, record.version)
        check_node(node)
        rep = Replica(next_replica_id, k, record, repo.index_of(m.id, record.version), node_id,
                      SPAWNING, decision, t, t + m.spawn_time, pending=pending)
        next_replica_id += 1
        replicas[rep.id] = rep
        live[k] += 1
        c[reason] += 1
        c["max_live_replicas"] = max(c["max_live_replicas"], sum(live))
        push(rep.spawn_end, SPAWN_COMPLETE, rep.id)
        return rep

    def terminate(rep, reason):
        m = models[rep.model_pos]
        node = node_by_id[rep.node_id]
        release(node, m, rep.record.version)
        check_node(node)
        del replicas[rep.id]
        live[rep.model_pos] -= 1
        c[reason] += 1

    def try_scale_up(k, t, e):
        m = models[k]
        if not autoscaler.scale_up_needed(len(queues[k]), live[k], scaling):
            return
        node_id = first_fit(nodes, m.demand)
        if node_id is None:
            c["scaleups_dropped"] += 1
            return
        initial = repo.initial(m.id)
        key = state_key(k, e, update_flags(initial, repo)) if learning else None
        a = policy.decide(SPAWN, key, epsilon_at(processed, cfg.qlearning, horizon))
        c["decisions_spawn"] += 1
        record = repo.latest(m.id) if a else initial
        pending = (key, a) if learning else None
        spawn(k, record, node_id, t, a, pending, "spawns_scale")

    def retry_starved(t):
        # capacity was freed: give models stuck with a queue but no replica a spawn
        for k in range(K):
            if live[k] == 0 and queues[k]:
                try_scale_up(k, t, 1)

    def dispatch(rep, t):
        i = queues[rep.model_pos].popleft()
        s = 0.0
        if rep.fresh:
            s = max(0.0, rep.spawn_end - max(arrival_time[i], rep.spawn_start))
            rep.fresh = False
        rep.state = BUSY
        rep.request = i
        rep.req_spawn = s
        rep.req_queuing = (t - arrival_time[i]) - s
        push(t + service[i], DEPARTURE, rep.id)

    def become_idle(rep, t):
        k = rep.model_pos
        rep.state = IDLE
        if queues[k]:
            dispatch(rep, t)
        elif autoscaler.on_replica_idle(0, live[k], scaling) == autoscaler.TERMINATE:
            terminate(rep, "terminations_idle")
            retry_starved(t)
        else:
            idle[k].append(rep)

    def on_arrival(k, t):
        nonlocal accepted, processed
        if accepted == total:
            return
        m = models[k]
        i = accepted
        accepted += 1
        c["arrivals"] += 1
        arrival_time[i] = t
        service[i] = sample_exponential(m.mean_service_time, work[k])
        if accepted < total:
            push(t + sample_exponential(cfg.inter_arrival_mean, work[k]), ARRIVAL, k)
        traces.model_id[i] = m.id
        queues[k].append(i)
        if idle[k]:
            dispatch(idle[k].pop(), t)
        else:
            try_scale_up(k, t, 0)
        processed += 1

    def on_departure(rep, t):
        k = rep.model_pos
        m = models[k]
        i = rep.request
        node = node_by_id[rep.node_id]
        p = service[i]
        tt = node.spec.transmission_delay_to_master
        s, q = rep.req_spawn, rep.req_queuing
        tot = p + tt + s + q
        dep = t + tt
        attrs = rep.record.attributes
        traces.node_id[i] = rep.node_id
        traces.arrival_time[i] = arrival_time[i]
        traces.departure_time[i] = dep
        traces.processing[i] = p
        traces.transmission[i] = tt
        traces.spawn[i] = s
        traces.queuing[i] = q
        traces.total[i] = tot
        traces.main[i] = rep.record.version.main
        traces.sub[i] = rep.record.version.sub
        traces.security[i] = attrs.security
        traces.reliability[i] = attrs.reliability
        traces.accuracy[i] = attrs.accuracy
        if (q < 0 or s < 0 or dep < arrival_time[i]
                or abs(tot - (dep - arrival_time[i])) > TIME_TOL * max(1.0, dep)):
            c["delay_identity_violations"] += 1
        c["departures"] += 1

        omega = update_flags(rep.record, repo)
        if rep.pending is not None:
            s_key, a = rep.pending
            s_next = state_key(k, 1, omega)
            policy.learn(s_key, a, RewardSample(tot, attrs.security, attrs.reliability,
                                                attrs.accuracy), s_next)
            rep.pending = None
        rep.state = IDLE
        rep.request = -1

        if omega.any() and (queues[k] or live[k] <= scaling.min_replicas):
            key = state_key(k, 1, omega) if learning else None
            a = policy.decide(POST_SERVICE, key, epsilon_at(processed, cfg.qlearning, horizon))
            c["decisions_post"] += 1
            if a:
                c["updates_taken"] += 1
                terminate(rep, "terminations_update")
                node_id = first_fit(nodes, m.demand)
                if node_id is None:
                    raise CapacityError("no node for a replacement replica after release")
                spawn(k, repo.latest(m.id), node_id, t, 1, (key, a) if learning else None,
                      "spawns_update")
                return
            if learning:
                rep.pending = (key, a)
        become_idle(rep, t)

    # initial deployment: ready and idle at time 0, no spawn delay
    for k, m in enumerate(models):
        for _ in range(cfg.initial_replicas.get(m.id, 0)):
            node_id = first_fit(nodes, m.demand)
            if node_id is None:
                raise CapacityError(f"initial replicas of model {m.id} do not fit")
            node = node_by_id[node_id]
            allocate(node, m, repo.initial(m.id).version)
            check_node(node)
            rep = Replica(next_replica_id, k, repo.initial(m.id), 0, node_id, IDLE, 0,
                          0.0, 0.0, fresh=False)
            next_replica_id += 1
            replicas[rep.id] = rep
            live[k] += 1
            idle[k].append(rep)
    c["max_live_replicas"] = sum(live)

    # release schedule
    horizon_t = cfg.release_horizon
    n_main = cfg.main_releases
    for k in range(K):
        for j in range(1, n_main + 1):
            push(horizon_t * j / (n_main + 1), MAIN_RELEASE, k)
    sub_gap = horizon_t / ((n_main + 1) * cfg.subs_per_epoch) if cfg.subs_per_epoch > 0 else 0.0
    if sub_gap > 0:
        for k in range(K):
            push(sample_exponential(sub_gap, rel[k]), SUB_RELEASE, k)

    if total > 0:
        for k in range(K):
            push(sample_exponential(cfg.inter_arrival_mean, work[k]), ARRIVAL, k)

    while pending_events:
        t, prio, _, kind, payload = heapq.heappop(heap)
        if kind == MAIN_RELEASE:
            apply_main_release(repo, models[payload].id)
            c["main_releases"] += 1
            continue
        if kind == SUB_RELEASE:
            which = SUB_KINDS[int(3.0 * rel[payload].random())]
            apply_sub_release(repo, models[payload].id, which)
            c["sub_releases"] += 1
            push(t + sample_exponential(sub_gap, rel[payload]), SUB_RELEASE, payload)
            continue
        pending_events -= 1
        c["events"] += 1
        if kind == ARRIVAL:
            k = payload
            on_arrival(k, t)
        else:
            rep = replicas[payload]
            k = rep.model_pos
            if kind == DEPARTURE:
                on_departure(rep, t)
            else:
                c["spawn_completions"] += 1
                become_idle(rep, t)
        for kk in range(K):
            if idle[kk] and queues[kk]:
                c["work_conservation_violations"] += 1

    return traces, c, qtable, repo
