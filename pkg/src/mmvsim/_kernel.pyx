# cython: language_level=3
"""Compiled event loop.

Same model as ``mmvsim._pyengine``, flattened onto typed arrays. Every floating
point expression, every random draw and every tie-break follows the reference
engine in the same order, so both backends return identical results. Release
events are not kept in the heap: before each event at time ``t`` all releases
due at or before ``t`` are applied, which is the order the reference heap
produces (releases sort first at equal times).
"""

import numpy as np
cimport numpy as cnp
from libc.math cimport log, fmax, fmin, fabs, INFINITY

from mmvsim.rng import BLOCK as _BLOCK, decision_seed, release_seed, workload_seed
from mmvsim.traces import TraceTable
from mmvsim.versioning import MAIN_STEP_ACCURACY, MAIN_STEP_RELIABILITY, MAIN_STEP_SECURITY, Version

cnp.import_array()

cdef enum:
    ARRIVAL = 0
    DEPARTURE = 1
    SPAWN_COMPLETE = 2

cdef enum:
    SPAWNING = 0
    IDLE = 1
    BUSY = 2

cdef enum:
    P_NEVER = 0
    P_ALWAYS = 1
    P_RANDOM = 2
    P_QLEARNING = 3

cdef double TIME_TOL = 1e-9
cdef int BLOCK = _BLOCK

COUNTERS = (
    "events", "arrivals", "departures", "spawn_completions", "spawns_scale", "spawns_update",
    "terminations_idle", "terminations_update", "scaleups_dropped", "main_releases",
    "sub_releases", "decisions_spawn", "decisions_post", "updates_taken",
    "delay_identity_violations", "conservation_violations", "work_conservation_violations",
    "max_live_replicas",
)

cdef enum:
    C_EVENTS = 0
    C_ARRIVALS
    C_DEPARTURES
    C_SPAWN_COMPLETIONS
    C_SPAWNS_SCALE
    C_SPAWNS_UPDATE
    C_TERM_IDLE
    C_TERM_UPDATE
    C_SCALEUPS_DROPPED
    C_MAIN_RELEASES
    C_SUB_RELEASES
    C_DECISIONS_SPAWN
    C_DECISIONS_POST
    C_UPDATES_TAKEN
    C_DELAY_VIOL
    C_CONS_VIOL
    C_WORK_VIOL
    C_MAX_LIVE
    N_COUNTERS


cdef class _Stream:
    cdef object gen
    cdef double[::1] buf
    cdef int pos

    def __init__(self, seed):
        self.gen = np.random.Generator(np.random.PCG64(seed))
        self.buf = self.gen.random(BLOCK)
        self.pos = 0

    cdef inline double random(self):
        cdef double u
        if self.pos == BLOCK:
            self.buf = self.gen.random(BLOCK)
            self.pos = 0
        u = self.buf[self.pos]
        self.pos += 1
        return u

    cdef inline double exponential(self, double mean):
        return -mean * log(1.0 - self.random())


cdef class _Sim:
    # dimensions
    cdef int K, N, R, q_max, policy
    cdef long total, horizon, min_replicas
    cdef double ia_mean, theta, sub_gap, sub_step
    cdef double alpha, gamma, eps0, eps_min
    cdef double w1, w2, w3, w4
    cdef bint learning, learn

    # models
    cdef double[::1] d_cpu, d_ram, d_disk, svc_mean, spawn_time
    cdef double[:, ::1] caps
    cdef long[::1] model_id

    # nodes (position order = ascending id)
    cdef double[::1] cap_cpu, cap_ram, cap_disk, res_cpu, res_ram, res_disk, trans
    cdef long[::1] node_id
    cdef long[:, ::1] hosted

    # repository
    cdef long rec_cap
    cdef long[:, ::1] rec_main, rec_sub
    cdef double[:, ::1] rec_sec, rec_rel, rec_acc
    cdef long[::1] n_rec, main_idx
    cdef long[:, ::1] last_kind
    cdef double[::1] main_times
    cdef long n_main
    cdef long[::1] next_main
    cdef double[::1] next_sub

    # replicas (slots)
    cdef long[::1] r_model, r_rec, r_node, r_state, r_request, r_pend_state, r_pend_action
    cdef double[::1] r_start, r_end, r_req_s, r_req_q
    cdef char[::1] r_fresh, r_pending
    cdef long[::1] free_slots
    cdef long n_free
    cdef long[:, ::1] idle
    cdef long[::1] idle_n, live

    # queues: per-model FIFO threaded through request ids
    cdef long[::1] q_head, q_tail, q_len, q_next

    # requests
    cdef double[::1] arr_t, svc

    # heap
    cdef double[::1] h_time
    cdef long[::1] h_seq, h_kind, h_payload
    cdef long h_n, seq

    # q-table
    cdef double[:, ::1] Q
    cdef long[:, ::1] visits

    # traces
    cdef long[::1] t_model, t_node, t_main, t_sub
    cdef double[::1] t_arr, t_dep, t_proc, t_trans, t_spawn, t_queue, t_total, t_sec, t_rel, t_acc

    cdef long[::1] c
    cdef long accepted, processed

    cdef list work, rel
    cdef _Stream dec

    # ---------------------------------------------------------------- heap
    cdef inline bint _less(self, long a, long b):
        return (self.h_time[a] < self.h_time[b]
                or (self.h_time[a] == self.h_time[b] and self.h_seq[a] < self.h_seq[b]))

    cdef inline void _swap(self, long a, long b):
        cdef double t = self.h_time[a]
        cdef long s = self.h_seq[a], k = self.h_kind[a], p = self.h_payload[a]
        self.h_time[a] = self.h_time[b]
        self.h_seq[a] = self.h_seq[b]
        self.h_kind[a] = self.h_kind[b]
        self.h_payload[a] = self.h_payload[b]
        self.h_time[b] = t
        self.h_seq[b] = s
        self.h_kind[b] = k
        self.h_payload[b] = p

    cdef void push(self, double t, long kind, long payload) except *:
        cdef long i = self.h_n, parent
        if i >= self.h_time.shape[0]:
            raise RuntimeError("event heap overflow")
        self.h_time[i] = t
        self.h_seq[i] = self.seq
        self.h_kind[i] = kind
        self.h_payload[i] = payload
        self.seq += 1
        self.h_n += 1
        while i > 0:
            parent = (i - 1) >> 1
            if self._less(i, parent):
                self._swap(i, parent)
                i = parent
            else:
                break

    cdef void pop(self) noexcept:
        # moves the minimum to slot h_n (one past the new end)
        cdef long i = 0, l, r, m
        self.h_n -= 1
        self._swap(0, self.h_n)
        while True:
            l = 2 * i + 1
            r = l + 1
            m = i
            if l < self.h_n and self._less(l, m):
                m = l
            if r < self.h_n and self._less(r, m):
                m = r
            if m == i:
                break
            self._swap(i, m)
            i = m

    # ---------------------------------------------------------- repository
    cdef void _grow_repo(self):
        cdef long new_cap = self.rec_cap * 2
        cdef object arr
        for name in ("rec_main", "rec_sub"):
            arr = np.zeros((self.K, new_cap), dtype=np.int_)
            arr[:, :self.rec_cap] = np.asarray(getattr(self, "_get_" + name)())
            self._set_long(name, arr)
        for name in ("rec_sec", "rec_rel", "rec_acc"):
            arr = np.zeros((self.K, new_cap))
            arr[:, :self.rec_cap] = np.asarray(getattr(self, "_get_" + name)())
            self._set_double(name, arr)
        self.rec_cap = new_cap

    def _get_rec_main(self): return self.rec_main
    def _get_rec_sub(self): return self.rec_sub
    def _get_rec_sec(self): return self.rec_sec
    def _get_rec_rel(self): return self.rec_rel
    def _get_rec_acc(self): return self.rec_acc

    cdef void _set_long(self, str name, object arr):
        if name == "rec_main":
            self.rec_main = arr
        else:
            self.rec_sub = arr

    cdef void _set_double(self, str name, object arr):
        if name == "rec_sec":
            self.rec_sec = arr
        elif name == "rec_rel":
            self.rec_rel = arr
        else:
            self.rec_acc = arr

    cdef void main_release(self, long k):
        cdef long p = self.n_rec[k] - 1, n
        if self.n_rec[k] == self.rec_cap:
            self._grow_repo()
        n = p + 1
        self.rec_main[k, n] = self.rec_main[k, p] + 1
        self.rec_sub[k, n] = 0
        self.rec_sec[k, n] = fmin(self.caps[k, 0], self.rec_sec[k, p] + MAIN_STEP_SECURITY)
        self.rec_rel[k, n] = fmin(self.caps[k, 1], self.rec_rel[k, p] + MAIN_STEP_RELIABILITY)
        self.rec_acc[k, n] = fmin(self.caps[k, 2], self.rec_acc[k, p] + MAIN_STEP_ACCURACY)
        self.n_rec[k] = n + 1
        self.main_idx[k] = n
        self.c[C_MAIN_RELEASES] += 1

    cdef void sub_release(self, long k, long kind):
        cdef long p = self.n_rec[k] - 1, n
        if self.n_rec[k] == self.rec_cap:
            self._grow_repo()
        n = p + 1
        self.rec_main[k, n] = self.rec_main[k, p]
        self.rec_sub[k, n] = self.rec_sub[k, p] + 1
        self.rec_sec[k, n] = self.rec_sec[k, p]
        self.rec_rel[k, n] = self.rec_rel[k, p]
        self.rec_acc[k, n] = self.rec_acc[k, p]
        if kind == 0:
            self.rec_sec[k, n] = fmin(self.caps[k, 0], self.rec_sec[k, p] + self.sub_step)
        elif kind == 1:
            self.rec_rel[k, n] = fmin(self.caps[k, 1], self.rec_rel[k, p] + self.sub_step)
        else:
            self.rec_acc[k, n] = fmin(self.caps[k, 2], self.rec_acc[k, p] + self.sub_step)
        self.n_rec[k] = n + 1
        self.last_kind[k, kind] = n
        self.c[C_SUB_RELEASES] += 1

    cdef void apply_releases(self, double t):
        cdef long k, kind
        cdef double tm, ts
        cdef _Stream rs
        for k in range(self.K):
            while True:
                tm = self.main_times[self.next_main[k]] if self.next_main[k] < self.n_main else INFINITY
                ts = self.next_sub[k]
                if tm <= ts and tm <= t:
                    self.main_release(k)
                    self.next_main[k] += 1
                elif ts < tm and ts <= t:
                    rs = <_Stream>self.rel[k]
                    kind = <long>(3.0 * rs.random())
                    self.sub_release(k, kind)
                    self.next_sub[k] = ts + rs.exponential(self.sub_gap)
                else:
                    break

    cdef inline long flags(self, long k, long cur):
        cdef long latest = self.n_rec[k] - 1
        cdef long floor = cur if cur > self.main_idx[k] else self.main_idx[k]
        cdef long bits = 0
        if self.rec_main[k, latest] > self.rec_main[k, cur]:
            bits |= 8
        if self.last_kind[k, 0] > floor:
            bits |= 4
        if self.last_kind[k, 1] > floor:
            bits |= 2
        if self.last_kind[k, 2] > floor:
            bits |= 1
        return bits

    # ----------------------------------------------------------- placement
    cdef inline bint can_host(self, long n, long k):
        return (self.d_cpu[k] <= self.res_cpu[n] and self.d_ram[k] <= self.res_ram[n]
                and self.d_disk[k] <= self.res_disk[n])

    cdef inline long first_fit(self, long k):
        cdef long n
        for n in range(self.N):
            if self.can_host(n, k):
                return n
        return -1

    cdef void check_node(self, long n) except *:
        cdef double u_cpu = 0.0, u_ram = 0.0, u_disk = 0.0
        cdef long k
        for k in range(self.K):
            u_cpu += self.d_cpu[k] * self.hosted[n, k]
            u_ram += self.d_ram[k] * self.hosted[n, k]
            u_disk += self.d_disk[k] * self.hosted[n, k]
        if (fabs(u_cpu - (self.cap_cpu[n] - self.res_cpu[n])) > TIME_TOL
                or fabs(u_ram - (self.cap_ram[n] - self.res_ram[n])) > TIME_TOL
                or fabs(u_disk - (self.cap_disk[n] - self.res_disk[n])) > TIME_TOL):
            self.c[C_CONS_VIOL] += 1
        if self.res_cpu[n] < -TIME_TOL or self.res_ram[n] < -TIME_TOL or self.res_disk[n] < -TIME_TOL:
            raise RuntimeError(f"node {self.node_id[n]} over capacity")

    cdef void allocate(self, long n, long k) except *:
        if not self.can_host(n, k):
            raise RuntimeError(f"node {self.node_id[n]} cannot host model {self.model_id[k]}")
        self.res_cpu[n] -= self.d_cpu[k]
        self.res_ram[n] -= self.d_ram[k]
        self.res_disk[n] -= self.d_disk[k]
        self.hosted[n, k] += 1
        self.check_node(n)

    cdef void release(self, long n, long k) except *:
        if self.hosted[n, k] < 1:
            raise RuntimeError(f"node {self.node_id[n]} hosts no replica of model {self.model_id[k]}")
        self.hosted[n, k] -= 1
        self.res_cpu[n] += self.d_cpu[k]
        self.res_ram[n] += self.d_ram[k]
        self.res_disk[n] += self.d_disk[k]
        self.check_node(n)

    # -------------------------------------------------------------- policy
    cdef inline double epsilon(self):
        if self.processed >= self.horizon:
            return self.eps_min
        return self.eps0 + (self.eps_min - self.eps0) * (<double>self.processed / <double>self.horizon)

    cdef long state_index(self, long k, long e, long omega):
        cdef long z = 0, n, q, i
        for n in range(self.N):
            z = (z << 1) | (1 if self.can_host(n, k) else 0)
        q = self.q_len[k] if self.q_len[k] < self.q_max else self.q_max
        i = z * self.K + k
        i = i * (self.q_max + 1) + q
        i = i * 2 + e
        return i * 16 + omega

    cdef long decide(self, long s):
        cdef long a
        if self.policy == P_NEVER:
            return 0
        if self.policy == P_ALWAYS:
            return 1
        if self.policy == P_RANDOM:
            return 1 if self.dec.random() < 0.5 else 0
        if self.dec.random() < self.epsilon():
            a = 1 if self.dec.random() < 0.5 else 0
        else:
            a = 1 if self.Q[s, 1] > self.Q[s, 0] else 0
        self.visits[s, a] += 1
        return a

    cdef void learn_from(self, long s, long a, double psi, double sec, double rel, double acc,
                         long s_next):
        cdef double r, old, best, target
        if not self.learn:
            return
        r = -self.w1 * psi + self.w2 * sec + self.w3 * rel + self.w4 * acc
        old = self.Q[s, a]
        best = self.Q[s_next, 0] if self.Q[s_next, 0] >= self.Q[s_next, 1] else self.Q[s_next, 1]
        target = r + self.gamma * best
        self.Q[s, a] = old + self.alpha * (target - old)

    # ------------------------------------------------------------ replicas
    cdef long spawn(self, long k, long rec, long n, double t, long pend_state, long pend_action,
                    bint pending, long reason) except -1:
        cdef long slot, total_live = 0, j
        self.allocate(n, k)
        if self.n_free == 0:
            raise RuntimeError("replica table full")
        self.n_free -= 1
        slot = self.free_slots[self.n_free]
        self.r_model[slot] = k
        self.r_rec[slot] = rec
        self.r_node[slot] = n
        self.r_state[slot] = SPAWNING
        self.r_start[slot] = t
        self.r_end[slot] = t + self.spawn_time[k]
        self.r_fresh[slot] = 1
        self.r_request[slot] = -1
        self.r_pending[slot] = pending
        self.r_pend_state[slot] = pend_state
        self.r_pend_action[slot] = pend_action
        self.live[k] += 1
        self.c[reason] += 1
        for j in range(self.K):
            total_live += self.live[j]
        if total_live > self.c[C_MAX_LIVE]:
            self.c[C_MAX_LIVE] = total_live
        self.push(self.r_end[slot], SPAWN_COMPLETE, slot)
        return slot

    cdef void terminate(self, long slot, long reason) except *:
        cdef long k = self.r_model[slot]
        self.release(self.r_node[slot], k)
        self.live[k] -= 1
        self.c[reason] += 1
        self.free_slots[self.n_free] = slot
        self.n_free += 1

    cdef void try_scale_up(self, long k, double t, long e) except *:
        cdef long n, s = -1, a, rec
        cdef bint up
        if self.live[k] == 0:
            up = self.q_len[k] > 0
        else:
            up = <double>self.q_len[k] / <double>self.live[k] > self.theta
        if not up:
            return
        n = self.first_fit(k)
        if n < 0:
            self.c[C_SCALEUPS_DROPPED] += 1
            return
        if self.learning:
            s = self.state_index(k, e, self.flags(k, 0))
        a = self.decide(s)
        self.c[C_DECISIONS_SPAWN] += 1
        rec = self.n_rec[k] - 1 if a else 0
        self.spawn(k, rec, n, t, s, a, self.learning, C_SPAWNS_SCALE)

    cdef void retry_starved(self, double t) except *:
        cdef long k
        for k in range(self.K):
            if self.live[k] == 0 and self.q_len[k] > 0:
                self.try_scale_up(k, t, 1)

    cdef void dispatch(self, long slot, double t) except *:
        cdef long k = self.r_model[slot]
        cdef long i = self.q_head[k]
        cdef double s = 0.0
        self.q_head[k] = self.q_next[i]
        self.q_len[k] -= 1
        if self.r_fresh[slot]:
            s = fmax(0.0, self.r_end[slot] - fmax(self.arr_t[i], self.r_start[slot]))
            self.r_fresh[slot] = 0
        self.r_state[slot] = BUSY
        self.r_request[slot] = i
        self.r_req_s[slot] = s
        self.r_req_q[slot] = (t - self.arr_t[i]) - s
        self.push(t + self.svc[i], DEPARTURE, slot)

    cdef void become_idle(self, long slot, double t) except *:
        cdef long k = self.r_model[slot]
        self.r_state[slot] = IDLE
        if self.q_len[k] > 0:
            self.dispatch(slot, t)
        elif self.live[k] > self.min_replicas:
            self.terminate(slot, C_TERM_IDLE)
            self.retry_starved(t)
        else:
            self.idle[k, self.idle_n[k]] = slot
            self.idle_n[k] += 1

    # -------------------------------------------------------------- events
    cdef void on_arrival(self, long k, double t) except *:
        cdef long i
        cdef _Stream ws
        if self.accepted == self.total:
            return
        ws = <_Stream>self.work[k]
        i = self.accepted
        self.accepted += 1
        self.c[C_ARRIVALS] += 1
        self.arr_t[i] = t
        self.svc[i] = ws.exponential(self.svc_mean[k])
        if self.accepted < self.total:
            self.push(t + ws.exponential(self.ia_mean), ARRIVAL, k)
        self.t_model[i] = self.model_id[k]
        self.q_next[i] = -1
        if self.q_len[k] == 0:
            self.q_head[k] = i
        else:
            self.q_next[self.q_tail[k]] = i
        self.q_tail[k] = i
        self.q_len[k] += 1
        if self.idle_n[k] > 0:
            self.idle_n[k] -= 1
            self.dispatch(self.idle[k, self.idle_n[k]], t)
        else:
            self.try_scale_up(k, t, 0)
        self.processed += 1

    cdef void on_departure(self, long slot, double t) except *:
        cdef long k = self.r_model[slot]
        cdef long i = self.r_request[slot]
        cdef long n = self.r_node[slot]
        cdef long rec = self.r_rec[slot]
        cdef double p = self.svc[i], tt = self.trans[n]
        cdef double s = self.r_req_s[slot], q = self.r_req_q[slot]
        cdef double tot = p + tt + s + q
        cdef double dep = t + tt
        cdef double sec = self.rec_sec[k, rec], rel = self.rec_rel[k, rec], acc = self.rec_acc[k, rec]
        cdef long omega, key = -1, a, s_next, nn
        self.t_node[i] = self.node_id[n]
        self.t_arr[i] = self.arr_t[i]
        self.t_dep[i] = dep
        self.t_proc[i] = p
        self.t_trans[i] = tt
        self.t_spawn[i] = s
        self.t_queue[i] = q
        self.t_total[i] = tot
        self.t_main[i] = self.rec_main[k, rec]
        self.t_sub[i] = self.rec_sub[k, rec]
        self.t_sec[i] = sec
        self.t_rel[i] = rel
        self.t_acc[i] = acc
        if (q < 0 or s < 0 or dep < self.arr_t[i]
                or fabs(tot - (dep - self.arr_t[i])) > TIME_TOL * fmax(1.0, dep)):
            self.c[C_DELAY_VIOL] += 1
        self.c[C_DEPARTURES] += 1

        omega = self.flags(k, rec)
        if self.r_pending[slot]:
            s_next = self.state_index(k, 1, omega)
            self.learn_from(self.r_pend_state[slot], self.r_pend_action[slot], tot, sec, rel, acc,
                            s_next)
            self.r_pending[slot] = 0
        self.r_state[slot] = IDLE
        self.r_request[slot] = -1

        if omega != 0 and (self.q_len[k] > 0 or self.live[k] <= self.min_replicas):
            if self.learning:
                key = self.state_index(k, 1, omega)
            a = self.decide(key)
            self.c[C_DECISIONS_POST] += 1
            if a:
                self.c[C_UPDATES_TAKEN] += 1
                self.terminate(slot, C_TERM_UPDATE)
                nn = self.first_fit(k)
                if nn < 0:
                    raise RuntimeError("no node for a replacement replica after release")
                self.spawn(k, self.n_rec[k] - 1, nn, t, key, a, self.learning, C_SPAWNS_UPDATE)
                return
            if self.learning:
                self.r_pending[slot] = 1
                self.r_pend_state[slot] = key
                self.r_pend_action[slot] = a
        self.become_idle(slot, t)

    cdef void loop(self) except *:
        cdef double t
        cdef long kind, payload, kk
        while self.h_n > 0:
            self.pop()
            t = self.h_time[self.h_n]
            kind = self.h_kind[self.h_n]
            payload = self.h_payload[self.h_n]
            self.apply_releases(t)
            self.c[C_EVENTS] += 1
            if kind == ARRIVAL:
                self.on_arrival(payload, t)
            elif kind == DEPARTURE:
                self.on_departure(payload, t)
            else:
                self.c[C_SPAWN_COMPLETIONS] += 1
                self.become_idle(payload, t)
            for kk in range(self.K):
                if self.idle_n[kk] > 0 and self.q_len[kk] > 0:
                    self.c[C_WORK_VIOL] += 1


def _replica_bound(cfg):
    total = 0
    for node in cfg.topology.nodes:
        best = 0
        for m in cfg.models:
            d = m.demand
            fit = min(node.cpu_capacity / d.cpu, node.ram_capacity / d.ram,
                      node.disk_capacity / d.disk)
            best = max(best, int(fit) + 1)
        total += best
    return total


def simulate(cfg, long replication=0, long sweep_index=0, qtable=None):
    """Run one replication. Returns ``(TraceTable, counters, latest_versions)``."""
    cdef _Sim sim = _Sim()
    cdef long K = len(cfg.models), k, j, n, cnt, slot
    cdef long total = cfg.total_arrivals
    models = list(cfg.models)
    nodes = sorted(cfg.topology.nodes, key=lambda x: x.id)
    codes = {"never": P_NEVER, "always": P_ALWAYS, "random": P_RANDOM, "qlearning": P_QLEARNING}

    sim.K = K
    sim.N = len(nodes)
    sim.total = total
    sim.q_max = cfg.qlearning.q_max
    sim.policy = codes[cfg.policy]
    sim.learning = cfg.policy == "qlearning"
    sim.learn = bool(cfg.learn)
    sim.horizon = cfg.decay_horizon
    sim.min_replicas = cfg.scaling.min_replicas
    sim.theta = cfg.scaling.queue_threshold
    sim.ia_mean = cfg.inter_arrival_mean
    sim.sub_step = cfg.sub_step
    sim.alpha = cfg.qlearning.alpha
    sim.gamma = cfg.qlearning.gamma
    sim.eps0 = cfg.qlearning.epsilon0
    sim.eps_min = cfg.qlearning.epsilon_min
    sim.w1, sim.w2, sim.w3, sim.w4 = cfg.reward.w1, cfg.reward.w2, cfg.reward.w3, cfg.reward.w4

    sim.d_cpu = np.array([float(m.demand.cpu) for m in models])
    sim.d_ram = np.array([float(m.demand.ram) for m in models])
    sim.d_disk = np.array([float(m.demand.disk) for m in models])
    sim.svc_mean = np.array([float(m.mean_service_time) for m in models])
    sim.spawn_time = np.array([float(m.spawn_time) for m in models])
    sim.caps = np.array([m.attribute_caps.as_tuple() for m in models], dtype=float).reshape(K, 3)
    sim.model_id = np.array([m.id for m in models], dtype=np.int_)

    sim.cap_cpu = np.array([float(x.cpu_capacity) for x in nodes])
    sim.cap_ram = np.array([float(x.ram_capacity) for x in nodes])
    sim.cap_disk = np.array([float(x.disk_capacity) for x in nodes])
    sim.res_cpu = np.array(sim.cap_cpu, copy=True)
    sim.res_ram = np.array(sim.cap_ram, copy=True)
    sim.res_disk = np.array(sim.cap_disk, copy=True)
    sim.trans = np.array([float(x.transmission_delay_to_master) for x in nodes])
    sim.node_id = np.array([x.id for x in nodes], dtype=np.int_)
    sim.hosted = np.zeros((sim.N, K), dtype=np.int_)

    sim.rec_cap = 1024
    sim.rec_main = np.zeros((K, sim.rec_cap), dtype=np.int_)
    sim.rec_sub = np.zeros((K, sim.rec_cap), dtype=np.int_)
    sim.rec_sec = np.zeros((K, sim.rec_cap))
    sim.rec_rel = np.zeros((K, sim.rec_cap))
    sim.rec_acc = np.zeros((K, sim.rec_cap))
    for k, m in enumerate(models):
        sim.rec_sec[k, 0] = m.initial_attributes.security
        sim.rec_rel[k, 0] = m.initial_attributes.reliability
        sim.rec_acc[k, 0] = m.initial_attributes.accuracy
    sim.n_rec = np.ones(K, dtype=np.int_)
    sim.main_idx = np.zeros(K, dtype=np.int_)
    sim.last_kind = np.full((K, 3), -1, dtype=np.int_)

    R = _replica_bound(cfg)
    sim.R = R
    sim.r_model = np.zeros(R, dtype=np.int_)
    sim.r_rec = np.zeros(R, dtype=np.int_)
    sim.r_node = np.zeros(R, dtype=np.int_)
    sim.r_state = np.zeros(R, dtype=np.int_)
    sim.r_request = np.full(R, -1, dtype=np.int_)
    sim.r_pend_state = np.zeros(R, dtype=np.int_)
    sim.r_pend_action = np.zeros(R, dtype=np.int_)
    sim.r_start = np.zeros(R)
    sim.r_end = np.zeros(R)
    sim.r_req_s = np.zeros(R)
    sim.r_req_q = np.zeros(R)
    sim.r_fresh = np.zeros(R, dtype=np.int8)
    sim.r_pending = np.zeros(R, dtype=np.int8)
    # pop order: slot 0 first
    sim.free_slots = np.arange(R - 1, -1, -1, dtype=np.int_)
    sim.n_free = R
    sim.idle = np.zeros((K, R), dtype=np.int_)
    sim.idle_n = np.zeros(K, dtype=np.int_)
    sim.live = np.zeros(K, dtype=np.int_)

    sim.q_head = np.full(K, -1, dtype=np.int_)
    sim.q_tail = np.full(K, -1, dtype=np.int_)
    sim.q_len = np.zeros(K, dtype=np.int_)
    sim.q_next = np.zeros(max(total, 1), dtype=np.int_)
    sim.arr_t = np.zeros(max(total, 1))
    sim.svc = np.zeros(max(total, 1))

    cap_heap = K + R + 16
    sim.h_time = np.zeros(cap_heap)
    sim.h_seq = np.zeros(cap_heap, dtype=np.int_)
    sim.h_kind = np.zeros(cap_heap, dtype=np.int_)
    sim.h_payload = np.zeros(cap_heap, dtype=np.int_)
    sim.h_n = 0
    sim.seq = 0

    if sim.learning:
        sim.Q = qtable.values
        sim.visits = qtable.visits
    else:
        sim.Q = np.zeros((1, 2))
        sim.visits = np.zeros((1, 2), dtype=np.int_)

    traces = TraceTable.empty(total)
    sim.t_model = traces.model_id
    sim.t_node = traces.node_id
    sim.t_main = traces.main
    sim.t_sub = traces.sub
    sim.t_arr = traces.arrival_time
    sim.t_dep = traces.departure_time
    sim.t_proc = traces.processing
    sim.t_trans = traces.transmission
    sim.t_spawn = traces.spawn
    sim.t_queue = traces.queuing
    sim.t_total = traces.total
    sim.t_sec = traces.security
    sim.t_rel = traces.reliability
    sim.t_acc = traces.accuracy

    sim.c = np.zeros(N_COUNTERS, dtype=np.int_)
    sim.accepted = 0
    sim.processed = 0

    sim.work = [_Stream(workload_seed(cfg.seed, replication, k)) for k in range(K)]
    sim.rel = [_Stream(release_seed(cfg.seed, replication, k)) for k in range(K)]
    sim.dec = _Stream(decision_seed(cfg.seed, replication, cfg.policy, sweep_index))

    # initial deployment: idle at time 0, no spawn delay
    for k, m in enumerate(models):
        for j in range(cfg.initial_replicas.get(m.id, 0)):
            n = sim.first_fit(k)
            if n < 0:
                raise RuntimeError(f"initial replicas of model {m.id} do not fit")
            sim.allocate(n, k)
            sim.n_free -= 1
            slot = sim.free_slots[sim.n_free]
            sim.r_model[slot] = k
            sim.r_rec[slot] = 0
            sim.r_node[slot] = n
            sim.r_state[slot] = IDLE
            sim.r_start[slot] = 0.0
            sim.r_end[slot] = 0.0
            sim.r_fresh[slot] = 0
            sim.r_pending[slot] = 0
            sim.live[k] += 1
            sim.idle[k, sim.idle_n[k]] = slot
            sim.idle_n[k] += 1
    cnt = 0
    for k in range(K):
        cnt += sim.live[k]
    sim.c[C_MAX_LIVE] = cnt

    horizon_t = cfg.release_horizon
    n_main = cfg.main_releases
    sim.n_main = n_main
    sim.main_times = np.array([horizon_t * j / (n_main + 1) for j in range(1, n_main + 1)]
                              + [0.0])
    sim.next_main = np.zeros(K, dtype=np.int_)
    sub_gap = horizon_t / ((n_main + 1) * cfg.subs_per_epoch) if cfg.subs_per_epoch > 0 else 0.0
    sim.sub_gap = sub_gap
    sim.next_sub = np.full(K, INFINITY)
    if sub_gap > 0:
        for k in range(K):
            sim.next_sub[k] = (<_Stream>sim.rel[k]).exponential(sub_gap)

    if total > 0:
        for k in range(K):
            sim.push((<_Stream>sim.work[k]).exponential(sim.ia_mean), ARRIVAL, k)

    sim.loop()

    counters = {name: int(sim.c[j]) for j, name in enumerate(COUNTERS)}
    latest = {int(sim.model_id[k]): Version(int(sim.rec_main[k, sim.n_rec[k] - 1]),
                                            int(sim.rec_sub[k, sim.n_rec[k] - 1]))
              for k in range(K)}
    return traces, counters, latest
