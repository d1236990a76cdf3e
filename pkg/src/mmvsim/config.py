"""Simulation configuration: defaults, INI parsing and validation.

Config files are INI documents (``configparser``). Every section and key is
optional; anything left out takes the default below. Grammar::

    [simulation]
    policy = qlearning            ; always | never | random | qlearning
    inter_arrival_mean = 8        ; per-model mean time between arrivals
    total_arrivals = 1000000      ; arrivals over all models
    seed = 1
    replications = 10
    subs_per_epoch = 10000        ; expected sub-releases between main releases
    main_releases = 10
    release_reference_inter_arrival = 8
    sub_step = 1e-5               ; improvement of one sub-release

    [sweep]
    inter_arrival_means = 8, 6.5, 5.5, 4.5, 3.75, 3.25
    policies = always, never, random, qlearning

    [scaling]
    queue_threshold = 2.0         ; "inf" leaves only cold-start spawns
    min_replicas = 0

    [qlearning]
    alpha = 0.01
    gamma = 0.99
    epsilon0 = 1.0
    epsilon_min = 0.001
    decay_horizon =               ; empty: total_arrivals / 2
    q_max = 20
    learn = true
    qtable_in =                   ; optional CSV exported by an earlier run

    [reward]
    w1 = 1
    w2 = 10
    w3 = 10
    w4 = 10

    [topology]
    links = 5
    master = 1

    [node 1]                      ; one section per node; replaces the defaults
    cpu = 16
    ram = 16
    disk = 1
    transmission = 0

    [model 5]                     ; one section per model; replaces the defaults
    cpu = 5
    ram = 6
    disk = 0.01
    service_time = 10
    spawn_time = 10
    security = 0.6
    reliability = 0.9
    accuracy = 0.7
    security_cap = 1              ; caps default to 1
    initial_replicas = 0          ; replicas deployed (ready) at time 0

    [trace]
    model = 5
    window = 500
    start =                       ; empty: total_arrivals / 2

Releases happen on a fixed wall-clock schedule: the release horizon is
``total_arrivals * release_reference_inter_arrival / n_models``, independent of
the configured inter-arrival mean. At higher load the same number of requests
spans less time and therefore sees fewer releases.
"""

from __future__ import annotations

import configparser
import math
from dataclasses import dataclass, field, replace
from pathlib import Path

from mmvsim.autoscaler import ScalingConfig
from mmvsim.placement import placement_violations
from mmvsim.policy import QConfig, RewardWeights
from mmvsim.versioning import AttributeTriple, MLModelSpec, NodeSpec, ResourceDemand, Topology

POLICIES = ("always", "never", "random", "qlearning")
DEFAULT_SWEEP = (8.0, 6.5, 5.5, 4.5, 3.75, 3.25)


class ConfigError(ValueError):
    """Unparseable or invalid configuration; ``errors`` lists every problem found."""

    def __init__(self, errors):
        self.errors = list(errors)
        super().__init__("; ".join(self.errors))


def default_topology() -> Topology:
    """Four-node star; node 1 is the master and also a worker."""
    delays = (0.0, 2.75, 7.25, 10.25)
    nodes = tuple(NodeSpec(i + 1, 16, 16, 1.0, d) for i, d in enumerate(delays))
    return Topology(nodes, link_count=5, master_node_id=1)


def default_models() -> tuple[MLModelSpec, ...]:
    cpu = (1, 2, 3, 4, 5)
    ram = (1, 1, 2, 2, 6)
    security = (0.6, 0.6, 0.6, 0.7, 0.6)
    accuracy = (0.5, 0.5, 0.5, 0.7, 0.7)
    return tuple(
        MLModelSpec(
            id=k + 1,
            demand=ResourceDemand(cpu[k], ram[k], 0.01),
            mean_service_time=10.0,
            spawn_time=10.0,
            initial_attributes=AttributeTriple(security[k], 0.9, accuracy[k]),
        )
        for k in range(5)
    )


@dataclass(frozen=True)
class SimulationConfig:
    topology: Topology = field(default_factory=default_topology)
    models: tuple[MLModelSpec, ...] = field(default_factory=default_models)
    inter_arrival_mean: float = 8.0
    total_arrivals: int = 1_000_000
    policy: str = "qlearning"
    qlearning: QConfig = field(default_factory=QConfig)
    reward: RewardWeights = field(default_factory=RewardWeights)
    scaling: ScalingConfig = field(default_factory=ScalingConfig)
    subs_per_epoch: float = 10_000
    main_releases: int = 10
    release_reference_inter_arrival: float = 8.0
    sub_step: float = 1e-5
    seed: int = 1
    replications: int = 10
    sweep: tuple[float, ...] = DEFAULT_SWEEP
    sweep_policies: tuple[str, ...] = POLICIES
    # model id -> replicas ready at time 0
    initial_replicas: dict = field(default_factory=dict)
    learn: bool = True
    qtable_in: str | None = None
    trace_model: int = 5
    trace_window: int = 500
    trace_start: int | None = None

    @property
    def model_ids(self) -> tuple[int, ...]:
        return tuple(m.id for m in self.models)

    @property
    def release_horizon(self) -> float:
        return self.total_arrivals * self.release_reference_inter_arrival / len(self.models)

    @property
    def decay_horizon(self) -> int:
        return self.qlearning.horizon_for(self.total_arrivals)

    def with_(self, **changes) -> SimulationConfig:
        return replace(self, **changes)


def validate(cfg: SimulationConfig) -> list[str]:
    """Every violated constraint, as messages; empty when the config is usable."""
    errors = []
    for m in cfg.models:
        for msg in placement_violations(cfg.topology, m.demand):
            errors.append(f"model {m.id}: {msg}")
    if len(set(cfg.model_ids)) != len(cfg.models):
        errors.append(f"duplicate model ids {cfg.model_ids}")
    if not cfg.models:
        errors.append("no models configured")
    if cfg.total_arrivals <= 0:
        errors.append("total_arrivals must be > 0")
    if cfg.replications < 1:
        errors.append("replications must be >= 1")
    if not cfg.inter_arrival_mean > 0:
        errors.append("inter_arrival_mean must be > 0")
    if any(not x > 0 for x in cfg.sweep):
        errors.append("sweep inter-arrival means must be > 0")
    if cfg.policy not in POLICIES:
        errors.append(f"unknown policy {cfg.policy!r}; expected one of {', '.join(POLICIES)}")
    for p in cfg.sweep_policies:
        if p not in POLICIES:
            errors.append(f"unknown sweep policy {p!r}")
    if cfg.subs_per_epoch < 0:
        errors.append("subs_per_epoch must be >= 0")
    if cfg.main_releases < 0:
        errors.append("main_releases must be >= 0")
    if not cfg.release_reference_inter_arrival > 0:
        errors.append("release_reference_inter_arrival must be > 0")
    if cfg.sub_step < 0:
        errors.append("sub_step must be >= 0")
    for mid, n in cfg.initial_replicas.items():
        if mid not in cfg.model_ids:
            errors.append(f"initial replicas for unknown model {mid}")
        elif n < 0:
            errors.append(f"model {mid}: initial_replicas must be >= 0")
    if cfg.trace_model not in cfg.model_ids:
        errors.append(f"trace model {cfg.trace_model} is not configured")
    if cfg.trace_window <= 0:
        errors.append("trace window must be > 0")
    return errors


def check(cfg: SimulationConfig) -> SimulationConfig:
    errors = validate(cfg)
    if errors:
        raise ConfigError(errors)
    return cfg


_SIM_KEYS = {
    "policy": str, "inter_arrival_mean": float, "total_arrivals": int, "seed": int,
    "replications": int, "subs_per_epoch": float, "main_releases": int,
    "release_reference_inter_arrival": float, "sub_step": float,
}
_NODE_KEYS = {"cpu", "ram", "disk", "transmission"}
_MODEL_KEYS = {"cpu", "ram", "disk", "service_time", "spawn_time", "security", "reliability",
               "accuracy", "security_cap", "reliability_cap", "accuracy_cap", "initial_replicas"}


def _number(text: str, kind, where: str, errors: list[str]):
    text = text.strip()
    try:
        if kind is int:
            return int(text)
        return float(text)
    except ValueError:
        errors.append(f"{where}: cannot parse {text!r} as {kind.__name__}")
        return None


def _unknown(section, allowed, errors):
    for key in section:
        if key not in allowed:
            errors.append(f"[{section.name}]: unknown key {key!r}")


def parse_config(text: str, source: str = "<string>") -> SimulationConfig:
    cp = configparser.ConfigParser(inline_comment_prefixes=(";", "#"), interpolation=None)
    try:
        cp.read_string(text, source=source)
    except configparser.Error as exc:
        raise ConfigError([f"{source}: {exc}"]) from None

    errors: list[str] = []
    base = SimulationConfig()
    kw: dict = {}

    if cp.has_section("simulation"):
        sec = cp["simulation"]
        _unknown(sec, _SIM_KEYS, errors)
        for key, kind in _SIM_KEYS.items():
            if key in sec:
                if kind is str:
                    kw[key] = sec[key].strip()
                else:
                    v = _number(sec[key], kind, f"[simulation] {key}", errors)
                    if v is not None:
                        kw[key] = v

    if cp.has_section("sweep"):
        sec = cp["sweep"]
        _unknown(sec, {"inter_arrival_means", "policies"}, errors)
        if "inter_arrival_means" in sec:
            vals = [_number(x, float, "[sweep] inter_arrival_means", errors)
                    for x in sec["inter_arrival_means"].split(",") if x.strip()]
            kw["sweep"] = tuple(v for v in vals if v is not None)
        if "policies" in sec:
            kw["sweep_policies"] = tuple(p.strip() for p in sec["policies"].split(",") if p.strip())

    scaling = {}
    if cp.has_section("scaling"):
        sec = cp["scaling"]
        _unknown(sec, {"queue_threshold", "min_replicas"}, errors)
        if "queue_threshold" in sec:
            scaling["queue_threshold"] = _number(sec["queue_threshold"], float,
                                                 "[scaling] queue_threshold", errors)
        if "min_replicas" in sec:
            scaling["min_replicas"] = _number(sec["min_replicas"], int,
                                              "[scaling] min_replicas", errors)

    qkw = {}
    if cp.has_section("qlearning"):
        sec = cp["qlearning"]
        _unknown(sec, {"alpha", "gamma", "epsilon0", "epsilon_min", "decay_horizon", "q_max",
                       "learn", "qtable_in"}, errors)
        for key in ("alpha", "gamma", "epsilon0", "epsilon_min"):
            if key in sec:
                qkw[key] = _number(sec[key], float, f"[qlearning] {key}", errors)
        for key in ("decay_horizon", "q_max"):
            if sec.get(key, "").strip():
                qkw[key] = _number(sec[key], int, f"[qlearning] {key}", errors)
        if "learn" in sec:
            try:
                kw["learn"] = sec.getboolean("learn")
            except ValueError:
                errors.append(f"[qlearning] learn: not a boolean: {sec['learn']!r}")
        if sec.get("qtable_in", "").strip():
            kw["qtable_in"] = sec["qtable_in"].strip()

    wkw = {}
    if cp.has_section("reward"):
        sec = cp["reward"]
        _unknown(sec, {"w1", "w2", "w3", "w4"}, errors)
        for key in ("w1", "w2", "w3", "w4"):
            if key in sec:
                wkw[key] = _number(sec[key], float, f"[reward] {key}", errors)

    links, master = base.topology.link_count, base.topology.master_node_id
    if cp.has_section("topology"):
        sec = cp["topology"]
        _unknown(sec, {"links", "master"}, errors)
        if "links" in sec:
            links = _number(sec["links"], int, "[topology] links", errors)
        if "master" in sec:
            master = _number(sec["master"], int, "[topology] master", errors)

    nodes, models, initial = [], [], {}
    for name in cp.sections():
        head, _, ident = name.partition(" ")
        if head not in ("node", "model"):
            if name not in ("simulation", "sweep", "scaling", "qlearning", "reward",
                            "topology", "trace"):
                errors.append(f"unknown section [{name}]")
            continue
        idn = _number(ident, int, f"[{name}] id", errors) if ident.strip() else None
        if idn is None:
            errors.append(f"[{name}]: section needs an integer id, e.g. [{head} 1]")
            continue
        sec = cp[name]
        if head == "node":
            _unknown(sec, _NODE_KEYS, errors)
            vals = {k: _number(sec.get(k, d), float, f"[{name}] {k}", errors)
                    for k, d in (("cpu", "16"), ("ram", "16"), ("disk", "1"),
                                 ("transmission", "0"))}
            try:
                nodes.append(NodeSpec(idn, vals["cpu"], vals["ram"], vals["disk"],
                                      vals["transmission"]))
            except (TypeError, ValueError) as exc:
                errors.append(f"[{name}]: {exc}")
        else:
            _unknown(sec, _MODEL_KEYS, errors)
            dflt = {m.id: m for m in default_models()}.get(idn, default_models()[0])
            get = lambda k, d: _number(sec.get(k, str(d)), float, f"[{name}] {k}", errors)  # noqa: E731
            try:
                models.append(MLModelSpec(
                    id=idn,
                    demand=ResourceDemand(get("cpu", dflt.demand.cpu), get("ram", dflt.demand.ram),
                                          get("disk", dflt.demand.disk)),
                    mean_service_time=get("service_time", dflt.mean_service_time),
                    spawn_time=get("spawn_time", dflt.spawn_time),
                    initial_attributes=AttributeTriple(
                        get("security", dflt.initial_attributes.security),
                        get("reliability", dflt.initial_attributes.reliability),
                        get("accuracy", dflt.initial_attributes.accuracy)),
                    attribute_caps=AttributeTriple(get("security_cap", 1.0),
                                                   get("reliability_cap", 1.0),
                                                   get("accuracy_cap", 1.0)),
                ))
            except (TypeError, ValueError) as exc:
                errors.append(f"[{name}]: {exc}")
            if "initial_replicas" in sec:
                initial[idn] = _number(sec["initial_replicas"], int,
                                       f"[{name}] initial_replicas", errors)

    if cp.has_section("trace"):
        sec = cp["trace"]
        _unknown(sec, {"model", "window", "start"}, errors)
        if "model" in sec:
            kw["trace_model"] = _number(sec["model"], int, "[trace] model", errors)
        if "window" in sec:
            kw["trace_window"] = _number(sec["window"], int, "[trace] window", errors)
        if sec.get("start", "").strip():
            kw["trace_start"] = _number(sec["start"], int, "[trace] start", errors)

    if errors:
        raise ConfigError(errors)

    try:
        if nodes or cp.has_section("topology"):
            nodes = sorted(nodes, key=lambda n: n.id) or list(base.topology.nodes)
            kw["topology"] = Topology(tuple(nodes), links, master)
        if models:
            kw["models"] = tuple(sorted(models, key=lambda m: m.id))
        if scaling:
            kw["scaling"] = ScalingConfig(**scaling)
        if qkw:
            kw["qlearning"] = QConfig(**qkw)
        if wkw:
            kw["reward"] = RewardWeights(**wkw)
    except (TypeError, ValueError) as exc:
        raise ConfigError([str(exc)]) from None
    kw["initial_replicas"] = {k: v for k, v in initial.items() if v}

    return check(replace(base, **kw))


def load_config(path) -> SimulationConfig:
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise ConfigError([f"cannot read {path}: {exc.strerror}"]) from None
    return parse_config(text, source=str(path))


def format_number(x: float) -> str:
    """Nine significant digits; used for every float written to CSV."""
    if math.isnan(x):
        return ""
    return format(x, ".9g")
