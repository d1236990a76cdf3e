"""Models, versions, nodes and the version repository.

A version is ``main.sub``. A main release bumps ``main``, resets ``sub`` to 0 and
improves every attribute; a sub-release bumps ``sub`` and improves exactly one
attribute. Attributes only ever go up and are clamped at the model's caps.
"""

from __future__ import annotations

from dataclasses import dataclass, field

SUB_KINDS = ("security", "reliability", "accuracy")

# main-release increments (absolute, on [0, 1] attributes)
MAIN_STEP_SECURITY = 0.02
MAIN_STEP_ACCURACY = 0.02
MAIN_STEP_RELIABILITY = 0.005
SUB_STEP = 1e-5


class UnknownModelError(KeyError):
    """Raised when an operation names a model the repository does not know."""


@dataclass(frozen=True, order=True, slots=True)
class Version:
    main: int = 0
    sub: int = 0

    def __post_init__(self):
        if self.main < 0 or self.sub < 0:
            raise ValueError(f"version components must be non-negative: {self.main}.{self.sub}")

    def __str__(self) -> str:
        return f"{self.main}.{self.sub}"


@dataclass(frozen=True, slots=True)
class AttributeTriple:
    security: float
    reliability: float
    accuracy: float

    def get(self, kind: str) -> float:
        return getattr(self, kind)

    def as_tuple(self) -> tuple[float, float, float]:
        return (self.security, self.reliability, self.accuracy)


@dataclass(frozen=True, slots=True)
class ResourceDemand:
    cpu: float
    ram: float
    disk: float

    def __post_init__(self):
        if min(self.cpu, self.ram, self.disk) <= 0:
            raise ValueError(f"resource demand must be strictly positive: {self}")


@dataclass(frozen=True)
class MLModelSpec:
    id: int
    demand: ResourceDemand
    mean_service_time: float
    spawn_time: float
    initial_attributes: AttributeTriple
    attribute_caps: AttributeTriple = AttributeTriple(1.0, 1.0, 1.0)

    def __post_init__(self):
        if self.mean_service_time <= 0:
            raise ValueError(f"model {self.id}: mean_service_time must be > 0")
        if self.spawn_time < 0:
            raise ValueError(f"model {self.id}: spawn_time must be >= 0")
        for kind in SUB_KINDS:
            if self.initial_attributes.get(kind) > self.attribute_caps.get(kind):
                raise ValueError(f"model {self.id}: initial {kind} above its cap")


@dataclass(frozen=True, slots=True)
class NodeSpec:
    id: int
    cpu_capacity: float
    ram_capacity: float
    disk_capacity: float
    transmission_delay_to_master: float = 0.0

    def __post_init__(self):
        if min(self.cpu_capacity, self.ram_capacity, self.disk_capacity) <= 0:
            raise ValueError(f"node {self.id}: capacities must be positive")
        if self.transmission_delay_to_master < 0:
            raise ValueError(f"node {self.id}: transmission delay must be >= 0")


@dataclass(frozen=True)
class Topology:
    nodes: tuple[NodeSpec, ...]
    link_count: int = 0
    master_node_id: int = 1

    def __post_init__(self):
        ids = [n.id for n in self.nodes]
        if len(set(ids)) != len(ids):
            raise ValueError(f"duplicate node ids: {ids}")
        if self.master_node_id not in ids:
            raise ValueError(f"master node {self.master_node_id} not among nodes {ids}")

    @property
    def node_count(self) -> int:
        return len(self.nodes)


@dataclass(frozen=True, slots=True)
class UpdateFlags:
    main_pending: int = 0
    security_pending: int = 0
    reliability_pending: int = 0
    accuracy_pending: int = 0

    def __iter__(self):
        yield from (self.main_pending, self.security_pending,
                    self.reliability_pending, self.accuracy_pending)

    def any(self) -> bool:
        return any(self)

    def bits(self) -> int:
        """Pack as a 4-bit integer, main flag in the most significant bit."""
        m, s, r, a = self
        return (m << 3) | (s << 2) | (r << 1) | a

    @classmethod
    def from_bits(cls, bits: int) -> UpdateFlags:
        return cls((bits >> 3) & 1, (bits >> 2) & 1, (bits >> 1) & 1, bits & 1)


@dataclass(frozen=True, slots=True)
class VersionRecord:
    model_id: int
    version: Version
    attributes: AttributeTriple
    # "initial", "main" or one of SUB_KINDS
    kind: str = "initial"


def next_version(v: Version, decision: int, kind: str) -> Version:
    """Version reached from ``v`` after update decision ``decision``."""
    if not decision:
        return v
    if kind == "sub":
        return Version(v.main, v.sub + 1)
    if kind == "main":
        return Version(v.main + 1, 0)
    raise ValueError(f"unknown release kind {kind!r}")


@dataclass
class _ModelHistory:
    spec: MLModelSpec
    records: list[VersionRecord] = field(default_factory=list)
    index: dict[Version, int] = field(default_factory=dict)
    main_index: int = 0
    last_sub_index: dict[str, int] = field(default_factory=lambda: dict.fromkeys(SUB_KINDS, -1))

    def append(self, record: VersionRecord) -> None:
        i = len(self.records)
        self.records.append(record)
        self.index[record.version] = i
        if record.kind == "main":
            self.main_index = i
        elif record.kind in self.last_sub_index:
            self.last_sub_index[record.kind] = i


class VersionRepository:
    """Append-only release history per model, starting at version 0.0.

    ``sub_step`` is the absolute improvement of one sub-release.
    """

    def __init__(self, models, sub_step: float = SUB_STEP):
        self.sub_step = sub_step
        self._models: dict[int, _ModelHistory] = {}
        for spec in models:
            h = _ModelHistory(spec)
            h.append(VersionRecord(spec.id, Version(0, 0), spec.initial_attributes, "initial"))
            self._models[spec.id] = h

    def _history(self, model_id: int) -> _ModelHistory:
        try:
            return self._models[model_id]
        except KeyError:
            raise UnknownModelError(f"model {model_id} is not configured") from None

    def model_ids(self) -> list[int]:
        return list(self._models)

    def spec(self, model_id: int) -> MLModelSpec:
        return self._history(model_id).spec

    def history(self, model_id: int) -> tuple[VersionRecord, ...]:
        """Release history, oldest first (a snapshot; the repository only appends)."""
        return tuple(self._history(model_id).records)

    def latest(self, model_id: int) -> VersionRecord:
        return self._history(model_id).records[-1]

    def initial(self, model_id: int) -> VersionRecord:
        return self._history(model_id).records[0]

    def index_of(self, model_id: int, version: Version) -> int:
        return self._history(model_id).index[version]

    def record_at(self, model_id: int, index: int) -> VersionRecord:
        return self._history(model_id).records[index]

    def _append(self, model_id: int, record: VersionRecord) -> VersionRecord:
        self._history(model_id).append(record)
        return record


def apply_main_release(repo: VersionRepository, model_id: int) -> VersionRecord:
    h = repo._history(model_id)
    prev = h.records[-1]
    a, cap = prev.attributes, h.spec.attribute_caps
    attrs = AttributeTriple(
        security=min(cap.security, a.security + MAIN_STEP_SECURITY),
        reliability=min(cap.reliability, a.reliability + MAIN_STEP_RELIABILITY),
        accuracy=min(cap.accuracy, a.accuracy + MAIN_STEP_ACCURACY),
    )
    version = next_version(prev.version, 1, "main")
    return repo._append(model_id, VersionRecord(model_id, version, attrs, "main"))


def apply_sub_release(repo: VersionRepository, model_id: int, kind: str) -> VersionRecord:
    if kind not in SUB_KINDS:
        raise ValueError(f"unknown sub-release kind {kind!r}")
    h = repo._history(model_id)
    prev = h.records[-1]
    values = {k: prev.attributes.get(k) for k in SUB_KINDS}
    values[kind] = min(h.spec.attribute_caps.get(kind), values[kind] + repo.sub_step)
    version = next_version(prev.version, 1, "sub")
    return repo._append(model_id, VersionRecord(model_id, version, AttributeTriple(**values), kind))


def update_flags(current: VersionRecord, repo: VersionRepository) -> UpdateFlags:
    """Which kinds of improvement the latest release has over ``current``.

    A sub-release kind counts only if it was released after ``current`` and on
    the latest main version; older sub-releases are subsumed by the main bump.
    """
    h = repo._history(current.model_id)
    latest = h.records[-1]
    cur = h.index[current.version]
    floor = max(cur, h.main_index)
    return UpdateFlags(
        int(latest.version.main > current.version.main),
        *(int(h.last_sub_index[k] > floor) for k in SUB_KINDS),
    )
