"""Per-request trace records, stored column-wise."""

from __future__ import annotations

from dataclasses import dataclass, fields

import numpy as np

from mmvsim.versioning import AttributeTriple, Version

FLOAT_COLUMNS = ("arrival_time", "departure_time", "processing", "transmission",
                 "spawn", "queuing", "total", "security", "reliability", "accuracy")
INT_COLUMNS = ("model_id", "node_id", "main", "sub")
COLUMNS = ("model_id", "node_id", "arrival_time", "departure_time", "processing",
           "transmission", "spawn", "queuing", "total", "main", "sub",
           "security", "reliability", "accuracy")


@dataclass(frozen=True)
class RequestTrace:
    model_id: int
    version_served: Version
    processing: float
    transmission: float
    spawn: float
    queuing: float
    total: float
    attributes_served: AttributeTriple
    node_id: int = 0
    arrival_time: float = 0.0
    departure_time: float = 0.0

    @classmethod
    def build(cls, model_id, version, processing, transmission, spawn, queuing,
              attributes, node_id=0, arrival_time=0.0, departure_time=0.0) -> RequestTrace:
        """Create a trace whose total is the sum of its delay components."""
        total = processing + transmission + spawn + queuing
        return cls(model_id, version, processing, transmission, spawn, queuing, total,
                   attributes, node_id, arrival_time, departure_time)


@dataclass
class TraceTable:
    """Columns indexed by arrival ordinal (row ``i`` is the ``i``-th arrival)."""

    model_id: np.ndarray
    node_id: np.ndarray
    arrival_time: np.ndarray
    departure_time: np.ndarray
    processing: np.ndarray
    transmission: np.ndarray
    spawn: np.ndarray
    queuing: np.ndarray
    total: np.ndarray
    main: np.ndarray
    sub: np.ndarray
    security: np.ndarray
    reliability: np.ndarray
    accuracy: np.ndarray

    @classmethod
    def empty(cls, n: int) -> TraceTable:
        cols = {}
        for f in fields(cls):
            dtype = np.int64 if f.name in INT_COLUMNS else np.float64
            cols[f.name] = np.zeros(n, dtype=dtype)
        return cls(**cols)

    @classmethod
    def from_records(cls, records: list[RequestTrace]) -> TraceTable:
        t = cls.empty(len(records))
        for i, r in enumerate(records):
            t.set_row(i, r)
        return t

    def set_row(self, i: int, r: RequestTrace) -> None:
        self.model_id[i] = r.model_id
        self.node_id[i] = r.node_id
        self.arrival_time[i] = r.arrival_time
        self.departure_time[i] = r.departure_time
        self.processing[i] = r.processing
        self.transmission[i] = r.transmission
        self.spawn[i] = r.spawn
        self.queuing[i] = r.queuing
        self.total[i] = r.total
        self.main[i] = r.version_served.main
        self.sub[i] = r.version_served.sub
        self.security[i] = r.attributes_served.security
        self.reliability[i] = r.attributes_served.reliability
        self.accuracy[i] = r.attributes_served.accuracy

    def row(self, i: int) -> RequestTrace:
        return RequestTrace(
            int(self.model_id[i]), Version(int(self.main[i]), int(self.sub[i])),
            float(self.processing[i]), float(self.transmission[i]), float(self.spawn[i]),
            float(self.queuing[i]), float(self.total[i]),
            AttributeTriple(float(self.security[i]), float(self.reliability[i]),
                            float(self.accuracy[i])),
            int(self.node_id[i]), float(self.arrival_time[i]), float(self.departure_time[i]))

    def __len__(self) -> int:
        return len(self.total)

    def take(self, idx) -> TraceTable:
        return TraceTable(**{f.name: getattr(self, f.name)[idx] for f in fields(self)})

    def columns(self) -> dict[str, np.ndarray]:
        return {name: getattr(self, name) for name in COLUMNS}

    def equals(self, other: TraceTable) -> bool:
        return all(np.array_equal(getattr(self, n), getattr(other, n)) for n in COLUMNS)
