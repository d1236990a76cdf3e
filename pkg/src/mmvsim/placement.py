"""Per-node residual capacity and first-fit replica placement."""

from __future__ import annotations

from collections import Counter
from dataclasses import dataclass, field

from mmvsim.versioning import MLModelSpec, NodeSpec, ResourceDemand, Topology, Version


class CapacityError(RuntimeError):
    """Allocation would violate a node's CPU/RAM/disk capacity."""


class AccountingError(RuntimeError):
    """Release of a replica the node is not hosting."""


@dataclass
class NodeState:
    spec: NodeSpec
    residual_cpu: float = None
    residual_ram: float = None
    residual_disk: float = None
    # (model_id, main, sub) -> replica count
    replicas: Counter = field(default_factory=Counter)

    def __post_init__(self):
        if self.residual_cpu is None:
            self.residual_cpu = self.spec.cpu_capacity
        if self.residual_ram is None:
            self.residual_ram = self.spec.ram_capacity
        if self.residual_disk is None:
            self.residual_disk = self.spec.disk_capacity

    @property
    def id(self) -> int:
        return self.spec.id

    def used(self, demands: dict[int, ResourceDemand]) -> tuple[float, float, float]:
        """Resources held by hosted replicas, recomputed from the replica counts."""
        cpu = ram = disk = 0.0
        for (model_id, _, _), n in self.replicas.items():
            d = demands[model_id]
            cpu += d.cpu * n
            ram += d.ram * n
            disk += d.disk * n
        return cpu, ram, disk

    def copy(self) -> NodeState:
        return NodeState(self.spec, self.residual_cpu, self.residual_ram,
                         self.residual_disk, Counter(self.replicas))


def can_host(node: NodeState, demand: ResourceDemand) -> bool:
    return (demand.cpu <= node.residual_cpu
            and demand.ram <= node.residual_ram
            and demand.disk <= node.residual_disk)


def first_fit(nodes: list[NodeState], demand: ResourceDemand) -> int | None:
    """Lowest-id node that can host ``demand``, or None."""
    for node in sorted(nodes, key=lambda n: n.id):
        if can_host(node, demand):
            return node.id
    return None


def allocate(node: NodeState, model: MLModelSpec, version: Version) -> NodeState:
    d = model.demand
    if not can_host(node, d):
        raise CapacityError(
            f"node {node.id} cannot host model {model.id}: residual "
            f"({node.residual_cpu}, {node.residual_ram}, {node.residual_disk}) < demand {d}")
    node.residual_cpu -= d.cpu
    node.residual_ram -= d.ram
    node.residual_disk -= d.disk
    node.replicas[(model.id, version.main, version.sub)] += 1
    return node


def release(node: NodeState, model: MLModelSpec, version: Version) -> NodeState:
    key = (model.id, version.main, version.sub)
    if node.replicas[key] < 1:
        raise AccountingError(f"node {node.id} hosts no replica of model {model.id} v{version}")
    node.replicas[key] -= 1
    if not node.replicas[key]:
        del node.replicas[key]
    d = model.demand
    node.residual_cpu += d.cpu
    node.residual_ram += d.ram
    node.residual_disk += d.disk
    return node


def model_placeable(topology: Topology, demand: ResourceDemand) -> bool:
    """Whether some node could host ``demand`` when empty."""
    return (demand.cpu <= max(n.cpu_capacity for n in topology.nodes)
            and demand.ram <= max(n.ram_capacity for n in topology.nodes)
            and demand.disk <= max(n.disk_capacity for n in topology.nodes))


def placement_violations(topology: Topology, demand: ResourceDemand) -> list[str]:
    """Human-readable list of the placeability constraints ``demand`` breaks."""
    out = []
    for res in ("cpu", "ram", "disk"):
        cap = max(getattr(n, f"{res}_capacity") for n in topology.nodes)
        if getattr(demand, res) > cap:
            out.append(f"{res} placeability: demand {getattr(demand, res)} exceeds the "
                       f"largest node {res} capacity {cap}")
    return out
