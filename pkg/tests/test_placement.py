import random

import pytest

from mmvsim.config import default_models, default_topology
from mmvsim.placement import (
    AccountingError,
    CapacityError,
    NodeState,
    allocate,
    can_host,
    first_fit,
    model_placeable,
    placement_violations,
    release,
)
from mmvsim.versioning import ResourceDemand, Version

V0 = Version(0, 0)


@pytest.fixture
def nodes():
    return [NodeState(spec) for spec in default_topology().nodes]


@pytest.fixture
def models():
    return {m.id: m for m in default_models()}


def test_can_host_examples(nodes, models):
    assert can_host(nodes[0], ResourceDemand(5, 6, 0.01))
    exhausted = NodeState(nodes[0].spec, residual_cpu=0, residual_ram=16, residual_disk=1)
    assert not can_host(exhausted, ResourceDemand(1, 1, 0.01))


def test_third_model5_replica_refused(nodes, models):
    node = nodes[0]
    allocate(node, models[5], V0)
    allocate(node, models[5], V0)
    # 2 x 6 GB used, 4 GB left, a third needs 6
    assert node.residual_ram == 4
    assert not can_host(node, models[5].demand)
    with pytest.raises(CapacityError):
        allocate(node, models[5], V0)


def test_first_fit_examples(nodes, models):
    assert first_fit(nodes, ResourceDemand(1, 1, 0.01)) == 1
    for _ in range(16):
        allocate(nodes[0], models[1], V0)
    assert first_fit(nodes, ResourceDemand(1, 1, 0.01)) == 2
    assert first_fit(nodes, ResourceDemand(17, 1, 0.01)) is None


def test_first_fit_ignores_input_order(nodes):
    assert first_fit(list(reversed(nodes)), ResourceDemand(1, 1, 0.01)) == 1


def test_allocate_and_release(nodes, models):
    node = nodes[0]
    allocate(node, models[1], V0)
    assert (node.residual_cpu, node.residual_ram) == (15, 15)
    assert node.residual_disk == pytest.approx(0.99, abs=1e-15)
    release(node, models[1], V0)
    assert (node.residual_cpu, node.residual_ram, node.residual_disk) == (16, 16, 1.0)
    assert not node.replicas


def test_sixteen_model1_replicas(nodes, models):
    node = nodes[0]
    for _ in range(16):
        allocate(node, models[1], V0)
    assert (node.residual_cpu, node.residual_ram) == (0, 0)
    assert node.residual_disk == pytest.approx(0.84, abs=1e-12)


def test_release_unhosted(nodes, models):
    with pytest.raises(AccountingError):
        release(nodes[0], models[1], V0)
    allocate(nodes[0], models[1], V0)
    with pytest.raises(AccountingError):
        release(nodes[0], models[1], Version(1, 0))


def test_replayed_ledger(nodes, models):
    rng = random.Random(7)
    node = nodes[0]
    live = []
    for _ in range(100):
        if live and rng.random() < 0.5:
            m, v = live.pop(rng.randrange(len(live)))
            release(node, m, v)
        else:
            m = models[rng.choice([1, 2, 3])]
            if can_host(node, m.demand):
                v = Version(rng.randrange(3), rng.randrange(5))
                allocate(node, m, v)
                live.append((m, v))
    used_cpu = sum(m.demand.cpu for m, _ in live)
    used_ram = sum(m.demand.ram for m, _ in live)
    used_disk = sum(m.demand.disk for m, _ in live)
    assert node.residual_cpu == pytest.approx(16 - used_cpu, abs=1e-9)
    assert node.residual_ram == pytest.approx(16 - used_ram, abs=1e-9)
    assert node.residual_disk == pytest.approx(1 - used_disk, abs=1e-9)
    demands = {k: m.demand for k, m in models.items()}
    assert node.used(demands) == pytest.approx((used_cpu, used_ram, used_disk), abs=1e-9)


def test_model_placeable_examples():
    topo = default_topology()
    assert model_placeable(topo, ResourceDemand(5, 6, 0.01))
    assert model_placeable(topo, ResourceDemand(16, 16, 1))
    assert not model_placeable(topo, ResourceDemand(16.5, 1, 0.01))


def test_placement_violations_name_every_resource():
    msgs = placement_violations(default_topology(), ResourceDemand(17, 20, 2))
    assert len(msgs) == 3
    assert [m.split()[0] for m in msgs] == ["cpu", "ram", "disk"]
    assert placement_violations(default_topology(), ResourceDemand(1, 1, 0.01)) == []
