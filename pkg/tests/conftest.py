import sys

import pytest

from mmvsim.config import SimulationConfig


def small_config(**changes):
    """Default topology and models, scaled down so a run takes milliseconds."""
    base = SimulationConfig(total_arrivals=4000, subs_per_epoch=40, replications=2)
    return base.with_(**changes)


@pytest.fixture
def small_cfg():
    return small_config()


def single_node_topology(cpu=16, ram=16, disk=1.0, delay=0.0):
    from mmvsim.versioning import NodeSpec, Topology

    return Topology((NodeSpec(1, cpu, ram, disk, delay),), link_count=1, master_node_id=1)


def pytest_terminal_summary(terminalreporter):
    mod = sys.modules.get("test_acceptance")
    if mod is None or not mod.RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for n, title in mod.TITLES.items():
        if n in mod.RESULTS:
            ok, detail = mod.RESULTS[n]
            terminalreporter.write_line(f"[{'PASS' if ok else 'FAIL'}] {n:2d}. {title}: {detail}")
        else:
            terminalreporter.write_line(f"[----] {n:2d}. {title}: not run")
