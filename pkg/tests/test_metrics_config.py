import math

import numpy as np
import pytest

from mmvsim.config import (
    DEFAULT_SWEEP,
    ConfigError,
    SimulationConfig,
    format_number,
    load_config,
    parse_config,
)
from mmvsim.metrics import (
    aggregate,
    confidence_interval,
    erlang_load,
    objectives,
    subversion_trace,
    weighted_initial_mean,
)
from mmvsim.traces import RequestTrace, TraceTable
from mmvsim.versioning import AttributeTriple, Version


def trace(total=22.75, acc=0.5, sec=0.6, rel=0.9, model=1):
    return RequestTrace.build(model, Version(0, 0), 10.0, total - 10.0, 0.0, 0.0,
                              AttributeTriple(sec, rel, acc))


def test_erlang_load_examples():
    assert erlang_load(1, 1, 1) == 1.0
    assert erlang_load(1 / 8, 1 / 10, 4) == 0.3125
    assert erlang_load(1 / 3.25, 1 / 10, 4) == pytest.approx(0.769, abs=5e-4)
    with pytest.raises(ValueError):
        erlang_load(1, 0, 1)
    with pytest.raises(ValueError):
        erlang_load(1, 1, 0)


def test_objectives_singleton():
    r = objectives([trace()])
    assert (r.o1_mean_delay, r.o2_mean_accuracy, r.o3_mean_security, r.o4_mean_reliability) == (
        22.75, 0.5, 0.6, 0.9)
    assert r.request_count == {1: 1}


def test_objectives_two_traces():
    assert objectives([trace(10), trace(30)]).o1_mean_delay == 20


def test_objectives_empty():
    with pytest.raises(ValueError):
        objectives([])


def test_objectives_per_model():
    r = objectives([trace(10, model=1), trace(30, model=2), trace(50, model=2)])
    assert r.request_count == {1: 1, 2: 2}
    assert r.per_model[2]["o1_mean_delay"] == 40


def test_confidence_interval_examples():
    assert confidence_interval([3.0] * 5) == (3.0, 0.0)
    mean, hw = confidence_interval([0.0, 2.0])
    assert mean == 1.0
    # t-table: t_{0.99, 1} = 31.8205
    assert hw == pytest.approx(31.8205, abs=1e-4)
    x = np.random.default_rng(0).standard_normal(10_000)
    _, hw = confidence_interval(x)
    assert hw == pytest.approx(2.326 / 100, rel=0.1)
    with pytest.raises(ValueError):
        confidence_interval([1.0])


def test_confidence_interval_ten_replications():
    # t_{0.99, 9} = 2.8214 from the table
    xs = [1, 2, 3, 4, 5, 6, 7, 8, 9, 10]
    mean, hw = confidence_interval(xs)
    assert mean == 5.5
    assert hw == pytest.approx(2.8214 * np.std(xs, ddof=1) / math.sqrt(10), rel=1e-4)


def test_aggregate_single_has_no_halfwidths():
    r = aggregate([objectives([trace()])])
    assert r.ci_halfwidths is None
    assert r.replications == 1


def test_subversion_trace_window():
    t = TraceTable.from_records([trace(model=1 + i % 2) for i in range(10)])
    t.sub[:] = np.arange(10)
    st = subversion_trace(t, 2, (4, 8))
    assert st.arrival_index.tolist() == [5, 7]
    assert st.sub.tolist() == [5, 7]
    assert st.entries()[0] == (5, 2, 0, 5)
    with pytest.raises(ValueError):
        subversion_trace(t, 2, (5, 5))
    with pytest.raises(ValueError):
        subversion_trace(t, 2, (10, 20))


def test_weighted_initial_mean():
    assert weighted_initial_mean({1: 3, 2: 1}, {1: 0.5, 2: 0.7}) == pytest.approx(0.55, abs=1e-15)


def test_default_config_file_matches_builtin():
    cfg = load_config("configs/default.ini")
    assert cfg == SimulationConfig()
    assert cfg.topology.node_count == 4
    assert [n.transmission_delay_to_master for n in cfg.topology.nodes] == [0, 2.75, 7.25, 10.25]
    assert len(cfg.models) == 5
    assert cfg.sweep == DEFAULT_SWEEP


def test_missing_threshold_defaults():
    cfg = parse_config("[scaling]\nmin_replicas = 1\n")
    assert cfg.scaling.queue_threshold == 2.0
    assert cfg.scaling.min_replicas == 1


def test_infinite_threshold_parses():
    assert parse_config("[scaling]\nqueue_threshold = inf\n").scaling.queue_threshold == math.inf


def test_cpu_demand_17_is_rejected():
    with pytest.raises(ConfigError) as exc:
        parse_config("[model 1]\ncpu = 17\nram = 1\ndisk = 0.01\nsecurity = 0.6\n"
                     "reliability = 0.9\naccuracy = 0.5\n")
    assert any("cpu placeability" in e for e in exc.value.errors)


def test_every_violation_is_listed():
    text = ("[simulation]\ntotal_arrivals = 0\nreplications = 0\n"
            "[model 1]\ncpu = 17\nram = 40\ndisk = 0.01\nsecurity = 0.6\n"
            "reliability = 0.9\naccuracy = 0.5\n")
    with pytest.raises(ConfigError) as exc:
        parse_config(text)
    errs = " | ".join(exc.value.errors)
    for fragment in ("total_arrivals", "replications", "cpu placeability", "ram placeability"):
        assert fragment in errs


def test_parse_errors():
    with pytest.raises(ConfigError):
        parse_config("[simulation\npolicy = never\n")
    with pytest.raises(ConfigError):
        parse_config("[simulation]\npolicy = sometimes\n")
    with pytest.raises(ConfigError):
        parse_config("[simulation]\nseed = one\n")
    with pytest.raises(ConfigError):
        parse_config("[simulation]\nspeed = 3\n")
    with pytest.raises(ConfigError):
        load_config("/nonexistent/file.ini")


def test_sweep_and_models_override():
    cfg = parse_config("[sweep]\ninter_arrival_means = 8, 4\npolicies = never\n"
                       "[model 9]\ncpu = 2\nram = 2\ndisk = 0.01\nsecurity = 0.6\n"
                       "reliability = 0.9\naccuracy = 0.5\ninitial_replicas = 2\n"
                       "[trace]\nmodel = 9\n")
    assert cfg.sweep == (8.0, 4.0)
    assert cfg.sweep_policies == ("never",)
    assert cfg.model_ids == (9,)
    assert cfg.initial_replicas == {9: 2}


def test_format_number():
    assert format_number(1 / 3) == "0.333333333"
    assert format_number(8.0) == "8"
    assert format_number(float("nan")) == ""
