import math

import numpy as np
import pytest

from mmvsim.autoscaler import KEEP, TERMINATE, ScalingConfig, on_replica_idle, scale_up_needed
from mmvsim.rng import BLOCK, RngStream, decision_seed, release_seed, sample_exponential, workload_seed


def test_exponential_mean():
    rng = RngStream(np.random.SeedSequence(11))
    xs = np.array([sample_exponential(10.0, rng) for _ in range(1_000_000)])
    assert 9.9 <= xs.mean() <= 10.1
    assert xs.min() > 0


def test_exponential_rejects_bad_mean():
    rng = RngStream(np.random.SeedSequence(1))
    with pytest.raises(ValueError):
        sample_exponential(0.0, rng)
    with pytest.raises(ValueError):
        sample_exponential(-1.0, rng)


def test_exponential_is_inverse_cdf_of_open_interval():
    # u is in [0, 1), so 1 - u is in (0, 1] and the log never sees 0
    rng = RngStream(np.random.SeedSequence(3))
    u = np.random.Generator(np.random.PCG64(np.random.SeedSequence(3))).random()
    assert rng.exponential(2.0) == -2.0 * math.log(1.0 - u)


def test_same_seed_same_draws():
    a = RngStream(workload_seed(1, 0, 2))
    b = RngStream(workload_seed(1, 0, 2))
    assert [a.random() for _ in range(100)] == [b.random() for _ in range(100)]


def test_block_buffer_matches_scalar_stream():
    s = RngStream(np.random.SeedSequence(5))
    gen = np.random.Generator(np.random.PCG64(np.random.SeedSequence(5)))
    drawn = np.array([s.random() for _ in range(2 * BLOCK + 10)])
    assert np.array_equal(drawn, gen.random(2 * BLOCK + 10))


def test_streams_are_distinct():
    seeds = [workload_seed(1, 0, 0), workload_seed(1, 1, 0), release_seed(1, 0, 0),
             decision_seed(1, 0, "random", 0), decision_seed(1, 0, "qlearning", 0),
             decision_seed(1, 0, "random", 1)]
    firsts = {RngStream(s).random() for s in seeds}
    assert len(firsts) == len(seeds)


def test_decision_seed_independent_of_policy_set():
    # a policy's stream depends only on its own name, not on which others run
    a = RngStream(decision_seed(4, 2, "random", 3)).random()
    b = RngStream(decision_seed(4, 2, "random", 3)).random()
    assert a == b


@pytest.mark.parametrize("queue, live, expected", [(1, 0, True), (3, 2, False), (5, 2, True),
                                                   (0, 0, False), (4, 2, False)])
def test_scale_up_examples(queue, live, expected):
    assert scale_up_needed(queue, live, ScalingConfig(queue_threshold=2.0)) is expected


def test_scale_up_threshold_one_cold_start():
    assert scale_up_needed(1, 0, ScalingConfig(queue_threshold=1.0))


def test_infinite_threshold_still_cold_starts():
    cfg = ScalingConfig(queue_threshold=math.inf)
    assert scale_up_needed(1, 0, cfg)
    assert not scale_up_needed(10**6, 1, cfg)


def test_on_replica_idle_examples():
    cfg = ScalingConfig()
    assert on_replica_idle(0, 1, cfg) == TERMINATE
    assert on_replica_idle(2, 1, cfg) == KEEP
    assert on_replica_idle(0, 1, ScalingConfig(min_replicas=1)) == KEEP
    assert on_replica_idle(0, 2, ScalingConfig(min_replicas=1)) == TERMINATE


def test_scaling_config_validation():
    with pytest.raises(ValueError):
        ScalingConfig(queue_threshold=0)
    with pytest.raises(ValueError):
        ScalingConfig(min_replicas=-1)
