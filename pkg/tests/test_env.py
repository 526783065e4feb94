import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from numpy.testing import assert_array_equal

from batched_bai.env import BatchedEnv
from batched_bai.errors import EnvironmentExhausted, PreconditionError
from batched_bai.exp_family import BanditInstance


def make_env(seed=0, **kw):
    return BatchedEnv(BanditInstance("bernoulli", (0.7, 0.4)), np.random.default_rng(seed), **kw)


def test_empty_batch_is_free():
    env = make_env()
    env.issue_batch([0, 0])
    assert env.batch_count == 0
    assert env.total_pulls == 0


def test_accounting_of_one_batch():
    env = make_env()
    out = env.issue_batch([2, 3])
    assert env.total_pulls == 5
    assert env.batch_count == 1
    assert [len(r) for r in out] == [2, 3]


def test_bad_counts():
    env = make_env()
    with pytest.raises(PreconditionError):
        env.issue_batch([1])
    with pytest.raises(PreconditionError):
        env.issue_batch([1, -1])


def test_pull_cap_raises_with_partial_accounting():
    env = make_env(pull_cap=10)
    env.issue_batch([4, 4])
    with pytest.raises(EnvironmentExhausted) as info:
        env.issue_batch([2, 1])
    assert info.value.samples == 8
    assert info.value.batches == 1
    assert env.total_pulls == 8


batches = st.lists(st.tuples(st.integers(0, 20), st.integers(0, 20)), max_size=15)


@given(batches, st.integers(0, 2**32))
def test_replay_and_conservation(plan, seed):
    a, b = make_env(seed), make_env(seed)
    for counts in plan:
        a.issue_batch(counts)
        b.issue_batch(counts)
    assert a.pull_log == b.pull_log
    arms, rewards = a.log_arrays()
    assert len(a.pull_log) == a.total_pulls == sum(map(sum, plan))
    assert a.batch_count == sum(1 for c in plan if sum(c) > 0)
    for arm in range(2):
        assert a.stats.pulls[arm] == np.sum(arms == arm)
        assert a.stats.sums[arm] == pytest.approx(rewards[arms == arm].sum())


def test_pull_is_its_own_batch():
    env = make_env()
    r = env.pull(1)
    assert r in (0.0, 1.0)
    assert env.batch_count == 1
    assert_array_equal(env.stats.pulls, [0, 1])


def test_log_disabled():
    env = make_env(keep_log=False)
    env.issue_batch([1, 1])
    with pytest.raises(PreconditionError):
        env.pull_log
