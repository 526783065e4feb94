import dataclasses
import math

import numpy as np
import pytest

from batched_bai.errors import ConfigurationError
from batched_bai.exp_family import BanditInstance
from batched_bai.harness import (
    SUMMARY_FIELDS,
    TRIAL_FIELDS,
    ExperimentConfig,
    Summary,
    TiedMaximumWarning,
    benchmark_means,
    make_instance,
    read_trials_csv,
    run_experiment,
    run_trial,
    trial_seed,
)


# Benchmark instances for seed 1, frozen from an independent replay of the
# documented draw procedure on numpy's legacy global generator.
UNIFORM10_SEED1 = [0.5, 0.3440648986884316, 0.200022874963469, 0.260466514526368,
                   0.22935117816342263, 0.21846771895375958, 0.2372520422755342,
                   0.26911214540860956, 0.27935349484613403, 0.3077633468006714]


def test_uniform10_generator():
    inst = make_instance("uniform10", 3)
    assert inst.n == 10 and inst.means[0] == 0.5
    assert all(0.2 <= m <= 0.4 for m in inst.means[1:])


def test_uniform10_reference_draw():
    np.testing.assert_allclose(make_instance("uniform10", 1).means, UNIFORM10_SEED1, rtol=0, atol=1e-15)


def test_normal10_generator_stays_in_range():
    for seed in range(20):
        inst = make_instance("normal10", seed)
        assert inst.n == 10 and inst.means[0] == 0.6
        assert all(0.0 <= m <= 0.4 for m in inst.means[1:])


def test_normal10_keeps_in_range_first_draws():
    rng = np.random.RandomState(1)
    rng.uniform(0.2, 0.4, 10)
    first = rng.normal(0.2, 0.2, 10)
    means = np.asarray(make_instance("normal10", 1).means)
    kept = (first >= 0) & (first <= 0.4)
    kept[0] = False
    assert kept.sum() >= 5
    np.testing.assert_array_equal(means[kept], first[kept])
    assert np.all(means[1:][~kept[1:]] != first[1:][~kept[1:]])


def test_benchmark_means_accepts_a_stream():
    a = benchmark_means(np.random.RandomState(9))
    b = benchmark_means(9)
    for key in a:
        np.testing.assert_array_equal(a[key], b[key])


def test_explicit_instances_pass_through():
    assert make_instance([0.9, 0.1]).means == (0.9, 0.1)
    assert make_instance("means=0.3,0.2", seed=5).means == (0.3, 0.2)
    with pytest.warns(TiedMaximumWarning):
        make_instance("means=0.3,0.3")
    with pytest.raises(ConfigurationError):
        make_instance("means=a,b")


def test_trial_seed_is_a_pure_function():
    assert trial_seed(1, 2) == trial_seed(1, 2)
    assert trial_seed(1, 2) != trial_seed(1, 3)
    assert trial_seed(1, 2) != trial_seed(2, 2)
    assert 0 <= trial_seed(0, 0) < 2**64


@pytest.mark.parametrize("algo", ["tri", "opt", "tas"])
def test_run_trial_replays_exactly(algo):
    inst = BanditInstance("bernoulli", (0.6, 0.45, 0.3))
    a = run_trial(algo, inst, 0.05, seed=77, keep_log=True)
    b = run_trial(algo, inst, 0.05, seed=77, keep_log=True)
    ra, rb = a.row(), b.row()
    ra.pop("seconds"), rb.pop("seconds")
    assert ra == rb


@pytest.mark.parametrize("algo", ["tri", "opt", "tas"])
def test_easy_instance_is_solved(algo):
    inst = BanditInstance("bernoulli", (0.9, 0.1))
    hits = sum(run_trial(algo, inst, 0.1, seed=trial_seed(5, k)).correct for k in range(100))
    assert hits >= 95


def test_bad_configuration():
    inst = BanditInstance("bernoulli", (0.9, 0.1))
    with pytest.raises(ConfigurationError):
        run_trial("ucb", inst, 0.1)
    with pytest.raises(ConfigurationError):
        run_trial("tri", inst, 0.1, force_elim=True)
    with pytest.raises(ConfigurationError):
        ExperimentConfig(algorithm="tri", trials=0)
    with pytest.raises(ConfigurationError):
        ExperimentConfig(algorithm="tri", deltas=(1.5,))
    with pytest.raises(ConfigurationError):
        ExperimentConfig(algorithm="tas", force_elim=True)


def test_pull_cap_aborts_are_recorded():
    inst = BanditInstance("bernoulli", (0.51, 0.5))
    rec = run_trial("opt", inst, 0.1, seed=1, pull_cap=1000)
    assert rec.stop_reason == "Aborted"
    assert rec.samples <= 1000
    assert not rec.correct


def test_run_experiment_csvs(tmp_path):
    config = ExperimentConfig(algorithm="tri", instance_spec="uniform10", deltas=(0.1, 0.01),
                              trials=12, base_seed=3, output_path=str(tmp_path))
    summaries = run_experiment(config)
    raw = (tmp_path / "trials.csv").read_bytes()
    assert b"\r\n" not in raw
    lines = raw.decode("utf-8").splitlines()
    assert lines[0] == ",".join(TRIAL_FIELDS)
    assert len(lines) == 1 + 24
    assert (tmp_path / "summary.csv").read_text(encoding="utf-8").splitlines()[0] == ",".join(SUMMARY_FIELDS)

    records = read_trials_csv(tmp_path / "trials.csv")
    for delta, summary in zip((0.1, 0.01), summaries):
        again = Summary.from_records([r for r in records if r.delta == delta])
        for field in ("mean_samples", "std_samples", "mean_batches", "std_batches", "recall"):
            assert math.isclose(getattr(again, field), getattr(summary, field), rel_tol=1e-9, abs_tol=1e-9)
        assert again.trials == 12


def _rows_without_time(path):
    return [r.row() | {"seconds": None} for r in read_trials_csv(path)]


def test_parallel_runs_match_serial(tmp_path):
    base = dict(algorithm="opt", instance_spec="uniform10", deltas=(0.1,), trials=16, base_seed=9)
    run_experiment(ExperimentConfig(**base, parallelism=1, output_path=str(tmp_path / "a")))
    run_experiment(ExperimentConfig(**base, parallelism=8, output_path=str(tmp_path / "b")))
    assert _rows_without_time(tmp_path / "a" / "trials.csv") == _rows_without_time(tmp_path / "b" / "trials.csv")


def test_output_errors_name_the_path(tmp_path):
    blocker = tmp_path / "file"
    blocker.write_text("x")
    config = ExperimentConfig(algorithm="tri", trials=1, deltas=(0.1,), output_path=str(blocker / "sub"))
    with pytest.raises(OSError, match="file"):
        run_experiment(config)


def test_config_fields_cover_the_cli_knobs():
    names = {f.name for f in dataclasses.fields(ExperimentConfig)}
    assert {"algorithm", "instance_spec", "deltas", "trials", "base_seed", "parallelism",
            "output_path", "alpha", "family"} <= names
