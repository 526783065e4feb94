"""Seeded Monte Carlo runner with CSV reporting.

Every trial owns a random stream derived from ``(base_seed, trial index)``
through :class:`numpy.random.SeedSequence`, so results do not depend on the
order in which trials run or on how many workers run them. The benchmark
instance of an experiment is drawn once, from ``base_seed`` alone (see
:func:`benchmark_means`), and shared by all its trials.
"""

from __future__ import annotations

import csv
import math
import os
import time
import warnings
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Sequence

import numpy as np

from .algorithms import RunResult, StopReason, TriParams, opt_bbai, track_and_stop, tri_bbai
from .env import DEFAULT_PULL_CAP, BatchedEnv
from .errors import ConfigurationError, EnvironmentExhausted
from .exp_family import BanditInstance, RewardFamily

TRIAL_FIELDS = [
    "algo", "family", "instance", "delta", "trial", "seed", "returned_arm",
    "correct", "samples", "batches", "stop_reason", "seconds",
]
SUMMARY_FIELDS = [
    "algo", "instance", "delta", "trials", "mean_samples", "std_samples",
    "mean_batches", "std_batches", "recall",
]

ALGORITHMS = {
    "tri": "tri", "tri_bbai": "tri", "tri-bbai": "tri",
    "opt": "opt", "opt_bbai": "opt", "opt-bbai": "opt",
    "tas": "tas", "track_and_stop": "tas", "track-and-stop": "tas",
}
PRESETS = ("experimental", "theoretical")


class TiedMaximumWarning(UserWarning):
    """An explicit instance has more than one arm attaining the largest mean."""


def canonical_algorithm(name: str) -> str:
    try:
        return ALGORITHMS[name.strip().lower()]
    except KeyError:
        raise ConfigurationError(f"unknown algorithm {name!r}; choose from tri, opt, tas") from None


BENCHMARK_SPECS = ("uniform10", "normal10")
DEFAULT_BASE_SEED = 1


def benchmark_means(seed: int | np.random.RandomState) -> dict[str, np.ndarray]:
    """Both ten-arm benchmark mean vectors drawn from one legacy MT19937 stream.

    The draw order is fixed: ten U[0.2, 0.4] values (arm 0 then set to 0.5),
    followed by ten N(0.2, 0.2^2) values, each redrawn until it falls inside
    [0, 0.4] (arm 0 then set to 0.6). Replaying this exact procedure is what
    makes a given seed reproduce a given benchmark instance.
    """
    rng = seed if isinstance(seed, np.random.RandomState) else np.random.RandomState(seed)
    uniform = rng.uniform(0.2, 0.4, 10)
    uniform[0] = 0.5
    normal = rng.normal(0.2, 0.2, 10)
    for i in range(10):
        while not 0.0 <= normal[i] <= 0.4:
            normal[i] = rng.normal(0.2, 0.2)
    normal[0] = 0.6
    return {"uniform10": uniform, "normal10": normal}


def make_instance(spec, seed: int | np.random.RandomState = DEFAULT_BASE_SEED,
                  family: str | RewardFamily = "bernoulli") -> BanditInstance:
    """Build a bandit instance from a benchmark name or an explicit mean list.

    ``uniform10``: arm 0 has mean 0.5, the others are uniform on [0.2, 0.4].
    ``normal10``: arm 0 has mean 0.6, the others are N(0.2, 0.2^2) draws
    redrawn until they land in [0, 0.4]. Both come from :func:`benchmark_means`
    with ``seed``. Anything else (``"means=0.9,0.1"`` or a sequence) passes
    through unchanged and ignores ``seed``.
    """
    family = RewardFamily.parse(family)
    if isinstance(spec, str):
        key = spec.strip().lower()
        if key in BENCHMARK_SPECS:
            return BanditInstance(family, benchmark_means(seed)[key])
        if key.startswith("means="):
            key = key[len("means="):]
        try:
            spec = [float(tok) for tok in key.split(",") if tok.strip()]
        except ValueError:
            raise ConfigurationError(f"cannot parse instance spec {spec!r}") from None
    instance = BanditInstance(family, spec)
    if not instance.has_unique_best:
        warnings.warn(f"instance {instance.means} has a tied maximum", TiedMaximumWarning, stacklevel=2)
    return instance


def instance_label(spec) -> str:
    if isinstance(spec, str):
        return spec.strip().lower()
    return "means=" + ",".join(repr(float(m)) for m in spec)


def trial_seed(base_seed: int, trial: int) -> int:
    """64-bit seed of trial ``trial`` derived from ``SeedSequence([base_seed, trial])``."""
    return int(np.random.SeedSequence([base_seed, trial]).generate_state(1, np.uint64)[0])


def build_params(preset: str, delta: float, n: int, alpha: float) -> TriParams:
    if preset == "experimental":
        return TriParams.experimental(delta, n, alpha)
    if preset == "theoretical":
        return TriParams.theoretical(delta, n, alpha)
    raise ConfigurationError(f"unknown parameter preset {preset!r}")


@dataclass
class TrialRecord:
    algo: str
    family: str
    instance: str
    delta: float
    trial: int
    seed: int
    returned_arm: int
    correct: bool
    samples: int
    batches: int
    stop_reason: str
    seconds: float
    result: RunResult | None = field(default=None, repr=False)

    def row(self) -> dict:
        d = asdict(self)
        d.pop("result")
        return d


def run_trial(
    algorithm: str,
    instance: BanditInstance,
    delta: float,
    alpha: float = 1.001,
    seed: int = 0,
    *,
    trial: int = 0,
    preset: str = "experimental",
    params: TriParams | None = None,
    force_elim: bool = False,
    pull_cap: int | None = DEFAULT_PULL_CAP,
    label: str = "",
    keep_log: bool = False,
) -> TrialRecord:
    """Run one trial on a fresh environment seeded with ``seed``.

    An environment exhaustion is recorded with stop reason ``Aborted`` rather
    than raised.
    """
    algo = canonical_algorithm(algorithm)
    if force_elim and algo != "opt":
        raise ConfigurationError("the forced-elimination hook is only honoured by opt")
    if algo != "tas" and params is None:
        params = build_params(preset, delta, instance.n, alpha)
    env = BatchedEnv(instance, np.random.default_rng(seed), pull_cap=pull_cap, keep_log=keep_log)
    start = time.perf_counter()
    try:
        if algo == "tri":
            result = tri_bbai(env, params)
        elif algo == "opt":
            result = opt_bbai(env, params, force_eliminate_best=force_elim)
        else:
            result = track_and_stop(env, delta)
    except EnvironmentExhausted as exc:
        result = RunResult(-1, exc.samples, exc.batches, StopReason.ABORTED, False)
    seconds = time.perf_counter() - start
    return TrialRecord(
        algo=algo,
        family=instance.family.value,
        instance=label or instance_label(instance.means),
        delta=delta,
        trial=trial,
        seed=seed,
        returned_arm=result.returned_arm,
        correct=bool(result.correct),
        samples=result.samples,
        batches=result.batches,
        stop_reason=result.stop_reason.value,
        seconds=seconds,
        result=result,
    )


@dataclass
class ExperimentConfig:
    algorithm: str
    instance_spec: object = "uniform10"
    deltas: Sequence[float] = (1e-3,)
    trials: int = 1000
    base_seed: int = DEFAULT_BASE_SEED
    parallelism: int = 1
    output_path: str = "results"
    alpha: float = 1.001
    family: str = "bernoulli"
    preset: str = "experimental"
    force_elim: bool = False
    pull_cap: int | None = DEFAULT_PULL_CAP

    def __post_init__(self):
        self.algorithm = canonical_algorithm(self.algorithm)
        if self.trials < 1:
            raise ConfigurationError("trials must be >= 1")
        self.deltas = tuple(float(d) for d in self.deltas)
        if not self.deltas or any(not 0.0 < d < 1.0 for d in self.deltas):
            raise ConfigurationError(f"every delta must lie in (0, 1), got {self.deltas}")
        if self.preset not in PRESETS:
            raise ConfigurationError(f"unknown parameter preset {self.preset!r}")
        if self.force_elim and self.algorithm != "opt":
            raise ConfigurationError("the forced-elimination hook is only honoured by opt")


@dataclass
class Summary:
    algo: str
    instance: str
    delta: float
    trials: int
    mean_samples: float
    std_samples: float
    mean_batches: float
    std_batches: float
    recall: float

    @classmethod
    def from_records(cls, records: Sequence[TrialRecord]) -> "Summary":
        samples = np.array([r.samples for r in records], dtype=float)
        batches = np.array([r.batches for r in records], dtype=float)
        first = records[0]
        return cls(
            algo=first.algo,
            instance=first.instance,
            delta=first.delta,
            trials=len(records),
            mean_samples=float(samples.mean()),
            std_samples=float(samples.std()),
            mean_batches=float(batches.mean()),
            std_batches=float(batches.std()),
            recall=float(np.mean([r.correct for r in records])),
        )

    def row(self) -> dict:
        return asdict(self)


def _trial_job(args):
    config, instance, label, delta, trial = args
    return run_trial(
        config.algorithm, instance, delta, config.alpha, trial_seed(config.base_seed, trial),
        trial=trial, preset=config.preset, force_elim=config.force_elim,
        pull_cap=config.pull_cap, label=label,
    )


def run_trials(config: ExperimentConfig, delta: float, instance: BanditInstance | None = None) -> list[TrialRecord]:
    """Run every trial of ``config`` at one confidence level, ordered by trial index."""
    if instance is None:
        instance = make_instance(config.instance_spec, config.base_seed, config.family)
    label = instance_label(config.instance_spec)
    jobs = [(config, instance, label, delta, k) for k in range(config.trials)]
    if config.parallelism > 1:
        with ProcessPoolExecutor(max_workers=config.parallelism) as pool:
            records = list(pool.map(_trial_job, jobs, chunksize=max(1, len(jobs) // (4 * config.parallelism))))
    else:
        records = [_trial_job(job) for job in jobs]
    for rec in records:
        rec.result = None
    return sorted(records, key=lambda r: r.trial)


def _fmt(value) -> str:
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, float):
        return repr(value)
    return str(value)


def write_csv(path: Path, fields: Sequence[str], rows: Sequence[dict]) -> None:
    try:
        with open(path, "w", newline="", encoding="utf-8") as fh:
            writer = csv.DictWriter(fh, fieldnames=list(fields), lineterminator="\n")
            writer.writeheader()
            for row in rows:
                writer.writerow({k: _fmt(row[k]) for k in fields})
    except OSError as exc:
        raise OSError(f"cannot write {path}: {exc}") from exc


def read_trials_csv(path: str | os.PathLike) -> list[TrialRecord]:
    out = []
    with open(path, newline="", encoding="utf-8") as fh:
        for row in csv.DictReader(fh):
            out.append(TrialRecord(
                algo=row["algo"], family=row["family"], instance=row["instance"],
                delta=float(row["delta"]), trial=int(row["trial"]), seed=int(row["seed"]),
                returned_arm=int(row["returned_arm"]), correct=row["correct"] == "true",
                samples=int(row["samples"]), batches=int(row["batches"]),
                stop_reason=row["stop_reason"], seconds=float(row["seconds"]),
            ))
    return out


def summarize(records: Sequence[TrialRecord]) -> list[Summary]:
    """Group records by (algo, instance, delta), preserving first-seen order."""
    groups: dict[tuple, list[TrialRecord]] = {}
    for rec in records:
        groups.setdefault((rec.algo, rec.instance, rec.delta), []).append(rec)
    return [Summary.from_records(g) for g in groups.values()]


def run_experiment(config: ExperimentConfig) -> list[Summary]:
    """Run all deltas of ``config``; write ``trials.csv`` and ``summary.csv``."""
    out_dir = Path(config.output_path)
    try:
        out_dir.mkdir(parents=True, exist_ok=True)
    except OSError as exc:
        raise OSError(f"cannot create output directory {out_dir}: {exc}") from exc
    instance = make_instance(config.instance_spec, config.base_seed, config.family)
    records: list[TrialRecord] = []
    for delta in config.deltas:
        records.extend(run_trials(config, delta, instance))
    summaries = summarize(records)
    write_csv(out_dir / "trials.csv", TRIAL_FIELDS, [r.row() for r in records])
    write_csv(out_dir / "summary.csv", SUMMARY_FIELDS, [s.row() for s in summaries])
    return summaries


BENCH_DELTAS = tuple(10.0**-k for k in range(1, 11))


def format_summary(s: Summary) -> str:
    return (
        f"{s.algo:>4} {s.instance:>10} delta={s.delta:<8.0e} "
        f"samples {s.mean_samples:10.2f} +- {s.std_samples:8.2f}  "
        f"batches {s.mean_batches:8.2f} +- {s.std_batches:6.2f}  recall {100 * s.recall:5.1f}%"
    )


def isclose_summary(a: Summary, b: Summary, tol: float = 1e-9) -> bool:
    fields = ("mean_samples", "std_samples", "mean_batches", "std_batches", "recall")
    return all(math.isclose(getattr(a, f), getattr(b, f), rel_tol=tol, abs_tol=tol) for f in fields)
