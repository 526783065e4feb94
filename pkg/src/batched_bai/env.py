"""Batched bandit environment with exact sample and batch accounting."""

from __future__ import annotations

from typing import Sequence

import numpy as np

from .errors import EnvironmentExhausted, PreconditionError
from .exp_family import BanditInstance
from .stopping import ArmStats

DEFAULT_PULL_CAP = 10**8


class BatchedEnv:
    """Simulates a bandit whose rewards are revealed one batch at a time.

    Each :meth:`issue_batch` call with a nonzero total counts as one batch.
    Rewards are drawn arm by arm in index order, then pull by pull, so a fixed
    seed and a fixed sequence of requests reproduce the same rewards.

    Args:
        instance: ground-truth arm means and reward family.
        rng: random stream owned by this environment.
        pull_cap: total pulls allowed before :class:`EnvironmentExhausted`.
        keep_log: whether to retain every (arm, reward) pair in ``pull_log``.
    """

    def __init__(
        self,
        instance: BanditInstance,
        rng: np.random.Generator,
        pull_cap: int | None = DEFAULT_PULL_CAP,
        keep_log: bool = True,
    ):
        self.instance = instance
        self.rng = rng
        self.pull_cap = pull_cap
        self.keep_log = keep_log
        self.stats = ArmStats.empty(instance.n)
        self.batch_count = 0
        self._log: list[tuple[int, np.ndarray]] = []

    @property
    def n(self) -> int:
        return self.instance.n

    @property
    def total_pulls(self) -> int:
        return self.stats.t

    @property
    def pull_log(self) -> list[tuple[int, float]]:
        """Flattened (arm, reward) pairs in draw order."""
        if not self.keep_log:
            raise PreconditionError("this environment was created with keep_log=False")
        return [(arm, float(r)) for arm, rewards in self._log for r in rewards]

    def log_arrays(self) -> tuple[np.ndarray, np.ndarray]:
        """The pull log as parallel (arms, rewards) arrays."""
        if not self._log:
            return np.zeros(0, dtype=np.int64), np.zeros(0)
        arms = np.concatenate([np.full(len(r), a, dtype=np.int64) for a, r in self._log])
        rewards = np.concatenate([r for _, r in self._log])
        return arms, rewards

    def issue_batch(self, counts: Sequence[int]) -> list[np.ndarray]:
        """Pull arm ``i`` ``counts[i]`` times in one batch and reveal the rewards."""
        counts = [int(c) for c in counts]
        if len(counts) != self.n:
            raise PreconditionError(f"expected {self.n} counts, got {len(counts)}")
        if any(c < 0 for c in counts):
            raise PreconditionError("pull counts must be nonnegative")
        total = sum(counts)
        if self.pull_cap is not None and self.total_pulls + total > self.pull_cap:
            raise EnvironmentExhausted(
                f"batch of {total} pulls would exceed the cap of {self.pull_cap}",
                samples=self.total_pulls,
                batches=self.batch_count,
            )
        family = self.instance.family
        out = []
        for arm, c in enumerate(counts):
            if c == 0:
                out.append(np.zeros(0))
                continue
            rewards = np.asarray(family.sample(self.instance.means[arm], self.rng, c), dtype=float)
            self.stats.record(arm, rewards)
            if self.keep_log:
                self._log.append((arm, rewards))
            out.append(rewards)
        if total > 0:
            self.batch_count += 1
        return out

    def pull(self, arm: int) -> float:
        """Single pull issued as its own batch."""
        counts = [0] * self.n
        counts[arm] = 1
        return float(self.issue_batch(counts)[arm][0])
