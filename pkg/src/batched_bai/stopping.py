"""Sufficient statistics, the pairwise Chernoff statistic and stopping thresholds."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import DomainError, PreconditionError, UndefinedStatisticError
from .exp_family import RewardFamily


@dataclass
class ArmStats:
    """Per-arm pull counts and reward sums.

    Means are derived as exact averages, so they always agree with the
    rewards that produced them.
    """

    pulls: np.ndarray
    sums: np.ndarray

    @classmethod
    def empty(cls, n: int) -> "ArmStats":
        return cls(np.zeros(n, dtype=np.int64), np.zeros(n, dtype=float))

    @property
    def n(self) -> int:
        return len(self.pulls)

    @property
    def t(self) -> int:
        return int(self.pulls.sum())

    @property
    def means(self) -> np.ndarray:
        with np.errstate(invalid="ignore", divide="ignore"):
            return np.where(self.pulls > 0, self.sums / np.maximum(self.pulls, 1), np.nan)

    def record(self, arm: int, rewards: np.ndarray) -> None:
        self.pulls[arm] += len(rewards)
        self.sums[arm] += float(np.sum(rewards))

    def leader(self) -> int:
        """Index of the largest empirical mean, lowest index on ties."""
        if np.any(self.pulls == 0):
            raise UndefinedStatisticError("every arm must be pulled before ranking")
        return int(np.argmax(self.means))


def weighted_mean(stats: ArmStats, i: int, j: int) -> float:
    ni, nj = int(stats.pulls[i]), int(stats.pulls[j])
    if ni + nj == 0:
        raise UndefinedStatisticError(f"arms {i} and {j} have no observations")
    # sums already equal N * mean, so this is (N_i mu_i + N_j mu_j) / (N_i + N_j)
    return float((stats.sums[i] + stats.sums[j]) / (ni + nj))


def chernoff_Z(family: RewardFamily, stats: ArmStats, i: int, j: int) -> float:
    """GLR statistic Z_ij = N_i d(mu_i, mu_ij) + N_j d(mu_j, mu_ij), for mu_i >= mu_j."""
    ni, nj = int(stats.pulls[i]), int(stats.pulls[j])
    if ni == 0 or nj == 0:
        raise UndefinedStatisticError(f"arms {i} and {j} must both be pulled")
    mi = stats.sums[i] / ni
    mj = stats.sums[j] / nj
    if mi < mj:
        raise PreconditionError(f"chernoff_Z needs mean[{i}] >= mean[{j}]")
    if mi == mj:
        return 0.0
    mij = weighted_mean(stats, i, j)
    mij = min(max(mij, mj), mi)
    return ni * family.kl(mi, mij) + nj * family.kl(mj, mij)


def min_Z(family: RewardFamily, stats: ArmStats) -> tuple[int, float]:
    """Return the empirical leader and its smallest Z against any other arm."""
    istar = stats.leader()
    value = min(chernoff_Z(family, stats, istar, j) for j in range(stats.n) if j != istar)
    return istar, value


def beta_threshold(t: int, delta: float, alpha: float, halved: bool = False) -> float:
    """Theoretical Chernoff threshold ln(ln(1/delta) t^alpha / delta).

    With ``halved=True`` the threshold is evaluated at confidence delta/2,
    i.e. ln(2 ln(2/delta) t^alpha / delta), which is what the three-batch
    algorithm compares against.
    """
    if t < 1:
        raise DomainError(f"t must be >= 1, got {t}")
    if not 0.0 < delta < 1.0:
        raise DomainError(f"delta must lie in (0, 1), got {delta}")
    if not 1.0 < alpha <= math.e / 2:
        raise DomainError(f"alpha must lie in (1, e/2], got {alpha}")
    d = delta / 2 if halved else delta
    return math.log(math.log(1.0 / d)) + alpha * math.log(t) - math.log(d)


def tas_beta_threshold(t: int, delta: float) -> float:
    """Empirically tuned Track-and-Stop threshold ln((ln t + 1) / delta)."""
    if t < 1:
        raise DomainError(f"t must be >= 1, got {t}")
    if not 0.0 < delta < 1.0:
        raise DomainError(f"delta must lie in (0, 1), got {delta}")
    return math.log((math.log(t) + 1.0) / delta)
