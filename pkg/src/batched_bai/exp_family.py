"""Mean-parameterized reward families and their KL divergences.

Two one-parameter exponential families are supported: Bernoulli rewards and
Gaussian rewards with unit variance. Every quantity in the package is
expressed in terms of arm means, so the natural-parameter form never appears
in code; the closed-form KL divergences are all that is needed.

All logarithms are natural logarithms.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .errors import DomainError, PreconditionError

__all__ = [
    "RewardFamily",
    "BanditInstance",
    "kl",
    "sample",
]


class RewardFamily(enum.Enum):
    BERNOULLI = "bernoulli"
    GAUSSIAN = "gaussian"

    @classmethod
    def parse(cls, name: "str | RewardFamily") -> "RewardFamily":
        if isinstance(name, RewardFamily):
            return name
        key = name.strip().lower()
        aliases = {
            "bernoulli": cls.BERNOULLI,
            "gaussian": cls.GAUSSIAN,
            "normal": cls.GAUSSIAN,
            "gaussianunitvariance": cls.GAUSSIAN,
        }
        try:
            return aliases[key]
        except KeyError:
            raise DomainError(f"unknown reward family {name!r}") from None

    def in_domain(self, mean: float) -> bool:
        if self is RewardFamily.BERNOULLI:
            return 0.0 <= mean <= 1.0
        return math.isfinite(mean)

    def in_interior(self, mean: float) -> bool:
        if self is RewardFamily.BERNOULLI:
            return 0.0 < mean < 1.0
        return math.isfinite(mean)

    def check(self, mean: float) -> float:
        if not self.in_domain(mean):
            raise DomainError(f"mean {mean!r} is outside the {self.value} domain")
        return mean

    def variance(self, mean: float) -> float:
        """Variance of the distribution with the given mean."""
        if self is RewardFamily.BERNOULLI:
            return mean * (1.0 - mean)
        return 1.0

    def kl(self, mu: float, lam: float) -> float:
        """KL divergence d(mu, lam) between the members with means mu and lam.

        Bernoulli uses the convention 0 ln 0 = 0 and returns ``inf`` when
        ``lam`` sits on the boundary while ``mu`` does not match it.
        """
        if self is RewardFamily.GAUSSIAN:
            if not (math.isfinite(mu) and math.isfinite(lam)):
                raise DomainError(f"gaussian means must be finite, got {mu!r}, {lam!r}")
            diff = mu - lam
            return 0.5 * diff * diff
        if not (0.0 <= mu <= 1.0 and 0.0 <= lam <= 1.0):
            raise DomainError(f"bernoulli means must lie in [0, 1], got {mu!r}, {lam!r}")
        if mu == lam:
            return 0.0
        out = 0.0
        if mu > 0.0:
            if lam == 0.0:
                return math.inf
            out += mu * math.log(mu / lam)
        if mu < 1.0:
            if lam == 1.0:
                return math.inf
            out += (1.0 - mu) * math.log((1.0 - mu) / (1.0 - lam))
        # rounding can push the sum a hair below zero for very close arguments
        return out if out > 0.0 else 0.0

    def kl_array(self, mu, lam) -> np.ndarray:
        """Vectorized :meth:`kl` with numpy broadcasting (no domain checks)."""
        mu = np.asarray(mu, dtype=float)
        lam = np.asarray(lam, dtype=float)
        if self is RewardFamily.GAUSSIAN:
            return 0.5 * (mu - lam) ** 2
        with np.errstate(divide="ignore", invalid="ignore"):
            a = np.where(mu > 0.0, mu * np.log(mu / lam), 0.0)
            b = np.where(mu < 1.0, (1.0 - mu) * np.log((1.0 - mu) / (1.0 - lam)), 0.0)
        out = a + b
        out = np.where(mu == lam, 0.0, out)
        return np.maximum(out, 0.0)

    def sample(self, mean: float, rng: np.random.Generator, size: int | None = None):
        """Draw reward(s) with the given mean from ``rng``.

        With ``size=None`` a single float is returned, otherwise an array.
        """
        self.check(mean)
        if self is RewardFamily.BERNOULLI:
            u = rng.random(size)
            return (u < mean).astype(float) if size is not None else float(u < mean)
        return rng.normal(mean, 1.0, size)


def kl(family: RewardFamily, mu: float, lam: float) -> float:
    return family.kl(mu, lam)


def sample(family: RewardFamily, mean: float, rng: np.random.Generator) -> float:
    return family.sample(mean, rng)


@dataclass(frozen=True)
class BanditInstance:
    """A vector of arm means together with the reward family of every arm."""

    family: RewardFamily
    means: tuple[float, ...]

    def __init__(self, family: "RewardFamily | str", means: Sequence[float]):
        family = RewardFamily.parse(family)
        means = tuple(float(m) for m in means)
        if len(means) < 2:
            raise PreconditionError(f"a bandit instance needs at least 2 arms, got {len(means)}")
        for m in means:
            family.check(m)
        object.__setattr__(self, "family", family)
        object.__setattr__(self, "means", means)

    @property
    def n(self) -> int:
        return len(self.means)

    @property
    def best_arm(self) -> int:
        """Index of the largest mean (lowest index on ties)."""
        return int(np.argmax(self.means))

    @property
    def has_unique_best(self) -> bool:
        top = max(self.means)
        return sum(1 for m in self.means if m == top) == 1

    @property
    def gaps(self) -> np.ndarray:
        arr = np.asarray(self.means)
        return arr.max() - arr
