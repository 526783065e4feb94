"""Batched best-arm identification: Tri-BBAI, Opt-BBAI and Track-and-Stop.

Tri-BBAI and Opt-BBAI share their first three stages:

I.   pull every arm ``L1`` times (one batch);
II.  up to ``max_stage2_rounds`` batches, each topping arm ``i`` up to
     ``ceil(min(alpha * w*_i(b) * T*(b) * ln(1/delta), L2))`` pulls, where ``b``
     shifts the empirical leader down and every other arm up by ``epsilon``;
     the loop stops once ``w*(b)`` moves by at most ``1/sqrt(n)`` per coordinate;
III. a Chernoff test on the revealed samples (no batch).

If the test fails, Tri-BBAI tops every arm up to ``L3`` pulls in one last batch,
while Opt-BBAI runs successive elimination with a check that re-samples
previously eliminated arms, one batch per round.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field

import numpy as np

from .env import BatchedEnv
from .errors import (
    CapabilityError,
    DegenerateInstanceError,
    DomainError,
    PreconditionError,
)
from .exp_family import BanditInstance, RewardFamily
from .oracle import solve_allocation
from .stopping import beta_threshold, min_Z, tas_beta_threshold


class StopReason(str, enum.Enum):
    STAGE3_CHERNOFF = "Stage3Chernoff"
    STAGE4_TRI_ARGMAX = "Stage4TriArgmax"
    STAGE4_OPT_ELIMINATION = "Stage4OptElimination"
    STAGE4_OPT_FALLBACK = "Stage4OptFallback"
    BASELINE_STOP = "BaselineStop"
    ABORTED = "Aborted"


@dataclass(frozen=True)
class TriParams:
    """Tuning of the shared Stages I-III plus the Stage-IV sizes.

    ``threshold`` selects the Stage-III boundary: ``"theory"`` compares against
    ``beta(tau, delta/2)`` from :func:`beta_threshold`, ``"tas"`` against the
    empirically tuned ``ln((ln tau + 1)/delta)``. ``elimination_scale`` is the
    leading constant of the per-round sample size ``d_r`` in Opt-BBAI.
    """

    delta: float
    alpha: float
    epsilon: float
    L1: int
    L2: int
    L3: int
    max_stage2_rounds: int
    threshold: str = "theory"
    elimination_scale: float = 32.0
    min_stage2_rounds: int = 2

    def __post_init__(self):
        if not 0.0 < self.delta < 1.0:
            raise DomainError(f"delta must lie in (0, 1), got {self.delta}")
        if not 1.0 < self.alpha <= math.e / 2:
            raise DomainError(f"alpha must lie in (1, e/2], got {self.alpha}")
        if self.threshold not in ("theory", "tas"):
            raise DomainError(f"unknown threshold rule {self.threshold!r}")
        for name in ("L1", "L2", "L3", "max_stage2_rounds"):
            if getattr(self, name) < 1:
                raise DomainError(f"{name} must be a positive integer")

    @classmethod
    def theoretical(cls, delta: float, n: int, alpha: float = 1.001) -> "TriParams":
        """Parameters exactly as the asymptotic analysis sets them."""
        log_inv = math.log(1.0 / delta)
        loglog = math.log(log_inv)
        if loglog <= 0.0:
            raise DomainError(f"theoretical parameters need ln ln(1/delta) > 0, got delta={delta}")
        return cls(
            delta=delta,
            alpha=alpha,
            epsilon=1.0 / loglog,
            L1=math.ceil(math.sqrt(log_inv)),
            L2=math.ceil(log_inv * loglog / n),
            L3=math.ceil(log_inv**2),
            max_stage2_rounds=math.ceil(log_inv),
        )

    @classmethod
    def experimental(cls, delta: float, n: int, alpha: float = 1.001) -> "TriParams":
        """Desk-scale settings used for the benchmark tables.

        ``epsilon = 0.01`` and the Track-and-Stop stopping threshold. The batch
        lengths keep the asymptotic shapes (sqrt(log), log * loglog, log^2);
        their constants, and the much smaller elimination constant, were
        calibrated on the ten-arm benchmark instances (see ``EXP_*`` below).
        """
        log_inv = math.log(1.0 / delta)
        return cls(
            delta=delta,
            alpha=alpha,
            epsilon=0.01,
            L1=math.ceil(EXP_L1_SCALE * math.sqrt(log_inv)),
            L2=math.ceil(EXP_L2_SCALE * log_inv * max(math.log(log_inv), 1.0)),
            L3=math.ceil(EXP_L3_SCALE * log_inv**2),
            max_stage2_rounds=math.ceil(log_inv),
            threshold="tas",
            elimination_scale=EXP_ELIMINATION_SCALE,
        )

    def stage3_threshold(self, tau: int) -> float:
        if self.threshold == "tas":
            return tas_beta_threshold(tau, self.delta)
        return beta_threshold(tau, self.delta, self.alpha, halved=True)


# Calibrated on the seed-1 uniform10/normal10 instances with trial streams
# disjoint from the acceptance runs. The elimination constant trades Stage-IV
# cost against spurious fallbacks; at 1/8 no wrong answer occurred in 1000
# calibration trials at delta = 0.1.
EXP_L1_SCALE = 20.0
EXP_L2_SCALE = 22.0
EXP_L3_SCALE = 3.0
EXP_ELIMINATION_SCALE = 0.125


@dataclass
class RunResult:
    returned_arm: int
    samples: int
    batches: int
    stop_reason: StopReason
    correct: bool
    # accounting at the end of Stage III (equal to the totals when it stopped there)
    tau: int = 0
    stage3_batches: int = 0
    stage2_rounds: int = 0
    elimination_rounds: int = 0
    first_round_budget: int | None = None


def _is_correct(env: BatchedEnv, arm: int) -> bool:
    means = env.instance.means
    return means[arm] == max(means)


def _result(env: BatchedEnv, arm: int, reason: StopReason, **extra) -> RunResult:
    return RunResult(
        returned_arm=int(arm),
        samples=env.total_pulls,
        batches=env.batch_count,
        stop_reason=reason,
        correct=_is_correct(env, arm),
        **extra,
    )


# -- Stages I-III ------------------------------------------------------------


def stage2_targets(family: RewardFamily, b, delta: float, alpha: float, L2: int):
    """Per-arm pull targets ceil(min(alpha w*_i(b) T*(b) ln(1/delta), L2)).

    Returns ``(targets, weights)``. Propagates :class:`DegenerateInstanceError`
    or :class:`DomainError` from the oracle when ``b`` has no unique interior
    maximizer; callers then fall back to ``L2`` everywhere.
    """
    sol = solve_allocation(BanditInstance(family, b))
    raw = alpha * sol.weights * sol.characteristic_time * math.log(1.0 / delta)
    targets = np.ceil(np.minimum(raw, L2)).astype(np.int64)
    return targets, sol.weights


@dataclass
class Stage2State:
    q: int
    b_q: np.ndarray
    weights_q: np.ndarray | None
    targets_q: np.ndarray
    tau_q: int
    T_final: np.ndarray


@dataclass
class _FirstStages:
    tau: int
    istar: int
    passed: bool
    batches: int
    rounds: int
    history: list[Stage2State] = field(default_factory=list)


def run_first_stages(env: BatchedEnv, params: TriParams) -> _FirstStages:
    """Stages I-III, identical for Tri-BBAI and Opt-BBAI."""
    n = env.n
    if n < 2:
        raise PreconditionError("need at least two arms")
    family = env.instance.family

    env.issue_batch([params.L1] * n)

    prev_w = np.full(n, 1.0 / n)
    T_max = np.full(n, params.L1, dtype=np.int64)
    history = []
    rounds = 0
    for q in range(1, params.max_stage2_rounds + 1):
        rounds = q
        means = env.stats.means
        istar = env.stats.leader()
        b = means + params.epsilon
        b[istar] = means[istar] - params.epsilon
        try:
            targets, w = stage2_targets(family, b, params.delta, params.alpha, params.L2)
        except (DegenerateInstanceError, DomainError):
            targets, w = np.full(n, params.L2, dtype=np.int64), None
        increments = np.maximum(targets - T_max, 0)
        T_max = np.maximum(T_max, targets)
        env.issue_batch(increments)
        history.append(Stage2State(q, b, w, targets, env.total_pulls, T_max.copy()))
        # without an oracle solution there is no evidence of stability, so keep going
        stable = w is not None and np.all(np.abs(w - prev_w) <= 1.0 / math.sqrt(n))
        if stable and q >= params.min_stage2_rounds:
            break
        if w is not None:
            prev_w = w

    tau = env.total_pulls
    istar, z = min_Z(family, env.stats)
    passed = z >= params.stage3_threshold(tau)
    return _FirstStages(tau, istar, passed, env.batch_count, rounds, history)


def tri_bbai(env: BatchedEnv, params: TriParams) -> RunResult:
    """Three-batch best arm identification."""
    first = run_first_stages(env, params)
    extra = dict(tau=first.tau, stage3_batches=first.batches, stage2_rounds=first.rounds)
    if first.passed:
        return _result(env, first.istar, StopReason.STAGE3_CHERNOFF, **extra)
    env.issue_batch(np.maximum(params.L3 - env.stats.pulls, 0))
    return _result(env, env.stats.leader(), StopReason.STAGE4_TRI_ARGMAX, **extra)


# -- Opt-BBAI Stage IV -------------------------------------------------------


@dataclass
class _Round:
    """Bookkeeping retained for an elimination round ``j``."""

    j: int
    active: list[int]
    survivors: list[int]
    eps: float
    log_delta: float
    d: int
    budget: int  # B_j
    log_gamma: float
    ell: int = 0
    counts: dict[int, int] = field(default_factory=dict)
    sums: dict[int, float] = field(default_factory=dict)

    @property
    def eliminated(self) -> list[int]:
        return [i for i in self.active if i not in self.survivors]

    def phat(self, arm: int) -> float:
        return self.sums[arm] / self.counts[arm]


class EliminationState:
    """Successive elimination with checks for an eliminated best arm.

    ``delta_r`` and ``gamma_j`` are stored as logarithms: after a few squarings
    ``gamma_j`` underflows any float.
    """

    def __init__(self, n: int, delta: float, scale: float = 32.0):
        self.n = n
        self.delta = delta
        self.scale = scale
        self.r = 0
        self.active = list(range(n))
        self.rounds: list[_Round] = []
        self.budget = 0  # B_r

    @staticmethod
    def round_eps(r: int) -> float:
        return 2.0**-r / 4.0

    def round_log_delta(self, r: int) -> float:
        return math.log(self.delta) - math.log(40.0 * math.pi**2 * self.n * r * r)

    def sample_size(self, eps: float, log_conf: float) -> int:
        """ceil(scale / eps^2 * ln(2 / conf)) with ``conf`` given in log domain."""
        return math.ceil(self.scale / eps**2 * (math.log(2.0) - log_conf))

    @property
    def current(self) -> _Round:
        return self.rounds[-1]

    def begin_round(self) -> list[int]:
        """Open round r+1 and return its elimination pull counts."""
        if len(self.active) <= 1:
            raise PreconditionError("successive elimination needs more than one active arm")
        self.r += 1
        r = self.r
        eps = self.round_eps(r)
        log_delta = self.round_log_delta(r)
        d = self.sample_size(eps, log_delta)
        self.budget += d * len(self.active)
        self.rounds.append(
            _Round(r, list(self.active), [], eps, log_delta, d, self.budget, log_gamma=log_delta)
        )
        counts = [0] * self.n
        for i in self.active:
            counts[i] = d
        return counts

    def absorb_elimination(self, rewards, force_out: int | None = None) -> None:
        """Record round-r means and decide the survivors S_{r+1}.

        ``force_out`` removes that arm regardless of its samples; the remaining
        arms are compared against the best of the rest.
        """
        rnd = self.current
        for i in rnd.active:
            rnd.counts[i] = len(rewards[i][: rnd.d])
            rnd.sums[i] = float(np.sum(rewards[i][: rnd.d]))
        pool = [i for i in rnd.active if i != force_out]
        lead = max(rnd.phat(i) for i in pool)
        rnd.survivors = [i for i in pool if rnd.phat(i) >= lead - rnd.eps]
        self.active = list(rnd.survivors)

    def round_leader(self) -> int:
        rnd = self.current
        return max(rnd.active, key=lambda i: (rnd.phat(i), -i))

    def plan_repulls(self) -> list[tuple[_Round, dict[int, int]]]:
        """Square gamma_j for every triggered earlier round and return the extra pulls.

        The trigger ``B_r gamma_j 2^ell_j > B_j`` depends only on state known
        before round r's samples are revealed, so these pulls can share the
        round's batch.
        """
        plan = []
        log_b = math.log(self.budget)
        for rnd in self.rounds[:-1]:
            elim = rnd.eliminated
            if not elim:
                continue
            if log_b + rnd.log_gamma + rnd.ell * math.log(2.0) > math.log(rnd.budget):
                rnd.log_gamma *= 2.0
                rnd.ell += 1
                total = self.sample_size(rnd.eps, rnd.log_gamma)
                plan.append((rnd, {i: max(total - rnd.counts[i], 0) for i in elim}))
        return plan

    @staticmethod
    def absorb_repulls(plan, rewards, offsets) -> None:
        for rnd, extra in plan:
            for i, c in extra.items():
                chunk = rewards[i][offsets[i] : offsets[i] + c]
                offsets[i] += c
                rnd.counts[i] += c
                rnd.sums[i] += float(np.sum(chunk))

    def fallback_triggered(self) -> bool:
        """Does an arm eliminated at some earlier round j now look within eps_j/2 of the leader?"""
        cur = self.current
        lead = cur.phat(self.round_leader())
        for rnd in self.rounds[:-1]:
            for i in rnd.eliminated:
                if rnd.phat(i) > lead - rnd.eps / 2.0:
                    return True
        return False


def successive_elim_round(env: BatchedEnv, state: EliminationState, force_out: int | None = None):
    """One elimination round issued as its own batch."""
    counts = state.begin_round()
    rewards = env.issue_batch(counts)
    state.absorb_elimination(rewards, force_out)
    return state


def check_best_arm_elimination(env: BatchedEnv, state: EliminationState, rng: np.random.Generator):
    """Re-sample triggered earlier rounds (own batch) and run the fallback test.

    Returns a uniformly drawn arm of the current round's active set when the
    fallback fires, else ``None``.
    """
    plan = state.plan_repulls()
    counts = [0] * env.n
    for _, extra in plan:
        for i, c in extra.items():
            counts[i] += c
    rewards = env.issue_batch(counts)
    state.absorb_repulls(plan, rewards, [0] * env.n)
    if state.fallback_triggered():
        arms = state.current.active
        return int(arms[rng.integers(len(arms))])
    return None


def opt_bbai(env: BatchedEnv, params: TriParams, force_eliminate_best: bool = False) -> RunResult:
    """Opt-BBAI: Stages I-III of Tri-BBAI, then elimination with best-arm checks.

    Each while-loop round is one batch holding both the elimination pulls and
    any triggered re-pulls. ``force_eliminate_best`` is test instrumentation:
    the true best arm is dropped at round 1 whatever its samples say.
    """
    first = run_first_stages(env, params)
    extra = dict(tau=first.tau, stage3_batches=first.batches, stage2_rounds=first.rounds)
    if first.passed:
        return _result(env, first.istar, StopReason.STAGE3_CHERNOFF, **extra)
    if env.instance.family is not RewardFamily.BERNOULLI:
        raise CapabilityError("Opt-BBAI stage IV requires rewards bounded in [0, 1]")

    state = EliminationState(env.n, params.delta, params.elimination_scale)
    best = env.instance.best_arm
    while len(state.active) > 1:
        counts = state.begin_round()
        plan = state.plan_repulls()
        for _, more in plan:
            for i, c in more.items():
                counts[i] += c
        rewards = env.issue_batch(counts)
        force_out = best if force_eliminate_best and state.r == 1 else None
        state.absorb_elimination(rewards, force_out)
        offsets = [state.current.d if i in state.current.active else 0 for i in range(env.n)]
        state.absorb_repulls(plan, rewards, offsets)
        if state.fallback_triggered():
            arms = state.current.active
            arm = int(arms[env.rng.integers(len(arms))])
            return _result(
                env, arm, StopReason.STAGE4_OPT_FALLBACK,
                elimination_rounds=state.r, first_round_budget=state.rounds[0].budget, **extra,
            )
    return _result(
        env, state.active[0], StopReason.STAGE4_OPT_ELIMINATION,
        elimination_rounds=state.r, first_round_budget=state.rounds[0].budget, **extra,
    )


# -- Track-and-Stop baseline -------------------------------------------------


def track_and_stop(env: BatchedEnv, delta: float) -> RunResult:
    """Fully sequential Track-and-Stop with direct tracking and forced exploration.

    Every pull is its own batch. Stops when the Chernoff statistic of the
    empirical leader clears ``ln((ln t + 1) / delta)``.
    """
    n = env.n
    if n < 2:
        raise PreconditionError("need at least two arms")
    family = env.instance.family
    for arm in range(n):
        env.pull(arm)
    while True:
        t = env.total_pulls
        istar, z = min_Z(family, env.stats)
        if z >= tas_beta_threshold(t, delta):
            return _result(env, istar, StopReason.BASELINE_STOP)
        pulls = env.stats.pulls
        starved = np.flatnonzero(pulls < math.sqrt(t) - n / 2)
        if starved.size:
            arm = int(starved[np.argmin(pulls[starved])])
        else:
            try:
                w = solve_allocation(BanditInstance(family, env.stats.means)).weights
                arm = int(np.argmax(t * w - pulls))
            except (DegenerateInstanceError, DomainError):
                arm = int(np.argmin(pulls))
        env.pull(arm)
