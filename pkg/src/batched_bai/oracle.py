"""Optimal allocation w*(mu) and characteristic time T*(mu).

The sup-inf problem defining T*(mu) collapses to one-dimensional root finding.
For a candidate allocation ``w`` the inner infimum over alternative models has
the closed form ``min_i (w_1 + w_i) I_{w_1/(w_1+w_i)}(mu_1, mu_i)``
(:func:`best_response_value`). At the optimum every term of that minimum is
equal to a common value ``y*``; writing ``x_i = w_i / w_1`` this reads
``g_i(x_i) = y*`` with ``g_i(x) = (1 + x) I_{1/(1+x)}(mu_1, mu_i)``, and ``y*`` is
pinned down by ``F_mu(y*) = 1``.

Two facts make the numerics cheap. With ``m = (mu_1 + x mu_i) / (1 + x)``,

* ``g_i(x) = d(mu_1, m) + x d(mu_i, m)``, and
* ``g_i'(x) = d(mu_i, m)`` (the terms through ``dm/dx`` cancel because ``m``
  minimizes the weighted divergence),

so ``g_i`` is concave and increasing and Newton steps taken from inside the
bracket never leave it. Both solves below are bracketed, falling back to
bisection whenever a Newton step would escape. The inner loops are compiled
with numba (cached on disk); the first call in a fresh environment pays a
one-off compilation of about two seconds.

:func:`grid_oracle` maximizes the best-response value by brute force on a
simplex grid and shares nothing with the root-finding path except the KL
divergence; it exists to check :func:`solve_allocation`.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from numba import njit

from .errors import (
    CapabilityError,
    DegenerateInstanceError,
    DomainError,
    PreconditionError,
    RangeError,
)
from .exp_family import BanditInstance, RewardFamily

INNER_TOL = 1e-10
OUTER_TOL = 1e-8
SIMPLEX_TOL = 1e-9
ASYMPTOTE_MARGIN = 1e-12
_MAX_ITER = 500


@dataclass(frozen=True)
class AllocationSolution:
    """Optimal weights, characteristic time and the multiplier ``y*``.

    ``multiplier`` is NaN when the solution did not come from the root-finding
    path (the grid oracle).
    """

    weights: np.ndarray
    characteristic_time: float
    multiplier: float


def _split_best(instance: BanditInstance) -> tuple[int, float, float]:
    """Return (best index, best mean, runner-up mean)."""
    means = instance.means
    best = int(np.argmax(means))
    mu1 = means[best]
    mu2 = max(m for i, m in enumerate(means) if i != best)
    return best, mu1, mu2


def _mix(mu1: float, mui: float, x: float) -> float:
    m = (mu1 + x * mui) / (1.0 + x)
    # keep the mixture inside [mui, mu1] despite rounding
    return min(max(m, min(mu1, mui)), max(mu1, mui))


def I_fn(family: RewardFamily, c: float, mu1: float, mui: float) -> float:
    """I_c(mu, mu') = c d(mu, m) + (1 - c) d(mu', m) with m = c mu + (1 - c) mu'."""
    family = RewardFamily.parse(family)
    if not 0.0 <= c <= 1.0:
        raise DomainError(f"c must lie in [0, 1], got {c!r}")
    family.check(mu1)
    family.check(mui)
    m = c * mu1 + (1.0 - c) * mui
    m = min(max(m, min(mu1, mui)), max(mu1, mui))
    out = 0.0
    if c > 0.0:
        out += c * family.kl(mu1, m)
    if c < 1.0:
        out += (1.0 - c) * family.kl(mui, m)
    return out


def g_fn(family: RewardFamily, x: float, mu1: float, mui: float) -> float:
    """g(x) = (1 + x) I_{1/(1+x)}(mu1, mui), increasing from 0 to d(mu1, mui)."""
    family = RewardFamily.parse(family)
    if not x >= 0.0:
        raise DomainError(f"x must be nonnegative, got {x!r}")
    if not mu1 > mui:
        raise PreconditionError(f"g requires mu1 > mui, got {mu1!r} <= {mui!r}")
    family.check(mu1)
    family.check(mui)
    if math.isinf(x):
        return family.kl(mu1, mui)
    m = _mix(mu1, mui, x)
    return family.kl(mu1, m) + x * family.kl(mui, m)


def _g_and_slope(family: RewardFamily, x: float, mu1: float, mui: float) -> tuple[float, float]:
    m = _mix(mu1, mui, x)
    slope = family.kl(mui, m)
    return family.kl(mu1, m) + x * slope, slope


def invert_g(family: RewardFamily, y: float, mu1: float, mui: float, tol: float = INNER_TOL) -> float:
    """Solve g(x) = y for x >= 0.

    An upper bracket is found by doubling; the root is then refined with
    Newton steps that are kept inside the bracket (bisection otherwise) until
    ``|g(x) - y| <= tol``.

    Raises:
        DomainError: ``y < 0``.
        RangeError: ``y >= d(mu1, mui)``, which ``g`` only approaches.
    """
    family = RewardFamily.parse(family)
    if not mu1 > mui:
        raise PreconditionError(f"g requires mu1 > mui, got {mu1!r} <= {mui!r}")
    if not y >= 0.0:
        raise DomainError(f"y must be nonnegative, got {y!r}")
    ceiling = family.kl(mu1, mui)
    if y >= ceiling:
        raise RangeError(f"y={y!r} is not below the asymptote d(mu1, mui)={ceiling!r}")
    if y == 0.0:
        return 0.0

    lo, hi = 0.0, 1.0
    while _g_and_slope(family, hi, mu1, mui)[0] <= y:
        lo, hi = hi, 2.0 * hi
        if hi > 1e300:
            raise RangeError(f"y={y!r} is numerically indistinguishable from the asymptote")

    x = lo
    for _ in range(_MAX_ITER):
        gx, slope = _g_and_slope(family, x, mu1, mui)
        resid = gx - y
        if abs(resid) <= tol:
            return x
        if resid < 0.0:
            lo = x
        else:
            hi = x
        nxt = x - resid / slope if slope > 0.0 else math.nan
        if not lo < nxt < hi:
            nxt = 0.5 * (lo + hi)
        if nxt == x or hi - lo <= 4.0 * math.ulp(hi):
            return x
        x = nxt
    return x


@njit(cache=True)
def _kl_nb(bernoulli, p, q):
    if not bernoulli:
        return 0.5 * (p - q) * (p - q)
    if p == q:
        return 0.0
    out = p * math.log(p / q) + (1.0 - p) * math.log((1.0 - p) / (1.0 - q))
    return out if out > 0.0 else 0.0


@njit(cache=True)
def _mix_nb(mu1, mui, x):
    m = (mu1 + x * mui) / (1.0 + x)
    return min(max(m, mui), mu1)


@njit(cache=True)
def _invert_g_nb(bernoulli, y, mu1, mui, tol):
    # compiled twin of invert_g for interior means and 0 <= y < d(mu1, mui)
    if y == 0.0:
        return 0.0
    lo, hi = 0.0, 1.0
    while True:
        m = _mix_nb(mu1, mui, hi)
        if _kl_nb(bernoulli, mu1, m) + hi * _kl_nb(bernoulli, mui, m) > y:
            break
        lo, hi = hi, 2.0 * hi
        if hi > 1e300:
            return math.inf
    x = lo
    for _ in range(_MAX_ITER):
        m = _mix_nb(mu1, mui, x)
        slope = _kl_nb(bernoulli, mui, m)
        resid = _kl_nb(bernoulli, mu1, m) + x * slope - y
        if abs(resid) <= tol:
            return x
        if resid < 0.0:
            lo = x
        else:
            hi = x
        nxt = x - resid / slope if slope > 0.0 else math.nan
        if not (lo < nxt < hi):
            nxt = 0.5 * (lo + hi)
        if nxt == x or hi - lo <= 4.0 * np.spacing(hi):
            return x
        x = nxt
    return x


@njit(cache=True)
def _F_terms_nb(bernoulli, mu1, mus, y, tol):
    """F(y), F'(y) and the ratios x_i(y)."""
    k = mus.shape[0]
    xs = np.empty(k)
    total = 0.0
    slope = 0.0
    for i in range(k):
        mui = mus[i]
        x = _invert_g_nb(bernoulli, y, mu1, mui, tol)
        xs[i] = x
        m = _mix_nb(mu1, mui, x)
        num = _kl_nb(bernoulli, mu1, m)
        den = _kl_nb(bernoulli, mui, m)
        total += num / den
        var = m * (1.0 - m) if bernoulli else 1.0
        dnum = (m - mu1) / var
        dden = (m - mui) / var
        dm_dx = (mui - mu1) / ((1.0 + x) * (1.0 + x))
        slope += (dnum * den - num * dden) / (den * den) * dm_dx / den
    return total, slope, xs


@njit(cache=True)
def _solve_multiplier_nb(bernoulli, mu1, mus, top, inner_tol, outer_tol):
    """Bracketed Newton on F(y) = 1 over (0, top); bisection after 60 steps."""
    lo, hi = 0.0, top
    y = 0.5 * hi
    for it in range(_MAX_ITER):
        f, slope, _ = _F_terms_nb(bernoulli, mu1, mus, y, inner_tol)
        resid = f - 1.0
        if abs(resid) <= outer_tol:
            break
        if resid < 0.0:
            lo = y
        else:
            hi = y
        nxt = y - resid / slope if slope > 0.0 else math.nan
        if not (lo < nxt < hi) or it > 60:
            nxt = 0.5 * (lo + hi)
        if nxt == y:
            break
        y = nxt
    return y


def _F_terms(family: RewardFamily, mu1: float, others: list[float], y: float):
    mus = np.asarray(others, dtype=float)
    total, slope, xs = _F_terms_nb(family is RewardFamily.BERNOULLI, float(mu1), mus, float(y), INNER_TOL)
    return total, slope, xs


def _others(instance: BanditInstance, best: int) -> list[float]:
    return [m for i, m in enumerate(instance.means) if i != best]


def F_mu(instance: BanditInstance, y: float) -> float:
    """F(y) = sum_{i != best} d(mu1, m_i) / d(mu_i, m_i), m_i the x_i(y) mixture.

    Continuous and increasing on [0, d(mu1, mu2)), with F(0) = 0.
    """
    best, mu1, mu2 = _split_best(instance)
    if mu1 == mu2:
        raise DegenerateInstanceError("the best arm is not unique")
    family = instance.family
    top = family.kl(mu1, mu2)
    if not 0.0 <= y < top:
        raise RangeError(f"y={y!r} outside [0, d(mu1, mu2)={top!r})")
    return _F_terms(family, mu1, _others(instance, best), y)[0]


def best_response_value(instance: BanditInstance, w) -> float:
    """Closed-form inner infimum ``min_i (w_1 + w_i) I_{w_1/(w_1+w_i)}(mu_1, mu_i)``.

    Arm "1" is the (lowest-index) argmax of the instance means.
    """
    w = np.asarray(w, dtype=float)
    if w.shape != (instance.n,):
        raise PreconditionError(f"weights must have shape ({instance.n},), got {w.shape}")
    if np.any(w < -SIMPLEX_TOL) or abs(w.sum() - 1.0) > SIMPLEX_TOL:
        raise PreconditionError("weights are not on the probability simplex")
    family = instance.family
    best = instance.best_arm
    mu1 = instance.means[best]
    w1 = max(float(w[best]), 0.0)
    value = math.inf
    for i, mui in enumerate(instance.means):
        if i == best:
            continue
        wi = max(float(w[i]), 0.0)
        s = w1 + wi
        term = 0.0 if s == 0.0 else s * I_fn(family, w1 / s, mu1, mui)
        value = min(value, term)
    return value


def solve_allocation(instance: BanditInstance) -> AllocationSolution:
    """Compute w*(mu), T*(mu) and y* for an instance with a unique best arm.

    Weights are returned in the instance's own arm order.

    Raises:
        DegenerateInstanceError: the two largest means are tied.
        DomainError: a Bernoulli mean sits on the boundary {0, 1}.
    """
    family = instance.family
    for m in instance.means:
        if not family.in_interior(m):
            raise DomainError(f"mean {m!r} is not in the interior of the {family.value} domain")
    best, mu1, mu2 = _split_best(instance)
    if mu1 == mu2:
        raise DegenerateInstanceError("the best arm is not unique; T* is infinite")
    others = _others(instance, best)

    top = family.kl(mu1, mu2) * (1.0 - ASYMPTOTE_MARGIN)
    bern = family is RewardFamily.BERNOULLI
    y = _solve_multiplier_nb(bern, float(mu1), np.asarray(others, dtype=float), top, INNER_TOL, OUTER_TOL)
    xs = _F_terms(family, mu1, others, y)[2]
    x_full = np.empty(instance.n)
    x_full[best] = 1.0
    x_full[[i for i in range(instance.n) if i != best]] = xs
    weights = x_full / x_full.sum()
    value = best_response_value(instance, weights)
    return AllocationSolution(weights=weights, characteristic_time=1.0 / value, multiplier=y)


def _compositions(total: int, parts: int) -> np.ndarray:
    """All nonnegative integer vectors of length ``parts`` summing to ``total``."""
    if parts == 1:
        return np.array([[total]], dtype=np.int64)
    blocks = []
    for first in range(total + 1):
        rest = _compositions(total - first, parts - 1)
        blocks.append(np.column_stack([np.full(len(rest), first, dtype=np.int64), rest]))
    return np.concatenate(blocks)


def grid_oracle(instance: BanditInstance, resolution: int) -> AllocationSolution:
    """Brute-force maximization of the best-response value on a simplex grid.

    Every weight vector with coordinates in ``{0, 1/R, ..., 1}`` is scored.
    Intended for n <= 4 only.
    """
    n = instance.n
    if n > 4:
        raise CapabilityError(f"grid oracle supports at most 4 arms, got {n}")
    if resolution < 50:
        raise PreconditionError(f"resolution must be at least 50, got {resolution}")
    family = instance.family
    means = np.asarray(instance.means)
    best = instance.best_arm
    rest = [i for i in range(n) if i != best]
    mu1 = means[best]

    best_val = -1.0
    best_w = None
    for k1 in range(resolution + 1):
        others = _compositions(resolution - k1, n - 1) / resolution
        w1 = k1 / resolution
        vals = np.full(len(others), np.inf)
        for col, i in enumerate(rest):
            wi = others[:, col]
            s = w1 + wi
            with np.errstate(divide="ignore", invalid="ignore"):
                m = np.where(s > 0, (w1 * mu1 + wi * means[i]) / s, mu1)
            term = w1 * family.kl_array(mu1, m) + wi * family.kl_array(means[i], m)
            term = np.where(s > 0, term, 0.0)
            vals = np.minimum(vals, term)
        j = int(np.argmax(vals))
        if vals[j] > best_val:
            best_val = float(vals[j])
            w = np.empty(n)
            w[best] = w1
            w[rest] = others[j]
            best_w = w
    return AllocationSolution(weights=best_w, characteristic_time=1.0 / best_val, multiplier=math.nan)
