"""Poisson maximum-likelihood photon-number estimation.

A count ``k`` is explained by ``n`` stored excitations with likelihood
Poisson(k; n*mu1 + bg). Everything here is exact: confusion matrices are
summed from the log-gamma pmf, there is no sampling.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace
from typing import Optional

import numpy as np
from scipy.special import gammaln
from scipy.stats import norm, poisson

from .polariton import PhotonStatistics
from .readout import ReadoutSpec, mean_signal_per_excitation

N_TOP_LIMIT = 100_000
_TIE_RTOL = 1e-12


class InfeasibleError(ValueError):
    """The requested photon number cannot be resolved under the given caps."""


def normal_nmax_estimate(mu1: float, bg: float = 0.0, epsilon: float = 0.01) -> float:
    """Largest n with half-gap mu1/2 at least z(eps/2) standard deviations."""
    z = norm.isf(epsilon / 2.0)
    return max(0.0, mu1 / (4.0 * z * z) - bg / mu1)


@dataclass(frozen=True)
class PoissonChannel:
    mu1: float
    bg: float = 0.0
    n_top: Optional[int] = None  # None: ceil(3 * n_max estimate + 10)

    def __post_init__(self):
        if not (math.isfinite(self.mu1) and self.mu1 > 0):
            raise ValueError("mu1 must be finite and > 0")
        if not (math.isfinite(self.bg) and self.bg >= 0):
            raise ValueError("bg must be finite and >= 0")
        if self.n_top is not None and self.n_top < 1:
            raise ValueError("n_top must be >= 1")

    @property
    def top(self) -> int:
        if self.n_top is not None:
            return int(self.n_top)
        return min(N_TOP_LIMIT, math.ceil(3 * normal_nmax_estimate(self.mu1, self.bg) + 10))

    def means(self) -> np.ndarray:
        return np.arange(self.top + 1) * self.mu1 + self.bg


@dataclass(frozen=True)
class ConfusionMatrix:
    entries: np.ndarray  # P(n_hat = j | n = i)

    @property
    def row_sums(self) -> np.ndarray:
        return self.entries.sum(axis=1)

    @property
    def diagonal(self) -> np.ndarray:
        return np.diag(self.entries).copy()

    @property
    def misclassification(self) -> np.ndarray:
        return 1.0 - self.diagonal

    def __len__(self):
        return self.entries.shape[0]


def log_likelihoods(k, channel: PoissonChannel) -> np.ndarray:
    """k*log(lambda_n) - lambda_n for every n in the support, shape (len(k), top+1).

    The k-only term log(k!) is dropped since it never affects the argmax.
    """
    k = np.atleast_1d(np.asarray(k, dtype=float))[:, None]
    lam = channel.means()[None, :]
    with np.errstate(divide="ignore", invalid="ignore"):
        ll = k * np.log(lam) - lam
    # lambda = 0 is a point mass at k = 0
    ll = np.where(lam == 0, np.where(k == 0, 0.0, -np.inf), ll)
    return ll


def classify(k, channel: PoissonChannel):
    """Maximum-likelihood photon number for count(s) ``k``; ties go to the smaller n."""
    k_arr = np.asarray(k)
    if np.any(k_arr < 0):
        raise ValueError("counts must be >= 0")
    ll = log_likelihoods(k_arr, channel)
    best = ll.max(axis=1, keepdims=True)
    lam_top = channel.means()[-1]
    scale = np.atleast_1d(k_arr).astype(float)[:, None] * abs(math.log(max(lam_top, 1e-300))) + lam_top + 1.0
    near_best = ll >= best - _TIE_RTOL * scale
    n_hat = np.argmax(near_best, axis=1)
    return int(n_hat[0]) if k_arr.ndim == 0 else n_hat


def likelihood_crossings(channel: PoissonChannel) -> np.ndarray:
    """Real-valued counts t_n (n = 1..top) above which n beats n-1."""
    lam_prev = channel.means()[:-1]
    with np.errstate(divide="ignore", over="ignore"):
        t = channel.mu1 / np.log1p(channel.mu1 / lam_prev)
    return np.where(lam_prev == 0, 0.0, t)


def decision_thresholds(channel: PoissonChannel) -> np.ndarray:
    """Integer boundaries: k*_n is the largest count classified as n, n = 0..top-1.

    Strictly increasing whenever mu1 is comfortably above 1; for smaller
    mu1 some photon numbers own no counts and consecutive boundaries repeat.
    """
    t = likelihood_crossings(channel)
    nearest = np.round(t)
    tie = np.abs(t - nearest) <= _TIE_RTOL * np.maximum(t, 1.0) * 10
    return np.where(tie, nearest, np.floor(t)).astype(np.int64)


def poisson_log_pmf(k: np.ndarray, lam: float) -> np.ndarray:
    if lam == 0:
        return np.where(k == 0, 0.0, -np.inf)
    return k * math.log(lam) - lam - gammaln(k + 1.0)


def confusion_matrix(channel: PoissonChannel) -> ConfusionMatrix:
    """Exact P(n_hat = j | n = i) for i, j in 0..top."""
    top = channel.top
    bounds = decision_thresholds(channel)
    out = np.zeros((top + 1, top + 1))
    for i, lam in enumerate(channel.means()):
        if lam == 0:
            out[i, 0] = 1.0  # thresholds are >= 0, so k = 0 always reads as vacuum
            continue
        cdf = poisson.cdf(bounds, lam)
        out[i] = np.diff(np.concatenate([[0.0], cdf, [1.0]]))
        out[i, -1] = poisson.sf(bounds[-1], lam)
    out = np.clip(out, 0.0, 1.0)
    return ConfusionMatrix(out)


def storage_transfer(top: int, eta_store: float) -> np.ndarray:
    """P(m stored | n incident) under independent per-photon storage."""
    from scipy.stats import binom

    n = np.arange(top + 1)[:, None]
    m = np.arange(top + 1)[None, :]
    return np.where(m <= n, binom.pmf(m, n, eta_store), 0.0)


def end_to_end(cm: ConfusionMatrix, eta_store: float) -> ConfusionMatrix:
    """P(n_hat | n incident photons) including storage loss."""
    if eta_store == 1.0:
        return cm
    return ConfusionMatrix(storage_transfer(len(cm) - 1, eta_store) @ cm.entries)


def _distribution(dist, top: int) -> np.ndarray:
    if isinstance(dist, PhotonStatistics):
        p = dist.pmf(top)
    else:
        p = np.zeros(top + 1)
        d = np.asarray(dist, dtype=float)
        if d.size > top + 1 and d[top + 1 :].sum() > 0:
            raise ValueError("input distribution has mass beyond the classifier support")
        p[: min(d.size, top + 1)] = d[: top + 1]
    if abs(p.sum() - 1.0) > 1e-9:
        raise ValueError(f"input distribution is not supported within n <= {top} (mass {p.sum():.12g})")
    return p


def counting_efficiency(channel: PoissonChannel, distribution, eta_store: float = 1.0) -> float:
    """Probability that the estimate equals the incident photon number."""
    cm = end_to_end(confusion_matrix(channel), eta_store)
    p = _distribution(distribution, channel.top)
    return float(min(1.0, max(0.0, p @ cm.diagonal)))


def max_countable_n(channel: PoissonChannel, epsilon: float) -> int:
    """Largest n such that every photon number 0..n is misread with probability <= epsilon.

    Returns -1 if even the vacuum fails the budget. With ``n_top`` unset the
    support grows until the answer sits clear of the open-ended top state.
    """
    if not 0.0 < epsilon < 0.5:
        raise ValueError("epsilon must lie in (0, 0.5)")
    auto = channel.n_top is None
    top = channel.top
    while True:
        cm = confusion_matrix(replace(channel, n_top=top))
        bad = np.flatnonzero(cm.misclassification > epsilon)
        n_max = int(bad[0]) - 1 if bad.size else top
        if not auto or n_max < top - 1 or top >= N_TOP_LIMIT:
            return n_max
        top = min(2 * top, N_TOP_LIMIT)


def required_measurement_time(
    n_target: int,
    epsilon: float,
    eta_s: float,
    scatter_rate: float,
    bg_rate: float = 0.0,
    leak_prob: float = 0.0,
    dephasing_time: Optional[float] = None,
    rtol: float = 1e-9,
    window: float = 0.2,
    max_scan: int = 4000,
) -> float:
    """Shortest window T for which ``max_countable_n >= n_target``.

    ``bg_rate`` is the total background in detected counts per second.
    Misclassification is not monotone in T: every time a decision threshold
    steps to the next integer count the error jumps. After bisection the
    ``window`` fraction below the bracket is therefore rescanned on a grid
    finer than the threshold spacing, and the first feasible grid cell is
    refined again by bisection.

    Raises :class:`InfeasibleError` when leakage saturation or the dephasing
    cap keep the target out of reach.
    """
    if n_target < 1:
        raise ValueError("n_target must be >= 1")
    if not 0.0 < epsilon < 0.5:
        raise ValueError("epsilon must lie in (0, 0.5)")
    if eta_s <= 0 or scatter_rate <= 0 or bg_rate < 0:
        raise ValueError("eta_s and scatter_rate must be > 0, bg_rate >= 0")

    def feasible(T: float) -> bool:
        window_T = T if dephasing_time is None else min(T, dephasing_time)
        spec = ReadoutSpec(scatter_rate=scatter_rate, eta_s=eta_s, measure_time=window_T, leak_prob=leak_prob)
        mu1 = mean_signal_per_excitation(spec)
        if mu1 <= 0:
            return False
        # states <= n_target only need their upper neighbour in the support
        channel = PoissonChannel(mu1, bg_rate * window_T, n_top=n_target + 1)
        return max_countable_n(channel, epsilon) >= n_target

    def bisect(lo: float, hi: float) -> float:
        while hi - lo > rtol * hi:
            mid = 0.5 * (lo + hi)
            if feasible(mid):
                hi = mid
            else:
                lo = mid
        return hi

    saturated = eta_s / leak_prob if leak_prob > 0 else math.inf
    z = norm.isf(epsilon / 2.0)
    hi = max(4.0 * z * z * n_target / (eta_s * scatter_rate), 1e-15) / 4.0
    lo = 0.0
    while not feasible(hi):
        if dephasing_time is not None and hi >= dephasing_time:
            raise InfeasibleError(f"n_target={n_target} not reachable within the dephasing time {dephasing_time:g} s")
        if saturated < math.inf and eta_s * scatter_rate * hi * leak_prob > 50:
            raise InfeasibleError(
                f"n_target={n_target} not reachable: leakage caps the signal at {saturated:g} counts per excitation"
            )
        lo, hi = hi, hi * 2.0
    best = bisect(lo, hi)

    # thresholds move by about (n_target + 1/2) counts per unit of mu1
    step = 1.0 / (4.0 * (n_target + 1) * eta_s * scatter_rate)
    start = best * (1.0 - window)
    n_steps = min(max_scan, int(math.ceil((best - start) / step)))
    grid = np.linspace(start, best, n_steps + 1)
    for a, b in zip(grid[:-1], grid[1:]):
        if feasible(b):
            return bisect(a, b) if not feasible(a) else a
    return best
