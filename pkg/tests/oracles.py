"""Independent reference computations used by the tests.

Nothing here touches the package's own estimator or sampling paths.
"""

import numpy as np
from scipy import stats


def brute_classify(k: int, mu1: float, bg: float, top: int) -> int:
    """argmax over n of the Poisson log-pmf, first (smallest n) maximum wins."""
    lam = np.arange(top + 1) * mu1 + bg
    ll = stats.poisson.logpmf(k, lam)
    return int(np.argmax(ll))


def brute_confusion(mu1: float, bg: float, top: int) -> np.ndarray:
    """Confusion matrix from brute-force decisions and scipy's Poisson cdf."""
    k_hi = int(stats.poisson.isf(1e-15, top * mu1 + bg)) + 2
    ks = np.arange(k_hi + 1)
    decided = np.array([brute_classify(k, mu1, bg, top) for k in ks])
    out = np.zeros((top + 1, top + 1))
    for i in range(top + 1):
        lam = i * mu1 + bg
        pmf = stats.poisson.pmf(ks, lam) if lam > 0 else (ks == 0).astype(float)
        for j in range(top + 1):
            out[i, j] = pmf[decided == j].sum()
        out[i, top] += stats.poisson.sf(k_hi, lam) if lam > 0 else 0.0
    return out


def brute_nmax(mu1: float, bg: float, epsilon: float, top: int) -> int:
    err = 1 - np.diag(brute_confusion(mu1, bg, top))
    bad = np.flatnonzero(err > epsilon)
    return int(bad[0]) - 1 if bad.size else top


def chi2_pvalue(samples: np.ndarray, lam: float, min_expected: float = 5.0) -> float:
    """Chi-square goodness of fit to Poisson(lam); bins merged until each expects >= min_expected."""
    n = len(samples)
    lo = int(stats.poisson.ppf(1e-6, lam))
    hi = int(stats.poisson.isf(1e-6, lam))
    edges = [lo]
    k = lo
    while k < hi:
        k_next = k + 1
        while k_next < hi and n * (stats.poisson.cdf(k_next - 1, lam) - stats.poisson.cdf(k - 1, lam)) < min_expected:
            k_next += 1
        edges.append(k_next)
        k = k_next
    # bins: (-inf, e1), [e1, e2), ..., [e_last, inf)
    inner = np.array(edges[1:-1])
    observed = np.bincount(np.searchsorted(inner, samples, side="right"), minlength=len(inner) + 1)
    cdf = stats.poisson.cdf(inner - 1, lam)
    probs = np.diff(np.concatenate([[0.0], cdf, [1.0]]))
    return float(stats.chisquare(observed, probs * n).pvalue)


def binomial_sigma(p, n):
    return np.sqrt(np.asarray(p) * (1 - np.asarray(p)) / n)
