import math
from dataclasses import dataclass
from typing import Callable, Sequence, Tuple

import numpy as np
from scipy import stats

Z95 = 1.959963984540054


@dataclass(frozen=True)
class Estimate:
    """Monte Carlo schatting: gemiddelde, halve breedte van het 95%-interval en aantal."""
    mean: float
    ci: float
    count: int
    lower: float = float("nan")
    upper: float = float("nan")

    def as_dict(self) -> dict:
        return {"mean": self.mean, "ci": self.ci, "count": self.count,
                "lower": self.lower, "upper": self.upper}


def binomial_estimate(successes: int, trials: int) -> Estimate:
    """Fractie met Wald-halfbreedte en Wilson-grenzen."""
    if trials <= 0:
        return Estimate(float("nan"), float("nan"), 0)
    frac = successes / trials
    half = Z95 * math.sqrt(frac * (1.0 - frac) / trials)
    ci = stats.binomtest(int(successes), int(trials)).proportion_ci(
        confidence_level=0.95, method="wilson")
    return Estimate(frac, half, trials, float(ci.low), float(ci.high))


def mean_estimate(values: Sequence[float]) -> Estimate:
    """Gemiddelde met normale benadering van het 95%-interval."""
    arr = np.asarray(values, dtype=float)
    n = arr.size
    if n == 0:
        return Estimate(float("nan"), float("nan"), 0)
    mean = math.fsum(arr.tolist()) / n
    if n < 2:
        return Estimate(mean, 0.0, n, mean, mean)
    sd = math.sqrt(math.fsum(((arr - mean) ** 2).tolist()) / (n - 1))
    half = Z95 * sd / math.sqrt(n)
    return Estimate(mean, half, n, mean - half, mean + half)


def ks_statistic(samples: Sequence[float], cdf: Callable) -> Tuple[float, float]:
    """One-sample KS tegen een (gevectoriseerde) CDF; geeft (statistic, p-value)."""
    res = stats.kstest(np.asarray(samples, dtype=float), cdf)
    return float(res.statistic), float(res.pvalue)


def ks_two_sample(a: Sequence[float], b: Sequence[float]) -> Tuple[float, float]:
    res = stats.ks_2samp(np.asarray(a, dtype=float), np.asarray(b, dtype=float))
    return float(res.statistic), float(res.pvalue)


def chi_square_pvalue(observed: Sequence[float], expected: Sequence[float]) -> float:
    obs = np.asarray(observed, dtype=float)
    exp = np.asarray(expected, dtype=float)
    # scipy eist gelijke totalen
    exp = exp * (obs.sum() / exp.sum())
    return float(stats.chisquare(obs, exp).pvalue)


def ks_truncated(samples: Sequence[float], censored: int, cdf: Callable, upper: float) -> float:
    """
    KS-afstand op [0, upper] wanneer `censored` waarnemingen alleen als '> upper' bekend zijn.
    De empirische CDF telt de gecensureerde trials mee in de noemer.
    """
    x = np.sort(np.asarray(samples, dtype=float))
    x = x[x <= upper]
    total = x.size + int(censored)
    if total == 0:
        return 0.0
    f = np.asarray(cdf(x), dtype=float)
    i = np.arange(1, x.size + 1)
    d_plus = np.max(i / total - f) if x.size else 0.0
    d_minus = np.max(f - (i - 1) / total) if x.size else 0.0
    d_end = abs(x.size / total - float(cdf(upper)))
    return float(max(d_plus, d_minus, d_end, 0.0))
