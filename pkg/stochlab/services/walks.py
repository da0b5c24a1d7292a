"""
Enkelvoudige random walks: exit uit symmetrische intervallen, first passage,
exit uit een schijf in het vlak, partiële maxima en de Laplace-getransformeerde
limietwetten waartegen de empirische wetten getoetst worden.

Alle paden komen uit `make_generator(seed).random`, in blokken getrokken;
de blokgrootte verandert de stream niet, dus dezelfde seed geeft in elke
functie hetzelfde pad.
"""

import logging
import math
from dataclasses import dataclass, field
from typing import Callable, Iterator, Optional, Sequence, Tuple

import numpy as np
from scipy import integrate, special
from scipy.stats import binom

from ..errors import ConfigurationError, DomainError
from ..utils.rng import derive_trial_seed, make_generator
from ..utils.stats import ks_statistic, ks_truncated

logger = logging.getLogger(__name__)

FIRST_CHUNK = 1024
MAX_CHUNK = 1 << 20
SERIES_TOL = 1e-12
CAP_FACTOR = 10_000


@dataclass(frozen=True, eq=False)
class WalkPath:
    dim: int
    steps: np.ndarray = field(repr=False)   # (n, dim) eenheidsstappen
    seed: int = 0

    @property
    def length(self) -> int:
        return int(self.steps.shape[0])

    def positions(self) -> np.ndarray:
        """(n+1, dim) posities, beginnend in de oorsprong."""
        pos = np.zeros((self.length + 1, self.dim), dtype=np.int64)
        np.cumsum(self.steps, axis=0, out=pos[1:])
        return pos


@dataclass(frozen=True)
class ExitRecord:
    threshold: int
    time: int
    position: Tuple[int, ...]
    max_before: float            # max van |S_t| over t < T
    angle: Optional[float] = None
    scaled_time: Optional[float] = None
    censored: bool = False


def _check_dim(dim: int) -> None:
    if dim not in (1, 2):
        raise ConfigurationError(f"walk dimension must be 1 or 2, got {dim}", key="dim")


def _steps_from_uniforms(u: np.ndarray, dim: int) -> np.ndarray:
    if dim == 1:
        return np.where(u < 0.5, -1, 1).astype(np.int64).reshape(-1, 1)
    direction = np.minimum((u * 4).astype(np.int64), 3)
    # 0: -x, 1: +x, 2: -y, 3: +y
    steps = np.zeros((u.size, 2), dtype=np.int64)
    axis = direction // 2
    sign = np.where(direction % 2 == 0, -1, 1)
    steps[np.arange(u.size), axis] = sign
    return steps


def _step_chunks(seed: int, dim: int, limit: Optional[int] = None) -> Iterator[np.ndarray]:
    """Blokken stappen van groeiende lengte, samen hoogstens `limit` stappen."""
    rng = make_generator(seed)
    size = FIRST_CHUNK
    taken = 0
    while limit is None or taken < limit:
        k = size if limit is None else min(size, limit - taken)
        yield _steps_from_uniforms(rng.random(k), dim)
        taken += k
        size = min(size * 2, MAX_CHUNK)


def random_walk_path(steps: int, seed: int, dim: int = 1) -> WalkPath:
    _check_dim(dim)
    if steps < 0:
        raise ConfigurationError(f"steps must be >= 0, got {steps}", key="steps")
    if steps == 0:
        return WalkPath(dim, np.zeros((0, dim), dtype=np.int64), int(seed))
    chunks = list(_step_chunks(seed, dim, limit=steps))
    return WalkPath(dim, np.concatenate(chunks, axis=0), int(seed))


def _first_exit(seed: int, dim: int, reached: Callable[[np.ndarray], np.ndarray],
                norm: Callable[[np.ndarray], np.ndarray], cap: Optional[int]):
    """
    Loop tot `reached(pos)` voor het eerst waar is.
    Geeft (T, positie, max norm vóór T) of (None, positie, max) bij de cap.
    """
    start = np.zeros(dim, dtype=np.int64)
    t = 0
    running = 0.0
    for steps in _step_chunks(seed, dim, limit=cap):
        pos = start + np.cumsum(steps, axis=0)
        hit = np.flatnonzero(reached(pos))
        if hit.size:
            j = int(hit[0])
            if j > 0:
                running = max(running, float(norm(pos[:j]).max()))
            return t + j + 1, tuple(int(c) for c in pos[j]), running
        running = max(running, float(norm(pos).max()))
        start = pos[-1]
        t += steps.shape[0]
    return None, tuple(int(c) for c in start), running


def interval_exit(n: int, seed: int) -> ExitRecord:
    """T_n = eerste tijd met |S| = n voor de 1D walk."""
    if n < 1:
        raise ConfigurationError(f"n must be >= 1, got {n}", key="n")
    norm = lambda pos: np.abs(pos[:, 0])
    T, position, running = _first_exit(seed, 1, lambda pos: norm(pos) >= n, norm, None)
    return ExitRecord(n, T, position, running)


def first_passage(n: int, seed: int, cap: Optional[int] = None) -> ExitRecord:
    """Eerste tijd met S = +n; gecensureerd na `cap` stappen (standaard 10^4·n²)."""
    if n < 1:
        raise ConfigurationError(f"n must be >= 1, got {n}", key="n")
    cap = CAP_FACTOR * n * n if cap is None else int(cap)
    T, position, running = _first_exit(
        seed, 1, lambda pos: pos[:, 0] >= n, lambda pos: np.abs(pos[:, 0]), cap)
    if T is None:
        return ExitRecord(n, cap, position, running, censored=True)
    return ExitRecord(n, T, position, running)


def _disk_norm(norm: str) -> Callable[[np.ndarray], np.ndarray]:
    if norm == "euclidean":
        return lambda pos: np.sqrt((pos * pos).sum(axis=1).astype(float))
    if norm == "sup":
        return lambda pos: np.abs(pos).max(axis=1).astype(float)
    raise ConfigurationError(f"unknown norm {norm!r}", key="norm")


def planar_disk_exit(r: int, seed: int, norm: str = "euclidean") -> ExitRecord:
    """
    Eerste tijd dat de 2D walk |S| >= r haalt. `scaled_time` is T/(2 r^2):
    de Brownse klok, waarin elke stap 1/2 tijdseenheid duurt.
    """
    if r < 1:
        raise ConfigurationError(f"radius must be >= 1, got {r}", key="r")
    metric = _disk_norm(norm)
    if norm == "euclidean":
        reached = lambda pos: (pos * pos).sum(axis=1) >= r * r
    else:
        reached = lambda pos: np.abs(pos).max(axis=1) >= r
    T, position, running = _first_exit(seed, 2, reached, metric, None)
    angle = math.atan2(position[1], position[0]) % (2 * math.pi)
    return ExitRecord(r, T, position, running, angle=angle, scaled_time=T / (2.0 * r * r))


def partial_maximum(steps: int, seed: int) -> int:
    """M = max_{t <= steps} |S_t|."""
    if steps < 1:
        raise ConfigurationError(f"steps must be >= 1, got {steps}", key="steps")
    path = random_walk_path(steps, seed, dim=1)
    return int(np.abs(path.positions()[:, 0]).max())


# --- batches met afgeleide seeds ---

def sample_interval_exits(n: int, trials: int, master_seed: int) -> np.ndarray:
    return np.array([interval_exit(n, derive_trial_seed(master_seed, i)).time
                     for i in range(trials)], dtype=np.int64)


@dataclass(frozen=True, eq=False)
class PassageBatch:
    n: int
    cap: int
    times: np.ndarray = field(repr=False)     # int64; cap voor gecensureerde trials
    censored: np.ndarray = field(repr=False)

    @property
    def censored_count(self) -> int:
        return int(self.censored.sum())

    def scaled(self) -> np.ndarray:
        """T/n^2 van de niet-gecensureerde trials."""
        return self.times[~self.censored] / float(self.n * self.n)


def first_passage_cdf(n: int, k) -> np.ndarray:
    """P(T_n <= k) = P(S_k >= n) + P(S_k > n), exact via de binomiale verdeling."""
    k = np.asarray(k, dtype=np.int64)
    # S_k = 2X - k; S_k >= n  <=>  X >= ceil((k + n) / 2)
    m_ge = (k + n + 1) // 2
    m_gt = (k + n) // 2 + 1
    return binom.sf(m_ge - 1, k, 0.5) + binom.sf(m_gt - 1, k, 0.5)


def _reflection_times(n: int, u: np.ndarray, cap: int) -> Tuple[np.ndarray, np.ndarray]:
    """Kleinste k = n + 2j met P(T_n <= k) >= u; gevectoriseerde bisectie over j."""
    j_max = (cap - n) // 2
    censored = first_passage_cdf(n, n + 2 * j_max) < u
    lo = np.full(u.size, -1, dtype=np.int64)    # F(n + 2 lo) < u
    hi = np.full(u.size, j_max, dtype=np.int64)  # F(n + 2 hi) >= u
    active = ~censored
    while True:
        gap = active & (hi - lo > 1)
        if not gap.any():
            break
        mid = (lo + hi) // 2
        ok = first_passage_cdf(n, n + 2 * np.maximum(mid, 0)) >= u
        hi = np.where(gap & ok, mid, hi)
        lo = np.where(gap & ~ok, mid, lo)
    times = np.where(censored, cap, n + 2 * hi)
    return times.astype(np.int64), censored


def first_passage_reflection(n: int, seed: int, cap: Optional[int] = None) -> ExitRecord:
    """Zelfde wet als first_passage, maar uit één uniforme getrokken (geen pad)."""
    if n < 1:
        raise ConfigurationError(f"n must be >= 1, got {n}", key="n")
    cap = CAP_FACTOR * n * n if cap is None else int(cap)
    u = np.array([1.0 - make_generator(seed).random()])
    times, censored = _reflection_times(n, u, cap)
    return ExitRecord(n, int(times[0]), (n,) if not censored[0] else (), math.nan,
                      censored=bool(censored[0]))


def sample_first_passages(n: int, trials: int, master_seed: int, method: str = "reflection",
                          cap: Optional[int] = None) -> PassageBatch:
    """
    First-passage tijden voor `trials` trials. `path` loopt elke walk af;
    `reflection` inverteert de exacte verdelingsfunctie met één uniforme per trial.
    """
    if n < 1:
        raise ConfigurationError(f"n must be >= 1, got {n}", key="n")
    cap = CAP_FACTOR * n * n if cap is None else int(cap)
    if method == "path":
        records = [first_passage(n, derive_trial_seed(master_seed, i), cap) for i in range(trials)]
        times = np.array([r.time for r in records], dtype=np.int64)
        censored = np.array([r.censored for r in records], dtype=bool)
    elif method == "reflection":
        u = np.array([1.0 - make_generator(derive_trial_seed(master_seed, i)).random()
                      for i in range(trials)], dtype=float)
        times, censored = _reflection_times(n, u, cap)
    else:
        raise ConfigurationError(f"unknown first-passage method {method!r}", key="method")
    if censored.any():
        logger.warning(f"first passage to {n}: {int(censored.sum())}/{trials} trials censored at {cap} steps")
    return PassageBatch(n, cap, times, censored)


@dataclass(frozen=True, eq=False)
class DiskExitBatch:
    r: int
    norm: str
    times: np.ndarray = field(repr=False)
    angles: np.ndarray = field(repr=False)
    max_before: np.ndarray = field(repr=False)

    def scaled(self) -> np.ndarray:
        return self.times / (2.0 * self.r * self.r)


def sample_disk_exits(r: int, trials: int, master_seed: int, norm: str = "euclidean") -> DiskExitBatch:
    records = [planar_disk_exit(r, derive_trial_seed(master_seed, i), norm) for i in range(trials)]
    return DiskExitBatch(
        r, norm,
        np.array([rec.time for rec in records], dtype=np.int64),
        np.array([rec.angle for rec in records], dtype=float),
        np.array([rec.max_before for rec in records], dtype=float),
    )


# --- limietwetten ---

def _as_times(t) -> np.ndarray:
    arr = np.asarray(t, dtype=float)
    if np.any(arr < 0) or np.any(np.isnan(arr)):
        raise DomainError("time argument must be >= 0")
    return arr


def _exit_cdf_array(t: np.ndarray) -> np.ndarray:
    out = np.zeros_like(t)
    small = (t > 0) & (t < 1)
    large = t >= 1
    if small.any():
        # beeldenreeks: 2 sum_k (-1)^k erfc((2k+1)/sqrt(2t))
        ts = t[small]
        total = np.zeros_like(ts)
        k = 0
        while True:
            term = 2.0 * special.erfc((2 * k + 1) / np.sqrt(2.0 * ts))
            total += term if k % 2 == 0 else -term
            if term.max() < SERIES_TOL:
                break
            k += 1
        out[small] = total
    if large.any():
        tl = t[large]
        total = np.zeros_like(tl)
        k = 0
        while True:
            term = np.exp(-((2 * k + 1) ** 2) * math.pi ** 2 * tl / 8.0) / (2 * k + 1)
            total += term if k % 2 == 0 else -term
            if term.max() * 4 / math.pi < SERIES_TOL:
                break
            k += 1
        out[large] = 1.0 - 4.0 / math.pi * total
    return np.clip(out, 0.0, 1.0)


def limit_exit_cdf(t):
    """
    P(tau <= t) voor de exit van Brownse beweging uit [-1, 1].
    Voor t >= 1 de theta-reeks, daaronder de equivalente beeldenreeks
    (die convergeert daar veel sneller).
    """
    arr = _as_times(t)
    out = _exit_cdf_array(np.atleast_1d(arr))
    return float(out[0]) if arr.ndim == 0 else out


def levy_cdf(t):
    """P(T <= t) voor de stabiele wet van orde 1/2: 2(1 - Phi(1/sqrt(t)))."""
    arr = _as_times(t)
    flat = np.atleast_1d(arr)
    out = np.zeros_like(flat)
    pos = flat > 0
    out[pos] = special.erfc(1.0 / np.sqrt(2.0 * flat[pos]))
    return float(out[0]) if arr.ndim == 0 else out


def limit_maximum_cdf(x):
    """P(max_{t<=1} |B_t| <= x) = 1 - F(1/x^2) door Brownse schaling."""
    arr = np.asarray(x, dtype=float)
    flat = np.atleast_1d(arr)
    out = np.zeros_like(flat)
    pos = flat > 0
    out[pos] = 1.0 - _exit_cdf_array(1.0 / flat[pos] ** 2)
    return float(out[0]) if arr.ndim == 0 else out


def limit_exit_laplace(s: float) -> float:
    """E[exp(-s tau)] = s * int_0^inf exp(-s t) F(t) dt, numeriek."""
    if s < 0:
        raise DomainError(f"s must be >= 0, got {s}")
    if s == 0:
        return 1.0
    f = lambda t: s * math.exp(-s * t) * limit_exit_cdf(t)
    head, _ = integrate.quad(f, 0.0, 1.0, epsabs=1e-13, epsrel=1e-12, limit=200)
    tail, _ = integrate.quad(f, 1.0, np.inf, epsabs=1e-13, epsrel=1e-12, limit=200)
    return head + tail


def planar_exit_laplace(s: float) -> float:
    """E[exp(-s tau)] voor de exit van planaire Brownse beweging uit de eenheidsschijf."""
    if s < 0:
        raise DomainError(f"s must be >= 0, got {s}")
    return float(1.0 / special.i0(math.sqrt(2.0 * s)))


@dataclass(frozen=True)
class LaplaceEstimate:
    value: float
    variance: float      # variantie van het steekproefgemiddelde
    count: int


def empirical_laplace(samples: Sequence[float], s: float) -> LaplaceEstimate:
    x = np.asarray(samples, dtype=float)
    if x.size == 0:
        raise DomainError("empirical Laplace transform of an empty sample")
    if s < 0:
        raise DomainError(f"s must be >= 0, got {s}")
    if np.any(~np.isfinite(x)) or np.any(x < 0):
        raise DomainError("samples must be finite and non-negative")
    vals = np.exp(-s * x)
    mean = math.fsum(vals.tolist()) / x.size
    if x.size < 2:
        return LaplaceEstimate(mean, 0.0, 1)
    var = math.fsum(((vals - mean) ** 2).tolist()) / (x.size - 1)
    return LaplaceEstimate(mean, var / x.size, int(x.size))


@dataclass(frozen=True, eq=False)
class RescaledPath:
    """Stuksgewijs lineaire functie op [0, 1] met waarde S_k/sqrt(n) in k/n."""
    knots: np.ndarray
    values: np.ndarray

    def __call__(self, t):
        return np.interp(t, self.knots, self.values)

    @property
    def endpoint(self) -> float:
        return float(self.values[-1])

    def maximum(self) -> float:
        return float(np.abs(self.values).max())


def rescale_path(path: WalkPath, n: int) -> RescaledPath:
    if path.dim != 1:
        raise ConfigurationError("only one-dimensional paths can be rescaled", key="dim")
    if n < 1 or path.length < n:
        raise ConfigurationError(f"path of length {path.length} too short for n={n}", key="n")
    pos = path.positions()[: n + 1, 0]
    return RescaledPath(np.arange(n + 1) / n, pos / math.sqrt(n))


@dataclass(frozen=True)
class LawReport:
    statistic: float
    threshold: float
    passed: bool
    pvalue: float
    count: int
    censored: int = 0

    def as_dict(self) -> dict:
        return {"statistic": self.statistic, "threshold": self.threshold, "pass": self.passed,
                "pvalue": self.pvalue, "count": self.count, "censored": self.censored}


def compare_law(samples: Sequence[float], cdf: Callable, threshold: float,
                censored: int = 0, upper: Optional[float] = None) -> LawReport:
    """
    KS-afstand tussen de empirische wet en `cdf`. Met gecensureerde trials wordt
    alleen op [0, upper] vergeleken.
    """
    x = np.asarray(samples, dtype=float)
    if censored:
        if upper is None:
            raise ConfigurationError("censored comparison needs an upper bound", key="upper")
        stat = ks_truncated(x, censored, cdf, upper)
        pvalue = float("nan")
    else:
        stat, pvalue = ks_statistic(x, cdf)
    return LawReport(stat, threshold, bool(stat < threshold), pvalue, int(x.size) + censored, censored)
