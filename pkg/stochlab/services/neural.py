"""
Neuronen op {-N..N} met dynamische synapsen (dynamische long-range percolatie).

Elke potentiële synaps e ververst met rate mu en is daarna open met kans q(e).
Twee permanente bronnen buiten het venster spelen de rol van 'oneindig':
neuron i <= 0 heeft een synaps naar de linkerbron op afstand i+N+1, neuron
i >= 0 een naar de rechterbron op afstand N-i+1. Een spike is het moment
waarop een neuron via open synapsen met een bron verbonden raakt.
"""

import itertools
import logging
import math
from dataclasses import dataclass, field, replace
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np
from scipy import sparse
from scipy.linalg import expm, solve
from scipy.sparse.csgraph import connected_components

from ..errors import ConfigurationError, DomainError
from ..utils.rng import StreamKind, counter_uniforms, derive_seed, derive_trial_seed, make_generator
from ..utils.stats import binomial_estimate, mean_estimate
from .percolation import long_range_probability

logger = logging.getLogger(__name__)

ACTIVITY_THRESHOLD = 0.05
EXACT_LIMIT = 20


@dataclass(frozen=True)
class NeuralParams:
    N: int
    p_nn: float
    beta: float
    s: float
    mu: float = 1.0
    t_max: float = 100.0
    rate_exponent: float = 0.0     # rate per synaps = mu * afstand^(-rate_exponent)

    def __post_init__(self):
        if self.N < 0:
            raise ConfigurationError(f"N must be >= 0, got {self.N}", key="N")
        if not (0.0 <= self.p_nn <= 1.0):
            raise ConfigurationError(f"p_nn must lie in [0, 1], got {self.p_nn}", key="p_nn")
        if self.beta < 0:
            raise ConfigurationError(f"beta must be >= 0, got {self.beta}", key="beta")
        if self.s <= 0:
            raise ConfigurationError(f"s must be > 0, got {self.s}", key="s")
        if self.mu <= 0:
            raise ConfigurationError(f"mu must be > 0, got {self.mu}", key="mu")
        if self.t_max <= 0:
            raise ConfigurationError(f"t_max must be > 0, got {self.t_max}", key="t_max")
        if self.rate_exponent < 0:
            raise ConfigurationError("rate_exponent must be >= 0", key="rate_exponent")

    @property
    def n_neurons(self) -> int:
        return 2 * self.N + 1

    @property
    def s_caveat(self) -> bool:
        """s = 2 is het grensgeval waar eindige-venster effecten domineren."""
        return self.s == 2


@dataclass(frozen=True, eq=False)
class SynapseSet:
    """Alle potentiële synapsen; vertices 0..2N zijn neuronen -N..N, daarna links en rechts."""
    u: np.ndarray = field(repr=False)
    v: np.ndarray = field(repr=False)
    q: np.ndarray = field(repr=False)
    distance: np.ndarray = field(repr=False)
    n_vertices: int = 0

    @property
    def size(self) -> int:
        return int(self.u.size)

    @property
    def left(self) -> int:
        return self.n_vertices - 2

    @property
    def right(self) -> int:
        return self.n_vertices - 1


def potential_synapses(params: NeuralParams) -> SynapseSet:
    M = params.n_neurons
    i, j = np.triu_indices(M, k=1)
    left, right = M, M + 1
    a = np.arange(M)
    to_left = a[a <= params.N]
    to_right = a[a >= params.N]
    u = np.concatenate([i, to_left, to_right]).astype(np.int64)
    v = np.concatenate([j, np.full(to_left.size, left), np.full(to_right.size, right)]).astype(np.int64)
    dist = np.concatenate([j - i, to_left + 1, 2 * params.N - to_right + 1]).astype(np.int64)
    q = long_range_probability(dist, params.p_nn, params.beta, params.s)
    return SynapseSet(u, v, q, dist, M + 2)


def _rates(params: NeuralParams, syn: SynapseSet) -> np.ndarray:
    if params.rate_exponent == 0:
        return np.full(syn.size, params.mu)
    return params.mu * np.power(syn.distance.astype(float), -params.rate_exponent)


def _schedule(params: NeuralParams, syn: SynapseSet, seed: int):
    """
    Beginvlaggen (stationair) en alle toestandswisselingen tot t_max.
    Een verversing die de toestand niet verandert is onzichtbaar; per synaps
    wisselt open -> dicht met rate mu(1-q) en dicht -> open met rate mu q.
    """
    rng = make_generator(seed)
    q = syn.q
    flags = rng.random(syn.size) < q
    rates = _rates(params, syn)
    state = flags.copy()
    clock = np.zeros(syn.size)
    active = np.flatnonzero((q > 0) & (q < 1))
    times: List[np.ndarray] = []
    ids: List[np.ndarray] = []
    while active.size:
        r = np.where(state[active], rates[active] * (1 - q[active]), rates[active] * q[active])
        clock[active] += rng.exponential(1.0 / r)
        active = active[clock[active] <= params.t_max]
        times.append(clock[active].copy())
        ids.append(active.copy())
        state[active] ^= True
    if times:
        all_t = np.concatenate(times)
        all_id = np.concatenate(ids)
        order = np.argsort(all_t, kind="stable")
        all_t, all_id = all_t[order], all_id[order]
    else:
        all_t = np.zeros(0)
        all_id = np.zeros(0, dtype=np.int64)
    return flags, all_t, all_id


def synapse_snapshot(params: NeuralParams, seed: int, t: float) -> np.ndarray:
    """Synapsvlaggen op tijd t (0 <= t <= t_max) van de run met deze seed."""
    if not (0 <= t <= params.t_max):
        raise DomainError(f"snapshot time {t} outside [0, {params.t_max}]")
    syn = potential_synapses(params)
    flags, times, ids = _schedule(params, syn, seed)
    flips = np.bincount(ids[times <= t], minlength=syn.size) % 2
    return flags ^ flips.astype(bool)


def _components(syn: SynapseSet, open_flags: np.ndarray) -> np.ndarray:
    u, v = syn.u[open_flags], syn.v[open_flags]
    graph = sparse.coo_matrix((np.ones(u.size, dtype=np.int8), (u, v)),
                              shape=(syn.n_vertices, syn.n_vertices)).tocsr()
    _, comp = connected_components(graph, directed=False)
    return comp


def _connected(syn: SynapseSet, comp: np.ndarray) -> np.ndarray:
    neurons = comp[: syn.left]
    return (neurons == comp[syn.left]) | (neurons == comp[syn.right])


@dataclass(frozen=True, eq=False)
class SpikeLog:
    N: int
    t_max: float
    seed: int
    spikes: List[np.ndarray] = field(repr=False)          # per neuron-index 0..2N
    disconnects: List[np.ndarray] = field(repr=False)
    connected_time: np.ndarray = field(repr=False)
    refresh_times: np.ndarray = field(repr=False)         # alle toestandswisselingen
    s_caveat: bool = False

    def _index(self, i: int) -> int:
        if not (-self.N <= i <= self.N):
            raise ConfigurationError(f"neuron {i} outside [-{self.N}, {self.N}]", key="neuron")
        return i + self.N

    def spikes_of(self, i: int) -> np.ndarray:
        return self.spikes[self._index(i)]

    def disconnects_of(self, i: int) -> np.ndarray:
        return self.disconnects[self._index(i)]

    def connected_time_of(self, i: int) -> float:
        return float(self.connected_time[self._index(i)])

    def events(self):
        """(neuron, t) in tijdsvolgorde; neuronen in oplopende volgorde bij gelijke t."""
        rows = [(float(t), i - self.N) for i, arr in enumerate(self.spikes) for t in arr.tolist()]
        return [(neuron, t) for t, neuron in sorted(rows)]


def _interval_time(spikes: np.ndarray, disconnects: np.ndarray, start: float, end: float) -> float:
    """Lengte van de verbonden tijd binnen [start, end]; spikes en disconnects wisselen af."""
    pieces = []
    for k, on in enumerate(spikes.tolist()):
        off = disconnects[k] if k < disconnects.size else math.inf
        a, b = max(on, start), min(off, end)
        if b > a:
            pieces.append(b - a)
    return math.fsum(pieces)


def simulate_neural(params: NeuralParams, seed: int) -> SpikeLog:
    syn = potential_synapses(params)
    flags, times, ids = _schedule(params, syn, seed)
    open_flags = flags.copy()
    comp = _components(syn, open_flags)
    conn = _connected(syn, comp)
    M = params.n_neurons
    spikes: List[List[float]] = [[] for _ in range(M)]
    disconnects: List[List[float]] = [[] for _ in range(M)]
    for i in np.flatnonzero(conn).tolist():
        spikes[i].append(0.0)

    su, sv = syn.u, syn.v
    for t, e in zip(times.tolist(), ids.tolist()):
        opening = not open_flags[e]
        open_flags[e] = opening
        if opening:
            cu, cv = comp[su[e]], comp[sv[e]]
            if cu == cv:
                continue
            comp[comp == cv] = cu
        else:
            comp = _components(syn, open_flags)
        now = _connected(syn, comp)
        changed = np.flatnonzero(now != conn)
        for i in changed.tolist():
            (spikes if now[i] else disconnects)[i].append(t)
        conn = now

    spike_arrays = [np.asarray(x, dtype=float) for x in spikes]
    disc_arrays = [np.asarray(x, dtype=float) for x in disconnects]
    ctime = np.array([_interval_time(sp, dc, 0.0, params.t_max)
                      for sp, dc in zip(spike_arrays, disc_arrays)])
    if params.s_caveat:
        logger.warning("s = 2: finite-size effects dominate the connectivity statistics")
    return SpikeLog(params.N, params.t_max, int(seed), spike_arrays, disc_arrays, ctime,
                    times, params.s_caveat)


def connected_time(log: SpikeLog, i: int, start: float = 0.0, end: Optional[float] = None) -> float:
    """Verbonden tijd van neuron i in [start, end], herleid uit spike- en disconnect-tijdstippen."""
    end = log.t_max if end is None else end
    return _interval_time(log.spikes_of(i), log.disconnects_of(i), start, end)


def activity(log: SpikeLog, i: int = 0) -> float:
    """Fractie van [t_max/2, t_max] waarin neuron i met een bron verbonden is."""
    half = 0.5 * log.t_max
    return connected_time(log, i, half, log.t_max) / (log.t_max - half)


@dataclass(frozen=True)
class InterarrivalSummary:
    count: int                      # aantal spikes
    gaps: Tuple[float, ...] = ()
    mean: float = math.nan
    median: float = math.nan
    quantiles: Dict[str, float] = field(default_factory=dict)

    @property
    def n_gaps(self) -> int:
        return len(self.gaps)


def interarrival_stats(log: SpikeLog, i: int) -> InterarrivalSummary:
    spikes = log.spikes_of(i)
    if spikes.size < 2:
        return InterarrivalSummary(int(spikes.size))
    gaps = np.diff(spikes)
    qs = np.quantile(gaps, [0.1, 0.25, 0.75, 0.9])
    return InterarrivalSummary(
        count=int(spikes.size),
        gaps=tuple(gaps.tolist()),
        mean=math.fsum(gaps.tolist()) / gaps.size,
        median=float(np.median(gaps)),
        quantiles={"q10": float(qs[0]), "q25": float(qs[1]), "q75": float(qs[2]), "q90": float(qs[3])},
    )


# --- orakel voor N = 0: twee bronsynapsen ---

def _single_neuron_generator(q: float, mu: float) -> np.ndarray:
    """
    Transiënte toestanden na een spike: A (één open), B (beide open), C (geen open).
    Vanuit C leidt het openen van een synaps (rate 2 mu q) tot de volgende spike.
    """
    if not (0.0 < q < 1.0):
        raise DomainError(f"interarrival law needs 0 < q < 1, got {q}")
    return np.array([
        [-mu, mu * q, mu * (1 - q)],
        [2 * mu * (1 - q), -2 * mu * (1 - q), 0.0],
        [0.0, 0.0, -2 * mu * q],
    ])


def single_neuron_interarrival_cdf(q: float, mu: float, t):
    T = _single_neuron_generator(q, mu)
    alpha = np.array([1.0, 0.0, 0.0])
    arr = np.atleast_1d(np.asarray(t, dtype=float))
    out = np.array([0.0 if x <= 0 else 1.0 - float(alpha @ expm(T * x) @ np.ones(3)) for x in arr])
    return float(out[0]) if np.ndim(t) == 0 else out


def single_neuron_interarrival_mean(q: float, mu: float) -> float:
    T = _single_neuron_generator(q, mu)
    return float(np.array([1.0, 0.0, 0.0]) @ solve(-T, np.ones(3)))


# --- statische marginaal ---

@dataclass(frozen=True)
class ConnectivityResult:
    probability: float
    ci: float
    method: str
    trials: int


def _origin_connected_batch(syn: SynapseSet, flags: np.ndarray, neuron: int) -> np.ndarray:
    """flags: (K, E); label-propagatie per rij, gevectoriseerd."""
    K = flags.shape[0]
    labels = np.tile(np.arange(syn.n_vertices), (K, 1))
    rows = np.arange(K)
    while True:
        changed = False
        for e in range(syn.size):
            on = flags[:, e]
            if not on.any():
                continue
            lu, lv = labels[:, syn.u[e]], labels[:, syn.v[e]]
            low = np.minimum(lu, lv)
            diff = on & (lu != lv)
            if diff.any():
                changed = True
                labels[rows[diff], syn.u[e]] = low[diff]
                labels[rows[diff], syn.v[e]] = low[diff]
        if not changed:
            break
    own = labels[:, neuron]
    return (own == labels[:, syn.left]) | (own == labels[:, syn.right])


def connectivity_probability(N: Optional[int], params: NeuralParams, trials: int, master_seed: int,
                             method: str = "auto") -> ConnectivityResult:
    """P(neuron 0 met een bron verbonden) onder de statische wet; exact bij weinig onzekere synapsen."""
    if N is not None and N != params.N:
        params = replace(params, N=N)
    if method not in ("auto", "exact", "monte_carlo"):
        raise ConfigurationError(f"unknown method {method!r}", key="method")
    syn = potential_synapses(params)
    neuron = params.N
    uncertain = np.flatnonzero((syn.q > 0) & (syn.q < 1))
    if method == "exact" or (method == "auto" and uncertain.size <= EXACT_LIMIT):
        if uncertain.size > EXACT_LIMIT:
            raise ConfigurationError(
                f"{uncertain.size} uncertain synapses is too many for enumeration", key="method")
        k = uncertain.size
        bits = ((np.arange(1 << k)[:, None] >> np.arange(k)) & 1).astype(bool)
        flags = np.tile(syn.q >= 1.0, (bits.shape[0], 1))
        flags[:, uncertain] = bits
        qu = syn.q[uncertain]
        weights = np.prod(np.where(bits, qu, 1.0 - qu), axis=1)
        hit = _origin_connected_batch(syn, flags, neuron)
        return ConnectivityResult(math.fsum(weights[hit].tolist()), 0.0, "exact", 0)
    if trials < 1:
        raise ConfigurationError("trials must be >= 1", key="trials")
    hits = 0
    for i in range(trials):
        u = counter_uniforms(derive_trial_seed(master_seed, i), StreamKind.synapse, syn.size)
        comp = _components(syn, u < syn.q)
        hits += bool(_connected(syn, comp)[neuron])
    est = binomial_estimate(hits, trials)
    return ConnectivityResult(est.mean, est.ci, "monte_carlo", trials)


# --- fasescan ---

@dataclass(frozen=True)
class PhaseCell:
    beta: float
    s: float
    mean: float
    ci: float
    trials: int
    nontrivial: bool
    s_caveat: bool

    def as_dict(self) -> dict:
        return {"beta": self.beta, "s": self.s, "mean": self.mean, "ci": self.ci,
                "trials": self.trials, "nontrivial": self.nontrivial, "s_caveat": self.s_caveat}


@dataclass(frozen=True)
class PhaseMap:
    betas: Tuple[float, ...]
    ss: Tuple[float, ...]
    cells: List[PhaseCell]
    parameters: Dict[str, object]

    def cell(self, beta: float, s: float) -> PhaseCell:
        for c in self.cells:
            if c.beta == beta and c.s == s:
                return c
        raise KeyError((beta, s))

    def matrix(self, attr: str = "mean") -> List[List[float]]:
        """Rijen per beta, kolommen per s."""
        return [[getattr(self.cell(b, s), attr) for s in self.ss] for b in self.betas]


def activity_trial(params: NeuralParams, seed: int) -> float:
    return activity(simulate_neural(params, seed), 0)


def phase_scan(betas: Sequence[float], ss: Sequence[float], p_nn: float, mu: float, N: int,
               t_max: float, trials: int, master_seed: int) -> PhaseMap:
    """Activiteit van neuron 0 per (beta, s)-cel; cel k gebruikt seed-stream k."""
    if not betas or not ss:
        raise ConfigurationError("phase grid must be nonempty", key="grid")
    if trials < 1:
        raise ConfigurationError("trials must be >= 1", key="trials")
    cells = []
    for k, (beta, s) in enumerate(itertools.product(betas, ss)):
        params = NeuralParams(N, p_nn, float(beta), float(s), mu, t_max)
        cell_seed = derive_seed(master_seed, k)
        values = [activity_trial(params, derive_trial_seed(cell_seed, i)) for i in range(trials)]
        est = mean_estimate(values)
        cells.append(PhaseCell(float(beta), float(s), est.mean, est.ci, trials,
                               est.mean > ACTIVITY_THRESHOLD, params.s_caveat))
        logger.info(f"phase cell beta={beta} s={s}: activity {est.mean:.3f} ± {est.ci:.3f}")
    parameters = {"p_nn": p_nn, "mu": mu, "N": N, "t_max": t_max, "trials": trials,
                  "master_seed": master_seed, "threshold": ACTIVITY_THRESHOLD}
    return PhaseMap(tuple(float(b) for b in betas), tuple(float(s) for s in ss), cells, parameters)
