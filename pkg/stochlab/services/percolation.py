"""
Eindige roosters, bond/site/long-range percolatie en clusteranalyse.

Alle andere services gebruiken deze random omgevingen: het contactproces
(beginconfiguraties), de elektrische netwerken (clusters) en de neurale
dynamica (long-range synapsen).
"""

import logging
from dataclasses import dataclass, field
from functools import cached_property
from typing import List, Sequence, Tuple

import numpy as np
from scipy.sparse import coo_matrix
from scipy.sparse.csgraph import connected_components

from ..errors import ConfigurationError
from ..models import BoundaryMode, PercolationMode
from ..utils.rng import StreamKind, counter_uniforms, derive_trial_seed
from ..utils.stats import Estimate, binomial_estimate

logger = logging.getLogger(__name__)

CLOSED = -1


@dataclass(frozen=True, eq=False)
class Lattice:
    """{0..L-1}^d venster, row-major genummerd (laatste as varieert het snelst)."""
    d: int
    L: int
    boundary: BoundaryMode = BoundaryMode.open

    @property
    def n_vertices(self) -> int:
        return self.L ** self.d

    @property
    def degree(self) -> int:
        return 2 * self.d

    def strides(self) -> Tuple[int, ...]:
        return tuple(self.L ** (self.d - 1 - a) for a in range(self.d))

    @cached_property
    def coords(self) -> np.ndarray:
        idx = np.arange(self.n_vertices)
        return np.stack(np.unravel_index(idx, (self.L,) * self.d), axis=1)

    def coordinates(self) -> np.ndarray:
        return self.coords

    def index(self, coord: Sequence[int]) -> int:
        return int(np.ravel_multi_index(tuple(int(c) for c in coord), (self.L,) * self.d))

    def center(self) -> int:
        """De 'oorsprong' van het venster."""
        return self.index([self.L // 2] * self.d)

    @cached_property
    def edges(self) -> np.ndarray:
        """(E, 2) array; per as eerst alle +1-buren, deterministische volgorde."""
        coords = self.coords
        strides = self.strides()
        idx = np.arange(self.n_vertices)
        parts = []
        for axis in range(self.d):
            if self.boundary is BoundaryMode.periodic:
                nxt = coords.copy()
                nxt[:, axis] = (nxt[:, axis] + 1) % self.L
                other = np.ravel_multi_index(tuple(nxt.T), (self.L,) * self.d)
                parts.append(np.stack([idx, other], axis=1))
            else:
                mask = coords[:, axis] < self.L - 1
                src = idx[mask]
                parts.append(np.stack([src, src + strides[axis]], axis=1))
        return np.concatenate(parts, axis=0).astype(np.int64)

    @property
    def n_edges(self) -> int:
        return int(self.edges.shape[0])

    @cached_property
    def neighbors(self) -> np.ndarray:
        """(n_vertices, 2d) buurtabel; -1 voor buren buiten een open venster."""
        coords = self.coords
        table = np.full((self.n_vertices, 2 * self.d), -1, dtype=np.int64)
        shape = (self.L,) * self.d
        for axis in range(self.d):
            for j, delta in enumerate((-1, 1)):
                nxt = coords.copy()
                nxt[:, axis] += delta
                if self.boundary is BoundaryMode.periodic:
                    nxt[:, axis] %= self.L
                    table[:, 2 * axis + j] = np.ravel_multi_index(tuple(nxt.T), shape)
                else:
                    ok = (nxt[:, axis] >= 0) & (nxt[:, axis] < self.L)
                    table[ok, 2 * axis + j] = np.ravel_multi_index(tuple(nxt[ok].T), shape)
        return table

    def neighbor_table(self) -> np.ndarray:
        return self.neighbors

    def face(self, axis: int, side: int) -> np.ndarray:
        """Vertices met coördinaat 0 (side=0) of L-1 (side=1) langs `axis`."""
        value = 0 if side == 0 else self.L - 1
        return np.flatnonzero(self.coords[:, axis] == value)


def build_lattice(d: int, L: int, boundary_mode="open") -> Lattice:
    try:
        boundary = BoundaryMode(getattr(boundary_mode, "value", boundary_mode))
    except ValueError:
        raise ConfigurationError(f"unknown boundary mode {boundary_mode!r}", key="boundary")
    if d not in (1, 2, 3):
        raise ConfigurationError(f"dimension must be 1, 2 or 3, got {d}", key="d")
    if L < 2:
        raise ConfigurationError(f"side length must be >= 2, got {L}", key="L")
    if boundary is BoundaryMode.periodic and L < 3:
        raise ConfigurationError("periodic lattices need L >= 3", key="L")
    return Lattice(d, L, boundary)


@dataclass(frozen=True, eq=False)
class PercolationSample:
    lattice: Lattice
    mode: PercolationMode
    p: float
    seed: int
    flags: np.ndarray = field(repr=False)

    @property
    def open_fraction(self) -> float:
        return float(self.flags.mean()) if self.flags.size else 0.0

    def open_edges(self) -> np.ndarray:
        """Randen die in de open subgraaf zitten (site-mode: beide eindpunten open)."""
        edges = self.lattice.edges
        if self.mode is PercolationMode.bond:
            return edges[self.flags]
        return edges[self.flags[edges[:, 0]] & self.flags[edges[:, 1]]]

    def open_vertices(self) -> np.ndarray:
        if self.mode is PercolationMode.bond:
            return np.ones(self.lattice.n_vertices, dtype=bool)
        return self.flags


def _check_probability(p: float, key: str = "p") -> float:
    p = float(p)
    if not (0.0 <= p <= 1.0):
        raise ConfigurationError(f"probability must lie in [0, 1], got {p}", key=key)
    return p


def sample_percolation(lattice: Lattice, mode, p: float, seed: int) -> PercolationSample:
    """
    Elke vlag is open met kans p; vlag i hangt enkel af van (seed, i).
    """
    p = _check_probability(p)
    mode = PercolationMode(getattr(mode, "value", mode))
    if mode is PercolationMode.bond:
        u = counter_uniforms(seed, StreamKind.bond, lattice.n_edges)
    else:
        u = counter_uniforms(seed, StreamKind.site, lattice.n_vertices)
    flags = u < p
    flags.setflags(write=False)
    return PercolationSample(lattice, mode, p, int(seed), flags)


@dataclass(frozen=True, eq=False)
class ClusterLabeling:
    sample: PercolationSample
    labels: np.ndarray = field(repr=False)        # CLOSED voor gesloten sites
    sizes: np.ndarray = field(repr=False)
    largest: int
    spanning: Tuple[bool, ...]

    @property
    def n_clusters(self) -> int:
        return int(self.sizes.size)

    def cluster_of(self, vertex: int) -> int:
        return int(self.labels[vertex])

    def members(self, cluster_id: int) -> np.ndarray:
        return np.flatnonzero(self.labels == cluster_id)


def label_clusters(sample: PercolationSample) -> ClusterLabeling:
    """
    Clusterlabels via componenten van de open subgraaf; ids genummerd in
    volgorde van de kleinste vertex, zodat de labeling deterministisch is.
    """
    lattice = sample.lattice
    n = lattice.n_vertices
    edges = sample.open_edges()
    graph = coo_matrix(
        (np.ones(len(edges), dtype=np.int8), (edges[:, 0], edges[:, 1])), shape=(n, n)
    ).tocsr()
    _, raw = connected_components(graph, directed=False)

    open_v = sample.open_vertices()
    labels = np.full(n, CLOSED, dtype=np.int64)
    if open_v.any():
        raw_open = raw[open_v]
        _, first, inverse = np.unique(raw_open, return_index=True, return_inverse=True)
        # hernummer op eerste voorkomen
        order = np.argsort(first)
        rank = np.empty_like(order)
        rank[order] = np.arange(order.size)
        labels[open_v] = rank[inverse.reshape(-1)]
        sizes = np.bincount(labels[open_v], minlength=order.size)
        largest = int(np.argmax(sizes))
    else:
        sizes = np.zeros(0, dtype=np.int64)
        largest = CLOSED

    spanning = tuple(_spans(lattice, labels, axis) for axis in range(lattice.d))
    labels.setflags(write=False)
    return ClusterLabeling(sample, labels, sizes, largest, spanning)


def _spans(lattice: Lattice, labels: np.ndarray, axis: int) -> bool:
    low = labels[lattice.face(axis, 0)]
    high = labels[lattice.face(axis, 1)]
    low = low[low != CLOSED]
    high = high[high != CLOSED]
    return bool(np.intersect1d(low, high).size)


def spanning_present(labeling: ClusterLabeling, axis: int) -> bool:
    if not (0 <= axis < labeling.sample.lattice.d):
        raise ConfigurationError(f"axis {axis} out of range", key="axis")
    return labeling.spanning[axis]


def largest_cluster_mask(labeling: ClusterLabeling) -> np.ndarray:
    if labeling.largest == CLOSED:
        return np.zeros(labeling.labels.size, dtype=bool)
    return labeling.labels == labeling.largest


def estimate_spanning_probability(d: int, L: int, mode, p: float, trials: int,
                                  master_seed: int, axis: int = 0,
                                  boundary_mode="open") -> Estimate:
    """Fractie trials met een spannende cluster langs `axis`; trial i gebruikt seed-stream i."""
    if trials < 1:
        raise ConfigurationError("trials must be >= 1", key="trials")
    lattice = build_lattice(d, L, boundary_mode)
    hits = 0
    for i in range(trials):
        sample = sample_percolation(lattice, mode, p, derive_trial_seed(master_seed, i))
        hits += spanning_present(label_clusters(sample), axis)
    return binomial_estimate(hits, trials)


def spanning_scan(d: int, L: int, mode, ps: Sequence[float], trials: int,
                  master_seed: int) -> List[Tuple[float, Estimate]]:
    results = []
    for k, p in enumerate(ps):
        est = estimate_spanning_probability(d, L, mode, p, trials, derive_trial_seed(master_seed, k))
        logger.info(f"spanning scan d={d} L={L} p={p:.4f}: {est.mean:.3f} ± {est.ci:.3f}")
        results.append((float(p), est))
    return results


# --- long-range percolatie op een segment van Z ---

def long_range_probability(distance, p_nn: float, beta: float, s: float) -> np.ndarray:
    """q(k) = p_nn voor k = 1, anders min(1, beta * k^-s)."""
    dist = np.asarray(distance, dtype=float)
    with np.errstate(divide="ignore"):
        far = np.minimum(1.0, beta * np.power(dist, -s))
    return np.where(dist == 1, p_nn, far)


def _check_long_range(p_nn: float, beta: float, s: float) -> None:
    _check_probability(p_nn, "p_nn")
    if beta < 0:
        raise ConfigurationError(f"beta must be >= 0, got {beta}", key="beta")
    if s <= 0:
        raise ConfigurationError(f"s must be > 0, got {s}", key="s")


@dataclass(frozen=True, eq=False)
class LongRangeGraph:
    N: int
    edges: np.ndarray = field(repr=False)   # (E, 2), i < j
    p_nn: float
    beta: float
    s: float
    seed: int

    @property
    def n_edges(self) -> int:
        return int(self.edges.shape[0])


def pair_index(N: int) -> Tuple[np.ndarray, np.ndarray]:
    """Alle paren i < j van {0..N-1} in vaste (row-major) volgorde."""
    i, j = np.triu_indices(N, k=1)
    return i.astype(np.int64), j.astype(np.int64)


def sample_long_range_graph(N: int, p_nn: float, beta: float, s: float, seed: int) -> LongRangeGraph:
    if N < 2:
        raise ConfigurationError(f"N must be >= 2, got {N}", key="N")
    _check_long_range(p_nn, beta, s)
    i, j = pair_index(N)
    q = long_range_probability(j - i, p_nn, beta, s)
    u = counter_uniforms(seed, StreamKind.long_range, i.size)
    keep = u < q
    edges = np.stack([i[keep], j[keep]], axis=1)
    return LongRangeGraph(N, edges, float(p_nn), float(beta), float(s), int(seed))
