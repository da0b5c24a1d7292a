"""
Weerstandsnetwerken op percolatieclusters en volle roosters.

Voltages zijn oplossingen van het discrete Dirichletprobleem (gereduceerd,
symmetrisch positief-definiet stelsel, CG met Jacobi-preconditioner); daaruit
volgen effectieve weerstand, ontsnappingskansen en verwachte exit-tijden.
"""

import bisect
import logging
import math
from dataclasses import dataclass, field
from functools import cached_property
from typing import Dict, List, Mapping, Optional, Sequence, Tuple, Union

import numpy as np
from scipy import sparse
from scipy.sparse.csgraph import connected_components, shortest_path
from scipy.sparse.linalg import cg, spsolve
from scipy.stats import linregress

from ..config import Config
from ..errors import (
    ConfigurationError, DiagnosticError, DisconnectedInterior, DomainError, IsolatedOrigin
)
from ..models import PercolationMode
from ..utils.rng import UniformStream, derive_seed, derive_trial_seed, make_generator
from ..utils.stats import Estimate, binomial_estimate, mean_estimate
from .percolation import (
    CLOSED, ClusterLabeling, PercolationSample, build_lattice, label_clusters, sample_percolation
)

logger = logging.getLogger(__name__)

# kritieke waarden (benaderd) per (dimensie, mode); experimenten eisen p daarboven
CRITICAL_P = {
    (2, PercolationMode.bond): 0.5,
    (3, PercolationMode.bond): 0.2488,
    (2, PercolationMode.site): 0.5927,
    (3, PercolationMode.site): 0.3116,
}


@dataclass(frozen=True, eq=False)
class ResistorNetwork:
    n: int
    edges: np.ndarray = field(repr=False)          # (E, 2) lokale indices
    conductances: np.ndarray = field(repr=False)
    origin: int = 0
    vertex_ids: np.ndarray = field(default=None, repr=False)   # globale rooster-indices

    @property
    def n_edges(self) -> int:
        return int(self.edges.shape[0])

    @cached_property
    def adjacency(self) -> sparse.csr_matrix:
        """Symmetrische conductantiematrix; parallelle randen worden opgeteld."""
        u, v = self.edges[:, 0], self.edges[:, 1]
        c = self.conductances
        return sparse.coo_matrix(
            (np.concatenate([c, c]), (np.concatenate([u, v]), np.concatenate([v, u]))),
            shape=(self.n, self.n),
        ).tocsr()

    @cached_property
    def degree(self) -> np.ndarray:
        """Aantal incidente randen per vertex."""
        return np.bincount(self.edges.ravel(), minlength=self.n)

    @cached_property
    def weighted_degree(self) -> np.ndarray:
        return np.asarray(self.adjacency.sum(axis=1)).ravel()

    @cached_property
    def laplacian(self) -> sparse.csr_matrix:
        return (sparse.diags(self.weighted_degree) - self.adjacency).tocsr()

    def distances(self, source: Optional[int] = None) -> np.ndarray:
        """Graafafstand (aantal randen) vanaf `source`; inf als onbereikbaar."""
        source = self.origin if source is None else source
        return shortest_path(self.adjacency, method="D", unweighted=True, indices=source)


def network_from_edges(n: int, edges, conductances=None, origin: int = 0) -> ResistorNetwork:
    """Expliciet netwerk; lussen worden genegeerd, parallelle randen blijven apart staan."""
    arr = np.asarray(edges, dtype=np.int64).reshape(-1, 2)
    if conductances is None:
        cond = np.ones(arr.shape[0], dtype=float)
    else:
        cond = np.asarray(conductances, dtype=float)
    if cond.shape != (arr.shape[0],):
        raise ConfigurationError("one conductance per edge required", key="conductances")
    if np.any(cond <= 0):
        raise ConfigurationError("conductances must be > 0", key="conductances")
    if arr.size and (arr.min() < 0 or arr.max() >= n):
        raise ConfigurationError("edge endpoint out of range", key="edges")
    if not (0 <= origin < n):
        raise ConfigurationError(f"origin {origin} out of range", key="origin")
    keep = arr[:, 0] != arr[:, 1]
    return ResistorNetwork(n, arr[keep], cond[keep], int(origin), np.arange(n))


def network_from_sample(sample: PercolationSample, origin: int,
                        labeling: Optional[ClusterLabeling] = None) -> ResistorNetwork:
    """Het cluster van `origin` met eenheidsconductantie op elke open rand."""
    labeling = labeling or label_clusters(sample)
    cid = labeling.labels[origin]
    if cid == CLOSED or labeling.sizes[cid] < 2:
        raise IsolatedOrigin(f"origin {origin} has no open incident edge")
    members = np.flatnonzero(labeling.labels == cid)
    edges = sample.open_edges()
    inside = labeling.labels[edges[:, 0]] == cid
    local = np.searchsorted(members, edges[inside])
    return ResistorNetwork(
        n=int(members.size),
        edges=local.astype(np.int64),
        conductances=np.ones(local.shape[0], dtype=float),
        origin=int(np.searchsorted(members, origin)),
        vertex_ids=members,
    )


def restrict(network: ResistorNetwork, keep: np.ndarray) -> Tuple[ResistorNetwork, np.ndarray]:
    """Deelnetwerk op het masker `keep`; geeft ook de oude -> nieuwe index-afbeelding (-1 = weg)."""
    keep = np.asarray(keep, dtype=bool)
    new_index = np.full(network.n, -1, dtype=np.int64)
    new_index[keep] = np.arange(int(keep.sum()))
    both = keep[network.edges[:, 0]] & keep[network.edges[:, 1]]
    origin = int(new_index[network.origin]) if keep[network.origin] else 0
    sub = ResistorNetwork(
        n=int(keep.sum()),
        edges=new_index[network.edges[both]],
        conductances=network.conductances[both],
        origin=origin,
        vertex_ids=network.vertex_ids[keep],
    )
    return sub, new_index


@dataclass(frozen=True, eq=False)
class VoltageSolution:
    voltages: np.ndarray = field(repr=False)
    boundary: np.ndarray = field(repr=False)
    boundary_values: np.ndarray = field(repr=False)
    boundary_currents: np.ndarray = field(repr=False)   # stroom die het netwerk in gaat per randvertex
    total_current: float
    residual: float                                      # max |V(x) - gewogen buurgemiddelde|
    iterations: int
    method: str
    energy: float

    def satisfies_max_principle(self, tolerance: float = 1e-9) -> bool:
        if self.boundary_values.size == 0:
            return True
        lo, hi = self.boundary_values.min(), self.boundary_values.max()
        return bool(np.all(self.voltages >= lo - tolerance) and np.all(self.voltages <= hi + tolerance))

    def diagnostics(self) -> dict:
        return {
            "method": self.method,
            "iterations": self.iterations,
            "residual": self.residual,
            "total_current": self.total_current,
            "energy": self.energy,
            "boundary_size": int(self.boundary.size),
        }


BoundaryValues = Union[Mapping[int, float], Tuple[Sequence[int], Sequence[float]]]


def _boundary_arrays(network: ResistorNetwork, boundary_values: BoundaryValues):
    if isinstance(boundary_values, Mapping):
        idx = np.fromiter(boundary_values.keys(), dtype=np.int64, count=len(boundary_values))
        vals = np.fromiter(boundary_values.values(), dtype=float, count=len(boundary_values))
    else:
        idx = np.asarray(boundary_values[0], dtype=np.int64)
        vals = np.asarray(boundary_values[1], dtype=float)
        if vals.ndim == 0:
            vals = np.full(idx.shape, float(vals))
    if idx.size == 0:
        raise ConfigurationError("boundary set must be nonempty", key="boundary")
    if idx.min() < 0 or idx.max() >= network.n:
        raise ConfigurationError("boundary vertex out of range", key="boundary")
    if np.unique(idx).size != idx.size:
        raise ConfigurationError("boundary vertices must be distinct", key="boundary")
    return idx, vals


def _check_interior_reaches_boundary(network: ResistorNetwork, is_boundary: np.ndarray) -> None:
    _, comp = connected_components(network.adjacency, directed=False)
    touched = np.zeros(comp.max() + 1, dtype=bool)
    touched[comp[is_boundary]] = True
    orphan = ~touched[comp] & ~is_boundary
    if orphan.any():
        raise DisconnectedInterior(
            f"{int(orphan.sum())} interior vertices lie in components without boundary contact")


def _solve_reduced(matrix: sparse.csr_matrix, rhs: np.ndarray, tolerance: float) -> Tuple[np.ndarray, int, str]:
    """CG met Jacobi-preconditioner; directe solve als CG niet tot de tolerantie komt."""
    if rhs.size == 0:
        return rhs.copy(), 0, "empty"
    diag = matrix.diagonal()
    precond = sparse.diags(1.0 / diag)
    count = [0]

    def tick(_):
        count[0] += 1

    x, info = cg(matrix, rhs, rtol=tolerance * 1e-2, atol=0.0,
                 maxiter=Config.SOLVER_MAX_ITER, M=precond, callback=tick)
    # per vertex: |r_x| / diag_x is de afwijking van de mean-value vergelijking
    local = np.abs(rhs - matrix @ x) / diag
    if info == 0 and local.max() <= tolerance:
        return x, count[0], "cg"
    logger.warning(f"CG stopped at {count[0]} iterations (info={info}, residual {local.max():.2e}); "
                   f"falling back to direct solve")
    x = spsolve(matrix.tocsc(), rhs)
    return np.asarray(x, dtype=float), count[0], "direct"


def solve_dirichlet(network: ResistorNetwork, boundary_values: BoundaryValues,
                    tolerance: Optional[float] = None) -> VoltageSolution:
    """
    Harmonische functie met de gegeven randwaarden: in elke inwendige vertex is
    de voltage het conductantie-gewogen gemiddelde van de buren.
    """
    tolerance = Config.SOLVER_TOLERANCE if tolerance is None else float(tolerance)
    if tolerance <= 0:
        raise ConfigurationError(f"tolerance must be > 0, got {tolerance}", key="tolerance")
    b_idx, b_val = _boundary_arrays(network, boundary_values)
    is_boundary = np.zeros(network.n, dtype=bool)
    is_boundary[b_idx] = True
    _check_interior_reaches_boundary(network, is_boundary)

    interior = np.flatnonzero(~is_boundary)
    lap = network.laplacian
    v = np.zeros(network.n, dtype=float)
    v[b_idx] = b_val
    lap_ii = lap[interior][:, interior].tocsr()
    rhs = -(lap[interior][:, b_idx] @ b_val)
    x, iterations, method = _solve_reduced(lap_ii, rhs, tolerance)
    v[interior] = x

    flow = lap @ v
    currents = flow[b_idx]
    source = b_val == b_val.max()
    total = math.fsum(currents[source].tolist())
    sol = VoltageSolution(
        voltages=v,
        boundary=b_idx,
        boundary_values=b_val,
        boundary_currents=currents,
        total_current=total,
        residual=0.0,
        iterations=iterations,
        method=method,
        energy=_energy(network, v),
    )
    return _with_residual(network, sol)


def _energy(network: ResistorNetwork, v: np.ndarray) -> float:
    dv = v[network.edges[:, 0]] - v[network.edges[:, 1]]
    return math.fsum((network.conductances * dv * dv).tolist())


def harmonic_residual(network: ResistorNetwork, solution: VoltageSolution) -> float:
    """max over inwendige x van |V(x) - gewogen gemiddelde van de buren|."""
    interior = np.ones(network.n, dtype=bool)
    interior[solution.boundary] = False
    wdeg = network.weighted_degree
    mask = interior & (wdeg > 0)
    if not mask.any():
        return 0.0
    avg = (network.adjacency @ solution.voltages)[mask] / wdeg[mask]
    return float(np.abs(solution.voltages[mask] - avg).max())


def _with_residual(network: ResistorNetwork, sol: VoltageSolution) -> VoltageSolution:
    return VoltageSolution(
        sol.voltages, sol.boundary, sol.boundary_values, sol.boundary_currents,
        sol.total_current, harmonic_residual(network, sol), sol.iterations, sol.method, sol.energy,
    )


def _component_of(network: ResistorNetwork, vertex: int) -> np.ndarray:
    _, comp = connected_components(network.adjacency, directed=False)
    return comp == comp[vertex]


def effective_resistance(network: ResistorNetwork, a: int, B: Sequence[int],
                         tolerance: Optional[float] = None) -> float:
    """R_eff tussen a en de verzameling B; math.inf als B vanuit a onbereikbaar is."""
    B = np.unique(np.asarray(B, dtype=np.int64))
    if B.size == 0:
        raise ConfigurationError("B must be nonempty", key="B")
    if a in set(B.tolist()):
        raise ConfigurationError("a must not lie in B", key="a")
    keep = _component_of(network, a)
    B = B[keep[B]]
    if B.size == 0:
        return math.inf
    sub, new_index = restrict(network, keep)
    sol = solve_dirichlet(sub, {int(new_index[a]): 1.0, **{int(new_index[b]): 0.0 for b in B}},
                          tolerance)
    return 1.0 / sol.total_current


def effective_conductance(network: ResistorNetwork, a: int, B: Sequence[int]) -> float:
    r = effective_resistance(network, a, B)
    return 0.0 if math.isinf(r) else 1.0 / r


@dataclass(frozen=True)
class EscapeResult:
    probability: float
    conductance: float
    resistance: float
    degree: float
    disconnected: bool


def escape_probability(network: ResistorNetwork, origin: Optional[int], n: int,
                       tolerance: Optional[float] = None) -> EscapeResult:
    """P(walk vanuit origin haalt graafafstand n voordat hij terugkeert) = C_eff / deg(origin)."""
    origin = network.origin if origin is None else origin
    if n < 1:
        raise ConfigurationError(f"radius must be >= 1, got {n}", key="n")
    degree = float(network.weighted_degree[origin])
    dist = network.distances(origin)
    sphere = np.flatnonzero(dist == n)
    if degree == 0 or sphere.size == 0:
        return EscapeResult(0.0, 0.0, math.inf, degree, True)
    sub, new_index = restrict(network, dist <= n)
    r_eff = effective_resistance(sub, int(new_index[origin]), new_index[sphere], tolerance)
    c_eff = 1.0 / r_eff
    return EscapeResult(c_eff / degree, c_eff, r_eff, degree, False)


# --- de mier in het labyrint ---

@dataclass(frozen=True)
class StopRule:
    radius: Optional[int] = None       # stop op graafafstand `radius`
    on_return: bool = True             # stop bij terugkeer in de oorsprong
    cap: int = 1_000_000


@dataclass(frozen=True)
class WalkOutcome:
    path: List[int]                    # globale vertex-ids
    steps: int
    escaped: bool
    returned: bool
    capped: bool


class _WalkTables:
    """Buurlijsten en cumulatieve conductanties in plain Python voor de stapl-lus."""

    def __init__(self, network: ResistorNetwork):
        adj = network.adjacency
        self.neighbors: List[List[int]] = []
        self.cumulative: List[List[float]] = []
        for x in range(network.n):
            lo, hi = adj.indptr[x], adj.indptr[x + 1]
            self.neighbors.append(adj.indices[lo:hi].tolist())
            self.cumulative.append(np.cumsum(adj.data[lo:hi]).tolist())


def _walk(tables: _WalkTables, dist: Optional[List[float]], origin: int, stop: StopRule,
          stream: UniformStream, keep_path: bool) -> Tuple[List[int], int, bool, bool, bool]:
    x = origin
    path = [x] if keep_path else []
    for step in range(1, stop.cap + 1):
        cum = tables.cumulative[x]
        u = stream.next() * cum[-1]
        k = bisect.bisect_right(cum, u)
        x = tables.neighbors[x][min(k, len(cum) - 1)]
        if keep_path:
            path.append(x)
        if stop.radius is not None and dist[x] >= stop.radius:
            return path, step, True, False, False
        if stop.on_return and x == origin:
            return path, step, False, True, False
    return path, stop.cap, False, False, True


def walk_on_network(network: ResistorNetwork, stop: StopRule, seed: int,
                    tables: Optional[_WalkTables] = None,
                    dist: Optional[List[float]] = None) -> WalkOutcome:
    if network.weighted_degree[network.origin] == 0:
        raise IsolatedOrigin("walk started at an isolated vertex")
    tables = tables or _WalkTables(network)
    if dist is None and stop.radius is not None:
        dist = network.distances().tolist()
    stream = UniformStream(make_generator(seed), block=256)
    path, steps, escaped, returned, capped = _walk(tables, dist, network.origin, stop, stream, True)
    ids = network.vertex_ids[np.asarray(path, dtype=np.int64)].tolist()
    return WalkOutcome(ids, steps, escaped, returned, capped)


def walk_on_cluster(sample: PercolationSample, origin: int, stop: StopRule, seed: int) -> WalkOutcome:
    """Random walk die elke stap uniform een open incidente rand kiest."""
    return walk_on_network(network_from_sample(sample, origin), stop, seed)


def escape_frequency(network: ResistorNetwork, radius: int, walks: int, master_seed: int) -> Estimate:
    """Fractie walks die graafafstand `radius` halen voor terugkeer; walk i gebruikt seed-stream i."""
    tables = _WalkTables(network)
    dist = network.distances().tolist()
    stop = StopRule(radius=radius, on_return=True)
    escaped = 0
    for i in range(walks):
        stream = UniformStream(make_generator(derive_trial_seed(master_seed, i)), block=256)
        _, _, hit, _, _ = _walk(tables, dist, network.origin, stop, stream, False)
        escaped += hit
    return binomial_estimate(escaped, walks)


# --- rand/volume-verhouding ---

def boundary_volume_ratio(labeling: ClusterLabeling, window: Optional[int] = None,
                          origin: Optional[int] = None, policy: str = "exterior") -> float:
    """
    |dC| / |C| voor het cluster C van de oorsprong. dC bevat de sites van C met een
    roosterbuur buiten C. Bij policy 'exterior' telt een site aan de vensterrand ook
    mee; bij 'exclude' niet. Met `window` = n wordt alleen de doos |x - origin|_inf <= n
    bekeken en het cluster daarbinnen opnieuw bepaald.
    """
    if policy not in ("exterior", "exclude"):
        raise ConfigurationError(f"unknown boundary policy {policy!r}", key="policy")
    sample = labeling.sample
    lattice = sample.lattice
    origin = lattice.center() if origin is None else origin
    nbrs = lattice.neighbors

    if window is None:
        in_box = np.ones(lattice.n_vertices, dtype=bool)
        labels = labeling.labels
    else:
        offset = np.abs(lattice.coords - lattice.coords[origin]).max(axis=1)
        in_box = offset <= window
        labels = _box_labels(sample, in_box)
    cid = labels[origin]
    if cid == CLOSED:
        raise DomainError(f"origin {origin} is closed; its cluster is empty")
    in_c = labels == cid

    members = np.flatnonzero(in_c)
    nb = nbrs[members]
    valid = (nb >= 0)
    safe = np.where(valid, nb, 0)
    valid &= in_box[safe]
    outside_c = valid & ~in_c[safe]
    on_edge = ~valid
    boundary = outside_c.any(axis=1)
    if policy == "exterior":
        boundary |= on_edge.any(axis=1)
    return float(boundary.sum()) / float(members.size)


def _box_labels(sample: PercolationSample, in_box: np.ndarray) -> np.ndarray:
    n = sample.lattice.n_vertices
    edges = sample.open_edges()
    edges = edges[in_box[edges[:, 0]] & in_box[edges[:, 1]]]
    graph = sparse.coo_matrix(
        (np.ones(len(edges), dtype=np.int8), (edges[:, 0], edges[:, 1])), shape=(n, n)).tocsr()
    _, comp = connected_components(graph, directed=False)
    labels = comp.astype(np.int64)
    labels[~(in_box & sample.open_vertices())] = CLOSED
    return labels


# --- Dirichlet-orakels op volle roosters ---

def expected_exit_times(network: ResistorNetwork, boundary: Sequence[int]) -> np.ndarray:
    """
    E_x[tijd tot het bereiken van `boundary`] voor de walk op het netwerk:
    h = 0 op de rand en h(x) = 1 + gewogen buurgemiddelde van h daarbinnen.
    """
    b_idx = np.unique(np.asarray(boundary, dtype=np.int64))
    if b_idx.size == 0:
        raise ConfigurationError("boundary set must be nonempty", key="boundary")
    is_boundary = np.zeros(network.n, dtype=bool)
    is_boundary[b_idx] = True
    _check_interior_reaches_boundary(network, is_boundary)
    interior = np.flatnonzero(~is_boundary)
    lap_ii = network.laplacian[interior][:, interior].tocsr()
    rhs = network.weighted_degree[interior].astype(float)
    x, _, _ = _solve_reduced(lap_ii, rhs, Config.SOLVER_TOLERANCE)
    h = np.zeros(network.n, dtype=float)
    h[interior] = x
    return h


def lattice_ball_network(d: int, r: int, norm: str = "euclidean") -> Tuple[ResistorNetwork, np.ndarray]:
    """
    Bal {|x| < r} in Z^d met zijn buitenrand. Geeft het netwerk (origin = 0-vertex)
    en de lokale indices van de randvertices.
    """
    if r < 1:
        raise ConfigurationError(f"radius must be >= 1, got {r}", key="r")
    lattice = build_lattice(d, 2 * r + 1)
    x = lattice.coords - r
    if norm == "euclidean":
        inside = (x * x).sum(axis=1) < r * r
    elif norm == "sup":
        inside = np.abs(x).max(axis=1) < r
    else:
        raise ConfigurationError(f"unknown norm {norm!r}", key="norm")
    edges = lattice.edges
    touches = inside[edges[:, 0]] | inside[edges[:, 1]]
    edges = edges[touches]
    used = np.zeros(lattice.n_vertices, dtype=bool)
    used[edges.ravel()] = True
    used[lattice.center()] = True
    ids = np.flatnonzero(used)
    local = np.searchsorted(ids, edges)
    network = ResistorNetwork(
        n=int(ids.size),
        edges=local.astype(np.int64),
        conductances=np.ones(local.shape[0], dtype=float),
        origin=int(np.searchsorted(ids, lattice.center())),
        vertex_ids=ids,
    )
    boundary = np.flatnonzero(~inside[ids])
    return network, boundary


# --- schaalexperiment ---

@dataclass(frozen=True)
class ScalingRow:
    n: int
    mean_R: float
    ci_R: float
    mean_pesc: float
    ci_pesc: float
    trials: int
    censored: int
    mean_ratio: float
    ci_ratio: float
    pesc_log_n: float = math.nan       # p_esc * ln n, alleen in 2D

    def as_dict(self) -> dict:
        return {
            "n": self.n, "mean_R": self.mean_R, "ci_R": self.ci_R,
            "mean_pesc": self.mean_pesc, "ci_pesc": self.ci_pesc,
            "trials": self.trials, "censored": self.censored,
            "mean_ratio": self.mean_ratio, "ci_ratio": self.ci_ratio,
            "pesc_log_n": self.pesc_log_n,
        }


@dataclass(frozen=True)
class ScalingTable:
    rows: List[ScalingRow]
    model: Dict[str, object]
    d: int
    p: float
    resamples: int
    exploratory: bool = True

    def to_rows(self) -> List[dict]:
        return [row.as_dict() for row in self.rows]


def _conditioned_sample(lattice, mode, p: float, seed: int, max_resamples: int):
    """Hersample tot de oorsprong in het grootste cluster van het venster ligt."""
    origin = lattice.center()
    for attempt in range(max_resamples + 1):
        sample = sample_percolation(lattice, mode, p, derive_seed(seed, attempt))
        labeling = label_clusters(sample)
        if labeling.largest != CLOSED and labeling.labels[origin] == labeling.largest \
                and labeling.sizes[labeling.largest] > 1:
            return sample, labeling, attempt
    raise DiagnosticError(
        f"origin not in the largest cluster after {max_resamples} resamples (p={p})")


def resistance_trial(d: int, p: float, radii: Sequence[int], seed: int, mode="bond",
                     max_resamples: int = 100, policy: str = "exterior") -> List[dict]:
    """Eén geconditioneerd cluster: R_eff, p_esc en rand/volume per straal."""
    mode = PercolationMode(getattr(mode, "value", mode))
    lattice = build_lattice(d, 2 * max(radii) + 1)
    sample, labeling, resamples = _conditioned_sample(lattice, mode, p, seed, max_resamples)
    if resamples:
        logger.warning(f"resistance trial needed {resamples} resamples to condition the origin")
    network = network_from_sample(sample, lattice.center(), labeling)
    out = []
    for n in radii:
        esc = escape_probability(network, None, n)
        out.append({
            "n": int(n),
            "R_eff": esc.resistance,
            "p_esc": esc.probability,
            "ratio": boundary_volume_ratio(labeling, window=int(n), policy=policy),
            "resamples": resamples,
        })
    return out


def fit_growth(d: int, radii: Sequence[int], means: Sequence[float]) -> Dict[str, object]:
    """2D: a + b ln n met r^2; 3D: toenames en of die afnemen (begrensde groei)."""
    n = np.asarray(radii, dtype=float)
    m = np.asarray(means, dtype=float)
    ok = np.isfinite(m)
    if d == 2:
        if ok.sum() < 2:
            return {"kind": "log", "a": math.nan, "b": math.nan, "r2": math.nan, "residuals": []}
        fit = linregress(np.log(n[ok]), m[ok])
        residuals = (m[ok] - (fit.intercept + fit.slope * np.log(n[ok]))).tolist()
        return {"kind": "log", "a": float(fit.intercept), "b": float(fit.slope),
                "r2": float(fit.rvalue ** 2), "residuals": residuals}
    increments = np.diff(m[ok]).tolist()
    decreasing = all(b < a for a, b in zip(increments, increments[1:]))
    return {"kind": "bounded", "increments": increments, "decreasing": decreasing,
            "limit_estimate": float(m[ok][-1]) if ok.any() else math.nan}


def summarize_scaling(d: int, p: float, radii: Sequence[int], trial_rows: Sequence[Sequence[dict]]) -> ScalingTable:
    rows = []
    for k, n in enumerate(radii):
        cells = [trial[k] for trial in trial_rows]
        finite = [c["R_eff"] for c in cells if not math.isinf(c["R_eff"])]
        r_est = mean_estimate(finite)
        p_est = mean_estimate([c["p_esc"] for c in cells])
        ratio = mean_estimate([c["ratio"] for c in cells])
        pesc_log_n = p_est.mean * math.log(n) if d == 2 else math.nan
        rows.append(ScalingRow(int(n), r_est.mean, r_est.ci, p_est.mean, p_est.ci, len(cells),
                               len(cells) - len(finite), ratio.mean, ratio.ci, pesc_log_n))
    total_resamples = sum(trial[0]["resamples"] for trial in trial_rows if trial)
    return ScalingTable(rows, fit_growth(d, radii, [r.mean_R for r in rows]), d, p, total_resamples)


def resistance_scaling_experiment(p: float, radii: Sequence[int], trials: int, master_seed: int,
                                  d: int = 2, mode="bond", max_resamples: int = 100,
                                  policy: str = "exterior") -> ScalingTable:
    """Verkennend: R_eff(origin, dB_n) en p_esc als functie van n op superkritieke clusters."""
    radii = [int(n) for n in radii]
    if not radii or any(b <= a for a, b in zip(radii, radii[1:])) or radii[0] < 1:
        raise ConfigurationError("radii must be positive and strictly increasing", key="radii")
    mode = PercolationMode(getattr(mode, "value", mode))
    if d not in (2, 3):
        raise ConfigurationError(f"scaling experiment needs d in (2, 3), got {d}", key="d")
    if p <= CRITICAL_P[(d, mode)] or p > 1:
        raise ConfigurationError(
            f"p={p} is not supercritical for d={d} {mode.value} percolation", key="p")
    if trials < 1:
        raise ConfigurationError("trials must be >= 1", key="trials")
    trial_rows = []
    for i in range(trials):
        trial_rows.append(resistance_trial(d, p, radii, derive_trial_seed(master_seed, i), mode,
                                           max_resamples, policy))
    table = summarize_scaling(d, p, radii, trial_rows)
    logger.info(f"resistance scaling d={d} p={p}: model {table.model.get('kind')} "
                f"after {table.resamples} resamples")
    return table
