"""
Contactproces en idle-contactproces in continue tijd (event-driven).

Bezette (excited) sites sterven met rate 1, proberen elke buur met rate lambda
te infecteren en, in de idle-variant, elke idle buur met rate gamma te exciteren.
De simulatie kiest per stap een actieve site uniform en een actie volgens de
relatieve rates; pogingen op een bezette buur of buiten het venster zijn
null-events (thinning), zodat de realisatie exact is.
"""

import logging
import math
from dataclasses import dataclass, field
from functools import lru_cache
from typing import Iterable, Iterator, List, Optional, Sequence, Tuple, Union

import numpy as np

from ..config import Config
from ..errors import ConfigurationError, DiagnosticError
from ..models import EventKind, SiteState
from ..utils.rng import StreamKind, derive_seed, derive_trial_seed, make_generator
from ..utils.stats import Estimate, binomial_estimate
from .percolation import (
    Lattice, label_clusters, largest_cluster_mask, sample_percolation
)

logger = logging.getLogger(__name__)

VACANT = int(SiteState.vacant)
OCCUPIED = int(SiteState.occupied)
IDLE = int(SiteState.idle)

Configuration = Union[np.ndarray, Iterable[int], None]


@dataclass(frozen=True)
class ContactParams:
    lam: float
    window: Lattice

    def __post_init__(self):
        if self.lam < 0:
            raise ConfigurationError(f"infection rate must be >= 0, got {self.lam}", key="lam")


@dataclass(frozen=True)
class IdleParams:
    contact: ContactParams
    gamma: float
    # True: één klok van rate lambda per buur (vacant -> infectie, idle -> excitatie)
    shared_clock: bool = False

    def __post_init__(self):
        if self.gamma < 0:
            raise ConfigurationError(f"excitation rate must be >= 0, got {self.gamma}", key="gamma")

    @property
    def lam(self) -> float:
        return self.contact.lam

    @property
    def window(self) -> Lattice:
        return self.contact.window


@dataclass(frozen=True, eq=False)
class ContactTrajectory:
    window: Lattice
    initial: np.ndarray = field(repr=False)      # SiteState per site
    times: np.ndarray = field(repr=False)
    sites: np.ndarray = field(repr=False)
    kinds: np.ndarray = field(repr=False)
    final_time: float = 0.0                      # t_max, of het extinctietijdstip
    t_max: float = 0.0
    seed: int = 0
    extinct: bool = False
    final_state: np.ndarray = field(default=None, repr=False)
    n_events: int = 0

    @property
    def extinction_time(self) -> Optional[float]:
        return self.final_time if self.extinct else None

    def events(self) -> Iterator[Tuple[float, int, EventKind]]:
        for t, site, kind in zip(self.times.tolist(), self.sites.tolist(), self.kinds.tolist()):
            yield t, site, EventKind(kind)


@lru_cache(maxsize=16)
def _neighbor_lists(window: Lattice) -> List[List[int]]:
    return window.neighbors.tolist()


def as_configuration(window: Lattice, initial: Configuration) -> np.ndarray:
    """Normaliseer een begin-configuratie naar een bool-masker over het venster."""
    n = window.n_vertices
    if initial is None:
        return np.zeros(n, dtype=bool)
    arr = np.asarray(initial)
    if arr.dtype == bool:
        if arr.shape != (n,):
            raise ConfigurationError(f"configuration mask must have length {n}", key="initial")
        return arr.copy()
    mask = np.zeros(n, dtype=bool)
    sites = np.asarray(list(initial), dtype=np.int64)
    if sites.size and (sites.min() < 0 or sites.max() >= n):
        raise ConfigurationError("initial configuration leaves the window", key="initial")
    mask[sites] = True
    return mask


def _run_events(window: Lattice, state: List[int], lam: float, gamma: float,
                shared_clock: bool, t_max: float, seed: int, record: bool):
    """
    Kern-loop; `state` wordt ter plaatse aangepast.
    Geeft (times, sites, kinds, final_time, extinct, n_events) terug.
    """
    nbrs = _neighbor_lists(window)
    k = window.degree
    if shared_clock:
        rate_per_site = 1.0 + k * lam
        p_infection = 1.0
        draws = 3
    else:
        rate_per_site = 1.0 + k * (lam + gamma)
        p_infection = lam / (lam + gamma) if lam + gamma > 0 else 1.0
        draws = 4 if gamma > 0 else 3
    p_death = 1.0 / rate_per_site

    active = [i for i, s in enumerate(state) if s == OCCUPIED]
    where = [-1] * len(state)
    for pos, site in enumerate(active):
        where[site] = pos

    rng = make_generator(seed)
    block = Config.UNIFORM_BLOCK
    buf: List[float] = []
    bpos = 0
    log = math.log

    times: List[float] = []
    sites: List[int] = []
    kinds: List[int] = []
    n_events = 0
    t = 0.0
    last_event = 0.0

    while active:
        if bpos + draws > len(buf):
            buf = rng.random(block).tolist()
            bpos = 0
        u_time = buf[bpos]
        u_site = buf[bpos + 1]
        u_act = buf[bpos + 2]
        u_kind = buf[bpos + 3] if draws == 4 else 0.0
        bpos += draws

        n_active = len(active)
        t += -log(1.0 - u_time) / (n_active * rate_per_site)
        if t > t_max:
            break
        site = active[int(u_site * n_active)]

        if u_act < p_death:
            state[site] = VACANT
            last = active.pop()
            if last != site:
                pos = where[site]
                active[pos] = last
                where[last] = pos
            where[site] = -1
            kind = EventKind.death
            target = site
        else:
            slot = int((u_act - p_death) / (1.0 - p_death) * k)
            if slot >= k:
                slot = k - 1
            target = nbrs[site][slot]
            if target < 0:
                continue
            ts = state[target]
            if shared_clock:
                if ts == VACANT:
                    kind = EventKind.infection
                elif ts == IDLE:
                    kind = EventKind.excitation
                else:
                    continue
            elif u_kind < p_infection:
                if ts != VACANT:
                    continue
                kind = EventKind.infection
            else:
                if ts != IDLE:
                    continue
                kind = EventKind.excitation
            state[target] = OCCUPIED
            where[target] = len(active)
            active.append(target)

        n_events += 1
        last_event = t
        if record:
            times.append(t)
            sites.append(target)
            kinds.append(int(kind))

    extinct = not active
    final_time = last_event if extinct else float(t_max)
    return times, sites, kinds, final_time, extinct, n_events


def _trajectory(window: Lattice, initial_state: np.ndarray, t_max: float, seed: int,
                lam: float, gamma: float, shared_clock: bool, record: bool) -> ContactTrajectory:
    if t_max <= 0:
        raise ConfigurationError(f"t_max must be > 0, got {t_max}", key="t_max")
    state = initial_state.astype(np.int64).tolist()
    times, sites, kinds, final_time, extinct, n_events = _run_events(
        window, state, lam, gamma, shared_clock, t_max, seed, record)
    initial_state = initial_state.astype(np.int8)
    initial_state.setflags(write=False)
    return ContactTrajectory(
        window=window,
        initial=initial_state,
        times=np.asarray(times, dtype=np.float64),
        sites=np.asarray(sites, dtype=np.int64),
        kinds=np.asarray(kinds, dtype=np.int8),
        final_time=final_time,
        t_max=float(t_max),
        seed=int(seed),
        extinct=extinct,
        final_state=np.asarray(state, dtype=np.int8),
        n_events=n_events,
    )


def simulate_contact(params: ContactParams, initial: Configuration, t_max: float, seed: int,
                     record: bool = True) -> ContactTrajectory:
    """Exacte realisatie van het contactproces tot t_max of extinctie."""
    occupied = as_configuration(params.window, initial)
    state = np.where(occupied, OCCUPIED, VACANT)
    return _trajectory(params.window, state, t_max, seed, params.lam, 0.0, False, record)


def simulate_idle_contact(idle_params: IdleParams, initial_excited: Configuration, t_max: float,
                          seed: int, background: str = "idle",
                          record: bool = True) -> ContactTrajectory:
    """
    Idle-contactproces: excited sites sterven (rate 1), infecteren vacante buren
    (rate lambda, nakomelingen zijn excited) en exciteren idle buren (rate gamma).
    Idle sites doen niets tot ze geëxciteerd worden.
    """
    if background not in ("idle", "vacant"):
        raise ConfigurationError(f"unknown background {background!r}", key="background")
    excited = as_configuration(idle_params.window, initial_excited)
    fill = IDLE if background == "idle" else VACANT
    state = np.where(excited, OCCUPIED, fill)
    return _trajectory(idle_params.window, state, t_max, seed, idle_params.lam,
                       idle_params.gamma, idle_params.shared_clock, record)


def replay_states(trajectory: ContactTrajectory) -> Iterator[Tuple[float, int, EventKind, np.ndarray]]:
    """Speel de eventlog af; de geleverde state-array is een view die verder muteert."""
    state = trajectory.initial.astype(np.int8).copy()
    for t, site, kind in trajectory.events():
        state[site] = VACANT if kind is EventKind.death else OCCUPIED
        yield t, site, kind, state


def check_event_legality(trajectory: ContactTrajectory) -> bool:
    """Elk event moet toegestaan zijn in de toestand waarop het inwerkt."""
    nbrs = _neighbor_lists(trajectory.window)
    state = trajectory.initial.astype(np.int64).tolist()
    prev = 0.0
    for t, site, kind in trajectory.events():
        if not (t > prev or (prev == 0.0 and t >= 0.0)) or t > trajectory.t_max:
            return False
        prev = t
        if kind is EventKind.death:
            if state[site] != OCCUPIED:
                return False
            state[site] = VACANT
            continue
        required = VACANT if kind is EventKind.infection else IDLE
        if state[site] != required:
            return False
        if not any(j >= 0 and state[j] == OCCUPIED for j in nbrs[site]):
            return False
        state[site] = OCCUPIED
    return state == trajectory.final_state.astype(np.int64).tolist()


@dataclass(frozen=True)
class OccupancyReport:
    epochs: List[float]
    total_time: float
    intervals: List[Tuple[float, float]]


def occupancy_intervals(trajectory: ContactTrajectory, B: Sequence[int]) -> OccupancyReport:
    """Maximale intervallen waarin heel B tegelijk bezet is."""
    block = sorted(set(int(b) for b in B))
    if not block:
        raise ConfigurationError("B must be a nonempty set of sites", key="B")
    n = trajectory.window.n_vertices
    if block[0] < 0 or block[-1] >= n:
        raise ConfigurationError("B leaves the window", key="B")
    in_b = np.zeros(n, dtype=bool)
    in_b[block] = True
    state = (trajectory.initial == OCCUPIED).tolist()
    count = sum(1 for b in block if state[b])
    size = len(block)

    intervals: List[Tuple[float, float]] = []
    start = 0.0 if count == size else None
    for t, site, kind in trajectory.events():
        now = kind is not EventKind.death
        if state[site] == now:
            continue
        state[site] = now
        if not in_b[site]:
            continue
        count += 1 if now else -1
        if count == size:
            start = t
        elif start is not None:
            intervals.append((start, t))
            start = None
    if start is not None:
        intervals.append((start, trajectory.final_time))
    total = math.fsum(b - a for a, b in intervals)
    return OccupancyReport([a for a, _ in intervals], total, intervals)


def full_occupancy_times(params: ContactParams, B: Sequence[int], initial: Configuration,
                         t_max: float, seed: int) -> OccupancyReport:
    trajectory = simulate_contact(params, initial, t_max, seed)
    return occupancy_intervals(trajectory, B)


def occupied_measure(trajectory: ContactTrajectory) -> float:
    """Lebesgue-maat van het bezette gebied in ruimte-tijd over [0, final_time]."""
    born = {int(i): 0.0 for i in np.flatnonzero(trajectory.initial == OCCUPIED)}
    durations = []
    for t, site, kind in trajectory.events():
        if kind is EventKind.death:
            durations.append(t - born.pop(site))
        else:
            born[site] = t
    durations.extend(trajectory.final_time - t0 for t0 in born.values())
    return math.fsum(durations)


def survival_estimate(params: ContactParams, initial: Configuration, t_max: float, trials: int,
                      master_seed: int) -> Estimate:
    """Fractie onafhankelijke runs die op t_max nog leven."""
    if trials < 1:
        raise ConfigurationError("trials must be >= 1", key="trials")
    alive = 0
    for i in range(trials):
        traj = simulate_contact(params, initial, t_max, derive_trial_seed(master_seed, i), record=False)
        alive += not traj.extinct
    return binomial_estimate(alive, trials)


def estimate_lambda_c(window: Lattice, t_max: float, trials: int, bracket: Tuple[float, float],
                      threshold: float = 0.05, iterations: int = 10, master_seed: int = 0,
                      initial: Configuration = None) -> float:
    """
    Pseudo-kritische lambda: bisectie op survival(lambda) - threshold.
    Alle evaluaties gebruiken dezelfde trial-seeds (common random numbers).
    """
    lo, hi = float(bracket[0]), float(bracket[1])
    if not (0 <= lo < hi):
        raise ConfigurationError(f"invalid bracket {bracket}", key="bracket")
    if initial is None:
        initial = [window.center()]

    def excess(lam: float) -> float:
        est = survival_estimate(ContactParams(lam, window), initial, t_max, trials, master_seed)
        return est.mean - threshold

    f_lo, f_hi = excess(lo), excess(hi)
    if not (f_lo <= 0.0 < f_hi):
        raise DiagnosticError(
            f"no crossing of survival threshold {threshold} in bracket [{lo}, {hi}] "
            f"(excess {f_lo:+.3f} / {f_hi:+.3f})")
    for step in range(iterations):
        mid = 0.5 * (lo + hi)
        if excess(mid) > 0.0:
            hi = mid
        else:
            lo = mid
        logger.info(f"lambda_c bisection step {step + 1}/{iterations}: [{lo:.4f}, {hi:.4f}]")
    return 0.5 * (lo + hi)


def strong_survival_estimate(idle_params: IdleParams, initial_excited: Configuration, t_max: float,
                             trials: int, master_seed: int, background: str = "idle") -> Estimate:
    """Fractie runs waarin de oorsprong excited is ergens in [t_max/2, t_max]."""
    if trials < 1:
        raise ConfigurationError("trials must be >= 1", key="trials")
    origin = idle_params.window.center()
    hits = 0
    for i in range(trials):
        traj = simulate_idle_contact(idle_params, initial_excited, t_max,
                                     derive_trial_seed(master_seed, i), background=background)
        hits += origin_occupied_late(traj, origin)
    return binomial_estimate(hits, trials)


def origin_occupied_late(trajectory: ContactTrajectory, origin: int) -> bool:
    half = 0.5 * trajectory.t_max
    occupied = bool(trajectory.initial[origin] == OCCUPIED)
    for t, site, kind in trajectory.events():
        if site != origin:
            continue
        if t >= half and (occupied or kind is not EventKind.death):
            return True
        occupied = kind is not EventKind.death
    return occupied and trajectory.final_time >= half and not trajectory.extinct


# --- bijzondere begin-configuraties ---

INITIAL_KINDS = ("full", "single_origin", "percolation_cluster", "vacant_strips", "upper_invariant")


def gen_initial(kind: str, args: Optional[dict], window: Lattice, seed: int) -> np.ndarray:
    args = dict(args or {})
    n = window.n_vertices
    if kind == "full":
        return np.ones(n, dtype=bool)
    if kind == "single_origin":
        mask = np.zeros(n, dtype=bool)
        mask[window.center()] = True
        return mask
    if kind == "percolation_cluster":
        p_site = float(args.get("p_site", 0.7))
        sample = sample_percolation(window, "site", p_site, derive_seed(seed, StreamKind.initial))
        return largest_cluster_mask(label_clusters(sample))
    if kind == "vacant_strips":
        w = int(args.get("w", 1))
        k = int(args.get("k", 5))
        if w < 0 or k <= w:
            raise ConfigurationError(f"vacant strips need 0 <= w < k, got w={w}, k={k}", key="w")
        return (window.coords[:, 0] % k) >= w
    if kind == "upper_invariant":
        lam_big = float(args.get("lam_big", 10.0))
        burn_in = float(args.get("burn_in", 10.0))
        if burn_in < 0:
            raise ConfigurationError(f"burn_in must be >= 0, got {burn_in}", key="burn_in")
        full = np.ones(n, dtype=bool)
        if burn_in == 0:
            return full
        traj = simulate_contact(ContactParams(lam_big, window), full, burn_in,
                                derive_seed(seed, StreamKind.initial, 2), record=False)
        return traj.final_state == OCCUPIED
    raise ConfigurationError(f"unknown initial configuration {kind!r}", key="initial")
