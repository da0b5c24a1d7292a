from collections import deque

import numpy as np
import pytest

from stochlab.errors import ConfigurationError
from stochlab.models import PercolationMode
from stochlab.services.percolation import (
    CLOSED, PercolationSample, build_lattice, estimate_spanning_probability, label_clusters,
    largest_cluster_mask, long_range_probability, sample_long_range_graph, sample_percolation,
    spanning_present, spanning_scan,
)
from stochlab.utils import dumps_sample, loads_sample
from stochlab.utils.rng import derive_trial_seed
from stochlab.utils.stats import chi_square_pvalue


def bfs_partition(sample):
    """Referentie: clusters via breadth-first search over de open randen."""
    n = sample.lattice.n_vertices
    adj = [[] for _ in range(n)]
    for a, b in sample.open_edges().tolist():
        adj[a].append(b)
        adj[b].append(a)
    open_v = sample.open_vertices()
    seen = [False] * n
    parts = set()
    for start in range(n):
        if seen[start] or not open_v[start]:
            continue
        seen[start] = True
        queue, comp = deque([start]), [start]
        while queue:
            v = queue.popleft()
            for w in adj[v]:
                if not seen[w]:
                    seen[w] = True
                    queue.append(w)
                    comp.append(w)
        parts.add(frozenset(comp))
    return parts


def labeling_partition(labeling):
    return {frozenset(labeling.members(c).tolist()) for c in range(labeling.n_clusters)}


def manual_sample(lattice, mode, flags):
    flags = np.asarray(flags, dtype=bool)
    return PercolationSample(lattice, PercolationMode(mode), 0.5, 0, flags)


@pytest.mark.parametrize("d,L,edges", [(1, 10, 9), (2, 4, 24), (3, 3, 54)])
def test_edge_counts(d, L, edges):
    lattice = build_lattice(d, L)
    assert lattice.n_edges == edges
    assert lattice.n_vertices == L ** d


def test_periodic_lattice_has_d_times_n_edges():
    lattice = build_lattice(2, 5, "periodic")
    assert lattice.n_edges == 2 * 25


@pytest.mark.parametrize("d,L", [(4, 5), (2, 1)])
def test_invalid_lattice_rejected(d, L):
    with pytest.raises(ConfigurationError):
        build_lattice(d, L)


def test_invalid_probability_rejected(square4):
    with pytest.raises(ConfigurationError) as exc:
        sample_percolation(square4, "bond", 1.5, 0)
    assert exc.value.key == "p"


@pytest.mark.parametrize("mode", ["bond", "site"])
def test_extreme_probabilities(square4, mode):
    assert not sample_percolation(square4, mode, 0.0, 3).flags.any()
    assert sample_percolation(square4, mode, 1.0, 3).flags.all()


def test_sampling_is_deterministic(square4):
    a = sample_percolation(square4, "bond", 0.4, 123)
    b = sample_percolation(square4, "bond", 0.4, 123)
    assert np.array_equal(a.flags, b.flags)


def test_samples_are_monotone_in_p():
    lattice = build_lattice(2, 16)
    low = sample_percolation(lattice, "bond", 0.3, 9).flags
    high = sample_percolation(lattice, "bond", 0.6, 9).flags
    assert np.all(high[low])


def test_open_fraction_close_to_p():
    lattice = build_lattice(2, 64)
    sample = sample_percolation(lattice, "bond", 0.5, 2026)
    n = lattice.n_edges
    assert abs(sample.open_fraction - 0.5) <= 3.5 * np.sqrt(0.25 / n)


def test_two_horizontal_edges_give_two_clusters():
    lattice = build_lattice(2, 2)
    edges = lattice.edges.tolist()
    flags = [e in ([0, 1], [2, 3]) for e in edges]
    labeling = label_clusters(manual_sample(lattice, "bond", flags))
    assert labeling.n_clusters == 2
    assert sorted(labeling.sizes.tolist()) == [2, 2]


def test_closed_sites_carry_no_label():
    lattice = build_lattice(2, 3)
    flags = np.zeros(9, dtype=bool)
    flags[4] = True
    labeling = label_clusters(manual_sample(lattice, "site", flags))
    assert labeling.n_clusters == 1
    assert labeling.cluster_of(0) == CLOSED
    assert labeling.cluster_of(4) == 0


@pytest.mark.parametrize("mode", ["bond", "site"])
@pytest.mark.parametrize("p", [0.3, 0.5, 0.7])
def test_labeling_matches_bfs(mode, p):
    lattice = build_lattice(2, 8)
    for i in range(100):
        sample = sample_percolation(lattice, mode, p, derive_trial_seed(5, i))
        assert labeling_partition(label_clusters(sample)) == bfs_partition(sample)


def test_labeling_matches_bfs_in_three_dimensions():
    lattice = build_lattice(3, 5)
    for i in range(20):
        sample = sample_percolation(lattice, "bond", 0.3, derive_trial_seed(8, i))
        assert labeling_partition(label_clusters(sample)) == bfs_partition(sample)


def test_spanning_along_single_axis():
    lattice = build_lattice(2, 5)
    column = lattice.coords[:, 1] == 2
    labeling = label_clusters(manual_sample(lattice, "site", column))
    assert spanning_present(labeling, 0)
    assert not spanning_present(labeling, 1)
    assert largest_cluster_mask(labeling).sum() == 5


def test_spanning_axis_out_of_range():
    labeling = label_clusters(sample_percolation(build_lattice(2, 4), "bond", 0.5, 1))
    with pytest.raises(ConfigurationError):
        spanning_present(labeling, 2)


def test_spanning_probability_extremes():
    assert estimate_spanning_probability(2, 16, "bond", 0.0, 20, 1).mean == 0.0
    assert estimate_spanning_probability(2, 16, "bond", 1.0, 20, 1).mean == 1.0


def test_spanning_probability_far_from_threshold():
    low = estimate_spanning_probability(2, 32, "bond", 0.35, 60, 11)
    high = estimate_spanning_probability(2, 32, "bond", 0.65, 60, 11)
    assert low.mean < 0.2
    assert high.mean > 0.8


@pytest.mark.slow
def test_spanning_probability_square_lattice_large():
    assert estimate_spanning_probability(2, 128, "bond", 0.45, 200, 20260101).mean < 0.2
    assert estimate_spanning_probability(2, 128, "bond", 0.55, 200, 20260101).mean > 0.8


def test_long_range_probability_profile():
    q = long_range_probability([1, 2, 3, 4], 0.5, 0.5, 2.0)
    assert q.tolist() == pytest.approx([0.5, 0.125, 0.5 / 9, 0.5 / 16])
    assert long_range_probability([2], 0.1, 10.0, 1.0)[0] == 1.0


def test_long_range_nearest_neighbour_only():
    graph = sample_long_range_graph(10, 1.0, 0.0, 1.5, 4)
    assert graph.n_edges == 9
    assert np.all(graph.edges[:, 1] - graph.edges[:, 0] == 1)
    assert sample_long_range_graph(10, 0.0, 0.0, 1.5, 4).n_edges == 0


def test_long_range_mean_edge_count():
    # N = 4, p_nn = 0.5, beta = 0.5, s = 2: 3*0.5 + 2*0.125 + 0.5/9
    q = [0.5] * 3 + [0.125] * 2 + [0.5 / 9]
    expected = sum(q)
    var = sum(x * (1 - x) for x in q)
    trials = 2000
    counts = [sample_long_range_graph(4, 0.5, 0.5, 2.0, derive_trial_seed(7, i)).n_edges
              for i in range(trials)]
    assert abs(np.mean(counts) - expected) <= 4 * np.sqrt(var / trials)


def test_sample_text_format():
    sample = sample_percolation(build_lattice(2, 5), "site", 0.4, 77)
    text = dumps_sample(sample)
    header = text.splitlines()[0].split()
    assert header == ["2", "5", "open", "site", "0.4", "77", "25"]
    again = loads_sample(text)
    assert np.array_equal(again.flags, sample.flags)
    assert again.mode is PercolationMode.site


def test_sample_text_truncated_body_rejected():
    sample = sample_percolation(build_lattice(2, 5), "bond", 0.4, 77)
    header, body = dumps_sample(sample).splitlines()
    with pytest.raises(ConfigurationError):
        loads_sample(header + "\n" + body[:-2] + "\n")


def test_neighbor_table_marks_outside_window():
    lat = build_lattice(2, 3)
    table = lat.neighbor_table()
    assert table.shape == (9, 4)
    corner = lat.index([0, 0])
    assert table[corner].tolist() == [-1, lat.index([1, 0]), -1, lat.index([0, 1])]
    assert (table[lat.center()] >= 0).all()


def test_periodic_neighbor_table_wraps():
    lat = build_lattice(1, 5, "periodic")
    assert lat.neighbor_table()[0].tolist() == [4, 1]


def test_coordinates_and_center():
    lat = build_lattice(3, 4)
    coords = lat.coordinates()
    assert coords.shape == (64, 3)
    assert coords[1].tolist() == [0, 0, 1]
    assert coords[lat.center()].tolist() == [2, 2, 2]


def test_spanning_scan_extremes():
    scan = spanning_scan(2, 6, PercolationMode.bond, [0.0, 1.0], 5, 9)
    assert [p for p, _ in scan] == [0.0, 1.0]
    assert scan[0][1].mean == 0.0
    assert scan[1][1].mean == 1.0


def test_spanning_scan_is_monotone_on_grid():
    ps = [round(0.3 + 0.05 * k, 2) for k in range(9)]
    scan = spanning_scan(2, 16, PercolationMode.bond, ps, 100, 31)
    for (_, low), (_, high) in zip(scan, scan[1:]):
        assert low.mean <= high.mean + 2 * (low.ci + high.ci)
    assert scan[0][1].mean < scan[-1][1].mean


def test_spanning_fraction_is_exactly_monotone_under_shared_seeds():
    # zelfde trial-seeds voor elke p: de steekproeven zijn gekoppeld
    fractions = [estimate_spanning_probability(2, 12, "bond", round(0.3 + 0.05 * k, 2), 60, 5).mean
                 for k in range(9)]
    assert fractions == sorted(fractions)


@pytest.mark.parametrize("pair", [(0, 1), (0, 2), (0, 3), (1, 5), (0, 5)])
def test_long_range_edges_are_bernoulli_per_pair(pair):
    N, p_nn, beta, s = 6, 0.5, 0.8, 1.5
    i, j = pair
    q = float(long_range_probability([j - i], p_nn, beta, s)[0])
    trials = 10_000
    hits = 0
    for k in range(trials):
        edges = sample_long_range_graph(N, p_nn, beta, s, derive_trial_seed(41, k)).edges
        hits += bool(np.any((edges[:, 0] == i) & (edges[:, 1] == j)))
    pvalue = chi_square_pvalue([hits, trials - hits], [q * trials, (1 - q) * trials])
    assert pvalue > 0.001
