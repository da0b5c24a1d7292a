import math

import numpy as np
import pytest

from stochlab.errors import ConfigurationError, DisconnectedInterior, DomainError, IsolatedOrigin
from stochlab.models import PercolationMode
from stochlab.services.networks import (
    StopRule, boundary_volume_ratio, effective_conductance, effective_resistance, escape_frequency,
    escape_probability, expected_exit_times, fit_growth, harmonic_residual, network_from_edges,
    network_from_sample, resistance_scaling_experiment, solve_dirichlet, walk_on_cluster,
    walk_on_network,
)
from stochlab.services.percolation import (
    PercolationSample, build_lattice, label_clusters, sample_percolation
)
from stochlab.services.walks import random_walk_path
from stochlab.utils.rng import derive_trial_seed
from stochlab.utils.stats import ks_two_sample, mean_estimate


def full_sample(d, L, mode="bond"):
    return sample_percolation(build_lattice(d, L), mode, 1.0, 0)


def path_network(k):
    return network_from_edges(k + 1, [(i, i + 1) for i in range(k)])


def grid_network(rows, cols):
    edges = []
    for r in range(rows):
        for c in range(cols):
            v = r * cols + c
            if c + 1 < cols:
                edges.append((v, v + 1))
            if r + 1 < rows:
                edges.append((v, v + cols))
    return network_from_edges(rows * cols, edges)


def dense_dirichlet(network, boundary_values):
    lap = network.laplacian.toarray()
    b = np.array(sorted(boundary_values))
    vals = np.array([boundary_values[i] for i in b])
    interior = np.setdiff1d(np.arange(network.n), b)
    v = np.zeros(network.n)
    v[b] = vals
    v[interior] = np.linalg.solve(lap[np.ix_(interior, interior)], -lap[np.ix_(interior, b)] @ vals)
    return v


def test_network_from_full_sample():
    net = network_from_sample(full_sample(2, 2), 0)
    assert net.n == 4
    assert net.n_edges == 4


def test_isolated_origin_rejected():
    sample = sample_percolation(build_lattice(2, 5), "bond", 0.0, 1)
    with pytest.raises(IsolatedOrigin):
        network_from_sample(sample, 12)


def test_network_contains_only_origin_cluster():
    lattice = build_lattice(2, 3)
    flags = np.array([e in ([0, 1], [1, 2], [6, 7]) for e in lattice.edges.tolist()])
    sample = PercolationSample(lattice, PercolationMode.bond, 0.5, 0, flags)
    net = network_from_sample(sample, 1)
    assert net.vertex_ids.tolist() == [0, 1, 2]
    assert net.n_edges == 2
    assert net.vertex_ids[net.origin] == 1


def test_path_midpoint_voltage():
    sol = solve_dirichlet(path_network(2), {0: 1.0, 2: 0.0})
    assert sol.voltages[1] == pytest.approx(0.5, abs=1e-10)


def test_constant_boundary_gives_constant_voltage():
    net = grid_network(4, 4)
    boundary = {v: 3.0 for v in (0, 3, 12, 15)}
    sol = solve_dirichlet(net, boundary)
    assert np.allclose(sol.voltages, 3.0, atol=1e-9)


def test_grid_voltages_match_dense_solve():
    net = grid_network(3, 3)
    boundary = {0: 1.0, 3: 1.0, 6: 1.0, 2: 0.0, 5: 0.0, 8: 0.0}
    sol = solve_dirichlet(net, boundary)
    assert np.allclose(sol.voltages, dense_dirichlet(net, boundary), atol=1e-10)
    assert sol.voltages[4] == pytest.approx(0.5, abs=1e-10)


def test_solution_diagnostics():
    net = network_from_sample(full_sample(2, 9), build_lattice(2, 9).center())
    boundary = {net.origin: 1.0, 0: 0.0, net.n - 1: 0.0}
    sol = solve_dirichlet(net, boundary, tolerance=1e-10)
    assert sol.residual <= 1e-9
    assert harmonic_residual(net, sol) == sol.residual
    assert sol.satisfies_max_principle()
    gap = 1.0
    assert sol.energy == pytest.approx(sol.total_current * gap, rel=1e-8)
    assert set(sol.diagnostics()) >= {"method", "iterations", "residual"}


def test_disconnected_interior_rejected():
    net = network_from_edges(4, [(0, 1), (2, 3)])
    with pytest.raises(DisconnectedInterior):
        solve_dirichlet(net, {0: 1.0, 1: 0.0})


def test_series_and_parallel_resistance():
    assert effective_resistance(path_network(5), 0, [5]) == pytest.approx(5.0)
    parallel = network_from_edges(2, [(0, 1), (0, 1)])
    assert effective_resistance(parallel, 0, [1]) == pytest.approx(0.5)
    cycle = network_from_edges(4, [(0, 1), (1, 3), (3, 2), (2, 0)])
    assert effective_resistance(cycle, 0, [3]) == pytest.approx(1.0)
    assert effective_conductance(cycle, 0, [3]) == pytest.approx(1.0)


def test_weighted_resistance():
    net = network_from_edges(3, [(0, 1), (1, 2)], conductances=[2.0, 0.5])
    assert effective_resistance(net, 0, [2]) == pytest.approx(0.5 + 2.0)


def test_unreachable_set_has_infinite_resistance():
    net = network_from_edges(4, [(0, 1), (2, 3)])
    assert math.isinf(effective_resistance(net, 0, [3]))
    assert effective_conductance(net, 0, [3]) == 0.0


def test_resistance_input_checks():
    with pytest.raises(ConfigurationError):
        effective_resistance(path_network(3), 0, [])
    with pytest.raises(ConfigurationError):
        effective_resistance(path_network(3), 0, [0, 3])
    with pytest.raises(ConfigurationError):
        network_from_edges(2, [(0, 1)], conductances=[0.0])


def test_rayleigh_monotonicity_under_edge_removal():
    lattice = build_lattice(2, 5)
    rng = np.random.default_rng(0)
    checked = 0
    for i in range(40):
        sample = sample_percolation(lattice, "bond", 0.8, derive_trial_seed(21, i))
        try:
            net = network_from_sample(sample, lattice.center())
        except IsolatedOrigin:
            continue
        far = int(np.argmax(net.distances()))
        before = effective_resistance(net, net.origin, [far])
        drop = rng.integers(net.n_edges)
        keep = np.ones(net.n_edges, dtype=bool)
        keep[drop] = False
        thinner = network_from_edges(net.n, net.edges[keep], origin=net.origin)
        after = effective_resistance(thinner, net.origin, [far])
        assert after >= before - 1e-9
        checked += 1
        if checked == 20:
            break
    assert checked == 20


def test_escape_probability_on_a_path():
    esc = escape_probability(path_network(6), 0, 6)
    assert esc.probability == pytest.approx(1.0 / 6.0)
    assert esc.resistance == pytest.approx(6.0)
    assert not esc.disconnected


def test_escape_probability_without_sphere():
    esc = escape_probability(path_network(3), 0, 10)
    assert esc.disconnected
    assert esc.probability == 0.0


def test_escape_probability_decreases_with_radius():
    lattice = build_lattice(2, 41)
    net = network_from_sample(full_sample(2, 41), lattice.center())
    p8 = escape_probability(net, None, 8).probability
    p16 = escape_probability(net, None, 16).probability
    assert p8 >= p16 > 0.0


def test_escape_probability_matches_walks():
    lattice = build_lattice(2, 21)
    net = network_from_sample(full_sample(2, 21), lattice.center())
    exact = escape_probability(net, None, 5).probability
    freq = escape_frequency(net, 5, 4000, 22)
    assert abs(freq.mean - exact) <= 4 * math.sqrt(exact * (1 - exact) / 4000)


def test_escape_matches_walks_on_supercritical_cluster():
    lattice = build_lattice(2, 21)
    sample = None
    for i in range(50):
        candidate = sample_percolation(lattice, "bond", 0.7, derive_trial_seed(23, i))
        labeling = label_clusters(candidate)
        if labeling.labels[lattice.center()] == labeling.largest:
            sample = candidate
            break
    assert sample is not None
    net = network_from_sample(sample, lattice.center())
    exact = escape_probability(net, None, 5)
    if exact.disconnected:
        pytest.skip("cluster does not reach graph distance 5")
    freq = escape_frequency(net, 5, 4000, 24)
    p = exact.probability
    assert abs(freq.mean - p) <= 4 * math.sqrt(p * (1 - p) / 4000) + 1e-12


def test_walk_on_cluster_with_single_open_edge():
    lattice = build_lattice(2, 5)
    origin = lattice.center()
    flags = np.array([origin in e and (origin + 1) in e for e in lattice.edges.tolist()])
    sample = PercolationSample(lattice, PercolationMode.bond, 0.5, 0, flags)
    out = walk_on_cluster(sample, origin, StopRule(radius=None, on_return=True), 3)
    assert out.path == [origin, origin + 1, origin]
    assert out.returned and out.steps == 2


def test_walk_on_cluster_escapes_or_returns():
    lattice = build_lattice(2, 15)
    out = walk_on_cluster(full_sample(2, 15), lattice.center(), StopRule(radius=4), 5)
    assert out.escaped != out.returned
    assert out.path[0] == lattice.center()


def test_boundary_volume_ratio_full_window():
    labeling = label_clusters(full_sample(2, 10))
    assert boundary_volume_ratio(labeling) == pytest.approx(0.36)
    assert boundary_volume_ratio(labeling, policy="exclude") == 0.0


def test_boundary_volume_ratio_singleton_and_closed_origin():
    lattice = build_lattice(2, 5)
    flags = np.zeros(25, dtype=bool)
    flags[lattice.center()] = True
    labeling = label_clusters(PercolationSample(lattice, PercolationMode.site, 0.5, 0, flags))
    assert boundary_volume_ratio(labeling) == 1.0
    with pytest.raises(DomainError):
        boundary_volume_ratio(labeling, origin=0)


def test_boundary_volume_ratio_in_box():
    labeling = label_clusters(full_sample(2, 11))
    # doos met straal 2: 5x5 sites, 16 aan de rand
    assert boundary_volume_ratio(labeling, window=2) == pytest.approx(16 / 25)


def test_expected_exit_times_gamblers_ruin():
    h = expected_exit_times(path_network(4), [0, 4])
    assert h.tolist() == pytest.approx([0.0, 3.0, 4.0, 3.0, 0.0])


def test_two_dimensional_resistance_grows_logarithmically():
    table = resistance_scaling_experiment(1.0, [4, 8, 16, 32], 1, 1, d=2)
    assert table.model["kind"] == "log"
    assert table.model["b"] > 0
    assert table.model["r2"] > 0.95
    assert all(row.censored == 0 for row in table.rows)
    first = table.rows[0]
    assert first.pesc_log_n == pytest.approx(first.mean_pesc * math.log(4))


def test_three_dimensional_resistance_levels_off():
    table = resistance_scaling_experiment(1.0, [4, 8, 16], 1, 1, d=3)
    assert table.model["kind"] == "bounded"
    assert table.model["decreasing"]


def test_diluted_cluster_resists_more_than_full_lattice():
    full = resistance_scaling_experiment(1.0, [4, 8], 1, 2)
    diluted = resistance_scaling_experiment(0.7, [4, 8], 10, 2)
    for a, b in zip(full.rows, diluted.rows):
        assert b.mean_R >= a.mean_R


def test_scaling_rejects_subcritical_p():
    with pytest.raises(ConfigurationError):
        resistance_scaling_experiment(0.4, [4, 8], 1, 1)
    with pytest.raises(ConfigurationError):
        resistance_scaling_experiment(0.7, [8, 4], 1, 1)


def test_fit_growth_three_dimensions():
    model = fit_growth(3, [1, 2, 4], [1.0, 1.5, 1.7])
    assert model["increments"] == pytest.approx([0.5, 0.2])
    assert model["decreasing"]


@pytest.mark.slow
def test_escape_identity_on_supercritical_clusters():
    lattice = build_lattice(2, 41)
    checked = 0
    for i in range(100):
        sample = sample_percolation(lattice, "bond", 0.7, derive_trial_seed(60, i))
        labeling = label_clusters(sample)
        if labeling.labels[lattice.center()] != labeling.largest:
            continue
        net = network_from_sample(sample, lattice.center(), labeling)
        exact = escape_probability(net, None, 10)
        if exact.disconnected:
            continue
        freq = escape_frequency(net, 10, 100_000, derive_trial_seed(61, i))
        p = exact.probability
        assert abs(freq.mean - p) <= 3.5 * math.sqrt(p * (1 - p) / 100_000)
        checked += 1
        if checked == 10:
            break
    assert checked == 10


def srw_exit_times(radius, trials, master_seed):
    """Directe simple random walk op Z^2: eerste stap met |x| + |y| >= radius."""
    times = []
    for i in range(trials):
        pos = random_walk_path(40 * radius * radius, derive_trial_seed(master_seed, i), dim=2).positions()
        hit = np.flatnonzero(np.abs(pos).sum(axis=1) >= radius)
        assert hit.size
        times.append(int(hit[0]))
    return times


def cluster_exit_times(radius, trials, master_seed):
    lattice = build_lattice(2, 4 * radius + 1)
    net = network_from_sample(full_sample(2, 4 * radius + 1), lattice.center())
    stop = StopRule(radius=radius, on_return=False)
    return [walk_on_network(net, stop, derive_trial_seed(master_seed, i)).steps for i in range(trials)]


def test_walk_on_full_cluster_is_simple_random_walk():
    lattice = build_lattice(2, 21)
    sample = full_sample(2, 21)
    stop = StopRule(radius=5, on_return=False)
    net = network_from_sample(sample, lattice.center())
    assert walk_on_cluster(sample, lattice.center(), stop, 8) == walk_on_network(net, stop, 8)
    _, pvalue = ks_two_sample(cluster_exit_times(5, 1500, 12), srw_exit_times(5, 1500, 13))
    assert pvalue > 0.001


@pytest.mark.slow
def test_walk_on_full_cluster_exit_law_large():
    statistic, _ = ks_two_sample(cluster_exit_times(5, 10_000, 12), srw_exit_times(5, 10_000, 13))
    assert statistic < 0.03


def mean_ratio(L, trials, master_seed):
    lattice = build_lattice(2, L)
    ratios = [boundary_volume_ratio(label_clusters(
                  sample_percolation(lattice, "bond", 0.7, derive_trial_seed(master_seed, i))),
                  policy="exclude")
              for i in range(trials)]
    return mean_estimate(ratios)


@pytest.mark.slow
def test_boundary_volume_ratio_is_stable_in_window_size():
    small, large = mean_ratio(64, 100, 51), mean_ratio(128, 100, 52)
    assert abs(small.mean - large.mean) <= 2 * (small.ci + large.ci)
    assert 0.0 < large.mean < 4.0
