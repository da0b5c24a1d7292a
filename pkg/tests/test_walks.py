import itertools
import math

import numpy as np
import pytest
from scipy import stats

from stochlab.errors import ConfigurationError, DomainError
from stochlab.services.networks import expected_exit_times, lattice_ball_network
from stochlab.services.walks import (
    compare_law, empirical_laplace, first_passage, first_passage_cdf, interval_exit, levy_cdf,
    limit_exit_cdf, limit_exit_laplace, limit_maximum_cdf, partial_maximum, planar_disk_exit,
    planar_exit_laplace, random_walk_path, rescale_path, sample_disk_exits, sample_first_passages,
    sample_interval_exits,
)
from stochlab.utils.rng import derive_trial_seed
from stochlab.utils.stats import chi_square_pvalue, ks_two_sample


def test_exit_from_unit_interval_takes_one_step():
    records = [interval_exit(1, derive_trial_seed(1, i)) for i in range(2000)]
    assert all(r.time == 1 for r in records)
    plus = sum(r.position == (1,) for r in records)
    assert chi_square_pvalue([plus, 2000 - plus], [1000, 1000]) > 0.001


def test_exit_from_two_interval():
    times = sample_interval_exits(2, 4000, 2)
    assert np.all(times % 2 == 0)
    assert abs(np.mean(times == 2) - 0.5) <= 4 * math.sqrt(0.25 / 4000)
    assert abs(times.mean() - 4.0) <= 4 * math.sqrt(8.0 / 4000)


def test_mean_exit_time_is_n_squared():
    n, trials = 10, 2000
    times = sample_interval_exits(n, trials, 3)
    var = 2.0 / 3.0 * n * n * (n * n - 1)
    assert abs(times.mean() - n * n) <= 4 * math.sqrt(var / trials)


@pytest.mark.parametrize("n", [2, 3, 4, 5, 6])
def test_absorbing_chain_gives_n_squared(n):
    # E_x[T] op {-n..n} met absorptie in +-n
    size = 2 * n - 1
    P = np.zeros((size, size))
    for i in range(size):
        if i > 0:
            P[i, i - 1] = 0.5
        if i < size - 1:
            P[i, i + 1] = 0.5
    h = np.linalg.solve(np.eye(size) - P, np.ones(size))
    assert h[n - 1] == pytest.approx(n * n)


def test_exit_record_tracks_running_maximum():
    rec = interval_exit(5, 11)
    assert abs(rec.position[0]) == 5
    assert rec.max_before < 5


def test_limit_exit_cdf_shape():
    assert limit_exit_cdf(0.0) == 0.0
    assert limit_exit_cdf(100.0) == pytest.approx(1.0, abs=1e-10)
    grid = np.linspace(0.0, 5.0, 10_000)
    values = limit_exit_cdf(grid)
    assert np.all(np.diff(values) >= -1e-12)
    assert limit_exit_cdf(1.0 - 1e-9) == pytest.approx(limit_exit_cdf(1.0), abs=1e-8)


def test_limit_exit_cdf_rejects_negative_time():
    with pytest.raises(DomainError):
        limit_exit_cdf(-0.5)


@pytest.mark.parametrize("s", [0.5, 1.0, 2.0])
def test_limit_exit_laplace_matches_sech(s):
    assert limit_exit_laplace(s) == pytest.approx(1.0 / math.cosh(math.sqrt(2.0 * s)), abs=1e-6)


def test_limit_exit_laplace_at_zero():
    assert limit_exit_laplace(0.0) == 1.0


def test_levy_and_maximum_laws():
    assert levy_cdf(1.0) == pytest.approx(2.0 * (1.0 - stats.norm.cdf(1.0)), abs=1e-12)
    assert levy_cdf(0.0) == 0.0
    assert limit_maximum_cdf(1.0) == pytest.approx(1.0 - limit_exit_cdf(1.0))


def test_planar_laplace_at_zero():
    assert planar_exit_laplace(0.0) == 1.0
    assert 0.0 < planar_exit_laplace(1.0) < 1.0


def test_first_passage_cdf_exact_values():
    assert first_passage_cdf(1, 1) == pytest.approx(0.5)
    assert first_passage_cdf(1, 3) == pytest.approx(0.625)
    assert first_passage_cdf(3, 2) == pytest.approx(0.0)


def test_first_passage_cdf_matches_path_enumeration():
    n = 2
    for k in range(2, 11):
        hits = 0
        for steps in itertools.product((-1, 1), repeat=k):
            if max(itertools.accumulate(steps)) >= n:
                hits += 1
        assert first_passage_cdf(n, k) == pytest.approx(hits / 2 ** k, abs=1e-12)


def test_first_passage_to_one_by_path():
    batch = sample_first_passages(1, 4000, 5, method="path", cap=10_000)
    times = batch.times[~batch.censored]
    assert abs(np.mean(times == 1) - 0.5) <= 4 * math.sqrt(0.25 / 4000)
    assert abs(np.mean(times == 3) - 0.125) <= 4 * math.sqrt(0.125 * 0.875 / 4000)


def test_first_passage_single_walk_is_odd():
    rec = first_passage(3, 8)
    assert rec.censored or (rec.time % 2 == 1 and rec.position == (3,))


def test_reflection_and_path_agree_in_law():
    a = sample_first_passages(3, 1000, 6, method="path", cap=900)
    b = sample_first_passages(3, 1000, 7, method="reflection", cap=900)
    _, pvalue = ks_two_sample(a.times, b.times)
    assert pvalue > 0.001


def test_first_passage_scaled_law_near_levy():
    n = 100
    exact = float(first_passage_cdf(n, n * n))
    assert abs(exact - levy_cdf(1.0)) < 0.01
    batch = sample_first_passages(n, 20_000, 8)
    frac = np.mean(batch.scaled() <= 1.0) * (batch.scaled().size / 20_000)
    assert abs(frac - exact) <= 4 * math.sqrt(exact * (1 - exact) / 20_000)


def test_first_passage_censoring_fraction():
    n = 10
    batch = sample_first_passages(n, 20_000, 9)
    expected = 1.0 - float(first_passage_cdf(n, batch.cap))
    assert abs(batch.censored_count / 20_000 - expected) < 0.01
    assert np.all(batch.times[batch.censored] == batch.cap)


def test_unknown_first_passage_method():
    with pytest.raises(ConfigurationError):
        sample_first_passages(2, 10, 1, method="bogus")


def test_planar_exit_from_unit_disk_is_one_step():
    for i in range(50):
        rec = planar_disk_exit(1, derive_trial_seed(3, i))
        assert rec.time == 1
        assert rec.scaled_time == 0.5


def test_planar_mean_exit_time_matches_dirichlet_oracle():
    r, trials = 8, 2000
    network, boundary = lattice_ball_network(2, r)
    h0 = expected_exit_times(network, boundary)[network.origin]
    batch = sample_disk_exits(r, trials, 10)
    sd = batch.times.std(ddof=1)
    assert abs(batch.times.mean() - h0) <= 4 * sd / math.sqrt(trials)


def test_planar_mean_exit_time_bounds():
    r = 16
    network, boundary = lattice_ball_network(2, r)
    h0 = expected_exit_times(network, boundary)[network.origin]
    assert 0.5 <= h0 / (2 * r * r) <= 0.5 * (1 + 1 / r) ** 2


def test_planar_exit_angle_roughly_uniform():
    batch = sample_disk_exits(16, 1000, 12)
    counts, _ = np.histogram(batch.angles, bins=8, range=(0, 2 * math.pi))
    assert chi_square_pvalue(counts, np.full(8, 125.0)) > 0.001


@pytest.mark.slow
def test_planar_exit_angle_uniform_large_radius():
    batch = sample_disk_exits(64, 10_000, 13)
    counts, _ = np.histogram(batch.angles, bins=16, range=(0, 2 * math.pi))
    assert chi_square_pvalue(counts, np.full(16, 625.0)) > 0.001
    assert abs(batch.scaled().mean() - 0.5) < 0.02


def test_sup_norm_disk_exit():
    rec = planar_disk_exit(4, 5, norm="sup")
    assert max(abs(c) for c in rec.position) == 4


def test_partial_maximum_distribution_for_four_steps():
    counts = {}
    for steps in itertools.product((-1, 1), repeat=4):
        m = max(abs(x) for x in itertools.accumulate(steps))
        counts[m] = counts.get(m, 0) + 1
    trials = 4000
    observed = {m: 0 for m in counts}
    for i in range(trials):
        observed[partial_maximum(4, derive_trial_seed(14, i))] += 1
    keys = sorted(counts)
    pvalue = chi_square_pvalue([observed[k] for k in keys], [counts[k] / 16 * trials for k in keys])
    assert pvalue > 0.001


def test_maximum_and_exit_time_are_dual():
    for i in range(200):
        seed = derive_trial_seed(15, i)
        assert (partial_maximum(100, seed) >= 5) == (interval_exit(5, seed).time <= 100)


def test_empirical_laplace_edge_cases():
    assert empirical_laplace([0.0, 0.0, 0.0], 2.0).value == 1.0
    assert empirical_laplace([1.0, 2.0], 0.0).value == 1.0
    with pytest.raises(DomainError):
        empirical_laplace([], 1.0)
    with pytest.raises(DomainError):
        empirical_laplace([1.0], -1.0)


def test_empirical_laplace_of_interval_exits():
    n = 20
    scaled = sample_interval_exits(n, 4000, 16) / float(n * n)
    est = empirical_laplace(scaled, 1.0)
    assert abs(est.value - 1.0 / math.cosh(math.sqrt(2.0))) < 0.03


def test_rescaled_path():
    path = random_walk_path(16, 17)
    rescaled = rescale_path(path, 16)
    pos = path.positions()[:, 0]
    assert rescaled.endpoint == pytest.approx(pos[-1] / 4.0)
    assert rescaled.maximum() == pytest.approx(np.abs(pos).max() / 4.0)
    assert rescaled(0.5 / 16) == pytest.approx(0.5 * pos[1] / 4.0)
    one = rescale_path(random_walk_path(1, 18), 1)
    assert abs(one.endpoint) == 1.0


def test_path_length_zero():
    assert random_walk_path(0, 1).positions().tolist() == [[0]]


def test_interval_exit_law_against_limit():
    n = 30
    scaled = sample_interval_exits(n, 2000, 19) / float(n * n)
    report = compare_law(scaled, limit_exit_cdf, 0.06)
    assert report.passed
    assert report.as_dict()["count"] == 2000


def test_censored_comparison_needs_upper_bound():
    with pytest.raises(ConfigurationError):
        compare_law([0.1, 0.2], levy_cdf, 0.1, censored=3)
    report = compare_law([0.1, 0.2], levy_cdf, 1.0, censored=1, upper=5.0)
    assert report.count == 3 and report.censored == 1


@pytest.mark.slow
def test_interval_exit_law_large():
    n = 100
    scaled = sample_interval_exits(n, 10_000, 50) / float(n * n)
    assert compare_law(scaled, limit_exit_cdf, 0.02).passed
    for s in (0.5, 1.0, 2.0):
        assert abs(empirical_laplace(scaled, s).value - 1.0 / math.cosh(math.sqrt(2.0 * s))) < 0.01


@pytest.mark.slow
def test_first_passage_law_large():
    n = 100
    batch = sample_first_passages(n, 100_000, 51)
    report = compare_law(batch.scaled(), levy_cdf, 0.02,
                         censored=batch.censored_count, upper=100.0)
    assert report.passed


@pytest.mark.slow
def test_planar_scaled_mean_large_radius():
    batch = sample_disk_exits(64, 10_000, 52)
    assert abs(batch.scaled().mean() - 0.5) <= 0.01
