"""Tests for prime streams, t-draws, rank walks, and step kernels."""

import math
from fractions import Fraction

import numpy as np
import pytest

import selmerlab as sl
from selmerlab.twists import TStepSampler, step_ranks


def default_config(seed=0):
    return sl.StreamConfig(sl.S3_WIDTH_DENSITIES, growth_rate=1.0, seed=seed)


def test_stream_is_deterministic():
    cfg = default_config(seed=5)
    a = sl.synth_prime_stream(cfg, 500.0)
    b = sl.synth_prime_stream(cfg, 500.0)
    assert len(a) == len(b) > 0
    assert all(x.norm == y.norm and x.width == y.width for x, y in zip(a, b))


def test_stream_empty_below_first_norm():
    assert sl.synth_prime_stream(default_config(), 1.0) == []


def test_stream_norms_sorted_and_bounded():
    sites = sl.synth_prime_stream(default_config(seed=1), 300.0)
    norms = [s.norm for s in sites]
    assert norms == sorted(norms)
    assert all(1.0 < n <= 300.0 for n in norms)
    assert len(set(s.id for s in sites)) == len(sites)


def test_stream_count_tracks_growth_rate():
    # expected count below X is growth_rate * (X - 1)
    cfg = default_config(seed=9)
    x = 50_000.0
    count = len(sl.synth_prime_stream(cfg, x))
    assert 0.95 * x < count < 1.05 * x
    half = sl.StreamConfig(sl.S3_WIDTH_DENSITIES, growth_rate=0.5, seed=9)
    count_half = len(sl.synth_prime_stream(half, x))
    assert 0.45 * x < count_half < 0.55 * x


def test_stream_prefix_property():
    cfg = default_config(seed=2)
    small = sl.synth_prime_stream(cfg, 100.0)
    large = sl.synth_prime_stream(cfg, 400.0)
    assert len(large) >= len(small)
    for x, y in zip(small, large):
        assert x.norm == y.norm and x.width == y.width


def test_stream_width_proportions():
    sites = sl.synth_prime_stream(default_config(seed=3), 200_000.0)
    n = len(sites)
    counts = {i: sum(1 for s in sites if s.width == i) for i in (0, 1, 2)}
    assert counts[0] + counts[1] + counts[2] == n
    sigma = 0.5 / math.sqrt(n)
    assert abs(counts[0] / n - 1 / 3) < 5 * sigma
    assert abs(counts[1] / n - 1 / 2) < 5 * sigma
    assert abs(counts[2] / n - 1 / 6) < 5 * sigma


def test_stream_config_validation():
    with pytest.raises(sl.DegenerateConfig):
        sl.StreamConfig((0.5, 0.5, 0.0), 1.0, 0)  # needs d2 > 0
    with pytest.raises(sl.DegenerateConfig):
        sl.StreamConfig((0.5, 0.2, 0.2), 1.0, 0)  # mass 0.9
    with pytest.raises(sl.DegenerateConfig):
        sl.StreamConfig((0.9, 0.2, -0.1), 1.0, 0)
    bad_rate = sl.StreamConfig(sl.S3_WIDTH_DENSITIES, 0.0, 0)
    with pytest.raises(sl.DegenerateConfig):
        sl.synth_prime_stream(bad_rate, 10.0)


def test_stream_config_json_round_trip():
    cfg = sl.StreamConfig((0.25, 0.25, 0.5), 2.0, 11)
    back = sl.StreamConfig.from_json_dict(cfg.to_json_dict())
    assert back == cfg
    with pytest.raises(sl.ValidationError):
        sl.StreamConfig.from_json_dict({"densities": [1, 0, 0], "extra": 1})


def test_t_distribution_rows():
    assert list(sl.t_distribution(1, 0, 2)) == [1.0, 0.0]
    assert list(sl.t_distribution(1, 2, 2)) == [0.25, 0.75]
    row = sl.t_distribution(2, 1, 2)
    assert row[0] == 0.25
    assert row[1] == pytest.approx(0.75, abs=1e-15)
    assert row[2] == pytest.approx(0.0, abs=1e-15)
    row = sl.t_distribution(2, 3, 2)
    assert row[0] == 2.0**-6
    assert row[1] == pytest.approx(3 * (0.125 - 2.0**-6), abs=1e-15)
    with pytest.raises(sl.ValidationError):
        sl.t_distribution(3, 1, 2)
    with pytest.raises(sl.ValidationError):
        sl.t_distribution(1, -1, 2)
    with pytest.raises(sl.InvalidPrime):
        sl.t_distribution(1, 1, 6)


def test_t_distribution_exact_rows_sum_to_one():
    for p in (2, 3):
        for i in (1, 2):
            for r in range(0, 9):
                row = sl.t_distribution(i, r, p, exact=True)
                assert sum(row) == 1
                assert all(x >= 0 for x in row)
    exact = sl.t_distribution(2, 1, 3, exact=True)
    assert exact[0] == Fraction(1, 9)
    assert exact[1] == Fraction(8, 9)


def test_sample_t_point_masses():
    rng = np.random.default_rng(0)
    assert all(sl.sample_t(1, 0, 2, rng) == 0 for _ in range(50))
    # i = 2, r = 0 forces t = 0 as well
    assert all(sl.sample_t(2, 0, 2, rng) == 0 for _ in range(50))


def test_sample_t_frequencies():
    rng = np.random.default_rng(1)
    draws = 100_000
    counts = [0, 0]
    for _ in range(draws):
        counts[sl.sample_t(1, 2, 2, rng)] += 1
    sigma = math.sqrt(0.25 * 0.75 / draws)
    assert abs(counts[0] / draws - 0.25) < 5 * sigma
    assert abs(counts[1] / draws - 0.75) < 5 * sigma


def test_twist_step_width_one():
    s = sl.RankWalkState(3, 1)
    assert sl.twist_step(s, 1, 1, 2).rank == 2
    assert sl.twist_step(s, 1, 0, 2).rank == 4
    # width 1 always flips the tracked parity
    assert sl.twist_step(s, 1, 0, 2).parity_check == 0


def test_twist_step_width_two():
    rng = np.random.default_rng(2)
    s = sl.RankWalkState(4, 0)
    assert sl.twist_step(s, 2, 2, 2, rng).rank == 2
    assert sl.twist_step(s, 2, 1, 2, rng).rank == 4
    ups = sum(sl.twist_step(s, 2, 0, 2, rng).rank == 6 for _ in range(20_000))
    sigma = math.sqrt(0.5 * 0.5 / 20_000)
    assert abs(ups / 20_000 - 0.5) < 5 * sigma


def test_twist_step_validation():
    s = sl.RankWalkState(1, 1)
    with pytest.raises(sl.InvalidT):
        sl.twist_step(s, 1, 2, 2)
    with pytest.raises(sl.InvalidT):
        sl.twist_step(sl.RankWalkState(1, 1), 2, 2, 2, np.random.default_rng(0))
    with pytest.raises(sl.ValidationError):
        sl.twist_step(s, 2, 0, 2)  # rng required for the 1/p branch
    with pytest.raises(sl.ValidationError):
        sl.RankWalkState(-1, 0)
    with pytest.raises(sl.ValidationError):
        sl.RankWalkState(2, 1)  # parity disagrees with the rank


def test_twist_step_parity_rule():
    # width 1 flips rank parity, width 2 preserves it
    rng = np.random.default_rng(3)
    for r in range(0, 6):
        s = sl.RankWalkState.at(r)
        for t in range(0, min(1, r) + 1):
            assert sl.twist_step(s, 1, t, 2).rank % 2 == (r + 1) % 2
        for t in range(0, min(2, r) + 1):
            assert sl.twist_step(s, 2, t, 2, rng).rank % 2 == r % 2


def test_exact_step_kernel_width_one_is_the_operator():
    for p in (2, 3):
        M = sl.build_lagrangian(sl.LagrangianParams(p, 32))
        K1 = sl.exact_step_kernel(1, p, 32)
        assert np.abs(K1.matrix - M.matrix).max() < 1e-15


def test_exact_step_kernel_width_two_matches_square():
    for p in (2, 3):
        M2 = sl.power(sl.build_lagrangian(sl.LagrangianParams(p, 32)), 2)
        K2 = sl.exact_step_kernel(2, p, 32)
        # identical away from the fold rows
        assert np.abs(K2.matrix[:29] - M2.matrix[:29]).max() < 1e-15
        assert sl.classify_parity(K2) is sl.ParityClass.PRESERVING
        for r in range(32):
            assert K2.matrix[r].sum() == pytest.approx(1.0, abs=1e-12)


def test_exact_step_kernel_row_zero():
    K2 = sl.exact_step_kernel(2, 2, 16)
    assert K2.matrix[0, 0] == 0.5
    assert K2.matrix[0, 2] == 0.5


def test_exact_step_kernel_exact_backend():
    K2 = sl.exact_step_kernel(2, 3, 12, exact=True)
    assert all(row.sum() == 1 for row in K2.matrix)
    assert K2.matrix[0, 0] == Fraction(2, 3)
    assert K2.matrix[0, 2] == Fraction(1, 3)


def test_sampler_rows_are_close_and_valid():
    y = 50.0
    sampler = TStepSampler(2, y=y, seed=4)
    for i in (1, 2):
        for r in range(0, 10):
            row = sampler.row(i, r)
            ideal = sl.t_distribution(i, r, 2)
            assert row.shape == ideal.shape
            assert row.min() >= 0.0
            assert row.sum() == pytest.approx(1.0, abs=1e-12)
            assert np.abs(row - ideal).sum() <= 1.0 / y + 1e-12
            # support is still t <= min(i, r)
            assert row[min(i, r) + 1 :].sum() == 0.0


def test_sampler_is_deterministic_and_cached():
    a = TStepSampler(2, y=20.0, seed=6)
    b = TStepSampler(2, y=20.0, seed=6)
    assert np.array_equal(a.row(2, 3), b.row(2, 3))
    assert a.row(2, 3) is a.row(2, 3)
    c = TStepSampler(2, y=20.0, seed=7)
    assert not np.array_equal(a.row(2, 3), c.row(2, 3))


def test_sampler_none_y_is_exact():
    sampler = TStepSampler(2, y=None, seed=0)
    assert np.array_equal(sampler.row(1, 2), sl.t_distribution(1, 2, 2))
    with pytest.raises(sl.ValidationError):
        TStepSampler(2, y=1.5, seed=0)


def test_step_ranks_matches_kernel_frequencies():
    p, n = 2, 200_000
    rng = np.random.default_rng(8)
    ranks = np.full(n, 2, dtype=np.int64)
    out = step_ranks(ranks, 2, p, rng)
    row = sl.exact_step_kernel(2, p, 8).matrix[2]
    for target in (0, 2, 4):
        freq = np.mean(out == target)
        sigma = math.sqrt(row[target] * (1 - row[target]) / n)
        assert abs(freq - row[target]) < 5 * sigma


def test_simulate_walks_point_examples():
    p = 2
    init = sl.make_density([1.0], 16)
    rng = np.random.default_rng(9)
    # no sites: the initial law comes back
    out = sl.simulate_walks([], init, p, 1000, rng)
    assert sl.l1_distance(out, init) == 0.0
    # a single width-1 site from rank 0 forces rank 1
    out = sl.simulate_walks([1], init, p, 1000, rng)
    assert out.values[1] == 1.0


def test_simulate_walks_against_kernel_product():
    p = 2
    init = sl.make_density([0.5, 0.5], 16)
    rng = np.random.default_rng(10)
    walks = 60_000
    out = sl.simulate_walks([1, 2], init, p, walks, rng)
    K1 = sl.exact_step_kernel(1, p, 16)
    K2 = sl.exact_step_kernel(2, p, 16)
    expect = np.dot(np.dot(init.values, K1.matrix), K2.matrix)
    assert np.abs(out.values - expect).max() < 5.0 / math.sqrt(walks)


def test_simulate_walks_ceiling_guard():
    # from the top of a tiny window a width-2 site can escape upward
    init = sl.make_density([0.0, 0.0, 1.0], 3)
    rng = np.random.default_rng(11)
    with pytest.raises(sl.TruncationMismatch):
        sl.simulate_walks([2] * 8, init, 2, 2000, rng)
