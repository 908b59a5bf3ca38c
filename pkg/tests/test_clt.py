import math

import numpy as np
import pytest

from ce_precoding import ChannelMatrix, ScaledSymbolVector, diagnostics, make_qam_alphabet, sample_rayleigh
from ce_precoding.clt import Box, box_hit_counts, box_hit_probability, gaussianity_report, sample_z, symbol_targets


def test_single_phasor_on_unit_circle():
    z = sample_z(ChannelMatrix([[1.0]]), 2000, 0)
    assert z.shape == (2000, 2)
    np.testing.assert_allclose(z[:, 0] ** 2 + z[:, 1] ** 2, 1.0, atol=1e-12)


def test_sample_z_deterministic_and_chunk_independent():
    h = sample_rayleigh(2, 16, 3)
    a = sample_z(h, 9000, 5)
    np.testing.assert_array_equal(a, sample_z(h, 9000, 5))
    np.testing.assert_array_equal(a[:100], sample_z(h, 100, 5))
    assert not np.array_equal(a, sample_z(h, 9000, 6))


def test_sample_mean_bound():
    h = sample_rayleigh(3, 32, 1)
    n = 10_000
    z = sample_z(h, n, 2)
    c = np.repeat(diagnostics(h).cnd3, 2)
    assert np.all(np.abs(z.mean(axis=0)) <= 4 / math.sqrt(n) * np.sqrt(c / 2))


def test_gaussianity_large_n():
    h = sample_rayleigh(2, 256, 0)
    rep = gaussianity_report(sample_z(h, 10_000, 1), diagnostics(h))
    assert rep.var_ratio_max_dev <= 0.1
    assert rep.max_abs_correlation <= 0.1
    assert rep.ks_max < 0.03
    assert rep.means.shape == (4,)


def test_arcsine_marginal_is_not_gaussian():
    # exact sup distance between the arcsine law and N(0, 1/2) is about 0.097
    h = ChannelMatrix([[1.0]])
    rep = gaussianity_report(sample_z(h, 20_000, 0), diagnostics(h))
    assert rep.ks_max > 0.08


def test_report_needs_enough_samples():
    h = sample_rayleigh(1, 4, 0)
    with pytest.raises(ValueError):
        gaussianity_report(sample_z(h, 999, 0), diagnostics(h))


def test_box_covering_all_reachable_points():
    h = sample_rayleigh(1, 8, 4)
    reach = np.sum(np.abs(h.entries)) / math.sqrt(8)
    box = Box(ScaledSymbolVector([0.0], [0.0]), reach + 1e-9)
    res = box_hit_probability(h, box, 3000, 0)
    assert res.probability == 1.0
    assert res.ci_high == pytest.approx(1.0)


def test_box_probability_matches_gaussian_limit():
    h = sample_rayleigh(1, 1024, 7)
    box = Box(ScaledSymbolVector([0.0], [0.0]), 1.0)
    # erf is evaluated with the realised c_1 rather than its limit
    c = diagnostics(h).cnd3[0]
    expected = math.erf(1 / math.sqrt(c)) ** 2
    res = box_hit_probability(h, box, 20_000, 3)
    assert res.ci_low <= expected <= res.ci_high
    assert abs(res.probability - math.erf(1) ** 2) < 0.03


def test_unreachable_box():
    h = sample_rayleigh(1, 16, 0)
    far = 10 * np.sum(np.abs(h.entries)) / 4
    box = Box(ScaledSymbolVector([far], [far**2]), 0.1)
    res = box_hit_probability(h, box, 5000, 0)
    assert res.hits == 0 and res.probability == 0 and res.max_hit_residual == 0
    assert res.ci_low == 0


def test_hits_monotone_in_delta():
    h = sample_rayleigh(2, 32, 2)
    centers = symbol_targets(make_qam_alphabet(4), 2, 1.0)
    prev = np.zeros(len(centers))
    for delta in (0.1, 0.2, 0.4, 0.8):
        hits, _ = box_hit_counts(h, centers, delta, 5000, 9)
        assert np.all(hits >= prev)
        prev = hits


def test_every_hit_is_certified():
    h = sample_rayleigh(2, 16, 1)
    centers = symbol_targets(make_qam_alphabet(16), 2, 1.0)
    delta = 0.3
    hits, worst = box_hit_counts(h, centers, delta, 20_000, 4)
    assert hits.sum() > 0
    assert np.all(worst <= 2 * delta**2 + 1e-12)
    assert np.all(worst[hits == 0] == 0)


def test_hit_probability_grows_with_n():
    # both rates sit near the Gaussian limit, so compare within sampling error
    n = 40_000
    centers = symbol_targets(make_qam_alphabet(16), 2, 1.0)
    h64, _ = box_hit_counts(sample_rayleigh(2, 64, 0), centers, 0.3, n, 1)
    h1024, _ = box_hit_counts(sample_rayleigh(2, 1024, 0), centers, 0.3, n, 1)
    p64, p1024 = h64 / n, h1024 / n
    se = np.sqrt((p64 * (1 - p64) + p1024 * (1 - p1024)) / n)
    assert np.mean(p1024 >= p64 - 3 * se) >= 0.9


def test_small_array_misses_targets_large_array_hits():
    centers = symbol_targets(make_qam_alphabet(16), 2, 1.0)
    h2, _ = box_hit_counts(sample_rayleigh(2, 2, 0), centers, 0.3, 20_000, 1)
    h256, _ = box_hit_counts(sample_rayleigh(2, 256, 0), centers, 0.3, 20_000, 1)
    assert np.all(h256 > 0)
    assert np.mean(h2 > 0) < 1


def test_symbol_targets():
    alph = make_qam_alphabet(16)
    full = symbol_targets(alph, 2, 4.0)
    assert full.shape == (256, 2)
    assert len({tuple(r) for r in full}) == 256
    np.testing.assert_allclose(np.mean(np.abs(full) ** 2), 4.0)
    sub = symbol_targets(alph, 3, 1.0, limit=100, seed=2)
    assert sub.shape == (100, 3)
    assert len({tuple(r) for r in sub}) == 100
    np.testing.assert_array_equal(sub, symbol_targets(alph, 3, 1.0, limit=100, seed=2))


def test_box_validation():
    with pytest.raises(ValueError):
        Box(ScaledSymbolVector([0.0], [0.0]), 0.0)
