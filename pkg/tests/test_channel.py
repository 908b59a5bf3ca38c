import itertools
import math

import numpy as np
import pytest

from ce_precoding.channel import derive_rng

from ce_precoding import ChannelMatrix, diagnostics, load_channel, sample_rayleigh, save_channel


def test_sampling_is_deterministic():
    a = sample_rayleigh(3, 5, 7)
    b = sample_rayleigh(3, 5, 7)
    np.testing.assert_array_equal(a.entries, b.entries)
    c = sample_rayleigh(3, 5, 8)
    assert not np.array_equal(a.entries, c.entries)
    d = sample_rayleigh(3, 5, 7, 1)
    assert not np.array_equal(a.entries, d.entries)


def test_sampling_moments():
    h = sample_rayleigh(64, 1024, 3).entries
    assert abs(np.mean(np.abs(h) ** 2) - 1) < 0.02
    assert abs(np.var(h.real) - 0.5) < 0.01
    assert abs(np.var(h.imag) - 0.5) < 0.01
    assert abs(np.mean(h.real * h.imag)) < 0.01


def test_sampling_rejects_bad_dims():
    for m, n in [(0, 3), (2, 0), (-1, 2), (1.5, 2)]:
        with pytest.raises((ValueError, TypeError)):
            sample_rayleigh(m, n, 0)


def test_derive_rng_checks_seeds():
    assert derive_rng((1, 2), 3).random() == derive_rng(1, 2, 3).random()
    with pytest.raises(TypeError):
        derive_rng(1.0)
    with pytest.raises(ValueError):
        derive_rng(-1)


def test_diagnostics_examples():
    d = diagnostics(ChannelMatrix([[1, 1], [1, -1]]))
    assert d.cnd1 == 0
    np.testing.assert_allclose(d.cnd3, [1, 1])
    # every |h| is 1, so each 4-tuple sums to N
    assert d.cnd2 == pytest.approx(2 / 4)
    d = diagnostics(ChannelMatrix([[1, 1]]))
    assert d.cnd1 == 0
    d = diagnostics(ChannelMatrix([[1, 0], [1, 0]]))
    assert d.cnd1 == pytest.approx(0.5)


def test_cnd2_matches_brute_force_over_tuples():
    h = sample_rayleigh(3, 7, 11).entries
    m, n = h.shape
    a = np.abs(h)
    best = max(
        sum(a[k1, i] * a[l1, i] * a[k2, i] * a[l2, i] for i in range(n))
        for k1, l1, k2, l2 in itertools.product(range(m), repeat=4)
    )
    assert diagnostics(h).cnd2 == pytest.approx(best / n**2, rel=1e-12)


def test_cnd1_brute_force():
    h = sample_rayleigh(4, 9, 2).entries
    n = h.shape[1]
    best = max(
        abs(sum(h[k, i].conjugate() * h[l, i] for i in range(n)))
        for k in range(4)
        for l in range(4)
        if k != l
    )
    assert diagnostics(h).cnd1 == pytest.approx(best / n, rel=1e-12)


def test_cnd3_tends_to_one():
    d = diagnostics(sample_rayleigh(4, 4096, 5))
    assert np.all(np.abs(d.cnd3 - 1) < 0.1)
    assert d.cnd1 < 0.1


def test_save_load_roundtrip(tmp_path):
    h = sample_rayleigh(3, 4, 9)
    path = tmp_path / "h.txt"
    save_channel(h, path)
    lines = path.read_text().splitlines()
    assert lines[0] == "3 4"
    assert len(lines[1].split()) == 8
    first = float(lines[1].split()[0]), float(lines[1].split()[1])
    assert first == (h.entries[0, 0].real, h.entries[0, 0].imag)
    np.testing.assert_array_equal(load_channel(path).entries, h.entries)


def test_load_rejects_bad_file(tmp_path):
    path = tmp_path / "bad.txt"
    path.write_text("2 2\n1 0 0 1\n")
    with pytest.raises(ValueError):
        load_channel(path)
    path.write_text("")
    with pytest.raises(ValueError):
        load_channel(path)


def test_channel_scale():
    h = sample_rayleigh(1, 1, 0)
    assert math.isfinite(abs(h.entries[0, 0]))
