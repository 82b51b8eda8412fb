import math

import numpy as np
import pytest

from lscpa.channel import draw_correlated, draw_iid_rayleigh
from lscpa.errors import DegenerateChannel, PolicyMismatch
from lscpa.link import (
    CapacityAdaptive,
    CsitEstimate,
    CsitSource,
    FixedRate,
    best_backoff,
    best_fixed_rate,
    decode,
    mrt_beamformer,
    random_beamformer,
    received_snr,
    select_rate,
)


def test_mrt_axis_aligned():
    e1 = np.array([1, 0, 0, 0], complex)
    np.testing.assert_allclose(mrt_beamformer(e1), e1)


def test_mrt_single_rx_is_normalized_conjugate(rng):
    h = draw_iid_rayleigh(8, rng)
    np.testing.assert_allclose(mrt_beamformer(h), np.conj(h) / np.linalg.norm(h))


def test_mrt_scale_invariant(rng):
    h = draw_iid_rayleigh((6, 2), rng)
    np.testing.assert_allclose(mrt_beamformer(h), mrt_beamformer(5 * h))


def test_mrt_beats_random_beams(rng):
    h = draw_iid_rayleigh(16, rng)
    best = abs(h @ mrt_beamformer(h)) ** 2
    w = draw_iid_rayleigh((10_000, 16), rng)
    w /= np.linalg.norm(w, axis=1, keepdims=True)
    assert np.all(np.abs(w @ h) ** 2 <= best * (1 + 1e-12))


def test_mrt_multi_rx_maximizes_gain(rng):
    H = draw_iid_rayleigh((8, 2), rng)
    w = mrt_beamformer(H)
    assert np.linalg.norm(w) == pytest.approx(1.0)
    gain = np.sum(np.abs(H.T @ w) ** 2)
    assert gain == pytest.approx(np.linalg.svd(H, compute_uv=False)[0] ** 2)


def test_mrt_zero_estimate():
    with pytest.raises(DegenerateChannel):
        mrt_beamformer(np.zeros((4, 1)))


def test_random_beam_m1(rng):
    w = random_beamformer(1, rng)
    assert w.shape == (1,) and abs(w[0]) == pytest.approx(1.0)


def test_random_beam_unit_norm(rng):
    for _ in range(100):
        assert np.linalg.norm(random_beamformer(7, rng)) == pytest.approx(1.0, abs=1e-14)


def test_random_beam_isotropy(rng):
    M, n = 8, 1_000_000
    h = draw_iid_rayleigh(M, rng)
    z = draw_iid_rayleigh((n, M), rng)
    w = z / np.linalg.norm(z, axis=1, keepdims=True)  # same construction, vectorized
    mean = np.mean(np.abs(w @ h) ** 2)
    assert mean == pytest.approx(np.linalg.norm(h) ** 2 / M, rel=0.02)
    vals = [abs(h @ random_beamformer(M, rng)) ** 2 for _ in range(20_000)]
    assert np.mean(vals) == pytest.approx(np.linalg.norm(h) ** 2 / M, rel=0.05)


def test_received_snr_identity():
    assert received_snr(np.array([1.0 + 0j]), np.array([1.0 + 0j]), 1.0, 1.0, 1.0) == 1.0


def test_received_snr_array_gain(rng):
    M, n = 32, 20_000
    vals = []
    for _ in range(n):
        h = draw_iid_rayleigh(M, rng)
        vals.append(received_snr(h, mrt_beamformer(h), 1.0, 1.0, 1.0))
    assert 10 * math.log10(np.mean(vals)) == pytest.approx(15.05, abs=0.05)


def test_two_rx_not_worse_than_one(rng):
    for _ in range(200):
        H = draw_iid_rayleigh((8, 2), rng)
        g2 = received_snr(H, mrt_beamformer(H), 1, 1, 1)
        g1 = received_snr(H[:, :1], mrt_beamformer(H[:, :1]), 1, 1, 1)
        assert g2 >= g1 * (1 - 1e-12)


def test_received_snr_linear(rng):
    h = draw_iid_rayleigh((4, 2), rng)
    w = random_beamformer(4, rng)
    base = received_snr(h, w, 1.0, 1.0, 1.0)
    assert received_snr(h, w, 3.0, 1.0, 1.0) == pytest.approx(3 * base)
    assert received_snr(h, w, 1.0, 0.25, 1.0) == pytest.approx(0.25 * base)


def test_select_rate_perfect():
    h = np.array([math.sqrt(3.0) + 0j])
    csit = CsitEstimate(h[:, None], CsitSource.PERFECT, 1.0, 0.0)
    r = select_rate(csit, 1.0, CapacityAdaptive())
    assert r == pytest.approx(2.0)
    assert decode(r, 3.0, 100).success


def test_select_rate_fixed():
    csit = CsitEstimate(None, CsitSource.NONE, 0.0, 0.0)
    assert select_rate(csit, 123.0, FixedRate(0.3)) == 0.3


def test_select_rate_mismatch_without_csit():
    with pytest.raises(PolicyMismatch):
        select_rate(CsitEstimate(None, CsitSource.NONE, 0.0, 0.0), 1.0, CapacityAdaptive())


def test_csit_invariants():
    with pytest.raises(ValueError):
        CsitEstimate(np.ones((2, 1)), CsitSource.NONE, 0.0, 0.0)
    with pytest.raises(ValueError):
        CsitEstimate(np.ones((2, 1)), CsitSource.PERFECT, 0.9, 0.0)


def _mismatched_outage(rho, rng, n=4000, M=8, budget=10.0):
    fails = 0
    for _ in range(n):
        est = draw_iid_rayleigh((M, 1), rng)
        truth = draw_correlated(est, rho, rng)
        csit = CsitEstimate(est, CsitSource.SELF_PA, rho, 5e-3)
        r = select_rate(csit, budget, CapacityAdaptive())
        fails += not decode(r, received_snr(truth, mrt_beamformer(est), budget, 1, 1), 1).success
    return fails / n


def test_mismatched_outage_decreases_with_rho(rng):
    p = [_mismatched_outage(r, rng) for r in (0.5, 0.875, 0.99)]
    assert p[2] > 0
    assert p[0] > p[1] > p[2]


@pytest.mark.parametrize("rate, snr, ok, bits", [(0.0, 0.0, True, 0.0), (2.0, 3.0, True, 2000.0), (2.1, 3.0, False, 0.0)])
def test_decode(rate, snr, ok, bits):
    out = decode(rate, snr, 1000)
    assert out.success is ok
    assert out.delivered_bits == bits


def test_best_fixed_rate_exponential():
    # Rayleigh, unit budget: maximize R exp(-(2^R - 1)); optimum near 0.7 bit/symbol
    g = np.random.default_rng(0).exponential(size=200_000)
    grid = np.arange(1, 40) * 0.1
    score = grid * np.exp(-(2**grid - 1))
    assert best_fixed_rate(g, [(1.0, 1.0)], 0.1) == pytest.approx(grid[np.argmax(score)])


def test_best_fixed_rate_on_grid():
    g = np.random.default_rng(1).exponential(size=5000)
    r = best_fixed_rate(g, [(0.67, 100.0), (0.33, 1.0)], 0.1)
    assert r == pytest.approx(round(r, 1))


def test_best_backoff_perfect_is_one():
    g = np.random.default_rng(2).exponential(size=5000)
    assert best_backoff(g, g, 10.0) == 1.0
