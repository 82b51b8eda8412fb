import math

import numpy as np
from hypothesis import given, settings
from hypothesis import strategies as st

from lscpa import oracle
from lscpa.channel import draw_correlated, draw_iid_rayleigh, jakes_correlation, pathloss_gain
from lscpa.link import decode, mrt_beamformer, received_snr
from lscpa.protocol import BlockerReport, SlotGrid, Trajectory, associate_batch, build_prediction_table

pos = st.floats(1e-3, 1e3, allow_nan=False)


@given(d=st.floats(0.0, 1.0), lam=st.floats(1e-3, 1.0), k=st.integers(-10, 10))
def test_jakes_depends_only_on_ratio(d, lam, k):
    c = 2.0**k
    assert jakes_correlation(c * d, c * lam) == jakes_correlation(d, lam)


@given(d=st.floats(0.0, 1.0), lam=st.floats(1e-3, 1.0), c=st.floats(0.01, 100.0))
def test_jakes_ratio_any_scale(d, lam, c):
    assert math.isclose(jakes_correlation(c * d, c * lam), jakes_correlation(d, lam), abs_tol=1e-12)


@given(d=st.floats(1.0, 1e3), step=st.floats(1e-3, 10.0), a=st.floats(1.0, 5.0))
def test_pathloss_decreasing_in_distance(d, step, a):
    assert pathloss_gain(d + step, a) < pathloss_gain(d, a)


@given(d=st.floats(1.01, 1e3), a=st.floats(1.0, 5.0), da=st.floats(0.01, 2.0))
def test_pathloss_decreasing_in_exponent(d, a, da):
    assert pathloss_gain(d, a + da) < pathloss_gain(d, a)


@settings(max_examples=50)
@given(seed=st.integers(0, 2**31), M=st.integers(1, 8), R=st.integers(1, 3),
       mag=st.floats(1e-3, 1e3), phase=st.floats(0, 2 * math.pi))
def test_mrt_gain_invariant_to_complex_scaling(seed, M, R, mag, phase):
    rng = np.random.default_rng(seed)
    est = draw_iid_rayleigh((M, R), rng)
    truth = draw_iid_rayleigh((M, R), rng)
    c = mag * complex(math.cos(phase), math.sin(phase))
    a = received_snr(truth, mrt_beamformer(est), 1, 1, 1)
    b = received_snr(truth, mrt_beamformer(c * est), 1, 1, 1)
    assert math.isclose(a, b, rel_tol=1e-9)


@given(seed=st.integers(0, 2**31), p=pos, g=pos)
def test_received_snr_linear_in_power_and_gain(seed, p, g):
    rng = np.random.default_rng(seed)
    h = draw_iid_rayleigh((4, 2), rng)
    w = mrt_beamformer(h)
    base = received_snr(h, w, 1.0, 1.0, 1.0)
    assert math.isclose(received_snr(h, w, p, g, 1.0), p * g * base, rel_tol=1e-12)


@given(rate=st.floats(0, 20), snr=st.floats(0, 1e6), L=st.integers(1, 100_000))
def test_decode_contract(rate, snr, L):
    out = decode(rate, snr, L)
    assert out.delivered_bits == (rate * L if out.success else 0.0)
    if math.log2(1 + snr) >= rate:
        assert out.success


@settings(max_examples=20, deadline=None)
@given(rho=st.floats(-1.0, 1.0), seed=st.integers(0, 2**31))
def test_draw_correlated_preserves_variance(rho, seed):
    rng = np.random.default_rng(seed)
    base = draw_iid_rayleigh(200_000, rng)
    out = draw_correlated(base, rho, rng)
    assert abs(np.mean(np.abs(out) ** 2) - 1.0) < 0.02


@given(M=st.integers(1, 40), s1=st.floats(0.01, 100), s2=st.floats(0.01, 100), r=st.floats(0.01, 5))
def test_analytic_outage_monotone(M, s1, s2, r):
    lo, hi = sorted((s1, s2))
    assert oracle.mrt_outage_analytic(M, hi, r) <= oracle.mrt_outage_analytic(M, lo, r)
    assert oracle.mrt_outage_analytic(M + 1, lo, r) <= oracle.mrt_outage_analytic(M, lo, r) + 1e-15


@given(xb=st.floats(-100, 100), vb=st.floats(0, 40), xu=st.floats(-100, 100), vu=st.floats(0, 40),
       s=st.floats(0.5, 20), tau=st.floats(0.05, 2.0))
def test_predicted_slots_are_in_shadow(xb, vb, xu, vu, s, tau):
    grid = SlotGrid(12, tau)
    rep = BlockerReport("UE0", xb, vb)
    traj = Trajectory(xu, vu)
    table = build_prediction_table([rep], {"UE": traj}, grid, s)
    for k in range(grid.count):
        t = grid.midpoint(k)
        inside = abs(xb + vb * t - traj.position(t)) <= s
        if table.blocked("UE", 0, k):
            assert abs(xb + vb * t - traj.position(t)) <= s + 1e-6
        elif inside:
            # only boundary rounding may disagree
            assert abs(abs(xb + vb * t - traj.position(t)) - s) < 1e-6
    assert table == build_prediction_table([rep], {"UE": traj}, grid, s)


@given(g=st.lists(st.floats(1e-9, 1.0), min_size=1, max_size=6),
       mask=st.lists(st.booleans(), min_size=6, max_size=6))
def test_cp_never_picks_blocked_when_clear_exists(g, mask):
    g = np.array(g)
    blocked = np.array(mask[: g.size])[None, :]
    pick = associate_batch(g, blocked, True)[0]
    if not blocked.all():
        assert not blocked[0, pick]
        assert g[pick] == g[~blocked[0]].max()
    else:
        assert g[pick] == g.max()
