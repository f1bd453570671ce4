import math

import numpy as np
import pytest

from evgen import (PhotoreceptorParams, available_backends, blur_sweep,
                   fit_latency_slope, grating_experiment, make_events,
                   measure_grating_response, measure_latency,
                   measure_motion_blur, moving_bar_frames,
                   simulate_photoreceptor, square_wave)

BACKENDS = available_backends()


def test_square_wave_shape():
    stim = square_wave(1.0, 2.0, half_period=0.01, n_cycles=3, dt=1e-3)
    # default lead equals one half period: (1 + 2 * 3) * 10 samples
    assert len(stim.samples) == 70
    assert stim.samples[0] == 1.0
    assert stim.samples[10] == 2.0
    assert stim.duration == pytest.approx(0.07)
    assert stim.times[0] == pytest.approx(1e-3)


def test_noise_free_trace_matches_recurrence():
    # constant-current phases have a closed form: the filter state relaxes
    # exponentially toward log(i) with per-step gain dt / tau(i)
    params = PhotoreceptorParams(tau_ref=1e-3, i_ref=1.0, i_dark=0.0,
                                 shot_noise_scale=0.0, theta_on=0.3,
                                 theta_off=0.3, dt=1e-4)
    stim = square_wave(1.0, math.e, half_period=0.05, n_cycles=1, dt=params.dt)
    vp, events = simulate_photoreceptor(stim, params)

    lead = 500
    assert np.all(vp[:lead] == 0.0)
    eps_h = params.dt / (params.tau_ref / math.e)
    k = np.arange(1, 501, dtype=np.float64)
    expect_high = 1.0 - (1.0 - eps_h) ** k
    assert np.allclose(vp[lead:lead + 500], expect_high, rtol=1e-12, atol=0)
    # settles to the log of the high current, then decays back
    assert vp[lead + 499] == pytest.approx(1.0, abs=1e-6)
    assert vp[-1] == pytest.approx(0.0, abs=1e-6)

    # log span is exactly 1.0, thresholds 0.3: three ON on the way up, but
    # only two OFF on the way back because the third OFF rung (0.9 - 3*0.3)
    # sits exactly at the resting level, which the decay only approaches
    assert [p for _, p in events] == [1, 1, 1, -1, -1]
    t_on = [t for t, p in events if p == 1]
    assert all(0.05 < t <= 0.10 for t in t_on)
    t_off = [t for t, p in events if p == -1]
    assert all(0.10 < t <= 0.15 for t in t_off)


def test_noisy_trace_deterministic_by_seed():
    params = PhotoreceptorParams(shot_noise_scale=1e-3)
    stim = square_wave(1.0, 2.0, half_period=0.01, n_cycles=2, dt=1e-4)
    vp1, ev1 = simulate_photoreceptor(stim, params, seed=7)
    vp2, ev2 = simulate_photoreceptor(stim, params, seed=7)
    vp3, ev3 = simulate_photoreceptor(stim, params, seed=8)
    assert np.array_equal(vp1, vp2)
    assert ev1 == ev2
    assert not np.array_equal(vp1, vp3)


def test_bandwidth_cap_delays_response():
    base = PhotoreceptorParams(tau_ref=1e-3, i_ref=1.0, i_dark=0.0,
                               shot_noise_scale=0.0, theta_on=0.2,
                               theta_off=0.2, dt=1e-4)
    capped = PhotoreceptorParams(tau_ref=1e-3, i_ref=1.0, i_dark=0.0,
                                 shot_noise_scale=0.0, theta_on=0.2,
                                 theta_off=0.2, dt=1e-4, bandwidth_cap_hz=50.0)
    stim = square_wave(1.0, math.e, half_period=0.08, n_cycles=1, dt=1e-4)
    _, ev_fast = simulate_photoreceptor(stim, base)
    _, ev_slow = simulate_photoreceptor(stim, capped)
    first_fast = min(t for t, p in ev_fast if p == 1)
    first_slow = min(t for t, p in ev_slow if p == 1)
    assert first_slow > first_fast


@pytest.mark.parametrize("backend", BACKENDS)
def test_grating_response_symmetry(backend):
    params = PhotoreceptorParams(tau_ref=1e-2, i_ref=1.0, i_dark=0.0,
                                 shot_noise_scale=0.0, theta_on=0.1,
                                 theta_off=0.1, dt=1e-4)
    res = measure_grating_response(params, 1.0, 2.0, half_period=0.05,
                                   n_cycles=3, n_traces=2, backend=backend)
    # log contrast 0.693, threshold 0.1: the first rising edge climbs six
    # rungs from the settled start; afterwards each edge re-crosses five,
    # since the last rung of each ladder coincides with the opposite
    # resting level.  Noise-free, so the counts are exact.
    assert res["on_per_edge"] == pytest.approx((6 + 5 + 5) / 3)
    assert res["off_per_edge"] == pytest.approx(5.0)
    assert res["on_per_edge_std"] == 0.0


def test_grating_experiment_dim_response_drops():
    out = grating_experiment(dim_factor=10.0, n_traces=6, seed=3)
    assert out["bright"]["on_per_edge"] > out["dim"]["on_per_edge"]
    assert out["dim"]["on_per_edge"] >= 0.0
    assert out["bright"]["on_per_edge"] >= 4.0


def test_latency_sub_threshold_step_never_fires():
    params = PhotoreceptorParams(theta_on=0.2, shot_noise_scale=0.0)
    rows = measure_latency([1.0], params, n_seeds=3, contrast=0.9)
    assert rows[0]["latency_median_s"] == math.inf
    assert rows[0]["detected_fraction"] == 0.0
    with pytest.raises(ValueError):
        fit_latency_slope(rows)
    with pytest.raises(ValueError):
        measure_latency([1.0], params, contrast=1.5)


def test_latency_tracks_time_constant():
    # noise-free: latency = tau * log(span / (span - theta)), tau = tau_ref / i
    params = PhotoreceptorParams(tau_ref=1e-3, i_ref=1.0, i_dark=0.0,
                                 shot_noise_scale=0.0, theta_on=0.2,
                                 theta_off=0.2)
    rows = measure_latency([0.5, 5.0], params, n_seeds=2, contrast=0.1)
    span = math.log(1.0 / 0.1)
    for row in rows:
        tau = params.tau_ref / row["illuminance"]
        predicted = tau * math.log(span / (span - 0.2))
        assert row["detected_fraction"] == 1.0
        # the adaptive step resolves the latency to 1/64 of its value
        assert row["latency_median_s"] == pytest.approx(predicted, rel=0.05)
    assert rows[1]["latency_median_s"] < rows[0]["latency_median_s"]


@pytest.mark.skipif(len(BACKENDS) < 2, reason="single backend available")
def test_photoreceptor_backends_bitwise_equal():
    params = PhotoreceptorParams(tau_ref=1e-2, i_ref=1.0, i_dark=0.1,
                                 shot_noise_scale=2e-4, theta_on=0.09,
                                 theta_off=0.09, dt=1e-4)
    results = []
    for backend in BACKENDS:
        res = measure_grating_response(params, 1.0, 2.0, half_period=0.02,
                                       n_cycles=2, n_traces=8, seed=11,
                                       backend=backend)
        results.append((res["per_trace_on"], res["per_trace_off"]))
    for on, off in results[1:]:
        assert np.array_equal(on, results[0][0])
        assert np.array_equal(off, results[0][1])
    stim = square_wave(1.0, 2.0, half_period=0.01, n_cycles=2, dt=1e-4)
    traces = [simulate_photoreceptor(stim, params, seed=5, backend=b)[0]
              for b in BACKENDS]
    for vp in traces[1:]:
        assert np.array_equal(vp, traces[0])


def test_measure_motion_blur_hand_case():
    speed = 100.0
    # 25 ON events whose compensated positions are exactly 0..24
    t_us = (np.arange(25, dtype=np.uint64) * 10_000)
    x = (np.arange(25) + speed * (np.arange(25) * 1e-2)).astype(np.uint16)
    ev = make_events(t_us, x, np.zeros(25, int), np.ones(25, int))
    res = measure_motion_blur(ev, speed)
    spread = np.percentile(np.arange(25.0), 95) - np.percentile(np.arange(25.0), 5)
    assert res["blur_px"] == pytest.approx(spread)
    assert res["blur_ms"] == pytest.approx(spread / speed * 1e3)
    assert res["n_on_events"] == 25
    with pytest.raises(ValueError):
        measure_motion_blur(ev[:10], speed)


def test_moving_bar_geometry_and_coverage():
    seq = moving_bar_frames(width=120, height=6, bar_width=24, y_bg=8.0,
                            y_fg=255.0, speed=420.0, frame_rate=4200.0)
    assert seq.height == 6 and seq.width == 120
    # travel 120 - 20 - 20 - 24 = 56 px at 0.1 px/frame
    assert len(seq) == 561
    first = seq.frames[0].data
    assert np.all(first == first[0])  # constant along y
    # anti-aliased columns conserve total bar mass in every frame
    for frame in (seq.frames[0], seq.frames[280], seq.frames[-1]):
        mass = (frame.data[0] - 8.0).sum() / (255.0 - 8.0)
        assert mass == pytest.approx(24.0, abs=1e-9)
        assert frame.data.min() >= 8.0
        assert frame.data.max() <= 255.0
    with pytest.raises(ValueError):
        moving_bar_frames(width=50, bar_width=24, x_start=20.0)


def test_blur_sweep_unlimited_bandwidth_is_sharp():
    seq = moving_bar_frames(width=120, height=4, bar_width=24)
    rows = blur_sweep([None], seq=seq)
    assert rows[0]["cutoff_hz"] == math.inf
    assert rows[0]["blur_px"] < 1.0
