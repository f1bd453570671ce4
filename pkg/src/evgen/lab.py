"""Single-pixel photoreceptor test bench.

Drives the continuous-time front end (logarithmic photoreceptor with an
intensity-proportional corner frequency plus photon shot noise) at a fine
time step and quantizes the output into events, to measure behavior that
the frame-driven model only exhibits implicitly: events per passing edge,
step-response latency versus illuminance, and motion blur versus
bandwidth.

Intensities here are linear photocurrents in arbitrary units, not 8-bit
luma; `i_dark` adds the dark current that dominates dim scenes.
"""

import math
from dataclasses import dataclass, replace

import numpy as np

from . import model, rng
from .config import ModelConfig
from .frames import LumaFrame, LumaSequence
from .kernels import get_backend

# photocurrents are floored here to keep logs and time constants finite
I_FLOOR = 1e-12


@dataclass
class PhotoreceptorParams:
    """Front-end constants.

    tau_ref            filter time constant at photocurrent i_ref [s]
    i_dark             dark current added to every photocurrent
    shot_noise_scale   per-step current noise scale; the std per step is
                       scale * sqrt((i + i_dark) / dt), i.e. white noise
                       whose variance grows with the current
    theta_on/off       event thresholds in log units
    dt                 integration step [s]
    bandwidth_cap_hz   if positive, the corner frequency never exceeds this
                       (models bias settings that favor stability over speed)
    """

    tau_ref: float = 1e-3
    i_ref: float = 1.0
    i_dark: float = 1e-6
    shot_noise_scale: float = 0.0
    theta_on: float = 0.2
    theta_off: float = 0.2
    dt: float = 1e-4
    bandwidth_cap_hz: float = 0.0


@dataclass
class StimulusWaveform:
    """Photocurrent samples at a fixed step."""

    samples: np.ndarray
    dt: float

    @property
    def duration(self):
        return len(self.samples) * self.dt

    @property
    def times(self):
        return (np.arange(len(self.samples)) + 1.0) * self.dt


def square_wave(i_lo, i_hi, half_period, n_cycles, dt, lead=None):
    """Alternating stimulus starting low; `lead` seconds of settling first."""
    if lead is None:
        lead = half_period
    steps_half = int(round(half_period / dt))
    steps_lead = int(round(lead / dt))
    parts = [np.full(steps_lead, i_lo)]
    for _ in range(n_cycles):
        parts.append(np.full(steps_half, i_hi))
        parts.append(np.full(steps_half, i_lo))
    return StimulusWaveform(np.concatenate(parts), dt)


def _front_end(samples, params, key, n_traces):
    """Per-step filter gains and log targets, (n_steps, n_traces) float64.

    All transcendentals happen here, outside the backend kernels, so both
    backends integrate identical inputs.
    """
    i_sig = np.asarray(samples, dtype=np.float64)[:, None] + params.i_dark
    n_steps = i_sig.shape[0]
    if params.shot_noise_scale > 0.0:
        g = rng.gaussians(key, rng.index_array(n_steps * n_traces))
        g = g.reshape(n_steps, n_traces)
        i_noisy = i_sig + g * (params.shot_noise_scale * np.sqrt(i_sig / params.dt))
    else:
        i_noisy = np.repeat(i_sig, n_traces, axis=1)
    np.maximum(i_noisy, I_FLOOR, out=i_noisy)
    tau = params.tau_ref * params.i_ref / i_noisy
    if params.bandwidth_cap_hz > 0.0:
        np.maximum(tau, 1.0 / (2.0 * np.pi * params.bandwidth_cap_hz), out=tau)
    eps = np.minimum(params.dt / tau, 1.0)
    target = np.log(i_noisy)
    return eps, target


def _run_traces(samples, params, key, n_traces, v0_value, backend=None):
    eps, target = _front_end(samples, params, key, n_traces)
    n_steps = eps.shape[0]
    v0 = np.full(n_traces, v0_value, dtype=np.float64)
    vp = np.empty((n_steps, n_traces), dtype=np.float64)
    n_on = np.empty((n_steps, n_traces), dtype=np.int32)
    n_off = np.empty((n_steps, n_traces), dtype=np.int32)
    get_backend(backend).photoreceptor_run(
        eps, target, params.theta_on, params.theta_off, v0, vp, n_on, n_off)
    return vp, n_on, n_off


def simulate_photoreceptor(stim, params, seed=0, backend=None):
    """Integrate one noisy trace.

    Returns (vp, events): the filter state after each step and a list of
    (time_s, polarity) tuples, one entry per emitted event.
    """
    key = rng.stream_key(seed, rng.PURPOSE_PHOTORECEPTOR)
    v0 = math.log(max(float(stim.samples[0]) + params.i_dark, I_FLOOR))
    vp, n_on, n_off = _run_traces(stim.samples, params, key, 1, v0, backend)
    events = []
    for s in np.nonzero((n_on[:, 0] > 0) | (n_off[:, 0] > 0))[0]:
        t = (int(s) + 1) * params.dt
        events.extend([(t, 1)] * int(n_on[s, 0]))
        events.extend([(t, -1)] * int(n_off[s, 0]))
    return vp[:, 0], events


def measure_grating_response(params, i_lo, i_hi, half_period, n_cycles=4,
                             n_traces=20, seed=0, backend=None):
    """Mean events emitted per passing edge of a square grating.

    Runs `n_traces` independent noise realizations of the same stimulus and
    counts ON events in the half period after each rising edge and OFF
    events after each falling edge.
    """
    stim = square_wave(i_lo, i_hi, half_period, n_cycles, params.dt)
    steps_half = int(round(half_period / params.dt))
    steps_lead = len(stim.samples) - 2 * steps_half * n_cycles
    key = rng.stream_key(seed, rng.PURPOSE_PHOTORECEPTOR)
    v0 = math.log(max(i_lo + params.i_dark, I_FLOOR))
    _, n_on, n_off = _run_traces(stim.samples, params, key, n_traces, v0, backend)

    on_sum = np.zeros(n_traces, dtype=np.float64)
    off_sum = np.zeros(n_traces, dtype=np.float64)
    for c in range(n_cycles):
        rise = steps_lead + 2 * c * steps_half
        fall = rise + steps_half
        on_sum += n_on[rise:fall].sum(axis=0)
        off_sum += n_off[fall:fall + steps_half].sum(axis=0)
    on_per_edge = on_sum / n_cycles
    off_per_edge = off_sum / n_cycles
    return {
        "on_per_edge": float(on_per_edge.mean()),
        "off_per_edge": float(off_per_edge.mean()),
        "on_per_edge_std": float(on_per_edge.std()),
        "off_per_edge_std": float(off_per_edge.std()),
        "per_trace_on": on_per_edge,
        "per_trace_off": off_per_edge,
        "n_edges": n_cycles,
        "n_traces": n_traces,
    }


def measure_latency(illuminances, params=None, n_seeds=100, contrast=0.1,
                    steps_to_latency=64, horizon=4.0, seed=0, backend=None):
    """First-ON-event delay after an upward intensity step, per illuminance.

    Each point steps the photocurrent from `contrast * E` to `E` with the
    pixel settled at the low level.  The integration step adapts to the
    predicted latency so every point is resolved equally well; results are
    one dict per illuminance with median/mean/std latency in seconds.
    """
    if params is None:
        params = PhotoreceptorParams()
    if not 0.0 < contrast < 1.0:
        raise ValueError("contrast must be in (0, 1)")
    rows = []
    for j, e_lux in enumerate(illuminances):
        i_hi = float(e_lux)
        i_lo = contrast * i_hi
        span = math.log(i_hi + params.i_dark) - math.log(i_lo + params.i_dark)
        if span <= params.theta_on:
            rows.append({"illuminance": i_hi, "latency_median_s": math.inf,
                         "latency_mean_s": math.inf, "latency_std_s": 0.0,
                         "detected_fraction": 0.0, "dt": params.dt})
            continue
        tau = params.tau_ref * params.i_ref / (i_hi + params.i_dark)
        if params.bandwidth_cap_hz > 0.0:
            tau = max(tau, 1.0 / (2.0 * math.pi * params.bandwidth_cap_hz))
        predicted = tau * math.log(span / (span - params.theta_on))
        dt = predicted / steps_to_latency
        n_steps = int(math.ceil(steps_to_latency * horizon))
        pt_params = replace(params, dt=dt)
        key = rng.stream_key(seed, rng.PURPOSE_PHOTORECEPTOR, counter=j)
        samples = np.full(n_steps, i_hi)
        v0 = math.log(i_lo + params.i_dark)
        _, n_on, _ = _run_traces(samples, pt_params, key, n_seeds, v0, backend)

        hit = n_on > 0
        detected = hit.any(axis=0)
        first = hit.argmax(axis=0)
        lat = (first[detected] + 1.0) * dt
        frac = float(detected.mean())
        if lat.size:
            rows.append({"illuminance": i_hi,
                         "latency_median_s": float(np.median(lat)),
                         "latency_mean_s": float(lat.mean()),
                         "latency_std_s": float(lat.std()),
                         "detected_fraction": frac, "dt": dt})
        else:
            rows.append({"illuminance": i_hi, "latency_median_s": math.inf,
                         "latency_mean_s": math.inf, "latency_std_s": 0.0,
                         "detected_fraction": 0.0, "dt": dt})
    return rows


def fit_latency_slope(rows):
    """Log-log slope of median latency versus illuminance."""
    pts = [(r["illuminance"], r["latency_median_s"]) for r in rows
           if math.isfinite(r["latency_median_s"]) and r["detected_fraction"] > 0.5]
    if len(pts) < 2:
        raise ValueError("not enough detected latency points to fit a slope")
    x = np.log10([p[0] for p in pts])
    y = np.log10([p[1] for p in pts])
    slope, _ = np.polyfit(x, y, 1)
    return float(slope)


def moving_bar_frames(width=240, height=24, bar_width=24, y_bg=8.0, y_fg=255.0,
                      speed=420.0, frame_rate=4200.0, x_start=20.0, x_end=None):
    """Bright bar sweeping over a dark background, anti-aliased columns.

    The frame rate should comfortably exceed both the pixel bandwidth under
    test and speed (in px/s), so the stimulus itself adds no blur.
    """
    if x_end is None:
        x_end = width - 20.0 - bar_width
    if x_end <= x_start:
        raise ValueError("bar travel must be positive")
    n_frames = int(math.floor((x_end - x_start) / speed * frame_rate)) + 1
    cols = np.arange(width, dtype=np.float64)
    frames = []
    for j in range(n_frames):
        t = j / frame_rate
        pos = x_start + speed * t
        cover = np.clip(np.minimum(cols + 0.5, pos + bar_width)
                        - np.maximum(cols - 0.5, pos), 0.0, 1.0)
        row = y_bg + (y_fg - y_bg) * cover
        frames.append(LumaFrame(np.tile(row, (height, 1)), t))
    return LumaSequence(frames, frame_rate, 1)


def measure_motion_blur(events, speed):
    """Spatial spread of motion-compensated ON events.

    Shifts each ON event to the bar's reference frame (x - speed * t) and
    reports the 5th-to-95th percentile spread in pixels and, divided by the
    speed, in milliseconds.
    """
    on = events[events["p"] == 1]
    if on.size < 20:
        raise ValueError("too few ON events to measure blur")
    x_comp = on["x"].astype(np.float64) - speed * (on["t"].astype(np.float64) * 1e-6)
    blur_px = float(np.percentile(x_comp, 95) - np.percentile(x_comp, 5))
    return {"blur_px": blur_px, "blur_ms": blur_px / speed * 1e3,
            "n_on_events": int(on.size)}


def grating_experiment(dim_factor=10.0, n_traces=20, seed=0, backend=None):
    """Events per edge for a contrast-2 grating at two illumination levels.

    The bright condition uses photocurrents well above the dark current;
    the dim condition divides them by `dim_factor`, which both drags the
    effective contrast toward the dark-current floor and slows the filter,
    so fewer events survive per edge.
    """
    params = PhotoreceptorParams(tau_ref=1e-2, i_ref=1.0, i_dark=0.1,
                                 shot_noise_scale=2e-4, theta_on=0.09,
                                 theta_off=0.09, dt=1e-4)
    half_period = 0.05
    out = {"params": params, "half_period": half_period,
           "dim_factor": float(dim_factor)}
    for name, scale in (("bright", 1.0), ("dim", 1.0 / dim_factor)):
        res = measure_grating_response(params, i_lo=1.0 * scale, i_hi=2.0 * scale,
                                       half_period=half_period, n_cycles=4,
                                       n_traces=n_traces, seed=seed,
                                       backend=backend)
        out[name] = res
    return out


def latency_experiment(n_points=7, e_min=0.01, e_max=10.0, n_seeds=100,
                       cap_hz=0.0, seed=0, backend=None):
    """Step-response latency sweep over a log-spaced illuminance range.

    Returns (rows, slope); with `cap_hz` at 0 the latency follows the
    reciprocal of illuminance, so the log-log slope is close to -1.
    """
    params = PhotoreceptorParams(tau_ref=1e-3, i_ref=1.0, i_dark=1e-6,
                                 shot_noise_scale=2e-5, theta_on=0.2,
                                 theta_off=0.2, bandwidth_cap_hz=cap_hz)
    pts = np.logspace(math.log10(e_min), math.log10(e_max), n_points)
    rows = measure_latency(pts, params, n_seeds=n_seeds, seed=seed,
                           backend=backend)
    return rows, fit_latency_slope(rows)


def blur_sweep(cutoffs_hz, speed=420.0, seq=None, config=None, backend=None):
    """Motion blur of the standard moving bar at several corner frequencies.

    `cutoffs_hz` entries may be None (or inf) for the unlimited-bandwidth
    reference.  Returns one dict per cutoff.
    """
    if seq is None:
        seq = moving_bar_frames(speed=speed)
    if config is None:
        config = ModelConfig(theta_on=0.2, theta_off=0.2, sigma_theta=0.0,
                             leak_rate=0.0, shot_rate=0.0)
    rows = []
    for cutoff in cutoffs_hz:
        unlimited = cutoff is None or math.isinf(cutoff)
        cfg = config.replaced(f3db_max=0.0 if unlimited else float(cutoff))
        events = model.synthesize(seq, cfg, backend=backend)
        row = measure_motion_blur(events, speed)
        row["cutoff_hz"] = math.inf if unlimited else float(cutoff)
        rows.append(row)
    return rows
