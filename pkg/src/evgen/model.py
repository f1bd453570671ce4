"""Event-camera pixel model.

Each pixel holds a memorized log intensity and emits an event whenever the
lowpass-filtered log intensity moves a full threshold away from it.  On top
of that ideal comparator sit the measured non-idealities: fixed-pattern
threshold mismatch, an intensity-dependent photoreceptor bandwidth, leak
events from the slowly decaying pixel memory, and intensity-dependent
temporal noise.

The memorized value is represented as

    l_mem = l_base + on_count * theta_on - off_count * theta_off - leak_phase

with integer event counters, so after a noise-free run the final memorized
value equals the initial value plus the signed event ledger exactly, with
no accumulation error.  Noise events reload l_base from the filtered value
and zero the counters.
"""

import logging
from dataclasses import dataclass, field

import numpy as np

from . import rng
from .config import ModelConfig
from .event_io import EVENT_DTYPE
from .kernels import get_backend

log = logging.getLogger(__name__)


def lin_log(y, knee=20.0):
    """Log mapping of luma with a linear segment below `knee`.

    The linear segment has slope log(knee)/knee so the two pieces join
    continuously; it keeps the mapping finite at zero and tempers
    quantization noise in dark pixels.
    """
    arr = np.asarray(y, dtype=np.float64)
    slope = np.log(knee) / knee
    safe = np.where(arr < knee, 1.0, arr)
    out = np.where(arr < knee, arr * slope, np.log(safe))
    if out.ndim == 0:
        return float(out)
    return out


def sample_thresholds(config, height, width):
    """Per-pixel threshold maps with frozen Gaussian mismatch, clipped below.

    Returns (theta_on_map, theta_off_map), each (height, width) float64 and
    at least `config.theta_min` everywhere.
    """
    n = height * width
    idx = rng.index_array(n)
    maps = []
    for nominal, purpose in ((config.theta_on, rng.PURPOSE_THETA_ON),
                             (config.theta_off, rng.PURPOSE_THETA_OFF)):
        g = rng.gaussians(rng.stream_key(config.seed, purpose), idx)
        theta = nominal + config.sigma_theta * g
        np.maximum(theta, config.theta_min, out=theta)
        maps.append(theta.reshape(height, width))
    return maps[0], maps[1]


def lowpass_update(l_lp, l_new, y_norm, dt, config):
    """One step of the intensity-dependent first-order lowpass.

    The corner frequency scales linearly with normalized luma `y_norm`,
    floored at `bw_floor` of `f3db_max` so dark pixels keep responding.
    With f3db_max == 0 the filter is transparent.
    """
    if config.f3db_max <= 0.0:
        return np.asarray(l_new, dtype=np.float64) + 0.0
    l_lp = np.asarray(l_lp, dtype=np.float64)
    l_new = np.asarray(l_new, dtype=np.float64)
    f3 = config.f3db_max * (config.bw_floor + (1.0 - config.bw_floor) * np.asarray(y_norm))
    eps = (dt * 2.0 * np.pi) * f3
    eps = np.minimum(eps, 1.0)
    return l_lp + eps * (l_new - l_lp)


def leak_decrement_rate(theta_on_map, config):
    """Memory decay in log units per second for each pixel.

    Proportional to the pixel's own ON threshold twice over: once because a
    bigger threshold needs a bigger decrement per event, once because the
    mismatch also modulates the leak rate itself.  The resulting event rate
    is leak_rate * theta_on_pixel / theta_on_nominal.
    """
    return config.leak_rate * (theta_on_map / config.theta_on) * theta_on_map


def apply_leak(l_mem, theta_on_map, dt, config):
    """Decay the memorized value over `dt` seconds; drives ON leak events."""
    return l_mem - leak_decrement_rate(theta_on_map, config) * dt


def generate_events(l_lp, l_mem, theta_on, theta_off):
    """Quantize the filter-to-memory gap into events.

    Returns (n_on, n_off, l_mem_updated); counts are int64 and the memory
    moves by the emitted whole number of thresholds, never past l_lp.
    """
    l_lp = np.asarray(l_lp, dtype=np.float64)
    delta = l_lp - l_mem
    mask_on = delta >= theta_on
    mask_off = (~mask_on) & (delta <= -theta_off)
    n_on = np.where(mask_on, np.floor(delta / theta_on), 0.0)
    n_off = np.where(mask_off, np.floor(-delta / theta_off), 0.0)
    l_mem_new = l_mem + n_on * theta_on - n_off * theta_off
    return n_on.astype(np.int64), n_off.astype(np.int64), l_mem_new


def sample_shot_noise(y_norm, dt, shot_key, config):
    """Temporal-noise polarities for one interval: -1, 0, or +1 per pixel.

    The rate falls linearly with luma from `shot_rate` in darkness to
    `shot_bright_factor * shot_rate` at full scale; one uniform draw per
    pixel is tested against both tails.
    """
    y_norm = np.atleast_1d(np.asarray(y_norm, dtype=np.float64))
    u = rng.uniforms(shot_key, rng.index_array(y_norm.size))
    r = config.shot_rate * (config.shot_bright_factor
                            + (1.0 - config.shot_bright_factor) * (1.0 - y_norm))
    p_half = (r * 0.5) * dt
    if p_half.size and float(p_half.max()) > 0.1:
        log.warning("shot-noise probability %.3f per frame exceeds 0.1; "
                    "shorten the frame interval for faithful statistics",
                    float(p_half.max()))
    return np.where(u < p_half, -1, np.where(u > 1.0 - p_half, 1, 0)).astype(np.int8)


def assign_timestamps(n_events, t_start, t_end):
    """Microsecond timestamps for n events spread evenly inside an interval.

    Event k of n lands at t_start + k * (t_end - t_start) / (n + 1), so the
    events partition the interval without touching either endpoint.
    """
    if t_end < t_start:
        raise ValueError("interval must not be reversed")
    k = np.arange(1, n_events + 1, dtype=np.float64)
    return _stamp_us(k, float(n_events), t_start, t_end)


def _stamp_us(k, n, t_start, t_end):
    # shared by assign_timestamps and the frame assembler so both round the
    # same way; k and n may be arrays
    t = t_start + (k * (t_end - t_start)) / (n + 1.0)
    return np.rint(t * 1e6).astype(np.uint64)


@dataclass
class SensorState:
    """Mutable per-pixel state carried across frames.

    Flat float64 arrays of length height*width; `l_mem` is derived, see the
    module docstring.  `frame_counter` feeds the counter-based RNG, so state
    evolution is independent of how the frame stream is chunked.
    """

    height: int
    width: int
    l_lp: np.ndarray
    l_base: np.ndarray
    on_count: np.ndarray
    off_count: np.ndarray
    leak_phase: np.ndarray
    theta_on: np.ndarray
    theta_off: np.ndarray
    leak_rho: np.ndarray
    t_last: float = 0.0
    frame_counter: int = 0
    pix_idx: np.ndarray = field(default=None, repr=False)

    def __post_init__(self):
        if self.pix_idx is None:
            self.pix_idx = rng.index_array(self.height * self.width)

    @property
    def l_mem(self):
        flat = (self.l_base + self.on_count * self.theta_on
                - self.off_count * self.theta_off - self.leak_phase)
        return flat.reshape(self.height, self.width)

    @property
    def l_lp_map(self):
        return self.l_lp.reshape(self.height, self.width)

    @property
    def theta_on_map(self):
        return self.theta_on.reshape(self.height, self.width)

    @property
    def theta_off_map(self):
        return self.theta_off.reshape(self.height, self.width)


def init_state(first_frame, config):
    """Sensor state settled on the first frame; the first frame emits nothing.

    With leak enabled, each pixel's leak phase starts at a uniform random
    fraction of its ON threshold so leak events from a static scene spread
    out in time instead of firing in lockstep.
    """
    data = np.asarray(first_frame.data, dtype=np.float64)
    height, width = data.shape
    theta_on, theta_off = sample_thresholds(config, height, width)
    theta_on = theta_on.ravel()
    theta_off = theta_off.ravel()
    l0 = lin_log(data.ravel(), config.linlog_knee)
    n = height * width
    if config.leak_rate > 0.0:
        u = rng.uniforms(rng.stream_key(config.seed, rng.PURPOSE_LEAK_PHASE),
                         rng.index_array(n))
        leak_phase = u * theta_on
    else:
        leak_phase = np.zeros(n, dtype=np.float64)
    return SensorState(
        height=height, width=width,
        l_lp=l0.copy(), l_base=l0.copy(),
        on_count=np.zeros(n, dtype=np.float64),
        off_count=np.zeros(n, dtype=np.float64),
        leak_phase=leak_phase,
        theta_on=theta_on, theta_off=theta_off,
        leak_rho=leak_decrement_rate(theta_on, config),
        t_last=float(first_frame.timestamp),
    )


def _assemble_frame_events(n_on, n_off, noise_pol, t_start, t_end, width):
    """Events for one frame interval, timestamps spread inside (t_start, t_end)."""
    n_sig = n_on.astype(np.int64) + n_off.astype(np.int64)
    n_tot = n_sig + (noise_pol != 0)
    active = np.nonzero(n_tot)[0]
    if active.size == 0:
        return np.empty(0, dtype=EVENT_DTYPE)
    reps = n_tot[active]
    total = int(reps.sum())
    pix = np.repeat(active, reps)
    starts = np.cumsum(reps) - reps
    k = np.arange(1, total + 1, dtype=np.int64) - np.repeat(starts, reps)
    n_rep = np.repeat(reps, reps)

    ev = np.empty(total, dtype=EVENT_DTYPE)
    ev["t"] = _stamp_us(k.astype(np.float64), n_rep.astype(np.float64),
                        t_start, t_end)
    ev["x"] = pix % width
    ev["y"] = pix // width
    # a pixel's signal events in one interval share a polarity; the optional
    # noise event comes last and may differ
    sig_per_pix = np.repeat(n_sig[active], reps)
    sig_pol = np.repeat(np.where(n_on[active] > 0, 1, -1), reps)
    noise_rep = np.repeat(noise_pol[active], reps)
    ev["p"] = np.where(k <= sig_per_pix, sig_pol, noise_rep).astype(np.int8)
    return ev


def step_frame(state, frame, config, backend_mod):
    """Advance the state by one frame; returns events for the elapsed interval."""
    data = np.asarray(frame.data, dtype=np.float64)
    if data.shape != (state.height, state.width):
        raise ValueError(
            f"frame shape {data.shape} does not match sensor "
            f"({state.height}, {state.width})")
    t_end = float(frame.timestamp)
    if not t_end > state.t_last:
        raise ValueError("frame timestamps must increase strictly")
    dt = t_end - state.t_last

    y = data.ravel()
    log_new = lin_log(y, config.linlog_knee)
    y_norm = y / 255.0
    state.frame_counter += 1
    shot_key = np.uint64(rng.stream_key(config.seed, rng.PURPOSE_SHOT,
                                        state.frame_counter))

    n = y.size
    n_on = np.empty(n, dtype=np.int32)
    n_off = np.empty(n, dtype=np.int32)
    noise_pol = np.empty(n, dtype=np.int8)
    backend_mod.dvs_frame_step(
        log_new, y_norm, state.pix_idx, dt, shot_key,
        config.shot_rate, config.shot_bright_factor,
        config.f3db_max, config.bw_floor,
        state.l_lp, state.l_base, state.on_count, state.off_count,
        state.leak_phase, state.leak_rho,
        state.theta_on, state.theta_off,
        n_on, n_off, noise_pol)

    events = _assemble_frame_events(n_on, n_off, noise_pol,
                                    state.t_last, t_end, state.width)
    state.t_last = t_end
    return events


def synthesize(frame_source, config=None, *, threads=None, backend=None,
               return_state=False):
    """Run the full pixel model over a frame sequence.

    `frame_source` is a LumaSequence or any iterable of LumaFrame with
    strictly increasing timestamps and identical shapes.  Returns the event
    stream sorted by (t, y, x, polarity); with `return_state` also returns
    the final SensorState.

    Results are identical for any thread count and for both kernel
    backends.
    """
    if config is None:
        config = ModelConfig()
    backend_mod = get_backend(backend)
    if threads is not None:
        backend_mod.set_threads(threads)

    frames = iter(frame_source)
    try:
        first = next(frames)
    except StopIteration:
        raise ValueError("frame source is empty") from None
    state = init_state(first, config)

    warned_rate = False
    chunks = []
    count = 0
    for frame in frames:
        dt = float(frame.timestamp) - state.t_last
        if not warned_rate and config.shot_rate * 0.5 * dt > 0.1:
            log.warning("frame interval %.4g s makes the shot-noise "
                        "probability exceed 0.1 per frame; consider a higher "
                        "upsample ratio", dt)
            warned_rate = True
        ev = step_frame(state, frame, config, backend_mod)
        if ev.size:
            chunks.append(ev)
            count += ev.size
    if state.frame_counter == 0:
        raise ValueError("need at least two frames to synthesize events")
    if count == 0:
        events = np.empty(0, dtype=EVENT_DTYPE)
    else:
        events = np.concatenate(chunks)
        order = np.lexsort((events["p"], events["x"], events["y"], events["t"]))
        events = events[order]
    if return_state:
        return events, state
    return events
