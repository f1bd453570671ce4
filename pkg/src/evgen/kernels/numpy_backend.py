"""Pure-numpy kernels, the fallback when numba is unavailable.

Every expression mirrors the numba backend operation for operation so the
two produce bit-identical state and event counts.  Branches over per-pixel
conditions become masks; `x + 0.0` and `np.where(mask, v, 0.0)` preserve
the skipped-branch values exactly.
"""

import numpy as np

from .. import rng

NAME = "numpy"

TWO_PI = 2.0 * np.pi


def set_threads(n):
    # numpy kernels are single-threaded (BLAS is not involved); accepted for
    # interface parity so callers need not special-case the backend
    return 1


def dvs_frame_step(log_new, y_norm, pix_idx, dt, shot_key,
                   shot_rate, shot_c, f3db_max, bw_floor,
                   l_lp, l_base, on_count, off_count, leak_phase, leak_rho,
                   theta_on, theta_off,
                   n_on, n_off, noise_pol):
    """Advance every pixel by one frame interval.

    Updates the state arrays in place and fills the per-pixel outputs:
    signal event counts `n_on`/`n_off` (int32) and the background-noise
    polarity `noise_pol` (int8, 0 when no noise event fired).
    """
    # finite-bandwidth front end: first-order lowpass whose corner scales
    # with normalized intensity, floored at bw_floor of the maximum
    if f3db_max > 0.0:
        f3 = f3db_max * (bw_floor + (1.0 - bw_floor) * y_norm)
        eps = (dt * TWO_PI) * f3
        np.minimum(eps, 1.0, out=eps)
        l_lp[:] = l_lp + eps * (log_new - l_lp)
    else:
        l_lp[:] = log_new

    # leak: a continuous decrement of the memorized value, kept as a
    # separate phase accumulator so the memorized value stays an exact
    # function of integer event counts
    leak_phase[:] = leak_phase + leak_rho * dt

    l_mem = l_base + on_count * theta_on - off_count * theta_off - leak_phase
    delta = l_lp - l_mem
    mask_on = delta >= theta_on
    mask_off = (~mask_on) & (delta <= -theta_off)
    e_on = np.where(mask_on, np.floor(delta / theta_on), 0.0)
    e_off = np.where(mask_off, np.floor(-delta / theta_off), 0.0)
    on_count[:] = on_count + e_on
    off_count[:] = off_count + e_off
    n_on[:] = e_on.astype(np.int32)
    n_off[:] = e_off.astype(np.int32)

    # intensity-dependent background noise: one uniform draw per pixel per
    # frame, tested against the two tails
    if shot_rate > 0.0:
        u = rng.uniforms(shot_key, pix_idx)
        r = shot_rate * (shot_c + (1.0 - shot_c) * (1.0 - y_norm))
        p_half = (r * 0.5) * dt
        pol = np.where(u < p_half, -1, np.where(u > 1.0 - p_half, 1, 0))
        noise_pol[:] = pol.astype(np.int8)
        hit = pol != 0
        if hit.any():
            # a noise event reloads the pixel memory from the filtered value
            l_base[hit] = l_lp[hit]
            on_count[hit] = 0.0
            off_count[hit] = 0.0
            leak_phase[hit] = 0.0
    else:
        noise_pol[:] = 0


def photoreceptor_run(eps, target, theta_on, theta_off, v0, vp, n_on, n_off):
    """Integrate front-end traces and quantize them into events.

    `eps` and `target` are (n_steps, n_traces) precomputed per-step filter
    gains and log-intensity targets.  Writes the filter trace `vp` and the
    per-step event counts `n_on`/`n_off` (int32), all (n_steps, n_traces).
    """
    n_steps = eps.shape[0]
    v = v0.copy()
    v_mem = v0.copy()
    for s in range(n_steps):
        v = v + eps[s] * (target[s] - v)
        vp[s] = v
        d = v - v_mem
        mask_on = d >= theta_on
        mask_off = (~mask_on) & (d <= -theta_off)
        k_on = np.where(mask_on, np.floor(d / theta_on), 0.0)
        k_off = np.where(mask_off, np.floor(-d / theta_off), 0.0)
        v_mem = v_mem + k_on * theta_on - k_off * theta_off
        n_on[s] = k_on.astype(np.int32)
        n_off[s] = k_off.astype(np.int32)
