"""Numba-compiled kernels, parallel over pixels.

Same operation order as numpy_backend so results match it bit for bit; see
the package docstring for why that holds.  Compiled lazily on first call,
cached on disk afterwards.
"""

import numba
import numpy as np
from numba import njit, prange

from .. import rng

NAME = "numba"

TWO_PI = 2.0 * np.pi

_GAMMA = rng.U64_GAMMA
_MIX1 = rng.U64_MIX1
_MIX2 = rng.U64_MIX2
_S30 = np.uint64(30)
_S27 = np.uint64(27)
_S31 = np.uint64(31)
_S11 = np.uint64(11)
_INV53 = rng.INV53


def set_threads(n):
    """Clamp to the pool numba launched with and apply. Returns the count used."""
    limit = numba.config.NUMBA_NUM_THREADS
    n = max(1, min(int(n), limit))
    numba.set_num_threads(n)
    return n


@njit(inline="always")
def _uniform(key, idx):
    # splitmix64 finalizer on key + idx * GAMMA, top 53 bits to [0, 1)
    z = key + idx * _GAMMA
    z = (z ^ (z >> _S30)) * _MIX1
    z = (z ^ (z >> _S27)) * _MIX2
    z = z ^ (z >> _S31)
    return np.float64(z >> _S11) * _INV53


@njit(parallel=True, cache=True)
def dvs_frame_step(log_new, y_norm, pix_idx, dt, shot_key,
                   shot_rate, shot_c, f3db_max, bw_floor,
                   l_lp, l_base, on_count, off_count, leak_phase, leak_rho,
                   theta_on, theta_off,
                   n_on, n_off, noise_pol):
    n = log_new.shape[0]
    dt_two_pi = dt * TWO_PI
    for p in prange(n):
        if f3db_max > 0.0:
            f3 = f3db_max * (bw_floor + (1.0 - bw_floor) * y_norm[p])
            eps = dt_two_pi * f3
            if eps > 1.0:
                eps = 1.0
            l_lp[p] = l_lp[p] + eps * (log_new[p] - l_lp[p])
        else:
            l_lp[p] = log_new[p]

        leak_phase[p] = leak_phase[p] + leak_rho[p] * dt

        l_mem = l_base[p] + on_count[p] * theta_on[p] \
            - off_count[p] * theta_off[p] - leak_phase[p]
        delta = l_lp[p] - l_mem
        e_on = 0.0
        e_off = 0.0
        if delta >= theta_on[p]:
            e_on = np.floor(delta / theta_on[p])
            on_count[p] = on_count[p] + e_on
        elif delta <= -theta_off[p]:
            e_off = np.floor(-delta / theta_off[p])
            off_count[p] = off_count[p] + e_off
        n_on[p] = np.int32(e_on)
        n_off[p] = np.int32(e_off)

        pol = 0
        if shot_rate > 0.0:
            u = _uniform(shot_key, pix_idx[p])
            r = shot_rate * (shot_c + (1.0 - shot_c) * (1.0 - y_norm[p]))
            p_half = (r * 0.5) * dt
            if u < p_half:
                pol = -1
            elif u > 1.0 - p_half:
                pol = 1
            if pol != 0:
                l_base[p] = l_lp[p]
                on_count[p] = 0.0
                off_count[p] = 0.0
                leak_phase[p] = 0.0
        noise_pol[p] = pol


@njit(parallel=True, cache=True)
def photoreceptor_run(eps, target, theta_on, theta_off, v0, vp, n_on, n_off):
    n_steps = eps.shape[0]
    n_traces = eps.shape[1]
    for i in prange(n_traces):
        v = v0[i]
        v_mem = v0[i]
        for s in range(n_steps):
            v = v + eps[s, i] * (target[s, i] - v)
            vp[s, i] = v
            d = v - v_mem
            k_on = 0.0
            k_off = 0.0
            if d >= theta_on:
                k_on = np.floor(d / theta_on)
                v_mem = v_mem + k_on * theta_on
            elif d <= -theta_off:
                k_off = np.floor(-d / theta_off)
                v_mem = v_mem - k_off * theta_off
            n_on[s, i] = np.int32(k_on)
            n_off[s, i] = np.int32(k_off)
