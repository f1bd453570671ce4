"""Counter-based random draws.

Every random number is a pure function of (seed, purpose, frame counter,
pixel index), so results do not depend on evaluation order, chunking, or
thread count.  The mixer is the splitmix64 finalizer; a draw hashes
``key + pixel * GAMMA`` where the key folds in seed, purpose and frame.

The integer pipeline uses only 64-bit adds, multiplies, shifts and xors,
which are exact in both numpy and compiled code, so the numpy and numba
backends produce bit-identical streams.
"""

import numpy as np

MASK64 = (1 << 64) - 1
GAMMA = 0x9E3779B97F4A7C15
_MIX1 = 0xBF58476D1CE4E5B9
_MIX2 = 0x94D049BB133111EB

U64_GAMMA = np.uint64(GAMMA)
U64_MIX1 = np.uint64(_MIX1)
U64_MIX2 = np.uint64(_MIX2)
# 2**-53, maps the top 53 bits of a hash to [0, 1)
INV53 = float(2.0 ** -53)

# draw purposes, folded into the stream key so each consumer gets an
# independent stream from the same seed
PURPOSE_THETA_ON = 1
PURPOSE_THETA_OFF = 2
PURPOSE_LEAK_PHASE = 3
PURPOSE_SHOT = 4
PURPOSE_PHOTORECEPTOR = 5


def mix64(z):
    """Splitmix64 finalizer on a python int, reduced mod 2**64."""
    z &= MASK64
    z = ((z ^ (z >> 30)) * _MIX1) & MASK64
    z = ((z ^ (z >> 27)) * _MIX2) & MASK64
    return (z ^ (z >> 31)) & MASK64


def stream_key(seed, purpose, counter=0):
    """Key for one purpose of one frame/step.  Returns a python int in [0, 2**64)."""
    k = mix64((seed & MASK64) + GAMMA * purpose)
    k = mix64(k + GAMMA * counter)
    return k


def _mix64_arr(z):
    # uint64 array version of mix64; unsigned wraparound is intended
    z = (z ^ (z >> np.uint64(30))) * U64_MIX1
    z = (z ^ (z >> np.uint64(27))) * U64_MIX2
    return z ^ (z >> np.uint64(31))


def hash_u64(key, idx):
    """Hash a uint64 index array against a stream key.  Vectorized."""
    k = np.uint64(key) + idx * U64_GAMMA
    return _mix64_arr(k)


def uniforms(key, idx):
    """Uniform [0, 1) doubles for the given uint64 index array."""
    return (hash_u64(key, idx) >> np.uint64(11)).astype(np.float64) * INV53


def gaussians(key, idx):
    """Standard normal doubles via Box-Muller on two decorrelated uniform draws."""
    ua = uniforms(mix64(key ^ 0x5555555555555555), idx)
    ub = uniforms(mix64(key ^ 0xAAAAAAAAAAAAAAAA), idx)
    # 1 - ua is in (0, 1], keeps the log finite
    r = np.sqrt(-2.0 * np.log(1.0 - ua))
    return r * np.cos(2.0 * np.pi * ub)


def index_array(n):
    """Pixel/element index array in the dtype the hash expects."""
    return np.arange(n, dtype=np.uint64)
