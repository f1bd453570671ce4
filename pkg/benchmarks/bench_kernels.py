"""Timing comparison of the two kernel backends.

Runs the same workloads through the compiled kernels and the pure-numpy
fallback and prints a small table.  Two workloads: full video-to-events
synthesis (the per-frame pixel kernel) and the single-pixel lab
integrator (long trace batches).

Usage:
    python3 benchmarks/bench_kernels.py [--pixels 256] [--frames 200]
                                        [--traces 200] [--repeats 3]
                                        [--threads N]
"""

import argparse
import time

import numpy as np

from evgen import (LumaFrame, ModelConfig, PhotoreceptorParams,
                   available_backends, measure_grating_response, synthesize)


def walk_frames(side, n_frames, fps=500.0, seed=0):
    rng = np.random.default_rng(seed)
    y = rng.uniform(0.0, 255.0, (side, side))
    frames = [LumaFrame(y.copy(), 0.0)]
    for i in range(1, n_frames):
        y = np.clip(y + rng.normal(0.0, 12.0, y.shape), 0.0, 255.0)
        frames.append(LumaFrame(y.copy(), i / fps))
    return frames


def best_of(fn, repeats):
    times = []
    for _ in range(repeats):
        t0 = time.perf_counter()
        fn()
        times.append(time.perf_counter() - t0)
    return min(times)


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--pixels", type=int, default=256,
                    help="frame side length for the synthesis workload")
    ap.add_argument("--frames", type=int, default=200)
    ap.add_argument("--traces", type=int, default=200,
                    help="parallel traces for the photoreceptor workload")
    ap.add_argument("--repeats", type=int, default=3)
    ap.add_argument("--threads", type=int, default=None)
    args = ap.parse_args()

    backends = available_backends()
    frames = walk_frames(args.pixels, args.frames)
    config = ModelConfig(sigma_theta=0.03, f3db_max=200.0, leak_rate=0.1,
                         shot_rate=1.0, seed=0)
    params = PhotoreceptorParams(tau_ref=1e-2, i_ref=1.0, i_dark=0.1,
                                 shot_noise_scale=2e-4, theta_on=0.1,
                                 theta_off=0.1, dt=1e-4)

    def synth(backend):
        return lambda: synthesize(frames, config, backend=backend,
                                  threads=args.threads)

    def receptor(backend):
        return lambda: measure_grating_response(
            params, 1.0, 2.0, half_period=0.05, n_cycles=8,
            n_traces=args.traces, backend=backend)

    n_px = args.pixels * args.pixels
    steps = int(round((1 + 2 * 8) * 0.05 / params.dt))
    workloads = [
        (f"synthesize {args.pixels}x{args.pixels}x{args.frames}", synth,
         args.frames * n_px),
        (f"photoreceptor {args.traces} traces x {steps} steps", receptor,
         args.traces * steps),
    ]

    print(f"backends: {', '.join(backends)}")
    results = {}
    for label, factory, ops in workloads:
        for backend in backends:
            factory(backend)()  # warm the jit cache outside the timing
            results[label, backend] = best_of(factory(backend), args.repeats)
        line = [f"{label}:"]
        for backend in backends:
            dt = results[label, backend]
            line.append(f"{backend} {dt:.3f} s ({ops / dt / 1e6:.1f} Mpx/s)")
        if "numba" in backends and "numpy" in backends:
            line.append(f"speedup x{results[label, 'numpy'] / results[label, 'numba']:.1f}")
        print("  " + "  ".join(line))


if __name__ == "__main__":
    main()
