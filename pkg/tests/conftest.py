import numpy as np
import pytest

from evgen import LumaFrame, ModelConfig, lab, make_events, synthesize
from evgen.kernels import available_backends


@pytest.fixture(scope="session", autouse=True)
def warm_kernels():
    # compile the jit kernels once up front so timed tests measure the model,
    # not the compiler
    frames = [LumaFrame(np.full((4, 4), 100.0), 0.0),
              LumaFrame(np.full((4, 4), 180.0), 0.01)]
    cfg = ModelConfig(f3db_max=100.0, leak_rate=0.1, shot_rate=1.0, seed=0)
    for backend in available_backends():
        synthesize(frames, cfg, backend=backend)
        stim = lab.StimulusWaveform(np.full(8, 1.0), 1e-4)
        lab.simulate_photoreceptor(stim, lab.PhotoreceptorParams(), backend=backend)


@pytest.fixture
def random_events():
    """Factory for sorted random event streams."""

    def make(n, width=64, height=48, seed=0, t_max_us=10 ** 6):
        rng = np.random.default_rng(seed)
        t = np.sort(rng.integers(0, t_max_us, n).astype(np.uint64))
        x = rng.integers(0, width, n)
        y = rng.integers(0, height, n)
        p = rng.choice([-1, 1], n)
        return make_events(t, x, y, p)

    return make


@pytest.fixture
def random_walk_frames():
    """Factory for a random-walk luma clip."""

    def make(height=32, width=32, n_frames=20, fps=100.0, step=15.0, seed=0):
        rng = np.random.default_rng(seed)
        y = rng.uniform(0.0, 255.0, (height, width))
        frames = [LumaFrame(y.copy(), 0.0)]
        for i in range(1, n_frames):
            y = np.clip(y + rng.normal(0.0, step, (height, width)), 0.0, 255.0)
            frames.append(LumaFrame(y.copy(), i / fps))
        return frames

    return make
