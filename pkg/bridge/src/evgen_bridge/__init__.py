"""In-process bridge between array-based pipelines and the event synthesizer.

Turns a numpy frame stack directly into a structured event array or a
voxel tensor, without touching the filesystem or the CLI.  Every entry
point is a pure function: each call builds its own sensor state and
throws it away, so calls are reentrant and may run concurrently from
multiple threads.  For float64 frame stacks the per-frame slices are
passed into the core as views (no copy); 8-bit stacks are converted
frame by frame.
"""

from dataclasses import dataclass

import numpy as np

import evgen

__version__ = "0.1.0"

__all__ = ["ArrayBatch", "presets", "synthesize_arrays", "voxelize_arrays",
           "__version__"]


@dataclass(frozen=True)
class ArrayBatch:
    """A stack of grayscale frames with one timestamp per frame.

    frames      (height, width, n) array, uint8 or float, values in [0, 255]
    timestamps  (n,) seconds, strictly increasing
    """

    frames: np.ndarray
    timestamps: np.ndarray

    def __post_init__(self):
        frames = np.asarray(self.frames)
        ts = np.asarray(self.timestamps, dtype=np.float64)
        object.__setattr__(self, "frames", frames)
        object.__setattr__(self, "timestamps", ts)
        if frames.ndim != 3:
            raise ValueError(
                f"frames must be (height, width, n), got shape {frames.shape}")
        if frames.dtype != np.uint8 and not np.issubdtype(frames.dtype,
                                                          np.floating):
            raise ValueError(f"frames must be uint8 or float, got {frames.dtype}")
        if ts.ndim != 1 or ts.shape[0] != frames.shape[2]:
            raise ValueError(f"need one timestamp per frame: {frames.shape[2]} "
                             f"frames but timestamps shape {ts.shape}")
        if frames.size and frames.dtype != np.uint8:
            if not np.isfinite(frames).all():
                raise ValueError("frames contain non-finite values")
            lo, hi = float(frames.min()), float(frames.max())
            if lo < 0.0 or hi > 255.0:
                raise ValueError(f"frame values outside [0, 255]: [{lo}, {hi}]")
        if ts.size > 1 and not np.all(np.diff(ts) > 0.0):
            raise ValueError("timestamps must be strictly increasing")

    @property
    def height(self):
        return self.frames.shape[0]

    @property
    def width(self):
        return self.frames.shape[1]

    def __len__(self):
        return self.frames.shape[2]


def _as_config(config):
    if config is None:
        return evgen.ModelConfig()
    if isinstance(config, evgen.ModelConfig):
        return config
    return evgen.ModelConfig.from_mapping(dict(config))


def synthesize_arrays(batch, config=None):
    """Convert a frame batch to a structured event array (t, x, y, p).

    `config` may be None (defaults), a ModelConfig, or a mapping of
    ModelConfig field names (a `presets()` entry works as-is).  The same
    batch, config, and seed always produce the same events, and they match
    what the command line tool emits for equivalent input.
    """
    if not isinstance(batch, ArrayBatch):
        raise TypeError("batch must be an ArrayBatch")
    cfg = _as_config(config)
    stream = (evgen.LumaFrame(batch.frames[:, :, i], float(batch.timestamps[i]))
              for i in range(len(batch)))
    return evgen.synthesize(stream, cfg)


def voxelize_arrays(events, height, width, depth, count=None):
    """Bin an event array into a (depth, height, width) float32 tensor.

    Slice-major layout, identical byte-for-byte to the payload of the
    voxel files the command line tool writes.  `count`, when given, must
    equal the number of events (it documents the caller's chunk size).
    """
    grid = evgen.build_voxel_grid(events, height, width, depth, count=count)
    return np.ascontiguousarray(np.moveaxis(grid.data, 2, 0))


def presets():
    """Fully resolved model settings for every bundled preset.

    Returns a fresh {name: {field: value}} dict; entries feed straight
    back into `synthesize_arrays` as the config mapping.
    """
    return {name: evgen.ModelConfig.from_mapping(evgen.load_preset(name)).as_dict()
            for name in evgen.available_presets()}
