"""Video-to-luma pipeline.

Turns an image-directory or raw grayscale stream into a sequence of
float64 luma frames in [0, 255], resampled to the sensor geometry and
linearly upsampled in time so that consecutive frames are close enough
for per-pixel event interpolation.
"""

import math
import os
from dataclasses import dataclass, field

import numpy as np

from .errors import InputError

# Rec.709 luma weights for linear RGB
LUMA_WEIGHTS = (0.2126, 0.7152, 0.0722)

IMAGE_EXTENSIONS = (".pgm", ".png")


@dataclass
class LumaFrame:
    """One grayscale frame: float64 (H, W) luma in [0, 255] plus a time in seconds."""

    data: np.ndarray
    timestamp: float = 0.0

    @property
    def height(self):
        return self.data.shape[0]

    @property
    def width(self):
        return self.data.shape[1]


@dataclass
class LumaSequence:
    """A validated, time-ordered stack of equally shaped luma frames.

    Timestamps start at zero and increase strictly; `frame_rate` is the rate
    after temporal upsampling.
    """

    frames: list = field(default_factory=list)
    frame_rate: float = 0.0
    upsample_ratio: int = 1

    def __post_init__(self):
        if len(self.frames) < 2:
            raise ValueError("a luma sequence needs at least two frames")
        shape = self.frames[0].data.shape
        if self.frames[0].timestamp != 0.0:
            raise ValueError("sequence timestamps must start at 0")
        prev = -1.0
        for f in self.frames:
            if f.data.shape != shape:
                raise ValueError(
                    f"frame shape {f.data.shape} does not match first frame {shape}")
            if not f.timestamp > prev:
                raise ValueError("sequence timestamps must increase strictly")
            prev = f.timestamp

    @property
    def duration(self):
        return self.frames[-1].timestamp

    @property
    def height(self):
        return self.frames[0].height

    @property
    def width(self):
        return self.frames[0].width

    def __len__(self):
        return len(self.frames)

    def __iter__(self):
        return iter(self.frames)


def _check_luma_range(data, what):
    if not np.isfinite(data).all():
        raise ValueError(f"{what} contains non-finite values")
    if data.min() < 0.0 or data.max() > 255.0:
        raise ValueError(f"{what} must lie in [0, 255]")


def to_luma(data, timestamp=0.0):
    """Convert one frame to luma.

    `data` is (H, W) grayscale or (H, W, 3|4) RGB[A] with 8-bit-range values;
    color is reduced with Rec.709 weights, alpha is ignored.
    """
    arr = np.asarray(data, dtype=np.float64)
    if arr.ndim == 3 and arr.shape[2] in (3, 4):
        r, g, b = arr[..., 0], arr[..., 1], arr[..., 2]
        wr, wg, wb = LUMA_WEIGHTS
        arr = wr * r + wg * g + wb * b
    elif arr.ndim != 2:
        raise ValueError(f"expected (H, W) or (H, W, 3) frame, got shape {arr.shape}")
    _check_luma_range(arr, "luma frame")
    return LumaFrame(arr, float(timestamp))


def rescale(frame, out_height, out_width):
    """Bilinear resample to the sensor geometry (half-pixel centers, clamped edges)."""
    if out_height < 1 or out_width < 1:
        raise ValueError("output geometry must be at least 1x1")
    img = frame.data
    in_h, in_w = img.shape
    if (in_h, in_w) == (out_height, out_width):
        return LumaFrame(img.copy(), frame.timestamp)

    yc = (np.arange(out_height, dtype=np.float64) + 0.5) * (in_h / out_height) - 0.5
    xc = (np.arange(out_width, dtype=np.float64) + 0.5) * (in_w / out_width) - 0.5
    np.clip(yc, 0.0, in_h - 1.0, out=yc)
    np.clip(xc, 0.0, in_w - 1.0, out=xc)
    y0 = np.floor(yc).astype(np.intp)
    x0 = np.floor(xc).astype(np.intp)
    y1 = np.minimum(y0 + 1, in_h - 1)
    x1 = np.minimum(x0 + 1, in_w - 1)
    fy = (yc - y0)[:, None]
    fx = (xc - x0)[None, :]

    top = img[y0[:, None], x0[None, :]] * (1.0 - fx) + img[y0[:, None], x1[None, :]] * fx
    bot = img[y1[:, None], x0[None, :]] * (1.0 - fx) + img[y1[:, None], x1[None, :]] * fx
    out = top * (1.0 - fy) + bot * fy
    return LumaFrame(out, frame.timestamp)


def compute_upsample_ratio(input_fps, timestamp_resolution=None, flow_bound=None):
    """Temporal upsampling factor for the given source rate.

    `timestamp_resolution` is the largest tolerable spacing between
    consecutive processed frames, in seconds; `flow_bound` is an optional
    estimate of peak optical flow in pixels per source frame, which must
    also be resolved to below one pixel per processed frame.
    """
    if input_fps <= 0:
        raise ValueError("input_fps must be positive")
    u = 1
    if timestamp_resolution is not None:
        if timestamp_resolution <= 0:
            raise ValueError("timestamp_resolution must be positive")
        u = max(u, math.ceil(1.0 / (input_fps * timestamp_resolution)))
    if flow_bound is not None:
        if flow_bound < 0:
            raise ValueError("flow_bound cannot be negative")
        u = max(u, math.ceil(flow_bound))
    return u


def interpolate(frame_a, frame_b, ratio):
    """Linear in-between frames: `ratio` frames covering [a, b), excluding b."""
    if ratio < 1:
        raise ValueError("upsample ratio must be >= 1")
    if frame_a.data.shape != frame_b.data.shape:
        raise ValueError("cannot interpolate frames of different shapes")
    if not frame_b.timestamp > frame_a.timestamp:
        raise ValueError("frame timestamps must increase strictly")
    if ratio == 1:
        return [LumaFrame(frame_a.data.copy(), frame_a.timestamp)]
    out = []
    dt = frame_b.timestamp - frame_a.timestamp
    diff = frame_b.data - frame_a.data
    for k in range(ratio):
        w = k / ratio
        out.append(LumaFrame(frame_a.data + diff * w, frame_a.timestamp + dt * w))
    return out


def upsample_stream(source, ratio):
    """Generator over interpolated frames for an iterable of source frames.

    Yields `ratio` frames per source interval plus the final source frame,
    so a source of M frames becomes (M - 1) * ratio + 1 frames.
    """
    prev = None
    for frame in source:
        if prev is not None:
            for f in interpolate(prev, frame, ratio):
                yield f
        prev = frame
    if prev is None:
        raise InputError("frame source is empty")
    yield prev


def build_sequence(source_frames, ratio=1, frame_rate=None):
    """Materialize an upsampled LumaSequence from source frames with timestamps."""
    source_frames = list(source_frames)
    if len(source_frames) < 2:
        raise ValueError("need at least two source frames")
    frames = list(upsample_stream(source_frames, ratio))
    if frame_rate is None:
        frame_rate = (len(frames) - 1) / frames[-1].timestamp
    return LumaSequence(frames, frame_rate, ratio)


def list_image_files(dirpath):
    """Image files of supported types in lexicographic order."""
    try:
        names = sorted(os.listdir(dirpath))
    except OSError as exc:
        raise InputError(f"cannot list input directory {dirpath}: {exc}") from exc
    files = [os.path.join(dirpath, n) for n in names
             if n.lower().endswith(IMAGE_EXTENSIONS)]
    if not files:
        raise InputError(f"no {'/'.join(IMAGE_EXTENSIONS)} images in {dirpath}")
    return files


def load_image(path):
    """Decode one image file to a uint8-range numpy array (H, W[, C])."""
    try:
        from PIL import Image
        with Image.open(path) as img:
            if img.mode not in ("L", "RGB"):
                img = img.convert("RGB" if len(img.getbands()) > 2 else "L")
            return np.asarray(img)
    except InputError:
        raise
    except Exception as exc:
        raise InputError(f"cannot decode image {path}: {exc}") from exc


def iter_image_dir(dirpath, input_fps):
    """Yield luma frames from an image directory at the given source rate."""
    if input_fps <= 0:
        raise ValueError("input_fps must be positive")
    for i, path in enumerate(list_image_files(dirpath)):
        yield to_luma(load_image(path), i / input_fps)


def iter_raw_stream(stream, width, height, input_fps):
    """Yield luma frames from a headerless stream of 8-bit grayscale frames.

    `stream` is a binary file object; frames are H*W bytes back to back.
    A trailing partial frame is an error.
    """
    if width < 1 or height < 1:
        raise ValueError("raw stream geometry must be positive")
    if input_fps <= 0:
        raise ValueError("input_fps must be positive")
    frame_bytes = width * height
    i = 0
    while True:
        buf = stream.read(frame_bytes)
        if not buf:
            break
        if len(buf) < frame_bytes:
            raise InputError(
                f"raw stream truncated: frame {i} has {len(buf)} of {frame_bytes} bytes")
        data = np.frombuffer(buf, dtype=np.uint8).reshape(height, width)
        yield to_luma(data, i / input_fps)
        i += 1
    if i == 0:
        raise InputError("raw stream contains no frames")
