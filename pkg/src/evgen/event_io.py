"""Event stream containers, file formats, and aggregation.

Events are numpy structured arrays with packed little-endian fields
``t`` (uint64 microseconds), ``x``/``y`` (uint16), ``p`` (int8, +1/-1),
13 bytes per record.  Two file formats exist: whitespace text lines
``t_us x y p`` and a binary container with a 16-byte header (magic
``EVG1``, uint16 width, uint16 height, uint64 count) followed by the
packed records.
"""

import struct
import warnings
from dataclasses import dataclass

import numpy as np

from .errors import InputError

EVENT_DTYPE = np.dtype([("t", "<u8"), ("x", "<u2"), ("y", "<u2"), ("p", "<i1")])

EVENT_MAGIC = b"EVG1"
_EVENT_HEADER = struct.Struct("<4sHHQ")

VOXEL_MAGIC = b"VXG1"
_VOXEL_HEADER = struct.Struct("<4sHHH6x")


def empty_events(n=0):
    return np.zeros(n, dtype=EVENT_DTYPE)


def make_events(t, x, y, p):
    """Pack parallel arrays into an event array (no reordering)."""
    ev = np.empty(len(t), dtype=EVENT_DTYPE)
    ev["t"] = t
    ev["x"] = x
    ev["y"] = y
    ev["p"] = p
    return ev


def validate_events(events, width=None, height=None, what="event stream"):
    """Check ordering and ranges; raises InputError on violation."""
    if events.dtype != EVENT_DTYPE:
        raise InputError(f"{what}: wrong dtype {events.dtype}")
    if events.size == 0:
        return events
    t = events["t"]
    if np.any(t[1:] < t[:-1]):
        raise InputError(f"{what}: timestamps decrease")
    if not np.isin(events["p"], (-1, 1)).all():
        raise InputError(f"{what}: polarity outside {{-1, +1}}")
    if width is not None and events["x"].max() >= width:
        raise InputError(f"{what}: x coordinate outside width {width}")
    if height is not None and events["y"].max() >= height:
        raise InputError(f"{what}: y coordinate outside height {height}")
    return events


def write_events_text(path, events):
    """One `t_us x y p` line per event."""
    cols = np.empty((len(events), 4), dtype=np.int64)
    cols[:, 0] = events["t"]
    cols[:, 1] = events["x"]
    cols[:, 2] = events["y"]
    cols[:, 3] = events["p"]
    with open(path, "w", encoding="ascii") as fh:
        np.savetxt(fh, cols, fmt="%d")


def read_events_text(path):
    try:
        with warnings.catch_warnings():
            warnings.simplefilter("ignore", UserWarning)  # empty file is fine
            cols = np.loadtxt(path, dtype=np.int64, ndmin=2)
    except OSError as exc:
        raise InputError(f"cannot read {path}: {exc}") from exc
    except ValueError as exc:
        raise InputError(f"malformed event text in {path}: {exc}") from exc
    if cols.size == 0:
        return empty_events()
    if cols.shape[1] != 4:
        raise InputError(f"{path}: expected 4 columns, found {cols.shape[1]}")
    if cols[:, 0].min() < 0:
        raise InputError(f"{path}: negative timestamp")
    ev = make_events(cols[:, 0], cols[:, 1], cols[:, 2], cols[:, 3])
    return validate_events(ev, what=str(path))


def write_events_binary(path, events, width, height):
    header = _EVENT_HEADER.pack(EVENT_MAGIC, width, height, len(events))
    with open(path, "wb") as fh:
        fh.write(header)
        fh.write(np.ascontiguousarray(events).tobytes())


def read_events_binary(path):
    """Returns (events, width, height); validates header, length, ordering."""
    try:
        with open(path, "rb") as fh:
            blob = fh.read()
    except OSError as exc:
        raise InputError(f"cannot read {path}: {exc}") from exc
    if len(blob) < _EVENT_HEADER.size:
        raise InputError(f"{path}: too short for a header")
    magic, width, height, count = _EVENT_HEADER.unpack_from(blob)
    if magic != EVENT_MAGIC:
        raise InputError(f"{path}: bad magic {magic!r}")
    payload = blob[_EVENT_HEADER.size:]
    expected = count * EVENT_DTYPE.itemsize
    if len(payload) != expected:
        raise InputError(
            f"{path}: payload is {len(payload)} bytes, header promises {expected}")
    ev = np.frombuffer(payload, dtype=EVENT_DTYPE).copy()
    validate_events(ev, width, height, what=str(path))
    return ev, width, height


@dataclass
class VoxelGrid:
    """Polarity-summed spatiotemporal histogram, data shaped (H, W, D) float32."""

    data: np.ndarray
    slice_duration: float = 0.0
    t_first: int = 0
    t_last: int = 0

    @property
    def height(self):
        return self.data.shape[0]

    @property
    def width(self):
        return self.data.shape[1]

    @property
    def depth(self):
        return self.data.shape[2]


def build_voxel_grid(events, height, width, depth, count=None):
    """Bin `count` events into `depth` equal time slices of polarity sums.

    Slice edges are equally spaced over [t_first, t_last]; the final edge is
    inclusive.  The event count must match `count` exactly so grids built
    from a chunked stream all integrate the same number of events.
    """
    if count is None:
        count = len(events)
    if depth < 1:
        raise ValueError("depth must be >= 1")
    if count < 1:
        raise ValueError("cannot build a voxel grid from zero events")
    if len(events) != count:
        raise ValueError(f"expected exactly {count} events, got {len(events)}")

    t = events["t"]
    t_first = int(t[0])
    t_last = int(t[-1])
    span = t_last - t_first
    if span > 0:
        # integer microsecond bin math, exact at the edges
        idx = ((t - t[0]) * np.uint64(depth)) // np.uint64(span)
        idx = np.minimum(idx, depth - 1).astype(np.intp)
    else:
        idx = np.zeros(count, dtype=np.intp)

    acc = np.zeros((height, width, depth), dtype=np.int64)
    np.add.at(acc, (events["y"], events["x"], idx), events["p"].astype(np.int64))

    span_s = span * 1e-6
    if span_s > 0:
        rate = count / span_s
        slice_duration = (count / rate) / depth
    else:
        slice_duration = 0.0
    return VoxelGrid(acc.astype(np.float32), slice_duration, t_first, t_last)


def save_voxel_grid(path, grid):
    """16-byte header (magic VXG1, H, W, D, padding), then slice-major float32."""
    data = grid.data
    header = _VOXEL_HEADER.pack(VOXEL_MAGIC, data.shape[0], data.shape[1], data.shape[2])
    slices = np.ascontiguousarray(np.moveaxis(data.astype("<f4", copy=False), 2, 0))
    with open(path, "wb") as fh:
        fh.write(header)
        fh.write(slices.tobytes())


def load_voxel_grid(path):
    try:
        with open(path, "rb") as fh:
            blob = fh.read()
    except OSError as exc:
        raise InputError(f"cannot read {path}: {exc}") from exc
    if len(blob) < _VOXEL_HEADER.size:
        raise InputError(f"{path}: too short for a header")
    magic, height, width, depth = _VOXEL_HEADER.unpack_from(blob)
    if magic != VOXEL_MAGIC:
        raise InputError(f"{path}: bad magic {magic!r}")
    payload = blob[_VOXEL_HEADER.size:]
    expected = height * width * depth * 4
    if len(payload) != expected:
        raise InputError(
            f"{path}: payload is {len(payload)} bytes, header promises {expected}")
    slices = np.frombuffer(payload, dtype="<f4").reshape(depth, height, width)
    return VoxelGrid(np.ascontiguousarray(np.moveaxis(slices, 0, 2)))


def render_event_frame(events, t_start, window, height, width):
    """Polarity-sum image over [t_start, t_start + window) seconds, int64 (H, W)."""
    if window <= 0:
        raise ValueError("window must be positive")
    lo = int(round(t_start * 1e6))
    hi = int(round((t_start + window) * 1e6))
    sel = (events["t"] >= lo) & (events["t"] < hi)
    img = np.zeros((height, width), dtype=np.int64)
    np.add.at(img, (events["y"][sel], events["x"][sel]),
              events["p"][sel].astype(np.int64))
    return img


def event_frame_to_gray(img, full_scale=3):
    """Map a polarity-sum image to uint8 gray: 128 background, ON bright, OFF dark."""
    if full_scale < 1:
        raise ValueError("full_scale must be >= 1")
    scaled = 128.0 + 127.0 * np.clip(img / float(full_scale), -1.0, 1.0)
    return np.clip(np.rint(scaled), 0, 255).astype(np.uint8)
