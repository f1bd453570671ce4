"""Command line front end.

Subcommands: `synth` (video to events), `voxelize` (events to voxel
grids), `render` (events to a preview image), and `lab` (single-pixel
measurements).  Progress and diagnostics go to stderr, data and summaries
to stdout and files.  Exit codes: 1 bad arguments or config, 2 unreadable
input, 3 internal invariant violation.
"""

import argparse
import csv
import json
import logging
import math
import os
import sys
import time

from . import __version__, event_io, frames, lab, model
from .config import ModelConfig, available_presets, load_preset, parse_config_file
from .errors import InputError
from .kernels import BACKEND_ENV, available_backends, get_backend

log = logging.getLogger("evgen")

THREADS_ENV = "EVGEN_THREADS"

EXIT_USAGE = 1
EXIT_INPUT = 2
EXIT_INTERNAL = 3

PIPELINE_KEYS = ("input_fps", "dvs_h", "dvs_w", "timestamp_resolution",
                 "upsample", "flow_bound")


class UsageError(Exception):
    """Bad flag or config values detected before any work starts."""


class _Parser(argparse.ArgumentParser):
    # argparse exits with 2 on bad flags, which this tool reserves for
    # unreadable input; route parse failures to exit code 1 instead
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def _add_model_flags(p):
    g = p.add_argument_group("model parameters (override preset/config)")
    for name in ModelConfig.field_names():
        if name == "seed":
            g.add_argument("--seed", type=int, default=None,
                           help="seed for all randomness")
        else:
            g.add_argument(f"--{name}", type=float, default=None)


def _add_common_run_flags(p):
    p.add_argument("--backend", choices=available_backends(), default=None,
                   help="kernel backend (default: numba when available, "
                        f"or ${BACKEND_ENV})")
    p.add_argument("--threads", type=int, default=None,
                   help=f"worker threads for the numba backend (default ${THREADS_ENV})")


def build_parser():
    p = _Parser(prog="evgen",
                description="Synthesize event-camera streams from video.")
    p.add_argument("--version", action="version", version=f"evgen {__version__}")
    sub = p.add_subparsers(dest="command", required=True, metavar="command")

    sp = sub.add_parser("synth", help="convert intensity video to an event stream",
                        description="Convert an image directory or raw grayscale "
                                    "stream into events.")
    sp.add_argument("--input", required=True,
                    help="image directory (pgm/png) or raw 8-bit grayscale file")
    sp.add_argument("--raw", action="store_true",
                    help="treat --input as a headerless 8-bit grayscale stream")
    sp.add_argument("--width", type=int, default=None, help="raw stream width")
    sp.add_argument("--height", type=int, default=None, help="raw stream height")
    sp.add_argument("--input_fps", type=float, default=None,
                    help="source frame rate in Hz")
    sp.add_argument("--dvs_h", type=int, default=None, help="sensor height")
    sp.add_argument("--dvs_w", type=int, default=None, help="sensor width")
    sp.add_argument("--timestamp_resolution", type=float, default=None,
                    help="largest tolerable spacing between processed frames [s]")
    sp.add_argument("--upsample", type=int, default=None,
                    help="explicit temporal upsampling factor")
    sp.add_argument("--flow_bound", type=float, default=None,
                    help="peak optical flow estimate in px per source frame")
    sp.add_argument("--preset", default=None,
                    help=f"bundled config: {', '.join(available_presets())}")
    sp.add_argument("--config", default=None, help="config file (key = value)")
    sp.add_argument("--output_dir", required=True)
    sp.add_argument("--text", action="store_true",
                    help="write events.txt (default when no format is chosen)")
    sp.add_argument("--binary", action="store_true", help="write events.evg")
    _add_model_flags(sp)
    _add_common_run_flags(sp)
    sp.set_defaults(func=cmd_synth)

    vp = sub.add_parser("voxelize", help="bin an event file into voxel grids")
    vp.add_argument("--input", required=True, help="event file (.txt or .evg)")
    vp.add_argument("--depth", type=int, required=True, help="time slices per grid")
    vp.add_argument("--count", type=int, required=True,
                    help="events per grid; the final partial grid is dropped")
    vp.add_argument("--height", type=int, default=None,
                    help="sensor height (required for text input)")
    vp.add_argument("--width", type=int, default=None,
                    help="sensor width (required for text input)")
    vp.add_argument("--output_dir", required=True)
    vp.set_defaults(func=cmd_voxelize)

    rp = sub.add_parser("render", help="render a time window to a PNG preview")
    rp.add_argument("--input", required=True, help="event file (.txt or .evg)")
    rp.add_argument("--t_start", type=float, default=0.0, help="window start [s]")
    rp.add_argument("--window", type=float, required=True, help="window length [s]")
    rp.add_argument("--height", type=int, default=None)
    rp.add_argument("--width", type=int, default=None)
    rp.add_argument("--full_scale", type=int, default=3,
                    help="polarity sum mapped to full white/black")
    rp.add_argument("--output", required=True, help="output PNG path")
    rp.set_defaults(func=cmd_render)

    lp = sub.add_parser("lab", help="single-pixel measurement harnesses")
    lsub = lp.add_subparsers(dest="experiment", required=True, metavar="experiment")

    gp = lsub.add_parser("grating", help="events per passing grating edge")
    gp.add_argument("--dim_factor", type=float, default=10.0,
                    help="illumination ratio between the two conditions")
    gp.add_argument("--traces", type=int, default=20, help="noise realizations")
    gp.add_argument("--seed", type=int, default=0)
    gp.add_argument("--output_dir", required=True)
    _add_common_run_flags(gp)
    gp.set_defaults(func=cmd_lab_grating)

    tp = lsub.add_parser("latency", help="step-response latency vs illuminance")
    tp.add_argument("--points", type=int, default=7)
    tp.add_argument("--e_min", type=float, default=0.01)
    tp.add_argument("--e_max", type=float, default=10.0)
    tp.add_argument("--seeds", type=int, default=100, help="noise realizations")
    tp.add_argument("--cap_hz", type=float, default=0.0,
                    help="bandwidth cap; 0 leaves the corner uncapped")
    tp.add_argument("--seed", type=int, default=0)
    tp.add_argument("--output_dir", required=True)
    _add_common_run_flags(tp)
    tp.set_defaults(func=cmd_lab_latency)

    bp = lsub.add_parser("blur", help="moving-bar motion blur vs bandwidth")
    bp.add_argument("--cutoffs", default="10,30,100,inf",
                    help="comma-separated corner frequencies in Hz; inf for none")
    bp.add_argument("--speed", type=float, default=420.0, help="bar speed [px/s]")
    bp.add_argument("--seed", type=int, default=0)
    bp.add_argument("--output_dir", required=True)
    _add_common_run_flags(bp)
    bp.set_defaults(func=cmd_lab_blur)

    return p


def _resolve_threads(args):
    if getattr(args, "threads", None) is not None:
        if args.threads < 1:
            raise UsageError("--threads must be >= 1")
        return args.threads
    env = os.environ.get(THREADS_ENV, "").strip()
    if env:
        try:
            n = int(env)
        except ValueError as exc:
            raise UsageError(f"bad {THREADS_ENV} value {env!r}") from exc
        if n < 1:
            raise UsageError(f"{THREADS_ENV} must be >= 1")
        return n
    return None


def _resolve_synth_settings(args):
    """Merge defaults, preset, config file, and flags; flags win.

    Returns (ModelConfig, pipeline dict with plain python values).
    """
    model_kv = {}
    pipeline_kv = {}
    try:
        if args.preset:
            model_kv.update(load_preset(args.preset))
        if args.config:
            for key, value in parse_config_file(args.config).items():
                if key in PIPELINE_KEYS:
                    pipeline_kv[key] = value
                elif key in ModelConfig.field_names():
                    model_kv[key] = value
                else:
                    raise ValueError(f"unknown config key {key!r}")
    except FileNotFoundError as exc:
        raise InputError(str(exc)) from exc
    except ValueError as exc:
        raise UsageError(str(exc)) from exc

    for name in ModelConfig.field_names():
        flag = getattr(args, name)
        if flag is not None:
            model_kv[name] = flag

    pipeline = {}
    conv = {"input_fps": float, "dvs_h": int, "dvs_w": int,
            "timestamp_resolution": float, "upsample": int, "flow_bound": float}
    for key in PIPELINE_KEYS:
        flag = getattr(args, key)
        if flag is not None:
            pipeline[key] = flag
        elif key in pipeline_kv:
            try:
                pipeline[key] = conv[key](pipeline_kv[key])
            except ValueError as exc:
                raise UsageError(f"bad value for {key!r}: {pipeline_kv[key]!r}") from exc
        else:
            pipeline[key] = None

    try:
        cfg = ModelConfig.from_mapping(model_kv)
    except ValueError as exc:
        raise UsageError(str(exc)) from exc
    return cfg, pipeline


class _CountingIter:
    """Pass-through iterator that counts what flows through it."""

    def __init__(self, inner):
        self.inner = iter(inner)
        self.count = 0

    def __iter__(self):
        return self

    def __next__(self):
        item = next(self.inner)
        self.count += 1
        return item


def cmd_synth(args, argv):
    config, pipe = _resolve_synth_settings(args)
    if pipe["input_fps"] is None:
        raise UsageError("--input_fps is required (flag or config file)")
    if pipe["input_fps"] <= 0:
        raise UsageError("--input_fps must be positive")
    if (pipe["dvs_h"] is None) != (pipe["dvs_w"] is None):
        raise UsageError("--dvs_h and --dvs_w must be given together")
    if args.raw and (args.width is None or args.height is None):
        raise UsageError("--raw input needs --width and --height")

    try:
        if pipe["upsample"] is not None:
            if pipe["upsample"] < 1:
                raise UsageError("--upsample must be >= 1")
            ratio = pipe["upsample"]
        else:
            ratio = frames.compute_upsample_ratio(
                pipe["input_fps"], pipe["timestamp_resolution"], pipe["flow_bound"])
    except ValueError as exc:
        raise UsageError(str(exc)) from exc

    threads = _resolve_threads(args)
    backend = get_backend(args.backend)
    out_dir = args.output_dir
    os.makedirs(out_dir, exist_ok=True)

    raw_handle = None
    if args.raw:
        try:
            raw_handle = open(args.input, "rb")
        except OSError as exc:
            raise InputError(f"cannot open raw stream {args.input}: {exc}") from exc
        source = frames.iter_raw_stream(raw_handle, args.width, args.height,
                                        pipe["input_fps"])
    else:
        source = frames.iter_image_dir(args.input, pipe["input_fps"])

    src_counter = _CountingIter(source)
    stream = src_counter
    if pipe["dvs_h"] is not None:
        stream = (frames.rescale(f, pipe["dvs_h"], pipe["dvs_w"]) for f in stream)
    up_counter = _CountingIter(frames.upsample_stream(stream, ratio))

    log.info("synthesizing events (upsample x%d, backend %s)", ratio, backend.NAME)
    t0 = time.perf_counter()
    try:
        events, state = model.synthesize(up_counter, config, threads=threads,
                                         backend=backend.NAME, return_state=True)
    finally:
        if raw_handle is not None:
            raw_handle.close()
    wall = time.perf_counter() - t0

    want_text = args.text or not args.binary
    outputs = {}
    if want_text:
        outputs["text"] = os.path.join(out_dir, "events.txt")
        event_io.write_events_text(outputs["text"], events)
    if args.binary:
        outputs["binary"] = os.path.join(out_dir, "events.evg")
        event_io.write_events_binary(outputs["binary"], events,
                                     state.width, state.height)

    n_on = int((events["p"] == 1).sum())
    n_off = int(events.size - n_on)
    duration = float(state.t_last)
    summary = {
        "event_count": int(events.size),
        "duration_s": duration,
        "mean_rate_hz": events.size / duration if duration > 0 else 0.0,
        "on_count": n_on,
        "off_count": n_off,
        "on_off_ratio": n_on / n_off if n_off else math.inf,
    }
    manifest = {
        "tool": "evgen",
        "version": __version__,
        "command": ["evgen"] + list(argv),
        "input": {
            "path": args.input,
            "kind": "raw" if args.raw else "image_dir",
            "raw_width": args.width,
            "raw_height": args.height,
            "source_frames": src_counter.count,
            "processed_frames": up_counter.count,
        },
        "pipeline": dict(pipe, upsample_applied=ratio),
        "model": config.as_dict(),
        "backend": backend.NAME,
        "threads": threads,
        "geometry": {"height": state.height, "width": state.width},
        "outputs": outputs,
        "wall_time_s": wall,
        "summary": summary,
    }
    manifest_path = os.path.join(out_dir, "manifest.json")
    with open(manifest_path, "w", encoding="utf-8") as fh:
        json.dump(manifest, fh, indent=2, sort_keys=True)
        fh.write("\n")

    log.info("%d events in %.2f s", events.size, wall)
    for key, value in summary.items():
        print(f"{key}: {value}")
    return 0


def _read_any_events(path, height, width):
    """Load a text or binary event file; returns (events, height, width)."""
    if path.endswith(".evg"):
        events, w, h = event_io.read_events_binary(path)
        return events, (height or h), (width or w)
    events = event_io.read_events_text(path)
    if height is None or width is None:
        raise UsageError("text event input needs --height and --width")
    event_io.validate_events(events, width, height, what=path)
    return events, height, width


def cmd_voxelize(args, argv):
    if args.depth < 1:
        raise UsageError("--depth must be >= 1")
    if args.count < 1:
        raise UsageError("--count must be >= 1")
    events, height, width = _read_any_events(args.input, args.height, args.width)
    n_grids = events.size // args.count
    if n_grids == 0:
        raise InputError(
            f"{args.input}: {events.size} events cannot fill one {args.count}-event grid")
    os.makedirs(args.output_dir, exist_ok=True)
    for g in range(n_grids):
        chunk = events[g * args.count:(g + 1) * args.count]
        grid = event_io.build_voxel_grid(chunk, height, width, args.depth)
        path = os.path.join(args.output_dir, f"grid_{g:04d}.vxg")
        event_io.save_voxel_grid(path, grid)
        print(f"{path}: slice_duration_s={grid.slice_duration:.6g} "
              f"sum={float(grid.data.sum()):g}")
    dropped = events.size - n_grids * args.count
    print(f"grids: {n_grids}")
    print(f"events_dropped: {dropped}")
    return 0


def cmd_render(args, argv):
    from PIL import Image

    if args.window <= 0:
        raise UsageError("--window must be positive")
    events, height, width = _read_any_events(args.input, args.height, args.width)
    img = event_io.render_event_frame(events, args.t_start, args.window,
                                      height, width)
    gray = event_io.event_frame_to_gray(img, args.full_scale)
    Image.fromarray(gray, mode="L").save(args.output)
    active = int((img != 0).sum())
    print(f"{args.output}: window=[{args.t_start}, {args.t_start + args.window}) s "
          f"active_pixels={active}")
    return 0


def _write_csv(path, fieldnames, rows):
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.DictWriter(fh, fieldnames=fieldnames)
        w.writeheader()
        for row in rows:
            w.writerow(row)


def cmd_lab_grating(args, argv):
    if args.dim_factor <= 1:
        raise UsageError("--dim_factor must exceed 1")
    if args.traces < 1:
        raise UsageError("--traces must be >= 1")
    os.makedirs(args.output_dir, exist_ok=True)
    res = lab.grating_experiment(dim_factor=args.dim_factor, n_traces=args.traces,
                                 seed=args.seed, backend=args.backend)
    params = res["params"]

    # single noisy trace of the bright condition for plotting
    stim = lab.square_wave(1.0, 2.0, res["half_period"], 4, params.dt)
    vp, _ = lab.simulate_photoreceptor(stim, params, seed=args.seed,
                                       backend=args.backend)
    trace_rows = [{"time_s": (i + 1) * params.dt,
                   "photocurrent": float(stim.samples[i]),
                   "vp": float(vp[i])}
                  for i in range(len(stim.samples))]
    _write_csv(os.path.join(args.output_dir, "trace.csv"),
               ["time_s", "photocurrent", "vp"], trace_rows)

    summary_rows = []
    for name in ("bright", "dim"):
        r = res[name]
        summary_rows.append({
            "condition": name,
            "on_per_edge": f"{r['on_per_edge']:.4f}",
            "off_per_edge": f"{r['off_per_edge']:.4f}",
            "on_per_edge_std": f"{r['on_per_edge_std']:.4f}",
            "off_per_edge_std": f"{r['off_per_edge_std']:.4f}",
            "traces": r["n_traces"],
            "edges_per_trace": r["n_edges"],
        })
    _write_csv(os.path.join(args.output_dir, "summary.csv"),
               list(summary_rows[0]), summary_rows)
    print(f"bright: {res['bright']['on_per_edge']:.2f} ON events/edge")
    print(f"dim (x{args.dim_factor:g} dimmer): "
          f"{res['dim']['on_per_edge']:.2f} ON events/edge")
    return 0


def cmd_lab_latency(args, argv):
    if args.points < 2:
        raise UsageError("--points must be >= 2")
    if args.seeds < 1:
        raise UsageError("--seeds must be >= 1")
    if not 0 < args.e_min < args.e_max:
        raise UsageError("need 0 < --e_min < --e_max")
    os.makedirs(args.output_dir, exist_ok=True)
    rows, slope = lab.latency_experiment(n_points=args.points, e_min=args.e_min,
                                         e_max=args.e_max, n_seeds=args.seeds,
                                         cap_hz=args.cap_hz, seed=args.seed,
                                         backend=args.backend)
    fields = ["illuminance", "latency_median_s", "latency_mean_s",
              "latency_std_s", "detected_fraction", "dt"]
    _write_csv(os.path.join(args.output_dir, "trace.csv"), fields,
               [{k: f"{r[k]:.6g}" for k in fields} for r in rows])
    _write_csv(os.path.join(args.output_dir, "summary.csv"),
               ["log_log_slope", "points", "seeds", "cap_hz"],
               [{"log_log_slope": f"{slope:.4f}", "points": args.points,
                 "seeds": args.seeds, "cap_hz": args.cap_hz}])
    print(f"log-log latency slope: {slope:.3f}")
    return 0


def cmd_lab_blur(args, argv):
    try:
        cutoffs = [float(tok) for tok in args.cutoffs.split(",") if tok.strip()]
    except ValueError as exc:
        raise UsageError(f"bad --cutoffs value {args.cutoffs!r}") from exc
    if not cutoffs:
        raise UsageError("--cutoffs must name at least one frequency")
    if args.speed <= 0:
        raise UsageError("--speed must be positive")
    os.makedirs(args.output_dir, exist_ok=True)
    rows = lab.blur_sweep(cutoffs, speed=args.speed, backend=args.backend)
    fields = ["cutoff_hz", "blur_px", "blur_ms", "n_on_events"]
    _write_csv(os.path.join(args.output_dir, "trace.csv"), fields,
               [{k: (f"{r[k]:.4f}" if isinstance(r[k], float) else r[k])
                 for k in fields} for r in rows])
    by_cutoff = sorted(rows, key=lambda r: r["cutoff_hz"])
    monotone = all(a["blur_px"] >= b["blur_px"] - 1e-9
                   for a, b in zip(by_cutoff, by_cutoff[1:]))
    _write_csv(os.path.join(args.output_dir, "summary.csv"),
               ["monotone_in_cutoff", "min_blur_px", "max_blur_px", "speed_px_s"],
               [{"monotone_in_cutoff": monotone,
                 "min_blur_px": f"{min(r['blur_px'] for r in rows):.4f}",
                 "max_blur_px": f"{max(r['blur_px'] for r in rows):.4f}",
                 "speed_px_s": args.speed}])
    for r in rows:
        label = "inf" if math.isinf(r["cutoff_hz"]) else f"{r['cutoff_hz']:g}"
        print(f"cutoff {label} Hz: blur {r['blur_px']:.2f} px "
              f"({r['blur_ms']:.2f} ms)")
    return 0


def main(argv=None):
    if argv is None:
        argv = sys.argv[1:]
    if not logging.getLogger().handlers:
        logging.basicConfig(stream=sys.stderr, level=logging.INFO,
                            format="%(levelname)s %(name)s: %(message)s")
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return exc.code if exc.code is not None else 0
    try:
        return args.func(args, argv)
    except UsageError as exc:
        print(f"evgen: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except InputError as exc:
        print(f"evgen: input error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except OSError as exc:
        print(f"evgen: i/o error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except (ValueError, ArithmeticError, AssertionError) as exc:
        print(f"evgen: internal invariant violated: {exc}", file=sys.stderr)
        return EXIT_INTERNAL


if __name__ == "__main__":
    sys.exit(main())
