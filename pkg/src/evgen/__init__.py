"""evgen: synthetic event-camera streams from intensity video.

Converts conventional video (image directories or raw grayscale streams)
into the asynchronous brightness-change events a dynamic vision sensor
would have produced, including the sensor's measured non-idealities:
threshold mismatch, finite intensity-dependent bandwidth, leak events, and
temporal noise.  Also bundles single-pixel measurement harnesses and event
file / voxel-grid tooling.
"""

from .config import (ModelConfig, available_presets, load_preset,
                     parse_config_file, parse_config_text)
from .errors import InputError
from .event_io import (EVENT_DTYPE, VoxelGrid, build_voxel_grid,
                       empty_events, event_frame_to_gray, load_voxel_grid,
                       make_events, read_events_binary, read_events_text,
                       render_event_frame, save_voxel_grid, validate_events,
                       write_events_binary, write_events_text)
from .frames import (LumaFrame, LumaSequence, build_sequence,
                     compute_upsample_ratio, interpolate, iter_image_dir,
                     iter_raw_stream, rescale, to_luma, upsample_stream)
from .kernels import available_backends, get_backend
from .lab import (PhotoreceptorParams, StimulusWaveform, blur_sweep,
                  fit_latency_slope, grating_experiment, latency_experiment,
                  measure_grating_response, measure_latency,
                  measure_motion_blur, moving_bar_frames,
                  simulate_photoreceptor, square_wave)
from .model import (SensorState, apply_leak, assign_timestamps,
                    generate_events, init_state, lin_log, lowpass_update,
                    sample_shot_noise, sample_thresholds, step_frame,
                    synthesize)

__version__ = "0.1.0"

__all__ = [
    "EVENT_DTYPE", "InputError", "LumaFrame", "LumaSequence", "ModelConfig",
    "PhotoreceptorParams", "SensorState", "StimulusWaveform", "VoxelGrid",
    "apply_leak", "assign_timestamps", "available_backends",
    "available_presets", "blur_sweep", "build_sequence", "build_voxel_grid",
    "compute_upsample_ratio", "empty_events", "event_frame_to_gray",
    "fit_latency_slope", "generate_events", "get_backend",
    "grating_experiment", "init_state", "interpolate", "iter_image_dir",
    "iter_raw_stream", "latency_experiment", "lin_log",
    "load_preset", "load_voxel_grid", "lowpass_update", "make_events",
    "measure_grating_response", "measure_latency", "measure_motion_blur",
    "moving_bar_frames", "parse_config_file", "parse_config_text",
    "read_events_binary", "read_events_text", "render_event_frame",
    "rescale", "sample_shot_noise", "sample_thresholds",
    "save_voxel_grid", "simulate_photoreceptor", "square_wave",
    "step_frame", "synthesize", "to_luma", "upsample_stream",
    "validate_events", "write_events_binary", "write_events_text",
]
