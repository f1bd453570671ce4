import io

import numpy as np
import pytest
from PIL import Image

from evgen import (InputError, LumaFrame, LumaSequence, build_sequence,
                   compute_upsample_ratio, interpolate, rescale, to_luma,
                   upsample_stream)
from evgen.frames import iter_image_dir, iter_raw_stream, list_image_files


def test_to_luma_grayscale_passthrough():
    data = np.arange(12, dtype=np.uint8).reshape(3, 4)
    f = to_luma(data, 0.25)
    assert f.data.dtype == np.float64
    assert np.array_equal(f.data, data.astype(np.float64))
    assert f.timestamp == 0.25
    assert (f.height, f.width) == (3, 4)


def test_to_luma_rec709_weights():
    rgb = np.zeros((1, 3, 3))
    rgb[0, 0] = (100.0, 0.0, 0.0)
    rgb[0, 1] = (0.0, 100.0, 0.0)
    rgb[0, 2] = (0.0, 0.0, 100.0)
    f = to_luma(rgb)
    assert np.allclose(f.data[0], [21.26, 71.52, 7.22], atol=1e-12)
    white = to_luma(np.full((2, 2, 3), 255.0))
    assert np.allclose(white.data, 255.0, atol=1e-9)


def test_to_luma_ignores_alpha():
    rgba = np.zeros((1, 1, 4))
    rgba[..., :3] = 100.0
    rgba[..., 3] = 7.0
    assert np.allclose(to_luma(rgba).data, 100.0, atol=1e-9)


def test_to_luma_rejects_bad_inputs():
    with pytest.raises(ValueError):
        to_luma(np.full((2, 2), 300.0))
    with pytest.raises(ValueError):
        to_luma(np.full((2, 2), -1.0))
    with pytest.raises(ValueError):
        to_luma(np.array([1.0, np.nan]).reshape(1, 2))
    with pytest.raises(ValueError):
        to_luma(np.zeros((2, 2, 2)))


def test_rescale_identity_and_constant():
    img = np.random.default_rng(0).uniform(0, 255, (5, 7))
    same = rescale(LumaFrame(img, 0.5), 5, 7)
    assert np.array_equal(same.data, img)
    assert same.timestamp == 0.5
    const = rescale(LumaFrame(np.full((6, 6), 42.0), 0.0), 3, 9)
    assert np.allclose(const.data, 42.0)


def test_rescale_bilinear_known_values():
    # [0, 100] widened to four columns: half-pixel centers land at
    # source coordinates -0.25, 0.25, 0.75, 1.25, clamped to [0, 1]
    f = rescale(LumaFrame(np.array([[0.0, 100.0]]), 0.0), 1, 4)
    assert np.allclose(f.data, [[0.0, 25.0, 75.0, 100.0]])
    # checkerboard collapses to its mean
    board = np.array([[0.0, 100.0], [100.0, 0.0]])
    assert np.allclose(rescale(LumaFrame(board, 0.0), 1, 1).data, [[50.0]])


def test_rescale_rejects_degenerate_output():
    with pytest.raises(ValueError):
        rescale(LumaFrame(np.zeros((4, 4)), 0.0), 0, 4)


def test_upsample_ratio_from_timestamp_resolution():
    assert compute_upsample_ratio(60.0, 1e-3) == 17
    assert compute_upsample_ratio(1000.0, 1e-3) == 1
    assert compute_upsample_ratio(500.0, 2e-3) == 1
    assert compute_upsample_ratio(30.0, 1e-2) == 4


def test_upsample_ratio_flow_bound_and_combination():
    assert compute_upsample_ratio(60.0, None, 8.3) == 9
    assert compute_upsample_ratio(60.0, None, 8.0) == 8
    assert compute_upsample_ratio(60.0, 1e-3, 20.0) == 20
    assert compute_upsample_ratio(60.0, 1e-3, 3.0) == 17
    assert compute_upsample_ratio(60.0) == 1


def test_upsample_ratio_validation():
    with pytest.raises(ValueError):
        compute_upsample_ratio(0.0, 1e-3)
    with pytest.raises(ValueError):
        compute_upsample_ratio(60.0, 0.0)
    with pytest.raises(ValueError):
        compute_upsample_ratio(60.0, 1e-3, -1.0)


def test_interpolate_midpoints_and_timestamps():
    a = LumaFrame(np.full((2, 2), 10.0), 0.0)
    b = LumaFrame(np.full((2, 2), 30.0), 0.1)
    out = interpolate(a, b, 4)
    assert len(out) == 4
    assert np.allclose([f.data[0, 0] for f in out], [10.0, 15.0, 20.0, 25.0])
    assert np.allclose([f.timestamp for f in out], [0.0, 0.025, 0.05, 0.075])
    single = interpolate(a, b, 1)
    assert len(single) == 1 and np.array_equal(single[0].data, a.data)


def test_interpolate_validation():
    a = LumaFrame(np.zeros((2, 2)), 0.0)
    with pytest.raises(ValueError):
        interpolate(a, LumaFrame(np.zeros((3, 2)), 0.1), 2)
    with pytest.raises(ValueError):
        interpolate(a, LumaFrame(np.zeros((2, 2)), 0.0), 2)
    with pytest.raises(ValueError):
        interpolate(a, LumaFrame(np.zeros((2, 2)), 0.1), 0)


def test_build_sequence_counts_and_endpoint():
    src = [LumaFrame(np.full((2, 2), float(v)), i / 10.0)
           for i, v in enumerate((0.0, 50.0, 100.0))]
    seq = build_sequence(src, ratio=5)
    assert len(seq) == (len(src) - 1) * 5 + 1
    assert seq.duration == src[-1].timestamp
    assert np.array_equal(seq.frames[-1].data, src[-1].data)
    ts = np.array([f.timestamp for f in seq])
    assert (np.diff(ts) > 0).all()
    assert ts[0] == 0.0


def test_sequence_validation():
    good = [LumaFrame(np.zeros((2, 2)), 0.0), LumaFrame(np.zeros((2, 2)), 0.1)]
    LumaSequence(good, 10.0, 1)
    with pytest.raises(ValueError):
        LumaSequence(good[:1], 10.0, 1)
    with pytest.raises(ValueError):
        LumaSequence([LumaFrame(np.zeros((2, 2)), 0.1),
                      LumaFrame(np.zeros((2, 2)), 0.2)], 10.0, 1)
    with pytest.raises(ValueError):
        LumaSequence([good[0], LumaFrame(np.zeros((3, 3)), 0.1)], 10.0, 1)
    with pytest.raises(ValueError):
        LumaSequence([good[0], LumaFrame(np.zeros((2, 2)), 0.0)], 10.0, 1)


def test_upsample_stream_is_lazy_and_complete():
    src = (LumaFrame(np.full((1, 1), float(i)), i / 4.0) for i in range(3))
    out = list(upsample_stream(src, 2))
    assert [f.data[0, 0] for f in out] == [0.0, 0.5, 1.0, 1.5, 2.0]
    with pytest.raises(InputError):
        list(upsample_stream(iter([]), 2))


def test_raw_stream_roundtrip():
    a = np.arange(6, dtype=np.uint8).reshape(2, 3)
    b = a + 100
    stream = io.BytesIO(a.tobytes() + b.tobytes())
    frames = list(iter_raw_stream(stream, 3, 2, 50.0))
    assert len(frames) == 2
    assert np.array_equal(frames[0].data, a)
    assert np.array_equal(frames[1].data, b)
    assert frames[1].timestamp == 1 / 50.0


def test_raw_stream_truncation_and_empty():
    with pytest.raises(InputError):
        list(iter_raw_stream(io.BytesIO(b"\x00" * 5), 3, 2, 50.0))
    with pytest.raises(InputError):
        list(iter_raw_stream(io.BytesIO(b""), 3, 2, 50.0))


def test_image_dir_lexicographic_order(tmp_path):
    values = {"c_2.png": 30, "a_0.png": 10, "b_1.pgm": 20}
    for name, v in values.items():
        img = Image.fromarray(np.full((4, 5), v, dtype=np.uint8), mode="L")
        img.save(tmp_path / name)
    (tmp_path / "notes.txt").write_text("ignored")
    files = list_image_files(tmp_path)
    assert [f.rsplit("/", 1)[-1] for f in files] == ["a_0.png", "b_1.pgm", "c_2.png"]
    frames = list(iter_image_dir(tmp_path, 25.0))
    assert [f.data[0, 0] for f in frames] == [10.0, 20.0, 30.0]
    assert frames[2].timestamp == 2 / 25.0


def test_image_dir_rgb_decodes_to_luma(tmp_path):
    rgb = np.zeros((2, 2, 3), dtype=np.uint8)
    rgb[..., 0] = 200
    Image.fromarray(rgb, mode="RGB").save(tmp_path / "f0.png")
    Image.fromarray(rgb, mode="RGB").save(tmp_path / "f1.png")
    frames = list(iter_image_dir(tmp_path, 10.0))
    assert np.allclose(frames[0].data, 0.2126 * 200, atol=1e-9)


def test_image_dir_errors(tmp_path):
    with pytest.raises(InputError):
        list_image_files(tmp_path / "missing")
    with pytest.raises(InputError):
        list_image_files(tmp_path)  # exists but holds no images
    bad = tmp_path / "bad.png"
    bad.write_bytes(b"not a png at all")
    with pytest.raises(InputError):
        list(iter_image_dir(tmp_path, 10.0))
