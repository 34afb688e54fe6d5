import numpy as np
import pytest
from scipy import ndimage

from ldsitrack.events import SensorGeometry
from ldsitrack.frame_baseline import (
    EIGHT_CONN, BlobParams, Frame, FrameCameraConfig, detect_blob,
    label_components_reference, render_frame, render_frames, write_pgm,
)
from ldsitrack.scene import LinearPath, SceneSpec

GEOM = SensorGeometry(128, 128)
CAM = FrameCameraConfig()


def scene(traj=None):
    return SceneSpec(GEOM, traj or LinearPath((64, 64), (64, 64), 0.0),
                     ball_radius=6.0, duration_us=1_000_000)


def test_frame_count_and_cadence():
    frames = render_frames(scene(), 64.0)
    assert len(frames) == 64
    assert frames[1].t - frames[0].t == pytest.approx(1_000_000 / 64, abs=1)


def test_stationary_frames_identical():
    frames = render_frames(scene(), 8.0)
    for f in frames[1:]:
        assert np.array_equal(f.pixels, frames[0].pixels)


def test_ball_rendered_at_projected_position():
    f = render_frame(scene(), CAM, 0)
    fx, fy = CAM.to_frame(64, 64)
    assert f.pixels[int(fy), int(fx)] == CAM.ball_intensity
    assert f.pixels[5, 5] == CAM.background


def test_clipped_ball_partial_blob():
    # ROI boundary slices the ball roughly in half
    f = render_frame(scene(), CAM, 0)
    hit = detect_blob(f, BlobParams(roi=(0, 0, 320, 480)))
    full = np.pi * (6 * CAM.scale) ** 2
    assert hit is not None
    assert 0.2 * full < hit[2] < 0.8 * full


def test_blob_centroid_accuracy():
    f = render_frame(scene(), CAM, 0)
    hit = detect_blob(f, BlobParams())
    fx, fy = CAM.to_frame(64, 64)
    assert hit[0] == pytest.approx(fx, abs=0.5)
    assert hit[1] == pytest.approx(fy, abs=0.5)


def test_area_band_filters_out_ball():
    f = render_frame(scene(), CAM, 0)
    assert detect_blob(f, BlobParams(blob_min_area=1, blob_max_area=10)) is None


def test_largest_qualifying_blob_wins():
    img = np.zeros((40, 40), np.uint8)
    img[5:10, 5:10] = 200  # 25 px
    img[20:30, 20:30] = 200  # 100 px
    hit = detect_blob(Frame(img, 0), BlobParams(roi=(0, 0, 40, 40), erode_radius=0,
                                                blob_min_area=1))
    assert hit[0] == pytest.approx(24.5) and hit[1] == pytest.approx(24.5)


def test_roi_excludes_blob():
    f = render_frame(scene(), CAM, 0)
    assert detect_blob(f, BlobParams(roi=(0, 0, 100, 100))) is None


def test_mm_conversion_applied():
    f = render_frame(scene(), CAM, 0)
    base = detect_blob(f, BlobParams())
    scaled = detect_blob(f, BlobParams(mm_scale=(2.0, 2.0), mm_offset=(10.0, -5.0)))
    assert scaled[0] == pytest.approx(base[0] * 2 + 10)
    assert scaled[1] == pytest.approx(base[1] * 2 - 5)


def test_erosion_never_grows():
    rng = np.random.default_rng(1)
    img = (rng.random((30, 30)) < 0.4)
    eroded = ndimage.binary_erosion(img, structure=np.ones((3, 3), bool))
    assert not np.any(eroded & ~img)


def test_labeling_matches_flood_fill_reference():
    rng = np.random.default_rng(4)
    for _ in range(10):
        binary = rng.random((24, 24)) < 0.35
        fast, n_fast = ndimage.label(binary, structure=EIGHT_CONN)
        ref = label_components_reference(binary)
        assert n_fast == ref.max()
        # same partition: component of each pixel has identical member sets
        for lab in range(1, n_fast + 1):
            members = fast == lab
            ref_labels = set(ref[members].tolist())
            assert len(ref_labels) == 1
            assert np.array_equal(members, ref == ref_labels.pop())


def test_threshold_band_validation():
    with pytest.raises(ValueError, match="threshold"):
        BlobParams(threshold_low=200, threshold_high=100)
    with pytest.raises(ValueError, match="area"):
        BlobParams(blob_min_area=10, blob_max_area=5)


def test_pgm_bytes():
    f = Frame(np.zeros((2, 3), np.uint8), 0)
    data = write_pgm(f)
    assert data.startswith(b"P5\n3 2\n255\n")
    assert len(data) == len(b"P5\n3 2\n255\n") + 6


def test_salt_noise_deterministic_per_seed():
    cam = FrameCameraConfig(salt_noise_prob=0.01)
    spec = scene()
    a = render_frames(spec, 8.0, cam)
    b = render_frames(spec, 8.0, cam)
    assert all(np.array_equal(x.pixels, y.pixels) for x, y in zip(a, b))
    assert (a[0].pixels == 255).sum() > 0
