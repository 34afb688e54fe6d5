"""Frame-based comparison chain: synthetic frames -> erode/threshold/blobs.

Mirrors the industrial PC pipeline used as the baseline: greyscale frames
at a fixed rate, a threshold band to binarize, square-kernel morphological
erosion, 8-connected component labeling and an area band to pick the ball
blob, whose centroid is converted to millimetres with a per-axis linear
map.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy import ndimage

from ldsitrack.scene import SceneSpec, US_PER_S

EIGHT_CONN = np.ones((3, 3), dtype=int)


@dataclass
class Frame:
    pixels: np.ndarray  # uint8, shape (height, width)
    t: int  # us

    @property
    def width(self) -> int:
        return self.pixels.shape[1]

    @property
    def height(self) -> int:
        return self.pixels.shape[0]


@dataclass(frozen=True)
class FrameCameraConfig:
    """Maps scene (sensor px) coordinates into the frame camera's image."""

    width: int = 640
    height: int = 480
    scale: float = 3.75  # frame px per scene px
    offset: tuple[float, float] = (80.0, 0.0)
    background: int = 20
    ball_intensity: int = 220
    salt_noise_prob: float = 0.0  # per-pixel chance of a bright speck

    def to_frame(self, x: float, y: float) -> tuple[float, float]:
        return x * self.scale + self.offset[0], y * self.scale + self.offset[1]

    def to_scene(self, fx: float, fy: float) -> tuple[float, float]:
        return (fx - self.offset[0]) / self.scale, (fy - self.offset[1]) / self.scale


@dataclass(frozen=True)
class BlobParams:
    roi: tuple[int, int, int, int] = (0, 0, 640, 480)  # x0, y0, x1, y1
    erode_radius: int = 1
    threshold_low: int = 50
    threshold_high: int = 255
    blob_min_area: int = 50
    blob_max_area: int = 100_000
    mm_scale: tuple[float, float] = (1.0, 1.0)  # frame px -> mm, per axis
    mm_offset: tuple[float, float] = (0.0, 0.0)

    def __post_init__(self):
        if not 0 <= self.threshold_low <= self.threshold_high <= 255:
            raise ValueError("threshold band must satisfy 0 <= low <= high <= 255")
        if not 0 <= self.blob_min_area <= self.blob_max_area:
            raise ValueError("area band must satisfy 0 <= min <= max")


def render_frame(spec: SceneSpec, cam: FrameCameraConfig, t_us: int,
                 rng: np.random.Generator | None = None) -> Frame:
    cx, cy = spec.trajectory.position(t_us)
    fx, fy = cam.to_frame(cx, cy)
    r = spec.ball_radius * cam.scale
    img = np.full((cam.height, cam.width), cam.background, np.uint8)
    x0 = max(0, int(np.floor(fx - r - 1)))
    x1 = min(cam.width - 1, int(np.ceil(fx + r + 1)))
    y0 = max(0, int(np.floor(fy - r - 1)))
    y1 = min(cam.height - 1, int(np.ceil(fy + r + 1)))
    if x0 <= x1 and y0 <= y1:
        xx, yy = np.meshgrid(np.arange(x0, x1 + 1), np.arange(y0, y1 + 1))
        disk = (xx - fx) ** 2 + (yy - fy) ** 2 <= r * r
        region = img[y0:y1 + 1, x0:x1 + 1]
        region[disk] = cam.ball_intensity
    if cam.salt_noise_prob > 0 and rng is not None:
        salt = rng.random(img.shape) < cam.salt_noise_prob
        img[salt] = 255
    return Frame(img, t_us)


def render_frames(spec: SceneSpec, fps: float,
                  cam: FrameCameraConfig = FrameCameraConfig()) -> list[Frame]:
    """Frames at fixed cadence over the scene duration (first at t=0)."""
    if fps <= 0:
        raise ValueError("fps must be > 0")
    period_us = US_PER_S / fps
    n = int(spec.duration_us / period_us)
    rng = np.random.default_rng([spec.seed & 0xFFFFFFFF, 0x73616C74])
    return [
        render_frame(spec, cam, int(round(k * period_us)), rng) for k in range(n)
    ]


def detect_blob(frame: Frame, params: BlobParams):
    """Centroid (mm) and area (px^2) of the qualifying blob, or None.

    Threshold band -> erosion -> 8-connected labeling -> area band; the
    largest qualifying component wins.
    """
    x0, y0, x1, y1 = params.roi
    window = frame.pixels[y0:y1, x0:x1]
    binary = (window >= params.threshold_low) & (window <= params.threshold_high)
    if params.erode_radius > 0:
        k = 2 * params.erode_radius + 1
        binary = ndimage.binary_erosion(binary, structure=np.ones((k, k), bool))
    labels, n_labels = ndimage.label(binary, structure=EIGHT_CONN)
    if n_labels == 0:
        return None
    areas = ndimage.sum_labels(np.ones_like(labels), labels, range(1, n_labels + 1))
    qualifying = [
        i + 1 for i, a in enumerate(areas)
        if params.blob_min_area <= a <= params.blob_max_area
    ]
    if not qualifying:
        return None
    best = max(qualifying, key=lambda lab: areas[lab - 1])
    ys, xs = np.nonzero(labels == best)
    cx = float(xs.mean()) + x0
    cy = float(ys.mean()) + y0
    return (
        cx * params.mm_scale[0] + params.mm_offset[0],
        cy * params.mm_scale[1] + params.mm_offset[1],
        float(areas[best - 1]),
    )


def label_components_reference(binary: np.ndarray) -> np.ndarray:
    """Flood-fill 8-connected labeling oracle for small images."""
    labels = np.zeros(binary.shape, int)
    next_label = 0
    h, w = binary.shape
    for sy in range(h):
        for sx in range(w):
            if binary[sy, sx] and labels[sy, sx] == 0:
                next_label += 1
                stack = [(sy, sx)]
                labels[sy, sx] = next_label
                while stack:
                    y, x = stack.pop()
                    for dy in (-1, 0, 1):
                        for dx in (-1, 0, 1):
                            ny, nx = y + dy, x + dx
                            if 0 <= ny < h and 0 <= nx < w and binary[ny, nx] \
                                    and labels[ny, nx] == 0:
                                labels[ny, nx] = next_label
                                stack.append((ny, nx))
    return labels


def write_pgm(frame: Frame) -> bytes:
    header = f"P5\n{frame.width} {frame.height}\n255\n".encode("ascii")
    return header + frame.pixels.tobytes()


def detections_csv(rows: list[tuple[int, float, float, float]]) -> str:
    lines = ["t,x_mm,y_mm,area"]
    for t, x, y, area in rows:
        lines.append(f"{t},{x:.4f},{y:.4f},{area:.1f}")
    return "\n".join(lines) + "\n"


def blob_params_from_dict(tree: dict, cam: FrameCameraConfig = FrameCameraConfig()) -> BlobParams:
    roi = tree.get("roi", [0, 0, cam.width, cam.height])
    defaults = BlobParams()
    return BlobParams(
        roi=tuple(int(v) for v in roi),
        erode_radius=int(tree.get("erode_radius", defaults.erode_radius)),
        threshold_low=int(tree.get("threshold_low", defaults.threshold_low)),
        threshold_high=int(tree.get("threshold_high", defaults.threshold_high)),
        blob_min_area=int(tree.get("blob_min_area", defaults.blob_min_area)),
        blob_max_area=int(tree.get("blob_max_area", defaults.blob_max_area)),
        mm_scale=tuple(float(v) for v in tree.get("mm_scale", (1.0, 1.0))),
        mm_offset=tuple(float(v) for v in tree.get("mm_offset", (0.0, 0.0))),
    )
