"""Pinhole camera, jittered segment sampling, and frame rendering.

The per-pixel pipeline: generate the ray, intersect every mesh, decompose
the hits into skin-interior material segments, clip them to the volume box,
take equidistant samples per segment (restarting at each segment boundary,
optionally jittered), map each sample through the transfer function, and
composite back to front over the background.

Rendering is deterministic by construction: the jitter stream is a
counter-based hash of (seed, frame, pixel), every pixel writes only its own
output, and the math never depends on scheduling, so any thread count
produces byte-identical frames.
"""

import math
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from . import _kernels
from .errors import ConfigError
from .geometry import point_inside_counts
from .transfer import StyleKind

_STYLE_CODE = {StyleKind.INTERIOR: _kernels.STYLE_INTERIOR,
               StyleKind.FAT_EMPHASIZED: _kernels.STYLE_FAT_EMPHASIZED}


@dataclass
class Camera:
    """Pinhole camera; vfov is the full vertical field of view in degrees."""

    position: np.ndarray
    look_at: np.ndarray
    up: np.ndarray
    vfov: float
    resolution: tuple   # (width, height) pixels

    def __post_init__(self):
        self.position = np.asarray(self.position, np.float64).reshape(3)
        self.look_at = np.asarray(self.look_at, np.float64).reshape(3)
        self.up = np.asarray(self.up, np.float64).reshape(3)
        self.vfov = float(self.vfov)
        w, h = self.resolution
        self.resolution = (int(w), int(h))
        if not (0.0 < self.vfov < 180.0):
            raise ConfigError(f"vfov must be in (0, 180), got {self.vfov}")
        if self.resolution[0] < 1 or self.resolution[1] < 1:
            raise ConfigError("resolution must be at least 1x1")
        if not np.linalg.norm(self.look_at - self.position) > 0:
            raise ConfigError("camera position and look_at coincide")


@dataclass
class SampleSettings:
    """Sampling controls.

    dt0 is the base sample spacing in mm; None picks half the smallest voxel
    spacing of the rendered grid. Opacities coming out of the transfer
    function are calibrated to dt0 and corrected per-sample for any shorter
    covered distance. seed/jitter drive the per-segment offset stream;
    background is the linear rgb the compositing starts from.
    """

    dt0: float | None = None
    jitter: bool = True
    seed: int = 0
    background: tuple = (0.0, 0.0, 0.0)

    def __post_init__(self):
        if self.dt0 is not None:
            self.dt0 = float(self.dt0)
            if not (math.isfinite(self.dt0) and self.dt0 > 0):
                raise ConfigError(f"dt0 must be > 0, got {self.dt0}")
        self.seed = int(self.seed)
        if not (0 <= self.seed < 2 ** 64):
            raise ConfigError("seed must fit in an unsigned 64-bit integer")
        bg = np.asarray(self.background, np.float64).reshape(3)
        if not np.isfinite(bg).all():
            raise ConfigError("background must be finite rgb")
        self.background = tuple(float(c) for c in bg)

    def resolve_dt0(self, grid):
        return self.dt0 if self.dt0 is not None else 0.5 * float(grid.spacing.min())


@dataclass
class FrameBuffer:
    """Linear-light rgb image, row-major from the top-left pixel."""

    pixels: np.ndarray   # (height, width, 3) float64

    @property
    def width(self):
        return self.pixels.shape[1]

    @property
    def height(self):
        return self.pixels.shape[0]

    def to_u8(self, gamma=False):
        """Quantize to bytes: optional gamma 2.2, then round(c*255) half-up."""
        c = np.clip(self.pixels, 0.0, 1.0)
        if gamma:
            c = c ** (1.0 / 2.2)
        return np.floor(c * 255.0 + 0.5).astype(np.uint8)


def camera_basis(cam):
    """Orthonormal (right, up, forward) plus image-plane half extents.

    right = forward x up (image x grows to the viewer's right), and the
    returned up is re-orthogonalized so the triple is exactly orthonormal.
    """
    fwd = cam.look_at - cam.position
    fwd = fwd / np.linalg.norm(fwd)
    right = np.cross(fwd, cam.up)
    nr = np.linalg.norm(right)
    if nr == 0.0:
        raise ConfigError("camera up vector is parallel to the view direction")
    right = right / nr
    up = np.cross(right, fwd)
    half_h = math.tan(math.radians(cam.vfov) * 0.5)
    half_w = half_h * (cam.resolution[0] / cam.resolution[1])
    return right, up, fwd, half_w, half_h


def generate_ray(cam, px, py, subpixel=(0.5, 0.5)):
    """World-space ray through pixel (px, py).

    subpixel (sx, sy) in [0, 1)^2 positions the ray inside the pixel;
    the default is the pixel centre. Returns (origin, unit direction).
    """
    right, up, fwd, half_w, half_h = camera_basis(cam)
    w, h = cam.resolution
    u = ((px + subpixel[0]) / w) * 2.0 - 1.0
    v = 1.0 - ((py + subpixel[1]) / h) * 2.0
    d = fwd + (u * half_w) * right + (v * half_h) * up
    d = d / math.sqrt(d[0] * d[0] + d[1] * d[1] + d[2] * d[2])
    return cam.position.copy(), d


def camera_preset(view, grid, vfov=45.0, resolution=(512, 512)):
    """Named camera against the volume's bounding box.

    front looks along -z from +z, back looks along +z from -z, side looks
    along -x from +x; up is +y. The distance is chosen so the whole box
    fits in the field of view with a small margin.
    """
    lo, hi = grid.bounds()
    centre = (lo + hi) * 0.5
    size = hi - lo
    half_h = math.tan(math.radians(float(vfov)) * 0.5)
    aspect = resolution[0] / resolution[1]
    axes = {"front": (2, np.array([0.0, 0.0, 1.0])),
            "back": (2, np.array([0.0, 0.0, -1.0])),
            "side": (0, np.array([1.0, 0.0, 0.0]))}
    if view not in axes:
        raise ConfigError(f"unknown view {view!r}; expected front, back or side")
    axis, outward = axes[view]
    horiz = 0 if axis == 2 else 2   # up is +y, so the image maps y vertically
    need_v = size[1] * 0.5 / half_h
    need_u = size[horiz] * 0.5 / (half_h * aspect)
    dist = max(need_u, need_v) * 1.1 + size[axis] * 0.5
    position = centre + outward * dist
    return Camera(position, centre, np.array([0.0, 1.0, 0.0]), float(vfov),
                  (int(resolution[0]), int(resolution[1])))


def correct_opacity(alpha_eq, dx, dx0):
    """Opacity for covered distance dx of a sample calibrated to spacing dx0.

    1 - (1 - alpha_eq)**(dx/dx0); returned unchanged when dx == dx0 (the
    exponent-1 case is exact). Keeps accumulated transparency independent
    of how a span is subdivided.
    """
    if dx == dx0:
        return alpha_eq
    return 1.0 - (1.0 - alpha_eq) ** (dx / dx0)


class PixelStream:
    """Counter-based uniform stream for one (seed, frame, pixel)."""

    def __init__(self, seed, frame, px, py):
        self.key = np.uint64(_kernels.pixel_key(np.uint64(seed),
                                                np.uint64(frame),
                                                np.uint64(px),
                                                np.uint64(py)))

    def segment_offset(self, index):
        """index-th segment's jitter fraction in [0, 1)."""
        return float(_kernels.stream_u01(self.key, np.int64(index)))


class RaySample(NamedTuple):
    t: float
    dx: float
    material: int


def sample_ray(segments, settings, dt0, stream=None):
    """Equidistant samples along each segment, restarting per segment.

    Each segment i starts at t_enter plus (jitter ? u_i*dt0 : 0) with u_i
    drawn from the stream at index i, then strides dt0. A sample's dx is
    the distance it covers, truncated at the segment end, so a segment
    shorter than dt0 yields one sample with dx equal to its length (or no
    sample if the jitter offset overshoots). Samples never cross segment
    boundaries. Returns a front-to-back list of RaySample.
    """
    if settings.jitter and stream is None:
        raise ConfigError("jittered sampling needs a pixel stream")
    out = []
    for si, seg in enumerate(segments):
        t0, t1 = seg[0], seg[1]
        mat = seg[2]
        off = stream.segment_offset(si) * dt0 if settings.jitter else 0.0
        k = 0
        while t0 + off + k * dt0 < t1:
            p = t0 + off + k * dt0
            out.append(RaySample(p, min(p + dt0, t1) - p, int(mat)))
            k += 1
    return out


def composite_back_to_front(samples, background):
    """Fold (C, alpha) samples ordered front-to-back over the background.

    Applies accumulated = alpha*C + (1-alpha)*accumulated from the last
    sample toward the first, starting from the background colour.
    """
    acc = np.asarray(background, np.float64).reshape(3).copy()
    for color, alpha in reversed(samples):
        c = np.asarray(color, np.float64)
        acc = alpha * c + (1.0 - alpha) * acc
    return acc


def render_frame(scene, grid, style, palette, cam, settings, frame_index=0):
    """Render one frame. Returns (FrameBuffer, parity warning count).

    Pixels whose rays never enter the skin are exactly the background.
    Parity warnings (meshes with an odd crossing count along some ray) are
    counted, never fatal. Configuration problems (missing fat histogram for
    the interior style, degenerate camera, bad dt0) raise ConfigError
    before any pixel work.
    """
    if min(grid.dims) < 2:
        raise ConfigError("rendering needs at least 2 nodes per grid axis")
    style_code = _STYLE_CODE[style.kind]
    if style_code == _kernels.STYLE_INTERIOR:
        fat_scale = style.params.fat_scale()   # raises without a histogram
        hist_lo = style.params.fat_hist.lo
        hist_hi = style.params.fat_hist.hi
    else:
        fat_scale = np.zeros(1)
        hist_lo = hist_hi = 0.0
    right, up, fwd, half_w, half_h = camera_basis(cam)
    dt0 = settings.resolve_dt0(grid)
    if not (math.isfinite(dt0) and dt0 > 0):
        raise ConfigError(f"dt0 must be > 0, got {dt0}")
    frame_index = int(frame_index)
    if frame_index < 0:
        raise ConfigError("frame index must be >= 0")
    start_inside = point_inside_counts(scene, cam.position)
    w, h = cam.resolution
    img = np.empty((h, w, 3), np.float64)
    warn_rows = np.zeros(h, np.int64)
    bg = settings.background
    _kernels.render_kernel(
        w, h,
        cam.position[0], cam.position[1], cam.position[2],
        right[0], right[1], right[2],
        up[0], up[1], up[2],
        fwd[0], fwd[1], fwd[2],
        half_w, half_h,
        scene.node_lo, scene.node_hi, scene.node_left, scene.node_count,
        scene.tri_v0, scene.tri_e1, scene.tri_e2, scene.tri_mesh,
        scene.mesh_materials, start_inside, scene.eps_t,
        grid.values,
        grid.origin[0], grid.origin[1], grid.origin[2],
        grid.spacing[0], grid.spacing[1], grid.spacing[2],
        style_code, style.params.a, style.params.b, grid.s_max,
        palette.color, palette.alpha, fat_scale, hist_lo, hist_hi,
        dt0, settings.jitter, np.uint64(settings.seed),
        np.uint64(frame_index), bg[0], bg[1], bg[2],
        img, warn_rows)
    return FrameBuffer(img), int(warn_rows.sum())
