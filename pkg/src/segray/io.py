"""File formats: VGRID volumes, OBJ meshes, histogram caches, images, jobs.

VGRID v1 is a text header followed by a raw little-endian payload with x
varying fastest:

    vgrid 1
    dims <nx> <ny> <nz>
    spacing <sx> <sy> <sz>
    origin <ox> <oy> <oz>
    dtype f32|u16
    data
    <nx*ny*nz little-endian values>

Histogram caches (VHIST v1) use the same header style with a u64 payload:

    vhist 1
    bins <n>
    range <lo> <hi>
    data
    <n little-endian uint64 counts>

Parse errors carry the byte offset of the offending header line or payload
position. Both formats round-trip bit-exactly.
"""

import os
from dataclasses import dataclass, field

import numpy as np
import yaml

from .errors import ConfigError, ParseError
from .geometry import LabeledMesh, Material
from .raycast import Camera, SampleSettings
from .transfer import MaterialPalette, Style, StyleKind, StyleParams
from .volume import Histogram, VolumeGrid

_DTYPES = {"f32": np.dtype("<f4"), "u16": np.dtype("<u2")}


# ---------------------------------------------------------------------------
# VGRID
# ---------------------------------------------------------------------------

def _header_line(data, pos, name):
    nl = data.find(b"\n", pos)
    if nl < 0:
        raise ParseError(f"truncated header: missing {name} line", offset=pos)
    try:
        text = data[pos:nl].decode("ascii")
    except UnicodeDecodeError:
        raise ParseError(f"non-ascii bytes in {name} line", offset=pos) from None
    return text, nl + 1


def _parse_fields(text, pos, key, n, conv, kind):
    parts = text.split()
    if len(parts) != n + 1 or parts[0] != key:
        raise ParseError(f"expected '{key}' line with {n} {kind} fields, "
                         f"got {text!r}", offset=pos)
    try:
        return [conv(p) for p in parts[1:]]
    except ValueError:
        raise ParseError(f"bad {kind} in '{key}' line: {text!r}",
                         offset=pos) from None


def read_volume(path):
    """Read a VGRID v1 file into a VolumeGrid (u16 widens to f32 exactly)."""
    with open(path, "rb") as f:
        data = f.read()
    pos = 0
    text, pos2 = _header_line(data, pos, "magic")
    if text != "vgrid 1":
        raise ParseError(f"not a VGRID v1 file (first line {text!r})", offset=pos)
    pos = pos2
    text, pos2 = _header_line(data, pos, "dims")
    dims = _parse_fields(text, pos, "dims", 3, int, "integer")
    if min(dims) < 1:
        raise ParseError(f"dims must be positive, got {dims}", offset=pos)
    pos = pos2
    text, pos2 = _header_line(data, pos, "spacing")
    spacing = _parse_fields(text, pos, "spacing", 3, float, "number")
    pos = pos2
    text, pos2 = _header_line(data, pos, "origin")
    origin = _parse_fields(text, pos, "origin", 3, float, "number")
    pos = pos2
    text, pos2 = _header_line(data, pos, "dtype")
    dt = _parse_fields(text, pos, "dtype", 1, str, "token")[0]
    if dt not in _DTYPES:
        raise ParseError(f"dtype must be f32 or u16, got {dt!r}", offset=pos)
    pos = pos2
    text, pos2 = _header_line(data, pos, "data")
    if text != "data":
        raise ParseError(f"expected 'data' line, got {text!r}", offset=pos)
    pos = pos2
    count = dims[0] * dims[1] * dims[2]
    need = count * _DTYPES[dt].itemsize
    payload = data[pos:]
    if len(payload) < need:
        raise ParseError(f"payload truncated: need {need} bytes, have "
                         f"{len(payload)}", offset=pos + len(payload))
    if len(payload) > need:
        raise ParseError(f"trailing bytes after payload: expected {need}, "
                         f"have {len(payload)}", offset=pos + need)
    flat = np.frombuffer(payload, _DTYPES[dt], count=count)
    if dt == "f32":
        finite = np.isfinite(flat)
        if not finite.all():
            bad = int(np.flatnonzero(~finite)[0])
            raise ParseError(f"non-finite value at index {bad}",
                             offset=pos + bad * 4)
        if flat.size and float(flat.min()) < 0.0:
            bad = int(np.flatnonzero(flat < 0)[0])
            raise ParseError(f"negative value at index {bad}",
                             offset=pos + bad * 4)
    # x varies fastest in the payload
    values = flat.reshape((dims[2], dims[1], dims[0])).transpose(2, 1, 0)
    try:
        spacing_a = np.array(spacing, np.float64)
        origin_a = np.array(origin, np.float64)
        return VolumeGrid(values.astype(np.float32), spacing_a, origin_a,
                          source_dtype=dt)
    except ConfigError as e:
        raise ParseError(str(e), offset=0) from None


def _fmt(x):
    """Shortest decimal that round-trips the float exactly."""
    return repr(float(x))


def write_volume(grid, path):
    """Write a VolumeGrid as VGRID v1 (round-trips bit-exactly)."""
    vals = grid.values
    if grid.source_dtype == "u16":
        if not (np.all(vals == np.floor(vals)) and float(vals.max(initial=0)) <= 65535):
            raise ConfigError("u16 volume holds values not representable as u16")
        payload = vals.transpose(2, 1, 0).astype("<u2").tobytes()
    else:
        payload = np.ascontiguousarray(vals.transpose(2, 1, 0), "<f4").tobytes()
    nx, ny, nz = grid.dims
    header = (f"vgrid 1\n"
              f"dims {nx} {ny} {nz}\n"
              f"spacing {_fmt(grid.spacing[0])} {_fmt(grid.spacing[1])} "
              f"{_fmt(grid.spacing[2])}\n"
              f"origin {_fmt(grid.origin[0])} {_fmt(grid.origin[1])} "
              f"{_fmt(grid.origin[2])}\n"
              f"dtype {grid.source_dtype}\n"
              f"data\n")
    with open(path, "wb") as f:
        f.write(header.encode("ascii"))
        f.write(payload)


# ---------------------------------------------------------------------------
# VHIST
# ---------------------------------------------------------------------------

def read_histogram(path):
    with open(path, "rb") as f:
        data = f.read()
    pos = 0
    text, pos2 = _header_line(data, pos, "magic")
    if text != "vhist 1":
        raise ParseError(f"not a VHIST v1 file (first line {text!r})", offset=pos)
    pos = pos2
    text, pos2 = _header_line(data, pos, "bins")
    bins = _parse_fields(text, pos, "bins", 1, int, "integer")[0]
    if bins < 1:
        raise ParseError(f"bins must be >= 1, got {bins}", offset=pos)
    pos = pos2
    text, pos2 = _header_line(data, pos, "range")
    lo, hi = _parse_fields(text, pos, "range", 2, float, "number")
    pos = pos2
    text, pos2 = _header_line(data, pos, "data")
    if text != "data":
        raise ParseError(f"expected 'data' line, got {text!r}", offset=pos)
    pos = pos2
    need = bins * 8
    payload = data[pos:]
    if len(payload) != need:
        raise ParseError(f"payload must be {need} bytes, have {len(payload)}",
                         offset=pos + min(len(payload), need))
    counts = np.frombuffer(payload, "<u8", count=bins).astype(np.int64)
    try:
        return Histogram(bins, lo, hi, counts)
    except ConfigError as e:
        raise ParseError(str(e), offset=0) from None


def write_histogram(hist, path):
    header = (f"vhist 1\n"
              f"bins {hist.bin_count}\n"
              f"range {_fmt(hist.lo)} {_fmt(hist.hi)}\n"
              f"data\n")
    with open(path, "wb") as f:
        f.write(header.encode("ascii"))
        f.write(hist.counts.astype("<u8").tobytes())


# ---------------------------------------------------------------------------
# OBJ meshes
# ---------------------------------------------------------------------------

def read_mesh(path, label, name=None):
    """Read the v/f subset of an OBJ file into a LabeledMesh.

    Faces may be polygons (fan-triangulated) and may use the i/j/k attribute
    syntax; only the vertex index is used. Unknown directives are skipped.
    A face index out of range is an error naming the offending line.
    """
    material = Material.from_label(label)
    verts = []
    faces = []
    with open(path, "r", encoding="ascii", errors="replace") as f:
        for lineno, raw in enumerate(f, start=1):
            parts = raw.split()
            if not parts or parts[0].startswith("#"):
                continue
            if parts[0] == "v":
                if len(parts) < 4:
                    raise ParseError(f"{path}: line {lineno}: vertex needs 3 "
                                     f"coordinates")
                try:
                    verts.append([float(parts[1]), float(parts[2]),
                                  float(parts[3])])
                except ValueError:
                    raise ParseError(f"{path}: line {lineno}: bad vertex "
                                     f"coordinate") from None
            elif parts[0] == "f":
                if len(parts) < 4:
                    raise ParseError(f"{path}: line {lineno}: face needs at "
                                     f"least 3 vertices")
                idx = []
                for tok in parts[1:]:
                    head = tok.split("/", 1)[0]
                    try:
                        i = int(head)
                    except ValueError:
                        raise ParseError(f"{path}: line {lineno}: bad face "
                                         f"index {tok!r}") from None
                    if i < 1 or i > len(verts):
                        raise ParseError(f"{path}: line {lineno}: face index "
                                         f"{i} out of range (have "
                                         f"{len(verts)} vertices)")
                    idx.append(i - 1)
                for k in range(1, len(idx) - 1):
                    faces.append([idx[0], idx[k], idx[k + 1]])
            # anything else (vn, vt, o, g, s, usemtl, ...) is tolerated
    if not faces:
        raise ParseError(f"{path}: no faces found")
    if name is None:
        name = os.path.splitext(os.path.basename(path))[0]
    return LabeledMesh(name, material, np.array(verts, np.float64),
                       np.array(faces, np.int32))


# ---------------------------------------------------------------------------
# images
# ---------------------------------------------------------------------------

def ppm_bytes(framebuffer, gamma=False):
    """Binary PPM (P6, maxval 255) bytes for a FrameBuffer."""
    u8 = framebuffer.to_u8(gamma=gamma)
    header = f"P6\n{framebuffer.width} {framebuffer.height}\n255\n"
    return header.encode("ascii") + u8.tobytes()


def write_image(framebuffer, path, gamma=False):
    """Write PPM (bit-exact contract) or PNG depending on the extension."""
    ext = os.path.splitext(path)[1].lower()
    if ext == ".ppm":
        with open(path, "wb") as f:
            f.write(ppm_bytes(framebuffer, gamma=gamma))
    elif ext == ".png":
        from PIL import Image
        Image.fromarray(framebuffer.to_u8(gamma=gamma), "RGB").save(path)
    else:
        raise ConfigError(f"unsupported image extension {ext!r} "
                          f"(use .ppm or .png)")


# ---------------------------------------------------------------------------
# render jobs
# ---------------------------------------------------------------------------

@dataclass
class MeshSpec:
    path: str
    label: Material
    name: str


@dataclass
class RenderJob:
    """Everything needed to render a frame range.

    volume/mesh/output paths may contain a ``{frame}`` placeholder
    (str.format syntax); output must contain one when the range has more
    than one frame. One frame = one volume file + one mesh set.
    """

    volume: str
    meshes: list
    output: str
    style: Style = field(default_factory=Style)
    histogram_path: str | None = None
    bins: int = 256
    palette: MaterialPalette = field(default_factory=MaterialPalette.default)
    camera: Camera | None = None
    view: str | None = "front"
    vfov: float = 45.0
    resolution: tuple = (512, 512)
    settings: SampleSettings = field(default_factory=SampleSettings)
    frames: tuple = (0, 0)
    gamma: bool = False
    base_dir: str = "."

    def frame_range(self):
        return range(self.frames[0], self.frames[1] + 1)


def substitute_frame(pattern, frame):
    try:
        return pattern.format(frame=frame)
    except (KeyError, IndexError, ValueError) as e:
        raise ConfigError(f"bad path pattern {pattern!r}: {e}") from None


_TOP_KEYS = {"volume", "meshes", "style", "palette", "camera", "sampling",
             "output", "frames", "gamma"}
_STYLE_KEYS = {"kind", "a", "b", "bins", "smooth", "histogram"}
_CAMERA_KEYS = {"view", "position", "look_at", "up", "vfov", "resolution"}
_SAMPLING_KEYS = {"dt0", "jitter", "seed", "background"}


def parse_job(path):
    """Parse and validate a YAML job file.

    Validation is total: every problem found is reported in one ConfigError
    rather than stopping at the first.
    """
    with open(path, "r") as f:
        try:
            doc = yaml.safe_load(f)
        except yaml.YAMLError as e:
            raise ParseError(f"{path}: invalid YAML: {e}") from None
    if not isinstance(doc, dict):
        raise ConfigError(f"{path}: job must be a key-value document")
    base = os.path.dirname(os.path.abspath(path))
    errors = []

    def err(msg):
        errors.append(msg)

    for k in doc:
        if k not in _TOP_KEYS:
            err(f"unknown key {k!r}")

    volume = doc.get("volume")
    if not isinstance(volume, str) or not volume:
        err("'volume' must be a file path")
        volume = ""

    meshes = []
    raw_meshes = doc.get("meshes")
    if not isinstance(raw_meshes, list) or not raw_meshes:
        err("'meshes' must be a non-empty list")
        raw_meshes = []
    skin_count = 0
    for i, m in enumerate(raw_meshes):
        if not isinstance(m, dict) or "path" not in m or "label" not in m:
            err(f"meshes[{i}] needs 'path' and 'label'")
            continue
        try:
            label = Material.from_label(m["label"])
        except ConfigError as e:
            err(f"meshes[{i}]: {e}")
            continue
        if label == Material.SKIN:
            skin_count += 1
        name = m.get("name") or os.path.splitext(os.path.basename(m["path"]))[0]
        meshes.append(MeshSpec(str(m["path"]), label, str(name)))
    if raw_meshes and skin_count != 1:
        err(f"job needs exactly one skin mesh, found {skin_count}")

    style_doc = doc.get("style") or {}
    if not isinstance(style_doc, dict):
        err("'style' must be a mapping")
        style_doc = {}
    for k in style_doc:
        if k not in _STYLE_KEYS:
            err(f"style: unknown key {k!r}")
    style = Style()
    hist_path = None
    bins = 256
    try:
        kind = StyleKind.parse(style_doc.get("kind", "fat-emphasized"))
        a = style_doc.get("a", 2.0)
        b = style_doc.get("b", 1.0)
        if a is None or b is None:
            raise ConfigError("style parameters a and b must be numbers, "
                              "not null")
        smooth = bool(style_doc.get("smooth", False))
        style = Style(kind, StyleParams(a=a, b=b, smooth=smooth))
    except (ConfigError, TypeError) as e:
        err(f"style: {e}")
    raw_bins = style_doc.get("bins", 256)
    if not isinstance(raw_bins, int) or raw_bins < 1:
        err(f"style.bins must be a positive integer, got {raw_bins!r}")
    else:
        bins = raw_bins
    if style_doc.get("histogram") is not None:
        hist_path = str(style_doc["histogram"])
        p = hist_path if os.path.isabs(hist_path) else os.path.join(base, hist_path)
        if not os.path.exists(p):
            err(f"style.histogram file not found: {hist_path}")

    palette = MaterialPalette.default()
    pal_doc = doc.get("palette") or {}
    if not isinstance(pal_doc, dict):
        err("'palette' must be a mapping")
        pal_doc = {}
    for mat_name, entry in pal_doc.items():
        try:
            mat = Material.from_label(mat_name)
            if mat == Material.SKIN:
                raise ConfigError("skin has no palette entry")
            if not isinstance(entry, dict):
                raise ConfigError("palette entries are mappings with "
                                  "'color' and/or 'alpha'")
            color = entry.get("color")
            if color is not None:
                color = np.asarray(color, np.float64) / 255.0
            palette = palette.override(mat, color=color,
                                       alpha=entry.get("alpha"))
        except (ConfigError, TypeError, ValueError) as e:
            err(f"palette.{mat_name}: {e}")

    cam_doc = doc.get("camera") or {}
    if not isinstance(cam_doc, dict):
        err("'camera' must be a mapping")
        cam_doc = {}
    for k in cam_doc:
        if k not in _CAMERA_KEYS:
            err(f"camera: unknown key {k!r}")
    vfov = cam_doc.get("vfov", 45.0)
    resolution = cam_doc.get("resolution", [512, 512])
    camera = None
    view = None
    explicit = all(k in cam_doc for k in ("position", "look_at"))
    if explicit and "view" in cam_doc:
        err("camera: give either 'view' or an explicit position/look_at, "
            "not both")
    try:
        if not (isinstance(resolution, (list, tuple)) and len(resolution) == 2):
            raise ConfigError(f"camera.resolution must be [w, h], got "
                              f"{resolution!r}")
        if explicit:
            camera = Camera(np.asarray(cam_doc["position"], np.float64),
                            np.asarray(cam_doc["look_at"], np.float64),
                            np.asarray(cam_doc.get("up", [0.0, 1.0, 0.0]),
                                       np.float64),
                            vfov, (resolution[0], resolution[1]))
        else:
            view = str(cam_doc.get("view", "front"))
            if view not in ("front", "back", "side"):
                raise ConfigError(f"camera.view must be front, back or side, "
                                  f"got {view!r}")
            if not (0.0 < float(vfov) < 180.0):
                raise ConfigError(f"camera.vfov must be in (0, 180), got {vfov}")
    except (ConfigError, TypeError, ValueError) as e:
        err(f"camera: {e}")

    samp_doc = doc.get("sampling") or {}
    if not isinstance(samp_doc, dict):
        err("'sampling' must be a mapping")
        samp_doc = {}
    for k in samp_doc:
        if k not in _SAMPLING_KEYS:
            err(f"sampling: unknown key {k!r}")
    settings = SampleSettings()
    try:
        settings = SampleSettings(
            dt0=samp_doc.get("dt0"),
            jitter=bool(samp_doc.get("jitter", True)),
            seed=samp_doc.get("seed", 0),
            background=tuple(samp_doc.get("background", (0.0, 0.0, 0.0))))
    except (ConfigError, TypeError, ValueError) as e:
        err(f"sampling: {e}")

    output = doc.get("output")
    if not isinstance(output, str) or not output:
        err("'output' must be a file path")
        output = ""

    frames = doc.get("frames", [0, 0])
    if isinstance(frames, int):
        frames = [frames, frames]
    if not (isinstance(frames, (list, tuple)) and len(frames) == 2
            and all(isinstance(x, int) for x in frames)):
        err(f"'frames' must be [first, last], got {frames!r}")
        frames = (0, 0)
    elif frames[0] > frames[1] or frames[0] < 0:
        err(f"'frames' range invalid: {frames!r}")
        frames = (0, 0)
    frames = (int(frames[0]), int(frames[1]))

    gamma = doc.get("gamma", False)
    if not isinstance(gamma, bool):
        err(f"'gamma' must be true or false, got {gamma!r}")
        gamma = False

    if output and frames[1] > frames[0] and "{frame" not in output:
        err("multi-frame jobs need a {frame} placeholder in 'output'")

    # existence checks for every frame in the range
    if volume:
        for fr in range(frames[0], frames[1] + 1):
            try:
                p = substitute_frame(volume, fr)
            except ConfigError as e:
                err(str(e))
                break
            full = p if os.path.isabs(p) else os.path.join(base, p)
            if not os.path.exists(full):
                err(f"volume file not found: {p}")
            if "{frame" not in volume:
                break
    for spec in meshes:
        for fr in range(frames[0], frames[1] + 1):
            try:
                p = substitute_frame(spec.path, fr)
            except ConfigError as e:
                err(str(e))
                break
            full = p if os.path.isabs(p) else os.path.join(base, p)
            if not os.path.exists(full):
                err(f"mesh file not found: {p}")
            if "{frame" not in spec.path:
                break

    if errors:
        raise ConfigError(errors)
    return RenderJob(volume=volume, meshes=meshes, output=output, style=style,
                     histogram_path=hist_path, bins=bins, palette=palette,
                     camera=camera, view=view, vfov=float(vfov),
                     resolution=(int(resolution[0]), int(resolution[1])),
                     settings=settings, frames=frames, gamma=gamma,
                     base_dir=base)
