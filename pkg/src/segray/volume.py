"""Uniform scalar grids: storage, trilinear sampling, region histograms.

A volume is a node-centred uniform grid. Node (i, j, k) sits at
``origin + (i*sx, j*sy, k*sz)`` in world units (mm) and the sampling domain
is the axis-aligned box spanned by the nodes. Values are stored as float32
and are required to be finite and non-negative; ``s_max`` is always the
actual maximum of the stored values.
"""

from dataclasses import dataclass, field

import numpy as np

from . import _kernels
from .errors import ConfigError


@dataclass
class VolumeGrid:
    """Node-centred uniform scalar grid.

    Parameters
    ----------
    values : (nx, ny, nz) array_like
        Scalar samples at the grid nodes. Converted to float32, C-contiguous.
    spacing : (3,) array_like
        Node spacing per axis in mm, all positive.
    origin : (3,) array_like
        World position of node (0, 0, 0) in mm.
    source_dtype : str
        'f32' or 'u16'; the payload dtype this grid was read from (or should
        be written as). In memory everything is float32 (u16 widens exactly).
    """

    values: np.ndarray
    spacing: np.ndarray
    origin: np.ndarray
    source_dtype: str = "f32"
    s_max: float = field(init=False)

    def __post_init__(self):
        v = np.ascontiguousarray(self.values, dtype=np.float32)
        if v.ndim != 3 or min(v.shape) < 1:
            raise ConfigError("volume values must be a 3d array with positive dims")
        if not np.isfinite(v).all():
            raise ConfigError("volume values must all be finite")
        if v.size and float(v.min()) < 0.0:
            raise ConfigError("volume values must be non-negative")
        self.values = v
        self.spacing = np.asarray(self.spacing, dtype=np.float64).reshape(3).copy()
        self.origin = np.asarray(self.origin, dtype=np.float64).reshape(3).copy()
        if not (np.isfinite(self.spacing).all() and (self.spacing > 0).all()):
            raise ConfigError("volume spacing must be positive and finite")
        if not np.isfinite(self.origin).all():
            raise ConfigError("volume origin must be finite")
        if self.source_dtype not in ("f32", "u16"):
            raise ConfigError(f"unknown volume dtype {self.source_dtype!r}")
        self.s_max = float(v.max()) if v.size else 0.0

    @property
    def dims(self):
        return self.values.shape

    def bounds(self):
        """(lo, hi) corners of the node box, each a (3,) float64 array."""
        lo = self.origin.copy()
        hi = self.origin + self.spacing * (np.array(self.dims, np.float64) - 1.0)
        return lo, hi


@dataclass
class Histogram:
    """Value histogram of one labelled node region.

    counts[b] is the number of nodes whose value falls in bin b of
    ``bin_count`` equal bins over [lo, hi]; values equal to hi land in the
    last bin. rho_max is the largest bin count (0 for an empty region).
    """

    bin_count: int
    lo: float
    hi: float
    counts: np.ndarray

    def __post_init__(self):
        self.counts = np.asarray(self.counts, dtype=np.int64)
        if self.counts.shape != (self.bin_count,):
            raise ConfigError("histogram counts length must equal bin_count")
        if self.bin_count < 1:
            raise ConfigError("histogram needs at least one bin")
        if (self.counts < 0).any():
            raise ConfigError("histogram counts must be non-negative")
        if not (np.isfinite(self.lo) and np.isfinite(self.hi) and self.hi >= self.lo):
            raise ConfigError("histogram range must be finite with hi >= lo")

    @property
    def rho_max(self):
        return int(self.counts.max()) if self.bin_count else 0

    @property
    def modal_bin(self):
        return int(np.argmax(self.counts))


def sample_trilinear(grid, p):
    """Trilinear interpolation of the grid at world point p.

    Parameters
    ----------
    grid : VolumeGrid
    p : (3,) array_like, world coordinates in mm.

    Returns
    -------
    float
        Interpolated scalar. Exact stored values are returned at node
        positions, and the result never leaves [min, max] of the
        surrounding cell's corner values.

    Raises
    ------
    ValueError
        If p lies outside the grid's node box. Callers sampling along rays
        are expected to clamp their spans to the box first.
    """
    if min(grid.dims) < 2:
        raise ConfigError("sampling needs at least 2 nodes per axis")
    p = np.asarray(p, dtype=np.float64).reshape(3)
    lo, hi = grid.bounds()
    if not ((p >= lo).all() and (p <= hi).all()):
        raise ValueError(f"sample point {p.tolist()} outside grid box "
                         f"{lo.tolist()}..{hi.tolist()}")
    g = (p - grid.origin) / grid.spacing
    return float(_kernels.sample_clamped(grid.values, g[0], g[1], g[2]))


def bin_index(s, lo, hi, bin_count):
    """Bin of value s in bin_count equal bins over [lo, hi], clamped.

    Matches the render-time lookup exactly: floor((s-lo)/(hi-lo)*bin_count)
    with s == hi mapping to the last bin.
    """
    if hi > lo:
        b = int(np.floor((s - lo) / (hi - lo) * bin_count))
    else:
        b = 0
    return min(max(b, 0), bin_count - 1)


def region_histogram(grid, labels, target, bin_count=256):
    """Histogram of grid values over the nodes labelled ``target``.

    Parameters
    ----------
    grid : VolumeGrid
    labels : (nx, ny, nz) integer array
        Per-node material labels (-1 for outside).
    target : int
        Label selecting the region (e.g. Material.FAT).
    bin_count : int
        Number of equal bins over [0, s_max].

    Returns
    -------
    Histogram
        counts sum to the number of selected nodes exactly; an empty region
        yields all-zero counts (rho_max 0).
    """
    labels = np.asarray(labels)
    if labels.shape != grid.values.shape:
        raise ConfigError("labels shape must match grid dims")
    if bin_count < 1:
        raise ConfigError("bin_count must be >= 1")
    sel = grid.values[labels == int(target)].astype(np.float64)
    hi = grid.s_max
    if sel.size == 0:
        return Histogram(bin_count, 0.0, hi, np.zeros(bin_count, np.int64))
    if hi > 0.0:
        idx = np.floor(sel / hi * bin_count).astype(np.int64)
        np.clip(idx, 0, bin_count - 1, out=idx)
    else:
        idx = np.zeros(sel.size, np.int64)
    counts = np.bincount(idx, minlength=bin_count).astype(np.int64)
    return Histogram(bin_count, 0.0, hi, counts)
