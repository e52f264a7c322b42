"""Per-material transfer functions, in two styles.

Both styles share one palette of base colours and opacities per material:

    material   colour (r, g, b)/255     alpha
    bone       (244, 214, 145)          1.0
    muscle     (255,  98,  56)          1.0
    ligament   (170, 170, 170)          1.0
    tendon     (255, 255, 255)          1.0
    fat        (177, 122, 101)          0.6

Interior-emphasized style: non-fat materials scale their colour by the
clamped power curve clamp(a*(s/s_max)**b, 0, 1) and keep constant alpha; fat
scales both colour and alpha by the normalized density of the fat-region
value histogram, which makes common fat values (large rho) prominent and
rare ones fade.  Fat-emphasized style: fat takes the power curve with
constant alpha; every other material is constant (C, alpha).

The curve parameters default to a=2.0, b=1.0. These defaults are arbitrary
but reproducible; they are not derived from any published figure and are
meant to be tuned per dataset.
"""

from dataclasses import dataclass, field, replace
from enum import Enum

import numpy as np

from . import _kernels
from .errors import ConfigError
from .geometry import Material
from .volume import Histogram

_DEFAULT_COLORS = {
    Material.FAT: (177, 122, 101),
    Material.LIGAMENT: (170, 170, 170),
    Material.MUSCLE: (255, 98, 56),
    Material.TENDON: (255, 255, 255),
    Material.BONE: (244, 214, 145),
}
_DEFAULT_ALPHAS = {
    Material.FAT: 0.6,
    Material.LIGAMENT: 1.0,
    Material.MUSCLE: 1.0,
    Material.TENDON: 1.0,
    Material.BONE: 1.0,
}


@dataclass
class MaterialPalette:
    """Base colour (linear [0,1] rgb) and opacity per sample material."""

    color: np.ndarray   # (5, 3) float64, indexed by Material code
    alpha: np.ndarray   # (5,) float64

    def __post_init__(self):
        self.color = np.ascontiguousarray(self.color, np.float64)
        self.alpha = np.ascontiguousarray(self.alpha, np.float64)
        if self.color.shape != (5, 3) or self.alpha.shape != (5,):
            raise ConfigError("palette needs 5 rgb rows and 5 alphas")
        if not (np.isfinite(self.color).all() and np.isfinite(self.alpha).all()):
            raise ConfigError("palette entries must be finite")
        if self.color.min() < 0 or self.color.max() > 1:
            raise ConfigError("palette colours must lie in [0, 1]")
        if self.alpha.min() < 0 or self.alpha.max() > 1:
            raise ConfigError("palette alphas must lie in [0, 1]")

    @classmethod
    def default(cls):
        color = np.zeros((5, 3))
        alpha = np.zeros(5)
        for m, rgb in _DEFAULT_COLORS.items():
            color[int(m)] = np.array(rgb, np.float64) / 255.0
            alpha[int(m)] = _DEFAULT_ALPHAS[m]
        return cls(color, alpha)

    def override(self, material, color=None, alpha=None):
        """New palette with one material's colour and/or alpha replaced."""
        c = self.color.copy()
        a = self.alpha.copy()
        if color is not None:
            c[int(material)] = np.asarray(color, np.float64)
        if alpha is not None:
            a[int(material)] = float(alpha)
        return MaterialPalette(c, a)


class StyleKind(Enum):
    INTERIOR = "interior-emphasized"
    FAT_EMPHASIZED = "fat-emphasized"

    @classmethod
    def parse(cls, text):
        t = str(text).strip().lower()
        if t in ("interior", "interior-emphasized"):
            return cls.INTERIOR
        if t in ("fat", "fat-emphasized"):
            return cls.FAT_EMPHASIZED
        raise ConfigError(f"unknown style {text!r}; expected "
                          f"'interior-emphasized' or 'fat-emphasized'")


@dataclass
class StyleParams:
    """Power-curve parameters plus the fat-histogram inputs.

    a, b must be positive and finite. fat_hist is required by the interior
    style (the renderer refuses to start without it); smooth applies a
    (1,2,1)/4 triangular filter over neighbouring bins before the density
    lookup is normalized, so the rho == rho_max -> 1 endpoint always holds.
    """

    a: float = 2.0
    b: float = 1.0
    fat_hist: Histogram | None = None
    smooth: bool = False
    _fat_scale: np.ndarray = field(default=None, init=False, repr=False)

    def __post_init__(self):
        self.a = float(self.a)
        self.b = float(self.b)
        if not (np.isfinite(self.a) and self.a > 0):
            raise ConfigError(f"style parameter a must be > 0, got {self.a}")
        if not (np.isfinite(self.b) and self.b > 0):
            raise ConfigError(f"style parameter b must be > 0, got {self.b}")

    def fat_scale(self):
        """Normalized density lookup table rho(s)/rho_max as float64 bins."""
        if self._fat_scale is None:
            if self.fat_hist is None:
                raise ConfigError("interior style requires a fat histogram "
                                  "(compute one or load a cached file)")
            counts = self.fat_hist.counts.astype(np.float64)
            if self.smooth and counts.size > 1:
                counts = np.convolve(counts, [0.25, 0.5, 0.25], mode="same")
            peak = counts.max()
            if peak > 0:
                self._fat_scale = counts / peak
            else:
                self._fat_scale = np.zeros_like(counts)
        return self._fat_scale


@dataclass
class Style:
    """A complete style choice: which mapping, and its parameters."""

    kind: StyleKind = StyleKind.FAT_EMPHASIZED
    params: StyleParams = field(default_factory=StyleParams)

    def with_hist(self, hist):
        return Style(self.kind, replace(self.params, fat_hist=hist))


def _eval(style_code, material, s, s_max, params, palette):
    material = Material(material)
    if material == Material.SKIN:
        raise ConfigError("skin is a containment label, not a sample material")
    if style_code == _kernels.STYLE_INTERIOR and material == Material.FAT:
        scale = params.fat_scale()
        lo, hi = params.fat_hist.lo, params.fat_hist.hi
    else:
        scale = np.zeros(1)
        lo, hi = 0.0, 0.0
    r, g, b, a = _kernels.transfer_eval(
        style_code, int(material), float(s), params.a, params.b,
        float(s_max), palette.color, palette.alpha, scale, lo, hi)
    return np.array([r, g, b]), float(a)


def eval_interior(material, s, grid, params, palette):
    """Interior-emphasized (C, alpha) for one sample.

    grid supplies s_max for the power curve; params must carry the fat
    histogram. Outputs are already clamped to [0, 1].
    """
    return _eval(_kernels.STYLE_INTERIOR, material, s, grid.s_max, params,
                 palette)


def eval_fat_emphasized(material, s, grid, params, palette):
    """Fat-emphasized (C, alpha) for one sample."""
    return _eval(_kernels.STYLE_FAT_EMPHASIZED, material, s, grid.s_max,
                 params, palette)
