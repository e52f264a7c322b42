# coding: utf-8
"""
=======================================
What the transfer parameters do
=======================================

The two style parameters a and b shape the power curve
clamp(a * (s / s_max) ** b, 0, 1) that modulates colour with the local
scalar value. This script first tabulates the curve directly through
the public evaluators, then renders a contact sheet of one scene under
a grid of (a, b) choices, and finally shows how the fat-density lookup
of the interior style reacts to histogram smoothing.
"""

from pathlib import Path

import numpy as np

import segray as sg

out = Path(__file__).parent / "out"
out.mkdir(exist_ok=True)

# %%
# The curve, numerically
# ----------------------
# eval_* return (rgb, alpha) for one sample. Muscle under the interior
# style scales its colour by the curve and keeps alpha constant, so the
# red channel divided by the palette red IS the curve value.

grid = sg.VolumeGrid(np.full((2, 2, 2), 100.0, np.float32), (1, 1, 1),
                     (0, 0, 0))
palette = sg.MaterialPalette.default()
base_red = palette.color[int(sg.Material.MUSCLE)][0]

print("s/s_max   a=1,b=1   a=2,b=1   a=1,b=0.5  a=1,b=3")
for frac in (0.0, 0.1, 0.25, 0.5, 0.75, 1.0):
    row = [frac]
    for a, b in [(1, 1), (2, 1), (1, 0.5), (1, 3)]:
        c, _ = sg.eval_interior(sg.Material.MUSCLE, frac * 100.0, grid,
                                sg.StyleParams(a=a, b=b), palette)
        row.append(c[0] / base_red)
    print("  {:.2f}    {:6.3f}    {:6.3f}    {:6.3f}    {:6.3f}".format(*row))

# %%
# A contact sheet over (a, b)
# ---------------------------
# One small scene rendered under every parameter pair, tiled into a
# single image: rows sweep b (curve exponent), columns sweep a (gain).

scene = sg.build_scene([
    sg.make_box((-8, -8, -8), (8, 8, 8), sg.Material.SKIN, "skin"),
    sg.make_icosphere((-3, 0, 0), 4.0, 2, sg.Material.BONE, "bone"),
    sg.make_icosphere((3.5, 1, 0), 3.0, 2, sg.Material.MUSCLE, "muscle"),
])
n = 40
ax = np.linspace(-9.0, 9.0, n)
gx, gy, gz = np.meshgrid(ax, ax, ax, indexing="ij")
values = (50.0 + 35.0 * np.sin(gx / 2.5) * np.cos(gy / 2.0)
          + 10.0 * np.sin(gz)).clip(0).astype(np.float32)
vol = sg.VolumeGrid(values, (18.0 / (n - 1),) * 3, (-9.0, -9.0, -9.0))

labels = sg.classify_nodes(scene, vol)
hist = sg.region_histogram(vol, labels, sg.Material.FAT, bin_count=64)
cam = sg.camera_preset("front", vol, vfov=40.0, resolution=(160, 160))
settings = sg.SampleSettings(dt0=0.4, seed=3)

rows = []
for b in (0.5, 1.0, 2.5):
    tiles = []
    for a in (0.8, 1.5, 3.0):
        style = sg.Style(sg.StyleKind.INTERIOR,
                         sg.StyleParams(a=a, b=b)).with_hist(hist)
        fb, _ = sg.render_frame(scene, vol, style, palette, cam, settings)
        tiles.append(fb.pixels)
    rows.append(np.hstack(tiles))
sheet = sg.FrameBuffer(np.vstack(rows))
sg.write_image(sheet, str(out / "transfer_sheet.png"), gamma=True)
print(f"\ncontact sheet (b down, a across) -> {out / 'transfer_sheet.png'}")

# %%
# Fat density lookup, raw vs smoothed
# -----------------------------------
# The interior style dims fat samples whose value is rare among fat
# nodes. With smooth=True a (1,2,1)/4 filter runs over the bins first;
# the table is always renormalized so its maximum stays exactly 1.

spiky = sg.Histogram(8, 0.0, 80.0, [0, 12, 0, 40, 2, 0, 9, 1])
raw = sg.StyleParams(fat_hist=spiky).fat_scale()
smoothed = sg.StyleParams(fat_hist=spiky, smooth=True).fat_scale()
np.set_printoptions(precision=3, suppress=True)
print(f"raw      {raw}\nsmoothed {smoothed}")
