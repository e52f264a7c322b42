import numpy as np
import pytest

import segray as sg


@pytest.fixture
def rng():
    return np.random.default_rng(20240817)


@pytest.fixture
def ramp_grid():
    """16^3 unit-spaced grid whose value is a gentle 3-axis ramp."""
    n = 16
    i, j, k = np.meshgrid(np.arange(n), np.arange(n), np.arange(n),
                          indexing="ij")
    vals = (2.0 * i + 3.0 * j + 4.0 * k).astype(np.float32)
    return sg.VolumeGrid(vals, spacing=(1.0, 1.0, 1.0),
                         origin=(0.0, 0.0, 0.0))


@pytest.fixture
def noise_grid():
    """12^3 anisotropic grid with random values, generic origin."""
    r = np.random.default_rng(42)
    vals = r.random((12, 12, 12), dtype=np.float32) * 80.0
    return sg.VolumeGrid(vals, spacing=(0.9, 1.1, 1.3),
                         origin=(-1.0, 2.0, 0.5))


@pytest.fixture
def nested_scene(noise_grid):
    """Skin box strictly inside the grid, one bone and one muscle sphere.

    Built so rays from the preset cameras never need grid-box clipping,
    which the pure-python pipeline helper relies on.
    """
    lo, hi = noise_grid.bounds()
    c = (lo + hi) / 2
    skin = sg.make_box(lo + 0.8, hi - 0.8, sg.Material.SKIN, "skin")
    bone = sg.make_icosphere(c, 2.0, 2, sg.Material.BONE, "bone")
    muscle = sg.make_icosphere(c + np.array([1.5, 0.5, -0.5]), 1.6, 2,
                               sg.Material.MUSCLE, "muscle")
    return sg.build_scene([skin, bone, muscle])


@pytest.fixture
def fat_style(noise_grid):
    return sg.Style(sg.StyleKind.FAT_EMPHASIZED, sg.StyleParams())


@pytest.fixture
def interior_style(noise_grid, nested_scene):
    labels = sg.classify_nodes(nested_scene, noise_grid)
    hist = sg.region_histogram(noise_grid, labels, sg.Material.FAT, 64)
    return sg.Style(sg.StyleKind.INTERIOR, sg.StyleParams(fat_hist=hist))


@pytest.fixture
def palette():
    return sg.MaterialPalette.default()
