"""Procedural watertight meshes for demos and synthetic scenes."""

import numpy as np

from .geometry import LabeledMesh, Material

# unit cube corners / faces, outward winding
_BOX_CORNERS = np.array([
    [0, 0, 0], [1, 0, 0], [1, 1, 0], [0, 1, 0],
    [0, 0, 1], [1, 0, 1], [1, 1, 1], [0, 1, 1],
], np.float64)
_BOX_FACES = np.array([
    [0, 2, 1], [0, 3, 2],   # z = 0
    [4, 5, 6], [4, 6, 7],   # z = 1
    [0, 1, 5], [0, 5, 4],   # y = 0
    [3, 6, 2], [3, 7, 6],   # y = 1
    [0, 4, 7], [0, 7, 3],   # x = 0
    [1, 2, 6], [1, 6, 5],   # x = 1
], np.int32)


def make_box(lo, hi, material=Material.SKIN, name="box"):
    """Axis-aligned closed box spanning lo..hi."""
    lo = np.asarray(lo, np.float64)
    hi = np.asarray(hi, np.float64)
    verts = lo + _BOX_CORNERS * (hi - lo)
    return LabeledMesh(name, material, verts, _BOX_FACES.copy())


def make_icosphere(center, radius, subdivisions=3, material=Material.SKIN,
                   name="sphere"):
    """Closed icosphere; 20 * 4**subdivisions triangles."""
    t = (1.0 + np.sqrt(5.0)) / 2.0
    verts = np.array([
        [-1, t, 0], [1, t, 0], [-1, -t, 0], [1, -t, 0],
        [0, -1, t], [0, 1, t], [0, -1, -t], [0, 1, -t],
        [t, 0, -1], [t, 0, 1], [-t, 0, -1], [-t, 0, 1],
    ], np.float64)
    verts /= np.linalg.norm(verts[0])
    faces = np.array([
        [0, 11, 5], [0, 5, 1], [0, 1, 7], [0, 7, 10], [0, 10, 11],
        [1, 5, 9], [5, 11, 4], [11, 10, 2], [10, 7, 6], [7, 1, 8],
        [3, 9, 4], [3, 4, 2], [3, 2, 6], [3, 6, 8], [3, 8, 9],
        [4, 9, 5], [2, 4, 11], [6, 2, 10], [8, 6, 7], [9, 8, 1],
    ], np.int32)
    verts = list(verts)
    cache = {}

    def midpoint(i, j):
        key = (min(i, j), max(i, j))
        if key not in cache:
            m = (verts[i] + verts[j]) * 0.5
            m = m / np.linalg.norm(m)
            cache[key] = len(verts)
            verts.append(m)
        return cache[key]

    for _ in range(subdivisions):
        new_faces = []
        for a, b, c in faces:
            ab = midpoint(a, b)
            bc = midpoint(b, c)
            ca = midpoint(c, a)
            new_faces += [[a, ab, ca], [b, bc, ab], [c, ca, bc], [ab, bc, ca]]
        faces = np.array(new_faces, np.int32)
        cache.clear()

    v = np.array(verts) * float(radius) + np.asarray(center, np.float64)
    return LabeledMesh(name, material, v, faces)


def make_tilted_slab(z_lo, z_hi, extent, tilt, material, name="slab"):
    """Closed slab spanning |x|,|y| <= extent whose top face z = z_hi + tilt*y.

    Used for planar-boundary scenes: the top is an exactly planar, tilted
    material boundary.
    """
    e = float(extent)
    pts = []
    for y in (-e, e):
        for x in (-e, e):
            pts.append([x, y, z_lo])
    for y in (-e, e):
        for x in (-e, e):
            pts.append([x, y, z_hi + tilt * y])
    verts = np.array(pts, np.float64)
    faces = np.array([
        [0, 2, 1], [1, 2, 3],       # bottom
        [4, 5, 6], [5, 7, 6],       # top (tilted)
        [0, 1, 5], [0, 5, 4],       # y = -e
        [2, 6, 7], [2, 7, 3],       # y = +e
        [0, 4, 6], [0, 6, 2],       # x = -e
        [1, 3, 7], [1, 7, 5],       # x = +e
    ], np.int32)
    return LabeledMesh(name, material, verts, faces)
