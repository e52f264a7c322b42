"""Labelled triangle meshes, ray intersection, and material segments.

Classification is purely mesh-based: a point's material is decided by which
closed meshes contain it, never by voxel lookups, so material boundaries are
exact to the triangle geometry. Containment follows crossing parity along a
ray. The priority when several meshes overlap: bone > tendon > muscle >
ligament > fat, and any point inside the skin but inside no organ mesh is
fat. Skin is a containment label only; no sample is ever "skin".
"""

from dataclasses import dataclass, field
from enum import IntEnum
from typing import NamedTuple

import numpy as np

from . import _kernels
from .errors import ConfigError


class Material(IntEnum):
    """Tissue material codes. Integer order is priority order (highest wins
    when meshes overlap). SKIN is a mesh label, not a sample material."""

    FAT = 0
    LIGAMENT = 1
    MUSCLE = 2
    TENDON = 3
    BONE = 4
    SKIN = 5

    @classmethod
    def from_label(cls, label):
        if isinstance(label, (cls, int)):
            return cls(label)
        try:
            return cls[str(label).strip().upper()]
        except KeyError:
            raise ConfigError(f"unknown material label {label!r}; expected one of "
                              f"{[m.name.lower() for m in cls]}") from None


OUTSIDE = -1  # node label for "not inside the skin"


@dataclass
class LabeledMesh:
    """A triangle mesh tagged with a material label.

    Degenerate (zero-area) triangles are dropped at construction;
    ``degenerate_dropped`` records how many.
    """

    name: str
    material: Material
    vertices: np.ndarray   # (nv, 3) float64
    faces: np.ndarray      # (nf, 3) int32, indices into vertices
    degenerate_dropped: int = field(default=0, init=False)

    def __post_init__(self):
        self.vertices = np.ascontiguousarray(self.vertices, dtype=np.float64)
        self.faces = np.ascontiguousarray(self.faces, dtype=np.int32)
        if self.vertices.ndim != 2 or self.vertices.shape[1] != 3:
            raise ConfigError(f"mesh {self.name!r}: vertices must be (n, 3)")
        if not np.isfinite(self.vertices).all():
            raise ConfigError(f"mesh {self.name!r}: non-finite vertex")
        if self.faces.ndim != 2 or self.faces.shape[1] != 3:
            raise ConfigError(f"mesh {self.name!r}: faces must be (n, 3)")
        if self.faces.size:
            if self.faces.min() < 0 or self.faces.max() >= len(self.vertices):
                raise ConfigError(f"mesh {self.name!r}: face index out of range")
        self.material = Material(self.material)
        v0 = self.vertices[self.faces[:, 0]]
        e1 = self.vertices[self.faces[:, 1]] - v0
        e2 = self.vertices[self.faces[:, 2]] - v0
        area2 = np.linalg.norm(np.cross(e1, e2), axis=1)
        keep = area2 > 0.0
        self.degenerate_dropped = int((~keep).sum())
        if self.degenerate_dropped:
            self.faces = np.ascontiguousarray(self.faces[keep])


class Hit(NamedTuple):
    t: float
    mesh: int


class Segment(NamedTuple):
    t_enter: float
    t_exit: float
    material: Material


@dataclass
class Scene:
    """Meshes flattened for intersection, plus a BVH over all triangles."""

    meshes: list
    tri_v0: np.ndarray
    tri_e1: np.ndarray
    tri_e2: np.ndarray
    tri_mesh: np.ndarray
    node_lo: np.ndarray
    node_hi: np.ndarray
    node_left: np.ndarray
    node_count: np.ndarray
    mesh_materials: np.ndarray   # (n_meshes,) int8 material codes
    bounds_lo: np.ndarray
    bounds_hi: np.ndarray
    eps_t: float

    @property
    def n_meshes(self):
        return len(self.meshes)

    @property
    def n_triangles(self):
        return len(self.tri_v0)

    def diameter(self):
        return float(np.linalg.norm(self.bounds_hi - self.bounds_lo))


def _build_bvh(tri_lo, tri_hi, leaf_size=4):
    """Median-split BVH. Returns (node_lo, node_hi, node_left, node_count,
    order); leaves hold ``order`` slices [left, left+count)."""
    n = len(tri_lo)
    centroids = (tri_lo + tri_hi) * 0.5
    order = np.arange(n, dtype=np.int64)
    lo_list, hi_list, left_list, count_list = [], [], [], []

    def alloc():
        lo_list.append(None)
        hi_list.append(None)
        left_list.append(0)
        count_list.append(0)
        return len(lo_list) - 1

    stack = [(0, n, alloc())]
    while stack:
        s, e, ni = stack.pop()
        idx = order[s:e]
        lo_list[ni] = tri_lo[idx].min(axis=0)
        hi_list[ni] = tri_hi[idx].max(axis=0)
        cnt = e - s
        c = centroids[idx]
        ext = c.max(axis=0) - c.min(axis=0)
        if cnt <= leaf_size or ext.max() == 0.0:
            left_list[ni] = s
            count_list[ni] = cnt
            continue
        axis = int(np.argmax(ext))
        mid = cnt // 2
        part = np.argpartition(c[:, axis], mid)
        order[s:e] = idx[part]
        li = alloc()
        ri = alloc()
        assert ri == li + 1
        left_list[ni] = li
        count_list[ni] = 0
        stack.append((s, s + mid, li))
        stack.append((s + mid, e, ri))

    return (np.ascontiguousarray(np.array(lo_list, np.float64)),
            np.ascontiguousarray(np.array(hi_list, np.float64)),
            np.array(left_list, np.int32),
            np.array(count_list, np.int32),
            order)


def build_scene(meshes):
    """Assemble labelled meshes into an intersectable Scene.

    Requires at least one skin-labelled mesh and at least one triangle
    overall. Mesh ids are list positions; rendering results do not depend on
    the ordering (covered by tests).
    """
    meshes = list(meshes)
    if not meshes:
        raise ConfigError("scene needs at least one mesh")
    if not any(m.material == Material.SKIN for m in meshes):
        raise ConfigError("scene needs a skin mesh (none labelled skin)")
    v0s, e1s, e2s, mids = [], [], [], []
    for mi, mesh in enumerate(meshes):
        if len(mesh.faces) == 0:
            raise ConfigError(f"mesh {mesh.name!r} has no usable triangles")
        v0 = mesh.vertices[mesh.faces[:, 0]]
        v0s.append(v0)
        e1s.append(mesh.vertices[mesh.faces[:, 1]] - v0)
        e2s.append(mesh.vertices[mesh.faces[:, 2]] - v0)
        mids.append(np.full(len(mesh.faces), mi, np.int32))
    tri_v0 = np.ascontiguousarray(np.concatenate(v0s))
    tri_e1 = np.ascontiguousarray(np.concatenate(e1s))
    tri_e2 = np.ascontiguousarray(np.concatenate(e2s))
    tri_mesh = np.concatenate(mids)
    p1 = tri_v0 + tri_e1
    p2 = tri_v0 + tri_e2
    tri_lo = np.minimum(np.minimum(tri_v0, p1), p2)
    tri_hi = np.maximum(np.maximum(tri_v0, p1), p2)
    node_lo, node_hi, node_left, node_count, order = _build_bvh(tri_lo, tri_hi)
    blo = tri_lo.min(axis=0)
    bhi = tri_hi.max(axis=0)
    eps_t = 1e-7 * float(np.linalg.norm(bhi - blo))
    return Scene(
        meshes=meshes,
        tri_v0=np.ascontiguousarray(tri_v0[order]),
        tri_e1=np.ascontiguousarray(tri_e1[order]),
        tri_e2=np.ascontiguousarray(tri_e2[order]),
        tri_mesh=np.ascontiguousarray(tri_mesh[order]),
        node_lo=node_lo,
        node_hi=node_hi,
        node_left=node_left,
        node_count=node_count,
        mesh_materials=np.array([int(m.material) for m in meshes], np.int8),
        bounds_lo=blo,
        bounds_hi=bhi,
        eps_t=eps_t,
    )


def intersect_all(scene, origin, direction):
    """All t > 0 hits of one ray against every mesh, sorted ascending by t.

    Coincident hits on the same mesh (within eps_t, e.g. a ray crossing a
    shared triangle edge) are reported once so crossing parity survives.
    Returns a list of Hit(t, mesh).
    """
    origin = np.asarray(origin, np.float64).reshape(3)
    direction = np.asarray(direction, np.float64).reshape(3)
    hit_t = np.empty(_kernels.MAX_HITS, np.float64)
    hit_m = np.empty(_kernels.MAX_HITS, np.int32)
    stack = np.empty(_kernels.BVH_STACK, np.int32)
    last_t = np.empty(scene.n_meshes, np.float64)
    n = _kernels.intersect_all_into(
        scene.node_lo, scene.node_hi, scene.node_left, scene.node_count,
        scene.tri_v0, scene.tri_e1, scene.tri_e2, scene.tri_mesh,
        origin[0], origin[1], origin[2],
        direction[0], direction[1], direction[2],
        scene.eps_t, hit_t, hit_m, stack, last_t)
    return [Hit(float(hit_t[i]), int(hit_m[i])) for i in range(n)]


def assign_material(active):
    """Material of a point given the set of materials whose meshes contain it.

    The set must include SKIN (points outside the skin have no material).
    Highest-priority non-skin material wins; skin alone means fat.
    """
    active = {Material(m) for m in active}
    assert Material.SKIN in active, "assign_material called outside the skin"
    organs = [m for m in active if m != Material.SKIN]
    if not organs:
        return Material.FAT
    return Material(max(int(m) for m in organs))


def build_segments(hits, mesh_materials, eps_t=0.0, start_inside=None,
                   t_start=None):
    """Decompose a sorted hit list into skin-interior material segments.

    Parameters
    ----------
    hits : sequence of (t, mesh_id)
        Ascending by t (as produced by intersect_all).
    mesh_materials : sequence of Material, or a Scene
        Material per mesh id.
    eps_t : float
        Hits within eps_t of each other collapse to a single boundary;
        meshes currently inside toggle out before others toggle in, so
        exactly-touching surfaces cannot produce zero-length segments.
    start_inside : sequence of bool, optional
        Per-mesh containment at the ray origin (default: outside everything).
    t_start : float, optional
        Where the first span opens when the origin is already inside the
        skin (defaults to eps_t).

    Returns
    -------
    (segments, warnings) : (list of Segment, int)
        Consecutive segments share boundaries exactly; one segment is
        emitted per inter-hit interval (same-material neighbours are not
        merged). warnings counts meshes left dangling "inside" at the end
        of the hit list (odd crossing count); dangling spans are discarded.
    """
    if isinstance(mesh_materials, Scene):
        mats = mesh_materials.mesh_materials
        if t_start is None:
            t_start = mesh_materials.eps_t
        eps_t = mesh_materials.eps_t
    else:
        mats = np.array([int(Material(m)) for m in mesh_materials], np.int8)
    n_meshes = len(mats)
    if t_start is None:
        t_start = eps_t
    hit_t = np.array([h[0] for h in hits], np.float64)
    hit_m = np.array([h[1] for h in hits], np.int32)
    if hit_m.size and (hit_m.min() < 0 or hit_m.max() >= n_meshes):
        raise ConfigError("hit references mesh id outside the scene")
    if np.any(np.diff(hit_t) < 0):
        raise ConfigError("hit list must be sorted ascending by t")
    start = np.zeros(n_meshes, np.uint8)
    if start_inside is not None:
        start[:] = np.asarray(start_inside, bool).astype(np.uint8)
    seg0 = np.empty(len(hits) + 1, np.float64)
    seg1 = np.empty(len(hits) + 1, np.float64)
    segm = np.empty(len(hits) + 1, np.int8)
    parity = np.empty(max(n_meshes, 1), np.uint8)
    cnt = np.empty(6, np.int64)
    nseg, nwarn = _kernels.build_segments_into(
        hit_t, hit_m, len(hits), mats, start, float(eps_t), float(t_start),
        seg0, seg1, segm, parity, cnt)
    segs = [Segment(float(seg0[i]), float(seg1[i]), Material(int(segm[i])))
            for i in range(nseg)]
    return segs, int(nwarn)


def point_inside_counts(scene, point, direction=None):
    """Per-mesh containment of a world point by crossing parity.

    Casts one ray from the point (toward the scene centre unless a direction
    is given) and counts hits per mesh; odd means inside. Uses the same
    intersection path as rendering, so containment agrees with segments.
    """
    point = np.asarray(point, np.float64).reshape(3)
    if direction is None:
        centre = (scene.bounds_lo + scene.bounds_hi) * 0.5
        direction = centre - point
        if np.linalg.norm(direction) == 0.0:
            direction = np.array([1.0, 0.0, 0.0])
    counts = np.zeros(scene.n_meshes, np.int64)
    for h in intersect_all(scene, point, direction):
        counts[h.mesh] += 1
    return (counts % 2).astype(np.uint8)


def classify_nodes(scene, grid):
    """Label every grid node with its material (OUTSIDE outside the skin).

    One axis-aligned ray is cast per (j, k) grid column and decomposed with
    build_segments, so node labels agree exactly with render-time
    classification. Node containment is half-open: a node exactly on a
    segment's exit boundary belongs to the next segment (or outside).
    """
    nx, ny, nz = grid.dims
    labels = np.empty((nx, ny, nz), np.int8)
    lo = min(float(scene.bounds_lo[0]), float(grid.origin[0]))
    ray_ox = lo - 1.0 - 1e-3 * scene.diameter()
    _kernels.classify_kernel(
        scene.node_lo, scene.node_hi, scene.node_left, scene.node_count,
        scene.tri_v0, scene.tri_e1, scene.tri_e2, scene.tri_mesh,
        scene.mesh_materials, scene.eps_t, ray_ox,
        grid.origin[0], grid.origin[1], grid.origin[2],
        grid.spacing[0], grid.spacing[1], grid.spacing[2], labels)
    return labels
