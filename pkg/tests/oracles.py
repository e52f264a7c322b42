"""Independent reference implementations used to freeze expected values.

Everything here is deliberately written against the math, not against the
package: exact rational compositing, brute-force all-triangle parity tests,
analytic sphere/box intersections, direct-weight trilinear interpolation.
Tests compare package output to these, never the other way around.
"""

from fractions import Fraction

import numpy as np

# material codes in priority order (higher wins); 5 is the skin container
FAT, LIGAMENT, MUSCLE, TENDON, BONE, SKIN = range(6)
OUTSIDE = -1


def composite_exact(samples, background):
    """Fold acc = alpha*c + (1-alpha)*acc back-to-front in exact rationals.

    samples: iterable of ((r, g, b), alpha) front-to-back, floats.
    Returns a length-3 list of floats converted from exact Fractions.
    """
    acc = [Fraction(b) for b in background]
    for color, alpha in reversed(list(samples)):
        al = Fraction(alpha)
        acc = [al * Fraction(c) + (1 - al) * a for c, a in zip(color, acc)]
    return [float(a) for a in acc]


def _triangle_hits(vertices, faces, origin, direction):
    """All positive ray-triangle ts plus a flag for numerically risky hits.

    A query is risky when any triangle's hit/miss decision is marginal:
    a barycentric coordinate or t sits within epsilon of its threshold, or
    the ray runs nearly parallel to the triangle's plane. Callers retry
    risky queries with a different direction.
    """
    v0 = vertices[faces[:, 0]]
    e1 = vertices[faces[:, 1]] - v0
    e2 = vertices[faces[:, 2]] - v0
    pv = np.cross(direction, e2)
    det = np.einsum("ij,ij->i", e1, pv)
    normal = np.cross(e1, e2)
    nlen = np.linalg.norm(normal, axis=1)
    parallel = np.abs(det) < 1e-9 * nlen
    tv = origin - v0
    # a parallel ray only matters if it runs nearly inside the plane
    plane_dist = np.abs(np.einsum("ij,ij->i", tv, normal))
    diag = np.linalg.norm(vertices.max(axis=0) - vertices.min(axis=0))
    coplanar = parallel & (plane_dist < 1e-6 * nlen * max(diag, 1e-30))
    safe_det = np.where(parallel, 1.0, det)
    inv = 1.0 / safe_det
    u = np.einsum("ij,ij->i", tv, pv) * inv
    qv = np.cross(tv, e1)
    v = qv @ direction * inv
    t = np.einsum("ij,ij->i", e2, qv) * inv
    inside = ~parallel & (u >= 0) & (v >= 0) & (u + v <= 1) & (t > 0)
    e = 1e-9
    near = ~parallel & (u > -e) & (v > -e) & (u + v < 1 + e) \
        & (t > -e * (1 + np.abs(t)))
    marginal = ((np.abs(u) < e) | (np.abs(v) < e)
                | (np.abs(u + v - 1) < e)
                | (np.abs(t) < e * (1 + np.abs(t))))
    risky = bool(((near & marginal) | coplanar).any())
    return np.sort(t[inside]), risky


def point_in_mesh(vertices, faces, point, rng, max_tries=64):
    """Crossing-parity containment via brute force over every triangle.

    Retries with fresh random directions whenever any triangle test is
    numerically marginal, so the answer is reliable for generic points.
    """
    point = np.asarray(point, np.float64)
    for _ in range(max_tries):
        d = rng.normal(size=3)
        n = np.linalg.norm(d)
        if n < 1e-12:
            continue
        d /= n
        ts, risky = _triangle_hits(vertices, faces, point, d)
        if risky:
            continue
        return len(ts) % 2 == 1
    raise RuntimeError(f"no clean parity direction found for point {point}")


def material_at_point(meshes, point, rng):
    """Independent implementation of the priority rule at one point.

    meshes: list of (vertices, faces, code). Returns OUTSIDE when the point
    is not inside a skin mesh, else the highest material code among the
    containing organ meshes, else FAT.
    """
    inside = [code for verts, fcs, code in meshes
              if point_in_mesh(verts, fcs, point, rng)]
    if SKIN not in inside:
        return OUTSIDE
    organs = [c for c in inside if c != SKIN]
    return max(organs) if organs else FAT


def sphere_hits(center, radius, origin, direction):
    """Sorted positive ray parameters of a sphere intersection."""
    oc = np.asarray(origin, np.float64) - np.asarray(center, np.float64)
    d = np.asarray(direction, np.float64)
    a = d @ d
    b = 2.0 * (oc @ d)
    c = oc @ oc - radius * radius
    disc = b * b - 4 * a * c
    if disc < 0:
        return []
    r = np.sqrt(disc)
    return sorted(t for t in ((-b - r) / (2 * a), (-b + r) / (2 * a)) if t > 0)


def box_hits(lo, hi, origin, direction):
    """Sorted positive ray parameters where the ray crosses the box surface."""
    lo = np.asarray(lo, np.float64)
    hi = np.asarray(hi, np.float64)
    origin = np.asarray(origin, np.float64)
    direction = np.asarray(direction, np.float64)
    t0, t1 = -np.inf, np.inf
    for ax in range(3):
        if direction[ax] == 0:
            if not (lo[ax] <= origin[ax] <= hi[ax]):
                return []
        else:
            ta = (lo[ax] - origin[ax]) / direction[ax]
            tb = (hi[ax] - origin[ax]) / direction[ax]
            if ta > tb:
                ta, tb = tb, ta
            t0 = max(t0, ta)
            t1 = min(t1, tb)
    if t0 > t1:
        return []
    return [t for t in (t0, t1) if t > 0]


def trilinear_reference(values, spacing, origin, p):
    """Direct 8-corner weighted sum, independent of the nested-lerp form."""
    g = (np.asarray(p, np.float64) - np.asarray(origin, np.float64)) \
        / np.asarray(spacing, np.float64)
    dims = values.shape
    idx = np.minimum(np.floor(g).astype(int), np.array(dims) - 2)
    idx = np.maximum(idx, 0)
    f = g - idx
    total = 0.0
    for di in (0, 1):
        for dj in (0, 1):
            for dk in (0, 1):
                w = ((f[0] if di else 1 - f[0])
                     * (f[1] if dj else 1 - f[1])
                     * (f[2] if dk else 1 - f[2]))
                total += w * float(values[idx[0] + di, idx[1] + dj,
                                          idx[2] + dk])
    return total


def slab_value(kappa, c_emit, length):
    """Analytic emission-absorption solution for a homogeneous slab."""
    return c_emit * (1.0 - np.exp(-kappa * length))


def ppm_reference(u8_pixels):
    """P6 bytes assembled by hand from an (h, w, 3) uint8 array."""
    h, w, _ = u8_pixels.shape
    header = b"P6\n" + f"{w} {h}\n".encode() + b"255\n"
    return header + u8_pixels.tobytes()
