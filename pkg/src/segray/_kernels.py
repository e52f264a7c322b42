"""Compiled kernels shared by the geometry and raycast layers.

Everything here is numba-jitted and operates on flat numpy arrays. The Python
API modules own validation and object construction; these functions are the
single implementation of the per-ray math, so the slow per-op Python paths and
the parallel frame renderer cannot drift apart numerically.

Material codes used throughout: 0 fat, 1 ligament, 2 muscle, 3 tendon,
4 bone, 5 skin (skin is a containment label, never a sample material).
Label -1 marks nodes outside the skin.
"""

import os

# Allow requesting more numba workers than this machine has cores; thread
# count must never change output bytes, so oversubscription is harmless.
os.environ.setdefault("NUMBA_NUM_THREADS", "16")

import math

import numpy as np
from numba import njit, prange, uint64

MAX_HITS = 1024          # per-ray hit capacity; overflow surfaces as parity warnings
BVH_STACK = 128          # balanced median splits keep depth well under this
GOLDEN = np.uint64(0x9E3779B97F4A7C15)
INV_2_53 = 1.1102230246251565e-16  # exactly 2**-53

M_FAT, M_LIGAMENT, M_MUSCLE, M_TENDON, M_BONE, M_SKIN = 0, 1, 2, 3, 4, 5


# ---------------------------------------------------------------------------
# counter-based RNG (splitmix64 finalizer)
# ---------------------------------------------------------------------------

@njit(uint64(uint64), cache=True)
def _mix64(z):
    z = z + np.uint64(0x9E3779B97F4A7C15)
    z = (z ^ (z >> np.uint64(30))) * np.uint64(0xBF58476D1CE4E5B9)
    z = (z ^ (z >> np.uint64(27))) * np.uint64(0x94D049BB133111EB)
    return z ^ (z >> np.uint64(31))


@njit(uint64(uint64, uint64, uint64, uint64), cache=True)
def pixel_key(seed, frame, px, py):
    k = _mix64(seed)
    k = _mix64(k ^ frame)
    return _mix64(k ^ ((px << np.uint64(32)) | py))


@njit(cache=True)
def stream_u01(key, index):
    """index-th uniform [0, 1) draw of the stream identified by key."""
    z = _mix64(key + np.uint64(index + 1) * GOLDEN)
    return np.float64(z >> np.uint64(11)) * INV_2_53


# ---------------------------------------------------------------------------
# trilinear sampling
# ---------------------------------------------------------------------------

@njit(cache=True)
def sample_clamped(values, gx, gy, gz):
    """Trilinear sample at node coordinates, clamped to the node box."""
    nx, ny, nz = values.shape
    if gx < 0.0:
        gx = 0.0
    elif gx > nx - 1.0:
        gx = nx - 1.0
    if gy < 0.0:
        gy = 0.0
    elif gy > ny - 1.0:
        gy = ny - 1.0
    if gz < 0.0:
        gz = 0.0
    elif gz > nz - 1.0:
        gz = nz - 1.0
    i = int(gx)
    j = int(gy)
    k = int(gz)
    if i > nx - 2:
        i = nx - 2
    if j > ny - 2:
        j = ny - 2
    if k > nz - 2:
        k = nz - 2
    fx = gx - i
    fy = gy - j
    fz = gz - k
    c000 = np.float64(values[i, j, k])
    c100 = np.float64(values[i + 1, j, k])
    c010 = np.float64(values[i, j + 1, k])
    c110 = np.float64(values[i + 1, j + 1, k])
    c001 = np.float64(values[i, j, k + 1])
    c101 = np.float64(values[i + 1, j, k + 1])
    c011 = np.float64(values[i, j + 1, k + 1])
    c111 = np.float64(values[i + 1, j + 1, k + 1])
    c00 = c000 * (1.0 - fx) + c100 * fx
    c10 = c010 * (1.0 - fx) + c110 * fx
    c01 = c001 * (1.0 - fx) + c101 * fx
    c11 = c011 * (1.0 - fx) + c111 * fx
    c0 = c00 * (1.0 - fy) + c10 * fy
    c1 = c01 * (1.0 - fy) + c11 * fy
    return c0 * (1.0 - fz) + c1 * fz


# ---------------------------------------------------------------------------
# ray / box / triangle intersection
# ---------------------------------------------------------------------------

@njit(cache=True)
def ray_aabb(ox, oy, oz, dx, dy, dz, lx, ly, lz, hx, hy, hz):
    """Slab test. Returns (overlaps, t_near, t_far), unclamped by t=0."""
    t0 = -1e300
    t1 = 1e300
    if dx == 0.0:
        if ox < lx or ox > hx:
            return False, 0.0, 0.0
    else:
        inv = 1.0 / dx
        ta = (lx - ox) * inv
        tb = (hx - ox) * inv
        if ta > tb:
            ta, tb = tb, ta
        if ta > t0:
            t0 = ta
        if tb < t1:
            t1 = tb
    if dy == 0.0:
        if oy < ly or oy > hy:
            return False, 0.0, 0.0
    else:
        inv = 1.0 / dy
        ta = (ly - oy) * inv
        tb = (hy - oy) * inv
        if ta > tb:
            ta, tb = tb, ta
        if ta > t0:
            t0 = ta
        if tb < t1:
            t1 = tb
    if dz == 0.0:
        if oz < lz or oz > hz:
            return False, 0.0, 0.0
    else:
        inv = 1.0 / dz
        ta = (lz - oz) * inv
        tb = (hz - oz) * inv
        if ta > tb:
            ta, tb = tb, ta
        if ta > t0:
            t0 = ta
        if tb < t1:
            t1 = tb
    if t0 > t1:
        return False, 0.0, 0.0
    return True, t0, t1


@njit(cache=True)
def intersect_all_into(node_lo, node_hi, node_left, node_count,
                       tri_v0, tri_e1, tri_e2, tri_mesh,
                       ox, oy, oz, dx, dy, dz, eps_t,
                       hit_t, hit_mesh, stack, last_t):
    """All t>0 ray/triangle hits, sorted ascending, same-mesh ties deduped.

    hit_t / hit_mesh / stack / last_t are caller-provided scratch. Returns the
    number of retained hits. Hits beyond capacity are dropped (the resulting
    odd parity is reported downstream as a warning).
    """
    n = 0
    sp = 1
    stack[0] = 0
    while sp > 0:
        sp -= 1
        ni = stack[sp]
        ok, tb0, tb1 = ray_aabb(ox, oy, oz, dx, dy, dz,
                                node_lo[ni, 0], node_lo[ni, 1], node_lo[ni, 2],
                                node_hi[ni, 0], node_hi[ni, 1], node_hi[ni, 2])
        if not ok or tb1 <= 0.0:
            continue
        c = node_count[ni]
        if c > 0:
            first = node_left[ni]
            for q in range(first, first + c):
                e1x = tri_e1[q, 0]
                e1y = tri_e1[q, 1]
                e1z = tri_e1[q, 2]
                e2x = tri_e2[q, 0]
                e2y = tri_e2[q, 1]
                e2z = tri_e2[q, 2]
                pvx = dy * e2z - dz * e2y
                pvy = dz * e2x - dx * e2z
                pvz = dx * e2y - dy * e2x
                det = e1x * pvx + e1y * pvy + e1z * pvz
                if -1e-12 < det < 1e-12:
                    continue
                inv = 1.0 / det
                tvx = ox - tri_v0[q, 0]
                tvy = oy - tri_v0[q, 1]
                tvz = oz - tri_v0[q, 2]
                u = (tvx * pvx + tvy * pvy + tvz * pvz) * inv
                if u < 0.0 or u > 1.0:
                    continue
                qvx = tvy * e1z - tvz * e1y
                qvy = tvz * e1x - tvx * e1z
                qvz = tvx * e1y - tvy * e1x
                v = (dx * qvx + dy * qvy + dz * qvz) * inv
                if v < 0.0 or u + v > 1.0:
                    continue
                t = (e2x * qvx + e2y * qvy + e2z * qvz) * inv
                if t > 0.0 and n < MAX_HITS:
                    hit_t[n] = t
                    hit_mesh[n] = tri_mesh[q]
                    n += 1
        else:
            left = node_left[ni]
            stack[sp] = left
            stack[sp + 1] = left + 1
            sp += 2
    # insertion sort (hit lists are short)
    for i in range(1, n):
        tt = hit_t[i]
        mm = hit_mesh[i]
        j = i - 1
        while j >= 0 and hit_t[j] > tt:
            hit_t[j + 1] = hit_t[j]
            hit_mesh[j + 1] = hit_mesh[j]
            j -= 1
        hit_t[j + 1] = tt
        hit_mesh[j + 1] = mm
    # drop same-mesh hits coincident within eps_t (shared edge/vertex grazing
    # reports the crossing once per triangle; parity needs it once per mesh)
    for m in range(last_t.shape[0]):
        last_t[m] = -1e300
    w = 0
    for i in range(n):
        me = hit_mesh[i]
        tt = hit_t[i]
        if tt - last_t[me] <= eps_t:
            continue
        last_t[me] = tt
        hit_t[w] = tt
        hit_mesh[w] = me
        w += 1
    return w


# ---------------------------------------------------------------------------
# segment building
# ---------------------------------------------------------------------------

@njit(cache=True)
def build_segments_into(hit_t, hit_mesh, n, mesh_mats, start_inside,
                        eps_t, t_start, seg_t0, seg_t1, seg_mat,
                        parity, cnt):
    """Walk the sorted hit list and emit skin-interior material segments.

    Hits closer together than eps_t collapse to one boundary, so "exit before
    enter" ties cannot create zero-length segments. start_inside gives the
    per-mesh containment state at the ray origin; a ray starting inside the
    skin opens its first span at t_start. Returns (segment count, number of
    meshes left dangling inside at the end of the hit list).
    """
    n_meshes = mesh_mats.shape[0]
    for c in range(6):
        cnt[c] = 0
    for m in range(n_meshes):
        parity[m] = start_inside[m]
        if parity[m] == 1:
            cnt[mesh_mats[m]] += 1
    prev_t = t_start
    nseg = 0
    i = 0
    while i < n:
        j = i + 1
        while j < n and hit_t[j] - hit_t[j - 1] <= eps_t:
            j += 1
        tg = hit_t[i]
        if cnt[M_SKIN] > 0 and tg > prev_t:
            mat = M_FAT
            for c in range(M_BONE, M_FAT - 1, -1):
                if cnt[c] > 0:
                    mat = c
                    break
            seg_t0[nseg] = prev_t
            seg_t1[nseg] = tg
            seg_mat[nseg] = mat
            nseg += 1
        for q in range(i, j):
            mq = hit_mesh[q]
            if parity[mq] == 1:
                parity[mq] = 0
                cnt[mesh_mats[mq]] -= 1
            else:
                parity[mq] = 1
                cnt[mesh_mats[mq]] += 1
        prev_t = tg
        i = j
    nwarn = 0
    for m in range(n_meshes):
        if parity[m] == 1:
            nwarn += 1
    return nseg, nwarn


# ---------------------------------------------------------------------------
# transfer function evaluation
# ---------------------------------------------------------------------------

STYLE_INTERIOR = 0
STYLE_FAT_EMPHASIZED = 1


@njit(cache=True)
def transfer_eval(style, mat, s, a, b, smax, pal_col, pal_alpha,
                  fat_scale, hist_lo, hist_hi):
    """Per-sample (C_r, C_g, C_b, alpha_eq) for one material and scalar value.

    Interior style: non-fat materials take the clamped power curve
    a*(s/smax)**b as a colour scale with constant material alpha; fat takes
    the normalized fat-histogram density as both colour and alpha scale.
    Fat-emphasized style: fat takes the power curve with constant alpha;
    non-fat materials are constant (C, alpha).
    """
    if mat == M_FAT:
        if style == STYLE_INTERIOR:
            nbins = fat_scale.shape[0]
            if hist_hi > hist_lo:
                bi = int(np.floor((s - hist_lo) / (hist_hi - hist_lo) * nbins))
            else:
                bi = 0
            if bi < 0:
                bi = 0
            elif bi > nbins - 1:
                bi = nbins - 1
            scale = fat_scale[bi]
            return (scale * pal_col[M_FAT, 0], scale * pal_col[M_FAT, 1],
                    scale * pal_col[M_FAT, 2], scale * pal_alpha[M_FAT])
        ratio = s / smax if smax > 0.0 else 0.0
        scale = a * ratio ** b
        if scale > 1.0:
            scale = 1.0
        elif scale < 0.0:
            scale = 0.0
        return (scale * pal_col[M_FAT, 0], scale * pal_col[M_FAT, 1],
                scale * pal_col[M_FAT, 2], pal_alpha[M_FAT])
    if style == STYLE_INTERIOR:
        ratio = s / smax if smax > 0.0 else 0.0
        scale = a * ratio ** b
        if scale > 1.0:
            scale = 1.0
        elif scale < 0.0:
            scale = 0.0
        return (scale * pal_col[mat, 0], scale * pal_col[mat, 1],
                scale * pal_col[mat, 2], pal_alpha[mat])
    return (pal_col[mat, 0], pal_col[mat, 1], pal_col[mat, 2],
            pal_alpha[mat])


# ---------------------------------------------------------------------------
# node classification (one axis-aligned ray per grid column)
# ---------------------------------------------------------------------------

@njit(parallel=True, cache=True)
def classify_kernel(node_lo, node_hi, node_left, node_count,
                    tri_v0, tri_e1, tri_e2, tri_mesh, mesh_mats,
                    eps_t, ray_ox,
                    gox, goy, goz, gsx, gsy, gsz, labels):
    nx, ny, nz = labels.shape
    n_meshes = mesh_mats.shape[0]
    for j in prange(ny):
        hit_t = np.empty(MAX_HITS, np.float64)
        hit_m = np.empty(MAX_HITS, np.int32)
        stack = np.empty(BVH_STACK, np.int32)
        last_t = np.empty(n_meshes, np.float64)
        seg0 = np.empty(MAX_HITS, np.float64)
        seg1 = np.empty(MAX_HITS, np.float64)
        segm = np.empty(MAX_HITS, np.int8)
        parity = np.empty(n_meshes, np.uint8)
        start = np.zeros(n_meshes, np.uint8)
        cnt = np.empty(6, np.int64)
        oy = goy + j * gsy
        for k in range(nz):
            oz = goz + k * gsz
            nh = intersect_all_into(node_lo, node_hi, node_left, node_count,
                                    tri_v0, tri_e1, tri_e2, tri_mesh,
                                    ray_ox, oy, oz, 1.0, 0.0, 0.0, eps_t,
                                    hit_t, hit_m, stack, last_t)
            nseg, _ = build_segments_into(hit_t, hit_m, nh, mesh_mats, start,
                                          eps_t, eps_t, seg0, seg1, segm,
                                          parity, cnt)
            si = 0
            for i in range(nx):
                t = (gox + i * gsx) - ray_ox
                while si < nseg and seg1[si] <= t:
                    si += 1
                if si < nseg and seg0[si] <= t < seg1[si]:
                    labels[i, j, k] = segm[si]
                else:
                    labels[i, j, k] = -1


# ---------------------------------------------------------------------------
# frame rendering
# ---------------------------------------------------------------------------

@njit(parallel=True, cache=True)
def render_kernel(width, height,
                  cox, coy, coz, rix, riy, riz, upx, upy, upz, fwx, fwy, fwz,
                  half_w, half_h,
                  node_lo, node_hi, node_left, node_count,
                  tri_v0, tri_e1, tri_e2, tri_mesh, mesh_mats, start_inside,
                  eps_t,
                  values, gox, goy, goz, gsx, gsy, gsz,
                  style, a, b, smax, pal_col, pal_alpha,
                  fat_scale, hist_lo, hist_hi,
                  dt0, jitter, seed, frame,
                  bgr, bgg, bgb, img, warn_rows):
    n_meshes = mesh_mats.shape[0]
    nx, ny, nz = values.shape
    blx = gox
    bly = goy
    blz = goz
    bhx = gox + gsx * (nx - 1)
    bhy = goy + gsy * (ny - 1)
    bhz = goz + gsz * (nz - 1)
    for py in prange(height):
        hit_t = np.empty(MAX_HITS, np.float64)
        hit_m = np.empty(MAX_HITS, np.int32)
        stack = np.empty(BVH_STACK, np.int32)
        last_t = np.empty(n_meshes, np.float64)
        seg0 = np.empty(MAX_HITS, np.float64)
        seg1 = np.empty(MAX_HITS, np.float64)
        segm = np.empty(MAX_HITS, np.int8)
        parity = np.empty(n_meshes, np.uint8)
        cnt = np.empty(6, np.int64)
        warn = 0
        for px in range(width):
            u = ((px + 0.5) / width) * 2.0 - 1.0
            v = 1.0 - ((py + 0.5) / height) * 2.0
            dx = fwx + (u * half_w) * rix + (v * half_h) * upx
            dy = fwy + (u * half_w) * riy + (v * half_h) * upy
            dz = fwz + (u * half_w) * riz + (v * half_h) * upz
            norm = math.sqrt(dx * dx + dy * dy + dz * dz)
            dx /= norm
            dy /= norm
            dz /= norm
            nh = intersect_all_into(node_lo, node_hi, node_left, node_count,
                                    tri_v0, tri_e1, tri_e2, tri_mesh,
                                    cox, coy, coz, dx, dy, dz, eps_t,
                                    hit_t, hit_m, stack, last_t)
            nseg, nw = build_segments_into(hit_t, hit_m, nh, mesh_mats,
                                           start_inside, eps_t, eps_t,
                                           seg0, seg1, segm, parity, cnt)
            warn += nw
            cr = bgr
            cg = bgg
            cb = bgb
            if nseg > 0:
                okb, tb0, tb1 = ray_aabb(cox, coy, coz, dx, dy, dz,
                                         blx, bly, blz, bhx, bhy, bhz)
                if okb:
                    key = pixel_key(seed, frame, np.uint64(px), np.uint64(py))
                    for si in range(nseg - 1, -1, -1):
                        t0 = seg0[si]
                        t1 = seg1[si]
                        if t0 < tb0:
                            t0 = tb0
                        if t1 > tb1:
                            t1 = tb1
                        if not (t0 < t1):
                            continue
                        off = 0.0
                        if jitter:
                            off = stream_u01(key, si) * dt0
                        span = t1 - t0 - off
                        if span <= 0.0:
                            continue
                        nk = int(span / dt0) + 1
                        while t0 + off + nk * dt0 < t1:
                            nk += 1
                        while nk > 0 and not (t0 + off + (nk - 1) * dt0 < t1):
                            nk -= 1
                        mat = segm[si]
                        for k in range(nk - 1, -1, -1):
                            p = t0 + off + k * dt0
                            pe = p + dt0
                            if pe > t1:
                                pe = t1
                            dxs = pe - p
                            # world point first, then grid coords, in the
                            # same op order as the per-op Python path
                            s = sample_clamped(values,
                                               (cox + p * dx - gox) / gsx,
                                               (coy + p * dy - goy) / gsy,
                                               (coz + p * dz - goz) / gsz)
                            tcr, tcg, tcb, ae = transfer_eval(
                                style, mat, s, a, b, smax, pal_col, pal_alpha,
                                fat_scale, hist_lo, hist_hi)
                            if dxs == dt0:
                                alpha = ae
                            else:
                                alpha = 1.0 - (1.0 - ae) ** (dxs / dt0)
                            one = 1.0 - alpha
                            cr = alpha * tcr + one * cr
                            cg = alpha * tcg + one * cg
                            cb = alpha * tcb + one * cb
            img[py, px, 0] = cr
            img[py, px, 1] = cg
            img[py, px, 2] = cb
        warn_rows[py] = warn
