"""Vectorized numpy ray-casting kernel (pure-Python fallback backend).

Implements the same `trace_beams` contract as the compiled extension
`mirage._kernels`: cast a bundle of beams into a packed SceneArrays, follow
at most one specular bounce, and report per-beam return status.

Status codes:
    0  no return (miss, absorbed, or folded path left the scene)
    1  direct ground return
    2  direct solid return
    3  virtual return, secondary surface = ground
    4  virtual return, secondary surface = solid
"""

from __future__ import annotations

import numpy as np

BACKEND_NAME = "python"

_T_MIN = 1e-9


def _nearest(origins, dirs, sa, limit, tmin):
    """Nearest hit per beam.

    origins: (N,3) or (1,3); dirs: (N,3); limit: scalar or (N,) max range.
    Returns kind (0 none / 1 ground / 2 solid / 3 panel), t, solid idx,
    panel idx.
    """
    n = dirs.shape[0]
    best_t = np.broadcast_to(np.asarray(limit, dtype=float), (n,)).copy()
    kind = np.zeros(n, dtype=np.uint8)
    sidx = np.full(n, -1, dtype=np.int32)
    pidx = np.full(n, -1, dtype=np.int32)

    def consider(t, extra_ok, k, solid_i=-1, panel_i=-1):
        ok = extra_ok & (t > tmin) & (t < best_t)
        if not ok.any():
            return
        best_t[ok] = t[ok]
        kind[ok] = k
        sidx[ok] = solid_i
        pidx[ok] = panel_i

    ox = origins[:, 0]
    oy = origins[:, 1]
    oz = origins[:, 2]
    dx = dirs[:, 0]
    dy = dirs[:, 1]
    dz = dirs[:, 2]

    if sa.ground_present:
        with np.errstate(divide="ignore", invalid="ignore"):
            t = -oz / dz
        consider(np.where(dz < -1e-15, t, -1.0), dz < -1e-15, 1)

    for i in range(sa.box_center.shape[0]):
        c, s = sa.box_cos[i], sa.box_sin[i]
        rx = ox - sa.box_center[i, 0]
        ry = oy - sa.box_center[i, 1]
        rz = oz - sa.box_center[i, 2]
        box_o = (c * rx + s * ry, -s * rx + c * ry, rz)
        box_d = (c * dx + s * dy, -s * dx + c * dy, dz)
        t0 = np.full(n, -np.inf)
        t1 = np.full(n, np.inf)
        inside_ok = np.ones(n, dtype=bool)
        for o, d, h in zip(box_o, box_d, sa.box_half[i]):
            par = np.abs(d) < 1e-15
            inside_ok &= ~par | (np.abs(o) <= h)
            with np.errstate(divide="ignore", invalid="ignore"):
                ta = (-h - o) / d
                tb = (h - o) / d
            lo = np.minimum(ta, tb)
            hi = np.maximum(ta, tb)
            t0 = np.where(par, t0, np.maximum(t0, lo))
            t1 = np.where(par, t1, np.minimum(t1, hi))
        ok = inside_ok & (t0 <= t1)
        t_entry = np.where(t0 > tmin, t0, t1)  # t1 covers origins inside the box
        consider(np.where(ok, t_entry, -1.0), ok, 2, solid_i=sa.box_index[i])

    for i in range(sa.cyl_base.shape[0]):
        rx = ox - sa.cyl_base[i, 0]
        ry = oy - sa.cyl_base[i, 1]
        z0 = sa.cyl_base[i, 2]
        z1 = z0 + sa.cyl_height[i]
        r2 = sa.cyl_radius[i] ** 2
        a = dx * dx + dy * dy
        b = 2.0 * (rx * dx + ry * dy)
        cc = rx * rx + ry * ry - r2
        disc = b * b - 4.0 * a * cc
        quad = (a > 1e-15) & (disc >= 0.0)
        sq = np.sqrt(np.where(disc >= 0.0, disc, 0.0))
        with np.errstate(divide="ignore", invalid="ignore"):
            for t in ((-b - sq) / (2.0 * a), (-b + sq) / (2.0 * a)):
                t = np.where(quad, t, -1.0)
                z = oz + t * dz
                consider(t, quad & (z >= z0) & (z <= z1), 2,
                         solid_i=sa.cyl_index[i])
            t_cap = np.where(np.abs(dz) > 1e-15, (z1 - oz) / dz, -1.0)
        px = rx + t_cap * dx
        py = ry + t_cap * dy
        cap_ok = (t_cap > 0.0) & (px * px + py * py <= r2)
        consider(t_cap, cap_ok, 2, solid_i=sa.cyl_index[i])

    for i in range(sa.cone_base.shape[0]):
        h = sa.cone_height[i]
        k2 = (sa.cone_radius[i] / h) ** 2
        rx = ox - sa.cone_base[i, 0]
        ry = oy - sa.cone_base[i, 1]
        rz = oz - (sa.cone_base[i, 2] + h)  # relative to apex
        a = dx * dx + dy * dy - k2 * dz * dz
        b = 2.0 * (rx * dx + ry * dy - k2 * rz * dz)
        cc = rx * rx + ry * ry - k2 * rz * rz
        disc = b * b - 4.0 * a * cc
        quad = (np.abs(a) > 1e-15) & (disc >= 0.0)
        lin = np.abs(a) <= 1e-15
        sq = np.sqrt(np.where(disc >= 0.0, disc, 0.0))
        with np.errstate(divide="ignore", invalid="ignore"):
            roots = ((-b - sq) / (2.0 * a), (-b + sq) / (2.0 * a),
                     np.where(np.abs(b) > 1e-15, -cc / b, -1.0))
        for j, t in enumerate(roots):
            ok = lin if j == 2 else quad
            t = np.where(ok, t, -1.0)
            z = rz + t * dz
            consider(t, ok & (z >= -h) & (z <= 0.0), 2,
                     solid_i=sa.cone_index[i])

    for i in range(sa.pan_center.shape[0]):
        nrm = sa.pan_normal[i]
        denom = dx * nrm[0] + dy * nrm[1] + dz * nrm[2]
        front = denom < -1e-15
        num = ((sa.pan_center[i, 0] - ox) * nrm[0]
               + (sa.pan_center[i, 1] - oy) * nrm[1]
               + (sa.pan_center[i, 2] - oz) * nrm[2])
        with np.errstate(divide="ignore", invalid="ignore"):
            t = np.where(front, num / denom, -1.0)
        px = ox + t * dx - sa.pan_center[i, 0]
        py = oy + t * dy - sa.pan_center[i, 1]
        pz = oz + t * dz - sa.pan_center[i, 2]
        right = sa.pan_right[i]
        up = sa.pan_up[i]
        u = px * right[0] + py * right[1] + pz * right[2]
        v = px * up[0] + py * up[1] + pz * up[2]
        ok = front & (np.abs(u) <= sa.pan_half_w[i]) & (np.abs(v) <= sa.pan_half_h[i])
        consider(np.where(ok, t, -1.0), ok, 3, panel_i=i)

    return kind, best_t, sidx, pidx


def trace_beams(origin, dirs, sa, max_range):
    """Trace a beam bundle from a single origin with one specular bounce.

    Returns (status, rng, obj, panel, albedo) arrays; `rng` is the one-way
    range (folded for virtual returns), `obj` the solid index of the return
    surface (-1 for ground), `panel` the mirror index for virtual returns.
    """
    origin = np.asarray(origin, dtype=float).reshape(1, 3)
    dirs = np.ascontiguousarray(dirs, dtype=float)
    n = dirs.shape[0]

    kind, t1, sidx, pidx = _nearest(origin, dirs, sa, max_range, _T_MIN)

    status = np.zeros(n, dtype=np.uint8)
    rng = np.zeros(n, dtype=float)
    obj = np.full(n, -1, dtype=np.int32)
    panel = np.full(n, -1, dtype=np.int32)
    albedo = np.zeros(n, dtype=float)

    direct_g = kind == 1
    status[direct_g] = 1
    rng[direct_g] = t1[direct_g]
    albedo[direct_g] = sa.ground_albedo

    direct_s = kind == 2
    status[direct_s] = 2
    rng[direct_s] = t1[direct_s]
    obj[direct_s] = sidx[direct_s]
    if direct_s.any():
        solid_albedo = np.array([s.albedo for s in sa.solids]) if sa.solids else np.zeros(1)
        albedo[direct_s] = solid_albedo[sidx[direct_s]]

    mirrored = np.nonzero(kind == 3)[0]
    if mirrored.size:
        sub_p = pidx[mirrored]
        d = dirs[mirrored]
        nrm = sa.pan_normal[sub_p]
        refl = d - 2.0 * np.sum(d * nrm, axis=1, keepdims=True) * nrm
        hit_pts = origin + t1[mirrored, None] * d
        kind2, t2, sidx2, _ = _nearest(hit_pts, refl, sa, max_range - t1[mirrored], _T_MIN)

        sec_g = kind2 == 1
        sec_s = kind2 == 2
        tgt = mirrored[sec_g]
        status[tgt] = 3
        rng[tgt] = t1[tgt] + t2[sec_g]
        panel[tgt] = sub_p[sec_g]
        albedo[tgt] = sa.ground_albedo
        tgt = mirrored[sec_s]
        status[tgt] = 4
        rng[tgt] = t1[tgt] + t2[sec_s]
        panel[tgt] = sub_p[sec_s]
        obj[tgt] = sidx2[sec_s]
        if tgt.size:
            solid_albedo = np.array([s.albedo for s in sa.solids])
            albedo[tgt] = solid_albedo[sidx2[sec_s]]

    return status, rng, obj, panel, albedo
