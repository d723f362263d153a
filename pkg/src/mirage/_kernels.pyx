# cython: boundscheck=False, wraparound=False, cdivision=True, language_level=3
"""Compiled ray-casting kernel (hot path of the LiDAR simulator).

Per-beam nearest-hit search with one specular bounce, identical in contract
and formulas to the numpy fallback in `mirage._kernels_py`.  Scene geometry
is unpacked once into a plain C struct of pointers so the per-beam loop
carries no Python or memoryview overhead.
"""

import numpy as np

cimport numpy as cnp
from libc.math cimport INFINITY, fabs, sqrt

cnp.import_array()

BACKEND_NAME = "cython"

cdef double T_MIN = 1e-9
cdef double PAR_EPS = 1e-15


cdef struct SceneC:
    bint ground_present
    double ground_albedo
    int n_pan
    const double* pan_center
    const double* pan_normal
    const double* pan_up
    const double* pan_right
    const double* pan_half_w
    const double* pan_half_h
    int n_box
    const double* box_center
    const double* box_half
    const double* box_cos
    const double* box_sin
    const int* box_index
    int n_cyl
    const double* cyl_base
    const double* cyl_radius
    const double* cyl_height
    const int* cyl_index
    int n_cone
    const double* cone_base
    const double* cone_radius
    const double* cone_height
    const int* cone_index
    const double* solid_albedo


cdef struct Hit:
    int kind      # 0 none, 1 ground, 2 solid, 3 panel
    double t
    int sidx
    int pidx


cdef void _nearest(const SceneC* sc, double ox, double oy, double oz,
                   double dx, double dy, double dz, double limit,
                   Hit* out) noexcept nogil:
    cdef double best_t = limit
    cdef int kind = 0, sidx = -1, pidx = -1
    cdef int i, j
    cdef double t, rx, ry, rz, c, s
    cdef double bo[3]
    cdef double bd[3]
    cdef double t0, t1, ta, tb, h, o, d, z0, z1, r2, a, b, cc, disc, sq, z
    cdef double k2, num, denom, px, py, pz, u, v, t_entry
    cdef bint inside_ok

    if sc.ground_present and dz < -PAR_EPS:
        t = -oz / dz
        if t > T_MIN and t < best_t:
            best_t = t; kind = 1; sidx = -1; pidx = -1

    for i in range(sc.n_box):
        c = sc.box_cos[i]; s = sc.box_sin[i]
        rx = ox - sc.box_center[3 * i]
        ry = oy - sc.box_center[3 * i + 1]
        rz = oz - sc.box_center[3 * i + 2]
        bo[0] = c * rx + s * ry; bo[1] = -s * rx + c * ry; bo[2] = rz
        bd[0] = c * dx + s * dy; bd[1] = -s * dx + c * dy; bd[2] = dz
        t0 = -INFINITY; t1 = INFINITY
        inside_ok = True
        for j in range(3):
            o = bo[j]; d = bd[j]; h = sc.box_half[3 * i + j]
            if fabs(d) < PAR_EPS:
                if fabs(o) > h:
                    inside_ok = False
                    break
                continue
            ta = (-h - o) / d; tb = (h - o) / d
            if ta > tb:
                ta, tb = tb, ta
            if ta > t0: t0 = ta
            if tb < t1: t1 = tb
        if inside_ok and t0 <= t1:
            t_entry = t0 if t0 > T_MIN else t1
            if t_entry > T_MIN and t_entry < best_t:
                best_t = t_entry; kind = 2; sidx = sc.box_index[i]; pidx = -1

    for i in range(sc.n_cyl):
        rx = ox - sc.cyl_base[3 * i]
        ry = oy - sc.cyl_base[3 * i + 1]
        z0 = sc.cyl_base[3 * i + 2]
        z1 = z0 + sc.cyl_height[i]
        r2 = sc.cyl_radius[i] * sc.cyl_radius[i]
        a = dx * dx + dy * dy
        if a > PAR_EPS:
            b = 2.0 * (rx * dx + ry * dy)
            cc = rx * rx + ry * ry - r2
            disc = b * b - 4.0 * a * cc
            if disc >= 0.0:
                sq = sqrt(disc)
                for j in range(2):
                    t = (-b - sq) / (2.0 * a) if j == 0 else (-b + sq) / (2.0 * a)
                    if t > T_MIN and t < best_t:
                        z = oz + t * dz
                        if z >= z0 and z <= z1:
                            best_t = t; kind = 2; sidx = sc.cyl_index[i]; pidx = -1
        if fabs(dz) > PAR_EPS:
            t = (z1 - oz) / dz
            if t > T_MIN and t < best_t:
                px = rx + t * dx; py = ry + t * dy
                if px * px + py * py <= r2:
                    best_t = t; kind = 2; sidx = sc.cyl_index[i]; pidx = -1

    for i in range(sc.n_cone):
        h = sc.cone_height[i]
        k2 = sc.cone_radius[i] / h
        k2 = k2 * k2
        rx = ox - sc.cone_base[3 * i]
        ry = oy - sc.cone_base[3 * i + 1]
        rz = oz - (sc.cone_base[3 * i + 2] + h)
        a = dx * dx + dy * dy - k2 * dz * dz
        b = 2.0 * (rx * dx + ry * dy - k2 * rz * dz)
        cc = rx * rx + ry * ry - k2 * rz * rz
        if fabs(a) > PAR_EPS:
            disc = b * b - 4.0 * a * cc
            if disc >= 0.0:
                sq = sqrt(disc)
                for j in range(2):
                    t = (-b - sq) / (2.0 * a) if j == 0 else (-b + sq) / (2.0 * a)
                    if t > T_MIN and t < best_t:
                        z = rz + t * dz
                        if z >= -h and z <= 0.0:
                            best_t = t; kind = 2; sidx = sc.cone_index[i]; pidx = -1
        elif fabs(b) > PAR_EPS:
            t = -cc / b
            if t > T_MIN and t < best_t:
                z = rz + t * dz
                if z >= -h and z <= 0.0:
                    best_t = t; kind = 2; sidx = sc.cone_index[i]; pidx = -1

    for i in range(sc.n_pan):
        denom = (dx * sc.pan_normal[3 * i] + dy * sc.pan_normal[3 * i + 1]
                 + dz * sc.pan_normal[3 * i + 2])
        if denom >= -PAR_EPS:
            continue
        num = ((sc.pan_center[3 * i] - ox) * sc.pan_normal[3 * i]
               + (sc.pan_center[3 * i + 1] - oy) * sc.pan_normal[3 * i + 1]
               + (sc.pan_center[3 * i + 2] - oz) * sc.pan_normal[3 * i + 2])
        t = num / denom
        if t <= T_MIN or t >= best_t:
            continue
        px = ox + t * dx - sc.pan_center[3 * i]
        py = oy + t * dy - sc.pan_center[3 * i + 1]
        pz = oz + t * dz - sc.pan_center[3 * i + 2]
        u = (px * sc.pan_right[3 * i] + py * sc.pan_right[3 * i + 1]
             + pz * sc.pan_right[3 * i + 2])
        if fabs(u) > sc.pan_half_w[i]:
            continue
        v = (px * sc.pan_up[3 * i] + py * sc.pan_up[3 * i + 1]
             + pz * sc.pan_up[3 * i + 2])
        if fabs(v) > sc.pan_half_h[i]:
            continue
        best_t = t; kind = 3; sidx = -1; pidx = i

    out.kind = kind
    out.t = best_t
    out.sidx = sidx
    out.pidx = pidx


def trace_beams(origin, dirs, sa, double max_range):
    """See mirage._kernels_py.trace_beams for the contract."""
    origin = np.asarray(origin, dtype=np.float64).reshape(3)
    cdef double[:, ::1] D = np.ascontiguousarray(dirs, dtype=np.float64)
    cdef Py_ssize_t n = D.shape[0]

    # keep contiguous buffers alive for the duration of the call
    pan_center = np.ascontiguousarray(sa.pan_center)
    pan_normal = np.ascontiguousarray(sa.pan_normal)
    pan_up = np.ascontiguousarray(sa.pan_up)
    pan_right = np.ascontiguousarray(sa.pan_right)
    pan_half_w = np.ascontiguousarray(sa.pan_half_w)
    pan_half_h = np.ascontiguousarray(sa.pan_half_h)
    box_center = np.ascontiguousarray(sa.box_center)
    box_half = np.ascontiguousarray(sa.box_half)
    box_cos = np.ascontiguousarray(sa.box_cos)
    box_sin = np.ascontiguousarray(sa.box_sin)
    box_index = np.ascontiguousarray(sa.box_index, dtype=np.int32)
    cyl_base = np.ascontiguousarray(sa.cyl_base)
    cyl_radius = np.ascontiguousarray(sa.cyl_radius)
    cyl_height = np.ascontiguousarray(sa.cyl_height)
    cyl_index = np.ascontiguousarray(sa.cyl_index, dtype=np.int32)
    cone_base = np.ascontiguousarray(sa.cone_base)
    cone_radius = np.ascontiguousarray(sa.cone_radius)
    cone_height = np.ascontiguousarray(sa.cone_height)
    cone_index = np.ascontiguousarray(sa.cone_index, dtype=np.int32)
    solid_albedo = (np.array([s.albedo for s in sa.solids], dtype=np.float64)
                    if sa.solids else np.zeros(1))

    cdef double[:, ::1] mv_pan_center = pan_center
    cdef double[:, ::1] mv_pan_normal = pan_normal
    cdef double[:, ::1] mv_pan_up = pan_up
    cdef double[:, ::1] mv_pan_right = pan_right
    cdef double[::1] mv_pan_half_w = pan_half_w
    cdef double[::1] mv_pan_half_h = pan_half_h
    cdef double[:, ::1] mv_box_center = box_center
    cdef double[:, ::1] mv_box_half = box_half
    cdef double[::1] mv_box_cos = box_cos
    cdef double[::1] mv_box_sin = box_sin
    cdef int[::1] mv_box_index = box_index
    cdef double[:, ::1] mv_cyl_base = cyl_base
    cdef double[::1] mv_cyl_radius = cyl_radius
    cdef double[::1] mv_cyl_height = cyl_height
    cdef int[::1] mv_cyl_index = cyl_index
    cdef double[:, ::1] mv_cone_base = cone_base
    cdef double[::1] mv_cone_radius = cone_radius
    cdef double[::1] mv_cone_height = cone_height
    cdef int[::1] mv_cone_index = cone_index
    cdef double[::1] mv_solid_albedo = solid_albedo

    cdef SceneC sc
    sc.ground_present = sa.ground_present
    sc.ground_albedo = sa.ground_albedo
    sc.n_pan = mv_pan_center.shape[0]
    sc.pan_center = &mv_pan_center[0, 0] if sc.n_pan else NULL
    sc.pan_normal = &mv_pan_normal[0, 0] if sc.n_pan else NULL
    sc.pan_up = &mv_pan_up[0, 0] if sc.n_pan else NULL
    sc.pan_right = &mv_pan_right[0, 0] if sc.n_pan else NULL
    sc.pan_half_w = &mv_pan_half_w[0] if sc.n_pan else NULL
    sc.pan_half_h = &mv_pan_half_h[0] if sc.n_pan else NULL
    sc.n_box = mv_box_center.shape[0]
    sc.box_center = &mv_box_center[0, 0] if sc.n_box else NULL
    sc.box_half = &mv_box_half[0, 0] if sc.n_box else NULL
    sc.box_cos = &mv_box_cos[0] if sc.n_box else NULL
    sc.box_sin = &mv_box_sin[0] if sc.n_box else NULL
    sc.box_index = &mv_box_index[0] if sc.n_box else NULL
    sc.n_cyl = mv_cyl_base.shape[0]
    sc.cyl_base = &mv_cyl_base[0, 0] if sc.n_cyl else NULL
    sc.cyl_radius = &mv_cyl_radius[0] if sc.n_cyl else NULL
    sc.cyl_height = &mv_cyl_height[0] if sc.n_cyl else NULL
    sc.cyl_index = &mv_cyl_index[0] if sc.n_cyl else NULL
    sc.n_cone = mv_cone_base.shape[0]
    sc.cone_base = &mv_cone_base[0, 0] if sc.n_cone else NULL
    sc.cone_radius = &mv_cone_radius[0] if sc.n_cone else NULL
    sc.cone_height = &mv_cone_height[0] if sc.n_cone else NULL
    sc.cone_index = &mv_cone_index[0] if sc.n_cone else NULL
    sc.solid_albedo = &mv_solid_albedo[0]

    status_arr = np.zeros(n, dtype=np.uint8)
    rng_arr = np.zeros(n, dtype=np.float64)
    obj_arr = np.full(n, -1, dtype=np.int32)
    panel_arr = np.full(n, -1, dtype=np.int32)
    albedo_arr = np.zeros(n, dtype=np.float64)
    cdef unsigned char[::1] status = status_arr
    cdef double[::1] rng = rng_arr
    cdef int[::1] obj = obj_arr
    cdef int[::1] panel = panel_arr
    cdef double[::1] albedo = albedo_arr

    cdef double ox = origin[0], oy = origin[1], oz = origin[2]
    cdef Py_ssize_t i
    cdef Hit h1, h2
    cdef double dx, dy, dz, hx, hy, hz, rdx, rdy, rdz, dot
    cdef double nx, ny, nz

    with nogil:
        for i in range(n):
            dx = D[i, 0]; dy = D[i, 1]; dz = D[i, 2]
            _nearest(&sc, ox, oy, oz, dx, dy, dz, max_range, &h1)
            if h1.kind == 0:
                continue
            if h1.kind == 1:
                status[i] = 1; rng[i] = h1.t; albedo[i] = sc.ground_albedo
                continue
            if h1.kind == 2:
                status[i] = 2; rng[i] = h1.t; obj[i] = h1.sidx
                albedo[i] = sc.solid_albedo[h1.sidx]
                continue
            # mirror: reflect and trace the second hop
            nx = sc.pan_normal[3 * h1.pidx]
            ny = sc.pan_normal[3 * h1.pidx + 1]
            nz = sc.pan_normal[3 * h1.pidx + 2]
            dot = dx * nx + dy * ny + dz * nz
            rdx = dx - 2.0 * dot * nx
            rdy = dy - 2.0 * dot * ny
            rdz = dz - 2.0 * dot * nz
            hx = ox + h1.t * dx; hy = oy + h1.t * dy; hz = oz + h1.t * dz
            _nearest(&sc, hx, hy, hz, rdx, rdy, rdz, max_range - h1.t, &h2)
            if h2.kind == 1:
                status[i] = 3; rng[i] = h1.t + h2.t
                panel[i] = h1.pidx; albedo[i] = sc.ground_albedo
            elif h2.kind == 2:
                status[i] = 4; rng[i] = h1.t + h2.t
                panel[i] = h1.pidx; obj[i] = h2.sidx
                albedo[i] = sc.solid_albedo[h2.sidx]
            # second panel hit or miss: absorbed, no return

    return status_arr, rng_arr, obj_arr, panel_arr, albedo_arr
