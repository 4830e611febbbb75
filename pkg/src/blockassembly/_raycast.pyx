"""Compiled per-pixel ray versus axis-aligned-box z-buffer sweep.

Must stay arithmetic-identical to ``_raycast_np``: same clamping, the same
multiply-by-reciprocal slab test, float64 throughout with a float32 cast at
the end.
"""

import numpy as np

cimport numpy as cnp

cnp.import_array()


def render_scene(
    const cnp.float64_t[::1] origin,
    const cnp.float64_t[:, :, ::1] dirs,
    const cnp.float64_t[:, ::1] boxes,
    const cnp.uint8_t[::1] colors,
):
    cdef Py_ssize_t height = dirs.shape[0]
    cdef Py_ssize_t width = dirs.shape[1]
    cdef Py_ssize_t nbox = boxes.shape[0]
    depth_arr = np.empty((height, width), dtype=np.float32)
    seg_arr = np.zeros((height, width), dtype=np.uint8)
    cdef cnp.float32_t[:, ::1] depth = depth_arr
    cdef cnp.uint8_t[:, ::1] seg = seg_arr
    cdef double ox = origin[0], oy = origin[1], oz = origin[2]
    cdef double dx, dy, dz, invx, invy, invz
    cdef double t1, t2, lo, hi, tmin, tmax, best
    cdef double eps_dir = 1e-12, eps_t = 1e-9
    cdef Py_ssize_t v, u, i
    cdef unsigned char idx
    for v in range(height):
        for u in range(width):
            dx = dirs[v, u, 0]
            dy = dirs[v, u, 1]
            dz = dirs[v, u, 2]
            if dx < eps_dir and dx > -eps_dir:
                dx = eps_dir
            if dy < eps_dir and dy > -eps_dir:
                dy = eps_dir
            if dz < eps_dir and dz > -eps_dir:
                dz = eps_dir
            invx = 1.0 / dx
            invy = 1.0 / dy
            invz = 1.0 / dz
            best = (0.0 - oz) * invz
            if best <= eps_t:
                best = 1e30
            idx = 0
            for i in range(nbox):
                t1 = (boxes[i, 0] - ox) * invx
                t2 = (boxes[i, 3] - ox) * invx
                if t1 < t2:
                    tmin = t1
                    tmax = t2
                else:
                    tmin = t2
                    tmax = t1
                t1 = (boxes[i, 1] - oy) * invy
                t2 = (boxes[i, 4] - oy) * invy
                if t1 < t2:
                    lo = t1
                    hi = t2
                else:
                    lo = t2
                    hi = t1
                if lo > tmin:
                    tmin = lo
                if hi < tmax:
                    tmax = hi
                t1 = (boxes[i, 2] - oz) * invz
                t2 = (boxes[i, 5] - oz) * invz
                if t1 < t2:
                    lo = t1
                    hi = t2
                else:
                    lo = t2
                    hi = t1
                if lo > tmin:
                    tmin = lo
                if hi < tmax:
                    tmax = hi
                if tmax >= tmin and tmin > eps_t and tmin < best:
                    best = tmin
                    idx = colors[i]
            depth[v, u] = <cnp.float32_t> best
            seg[v, u] = idx
    return depth_arr, seg_arr
