"""Pure-numpy twin of the compiled ray-box kernel.

Operation-for-operation identical to ``_raycast.pyx`` so the two backends
produce byte-identical images.
"""

from __future__ import annotations

import numpy as np

_EPS_DIR = 1e-12
_EPS_T = 1e-9


def render_scene(
    origin: np.ndarray,
    dirs: np.ndarray,
    boxes: np.ndarray,
    colors: np.ndarray,
) -> tuple[np.ndarray, np.ndarray]:
    ox, oy, oz = origin
    d = np.where(np.abs(dirs) < _EPS_DIR, _EPS_DIR, dirs)
    inv = 1.0 / d
    invx, invy, invz = inv[..., 0], inv[..., 1], inv[..., 2]
    best = (0.0 - oz) * invz
    best = np.where(best <= _EPS_T, 1e30, best)
    seg = np.zeros(best.shape, dtype=np.uint8)
    for i in range(boxes.shape[0]):
        b = boxes[i]
        t1 = (b[0] - ox) * invx
        t2 = (b[3] - ox) * invx
        tmin = np.minimum(t1, t2)
        tmax = np.maximum(t1, t2)
        t1 = (b[1] - oy) * invy
        t2 = (b[4] - oy) * invy
        tmin = np.maximum(tmin, np.minimum(t1, t2))
        tmax = np.minimum(tmax, np.maximum(t1, t2))
        t1 = (b[2] - oz) * invz
        t2 = (b[5] - oz) * invz
        tmin = np.maximum(tmin, np.minimum(t1, t2))
        tmax = np.minimum(tmax, np.maximum(t1, t2))
        hit = (tmax >= tmin) & (tmin > _EPS_T) & (tmin < best)
        best = np.where(hit, tmin, best)
        seg = np.where(hit, np.uint8(colors[i]), seg)
    return best.astype(np.float32), seg
