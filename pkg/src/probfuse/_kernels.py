"""Numba-compiled inner loops.

Kept separate so the rest of the package stays plain numpy; everything here
is deterministic and single-threaded.
"""

import numpy as np
from numba import njit


@njit(cache=True)
def edt_sq(mask):  # pragma: no cover - exercised via distance_transform
    """Exact squared Euclidean distance transform, integer arithmetic.

    Two-pass separable scan: per-column nearest set cell, then a per-row
    lower-envelope-of-parabolas pass over the squared column distances.
    Runs in O(H*W).
    """
    h, w = mask.shape
    inf_dist = h + w + 1  # larger than any feasible axis distance

    g = np.empty((h, w), np.int64)
    for j in range(w):
        g[0, j] = 0 if mask[0, j] else inf_dist
    for i in range(1, h):
        for j in range(w):
            g[i, j] = 0 if mask[i, j] else g[i - 1, j] + 1
    for i in range(h - 2, -1, -1):
        for j in range(w):
            cand = g[i + 1, j] + 1
            if cand < g[i, j]:
                g[i, j] = cand

    out = np.empty((h, w), np.int64)
    v = np.empty(w, np.int64)  # parabola sites
    z = np.empty(w + 1, np.float64)  # envelope boundaries
    f = np.empty(w, np.int64)
    for i in range(h):
        for j in range(w):
            f[j] = g[i, j] * g[i, j]
        k = 0
        v[0] = 0
        z[0] = -np.inf
        z[1] = np.inf
        for q in range(1, w):
            fq = f[q] + q * q
            while True:
                p = v[k]
                s = (fq - (f[p] + p * p)) / (2.0 * (q - p))
                if s <= z[k]:
                    k -= 1
                    continue
                break
            k += 1
            v[k] = q
            z[k] = s
            z[k + 1] = np.inf
        k = 0
        for q in range(w):
            while z[k + 1] < q:
                k += 1
            p = v[k]
            out[i, q] = f[p] + (q - p) * (q - p)
    return out


@njit(cache=True)
def accumulate_patches(ys, xs, patch, rad, out):  # pragma: no cover
    """Add ``patch`` (a (2*rad+1)^2 stamp) onto ``out`` centered at each
    (ys[n], xs[n]), clipping at the borders."""
    h, w = out.shape
    for n in range(ys.shape[0]):
        cy = ys[n]
        cx = xs[n]
        y0 = cy - rad if cy - rad > 0 else 0
        y1 = cy + rad if cy + rad < h - 1 else h - 1
        x0 = cx - rad if cx - rad > 0 else 0
        x1 = cx + rad if cx + rad < w - 1 else w - 1
        for y in range(y0, y1 + 1):
            py = y - cy + rad
            for x in range(x0, x1 + 1):
                out[y, x] += patch[py, x - cx + rad]


def warm_up():
    """Trigger JIT compilation so later calls run at full speed."""
    m = np.zeros((2, 2), np.uint8)
    m[0, 0] = 1
    edt_sq(m)
    buf = np.zeros((2, 2), np.float64)
    accumulate_patches(
        np.zeros(1, np.int64), np.zeros(1, np.int64), np.ones((3, 3), np.float64), 1, buf
    )
