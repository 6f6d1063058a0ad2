"""Numpy implementations of the hot kernels.

Signatures and conventions match ``_ckernels.pyx`` exactly; the package picks
one of the two at import time (see ``_kernels``).
"""
import math

import numpy as np

_BLOCK = 512


def mattis_energy(v, J):
    """-J * sum_j sum_h v_j v_h, evaluated as an explicit double sum."""
    v = np.asarray(v, dtype=np.float64)
    partial = []
    for start in range(0, v.size, _BLOCK):
        partial.append(float(np.sum(np.outer(v[start:start + _BLOCK], v))))
    return -J * math.fsum(partial)


def min_partition(x):
    """Exhaustive search for the signs minimising |sum_j s_j x_j| with s_0 = +1.

    Returns ``(difference, signs)`` where ``signs`` is an int8 array.
    """
    x = np.asarray(x, dtype=np.float64)
    sums = np.array([x[0]])
    for xk in x[1:]:
        sums = np.concatenate([sums + xk, sums - xk])
    best = int(np.argmin(np.abs(sums)))
    signs = np.ones(x.size, dtype=np.int8)
    for k in range(1, x.size):
        if (best >> (k - 1)) & 1:
            signs[k] = -1
    return abs(math.fsum((signs * x).tolist())), signs


def weighted_sum(a, b):
    return float(np.sum(np.multiply(a, b)))


def _shift_int(w, iy, ix):
    out = np.zeros_like(w)
    ny, nx = w.shape
    ys, ye = max(0, -iy), min(ny, ny - iy)
    xs, xe = max(0, -ix), min(nx, nx - ix)
    if ys < ye and xs < xe:
        out[ys:ye, xs:xe] = w[ys + iy:ye + iy, xs + ix:xe + ix]
    return out


def bilinear_shift(w, dx, dy):
    """Resample ``w`` at ``(row - dy, col - dx)`` with bilinear weights, zero outside."""
    w = np.asarray(w, dtype=np.float64)
    ix = math.floor(-dx)
    iy = math.floor(-dy)
    fx = -dx - ix
    fy = -dy - iy
    return ((1 - fy) * (1 - fx) * _shift_int(w, iy, ix)
            + (1 - fy) * fx * _shift_int(w, iy, ix + 1)
            + fy * (1 - fx) * _shift_int(w, iy + 1, ix)
            + fy * fx * _shift_int(w, iy + 1, ix + 1))
