"""Low-level gather kernels for the im2col convolutions."""
from __future__ import annotations

import numpy as np
from numba import njit


@njit(cache=True, nogil=True)
def gather_cols(x_flat, idx, out):
    """out[b, j] = x_flat[b, idx[j]] with out viewed as (B, len(idx))."""
    for b in range(x_flat.shape[0]):
        o = out[b]
        x = x_flat[b]
        for j in range(idx.shape[0]):
            o[j] = x[idx[j]]


def conv_indices(h: int, w: int, k: int, stride: int, pad: int, channels: int):
    """Flat int32 gather indices into a padded (C, H+2p, W+2p) volume.

    Returns (idx, (h_out, w_out), (h_pad, w_pad)); idx is the raveled
    (C*k*k, h_out*w_out) index block, channel-major then kernel row/col.
    """
    hp, wp = h + 2 * pad, w + 2 * pad
    h_out = (hp - k) // stride + 1
    w_out = (wp - k) // stride + 1
    i0 = np.repeat(np.arange(k), k).reshape(-1, 1)
    j0 = np.tile(np.arange(k), k).reshape(-1, 1)
    i1 = stride * np.repeat(np.arange(h_out), w_out).reshape(1, -1)
    j1 = stride * np.tile(np.arange(w_out), h_out).reshape(1, -1)
    base = (i0 + i1) * wp + (j0 + j1)
    chan = (np.arange(channels) * (hp * wp)).reshape(-1, 1, 1)
    idx = (chan + base[None, :, :]).reshape(channels * k * k, -1)
    return np.ascontiguousarray(idx.ravel().astype(np.int32)), (h_out, w_out), (hp, wp)
