"""Convolutional building blocks with analytic gradients (numpy + BLAS).

Tensors are (batch, channels, height, width). Convolutions gather im2col
columns with a compiled kernel and run per-sample GEMMs; the input gradient
of a stride-1 conv is a transposed convolution (gather + GEMM again), while
strided convs scatter through bincount (they only occur at small sizes).
Column buffers are cached per shape, so repeated training steps do not
reallocate.
"""
from __future__ import annotations

import numpy as np

from ._ops import conv_indices, gather_cols


def relu(z):
    return np.maximum(z, 0.0)


def sigmoid(z):
    out = np.empty_like(z)
    pos = z >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-z[pos]))
    ez = np.exp(z[~pos])
    out[~pos] = ez / (1.0 + ez)
    return out


class Conv2D:
    """k x k convolution with stride, zero padding and a fused activation."""

    def __init__(self, kernel, stride, padding, in_ch, out_ch, activation="none",
                 need_dx=True, dtype=np.float32):
        self.kernel = kernel
        self.stride = stride
        self.padding = padding
        self.in_ch = in_ch
        self.out_ch = out_ch
        self.activation = activation
        self.need_dx = need_dx
        self.dtype = dtype
        self.W = np.zeros((out_ch, in_ch * kernel * kernel), dtype=dtype)
        self.b = np.zeros(out_ch, dtype=dtype)
        self.dW = np.zeros_like(self.W)
        self.db = np.zeros_like(self.b)
        self._idx = {}   # (h, w, k, stride, pad, ch) -> conv_indices result
        self._buf = {}   # buffer label -> ndarray
        self._cache = None

    @property
    def param_count(self) -> int:
        return self.W.size + self.b.size

    def init_params(self, rng: np.random.Generator) -> None:
        fan_in = self.in_ch * self.kernel * self.kernel
        if self.activation == "relu":
            limit = np.sqrt(6.0 / fan_in)  # He-uniform
        else:
            limit = np.sqrt(6.0 / (fan_in + self.out_ch))  # Xavier-uniform
        self.W = rng.uniform(-limit, limit, self.W.shape).astype(self.dtype)
        self.b = np.zeros(self.b.shape, dtype=self.dtype)

    def _indices(self, h, w, k, stride, pad, ch):
        key = (h, w, k, stride, pad, ch)
        if key not in self._idx:
            self._idx[key] = conv_indices(h, w, k, stride, pad, ch)
        return self._idx[key]

    def _buffer(self, label, shape):
        buf = self._buf.get(label)
        if buf is None or buf.shape != shape:
            buf = np.empty(shape, dtype=self.dtype)
            self._buf[label] = buf
        return buf

    def _im2col(self, x, idx, hp, wp, pad, label):
        b, c, h, w = x.shape
        if pad > 0:
            xp = self._buffer(label + "_pad", (b, c, hp, wp))
            xp[:] = 0.0
            xp[:, :, pad:pad + h, pad:pad + w] = x
        else:
            xp = np.ascontiguousarray(x)
        # cols holds the raveled (C*k*k, n_out) block per sample
        cols = self._buffer(label + "_cols", (b, idx.size))
        gather_cols(xp.reshape(b, -1), idx, cols)
        return cols

    def forward(self, x: np.ndarray) -> np.ndarray:
        b, c, h, w = x.shape
        if c != self.in_ch:
            raise ValueError(f"expected {self.in_ch} input channels, got {c}")
        idx, (ho, wo), (hp, wp) = self._indices(h, w, self.kernel, self.stride,
                                                self.padding, self.in_ch)
        cols = self._im2col(np.asarray(x, dtype=self.dtype), idx, hp, wp,
                            self.padding, "fwd")
        m = self.in_ch * self.kernel * self.kernel
        n = ho * wo
        z = np.empty((b, self.out_ch, n), dtype=self.dtype)
        for i in range(b):
            np.matmul(self.W, cols[i].reshape(m, n), out=z[i])
        z += self.b[None, :, None]
        z = z.reshape(b, self.out_ch, ho, wo)
        self.last_preact = z  # inspected by gradient checks to avoid relu kinks
        if self.activation == "relu":
            out = relu(z)
        elif self.activation == "sigmoid":
            out = sigmoid(z)
        else:
            out = z
        self._cache = ((b, c, h, w), (ho, wo), out if self.activation != "none" else None)
        return out

    def backward(self, dout: np.ndarray):
        (b, c, h, w), (ho, wo), act = self._cache
        if self.activation == "relu":
            dz = dout * (act > 0)
        elif self.activation == "sigmoid":
            dz = dout * act * (1.0 - act)
        else:
            dz = np.asarray(dout, dtype=self.dtype)
        m = self.in_ch * self.kernel * self.kernel
        n = ho * wo
        dz_flat = dz.reshape(b, self.out_ch, n)
        cols = self._buf["fwd_cols"]
        self.dW = np.zeros_like(self.W)
        for i in range(b):
            self.dW += np.matmul(dz_flat[i], cols[i].reshape(m, n).T)
        self.db = dz_flat.sum(axis=(0, 2)).astype(self.dtype)
        if not self.need_dx:
            return None
        if self.stride == 1:
            return self._backward_dx_transpose(dz_flat, b, ho, wo, h, w)
        return self._backward_dx_scatter(dz_flat, b, h, w)

    def _backward_dx_transpose(self, dz_flat, b, ho, wo, h, w):
        # stride-1 input gradient: convolve dz with the rotated kernel
        k, p = self.kernel, self.padding
        pp = k - 1 - p
        idx, (hi, wi), (hp, wp) = self._indices(ho, wo, k, 1, pp, self.out_ch)
        if hi != h or wi != w:
            raise AssertionError("transposed conv produced a mismatched shape")
        cols = self._im2col(dz_flat.reshape(b, self.out_ch, ho, wo), idx, hp, wp,
                            pp, "bwd")
        w_rot = (self.W.reshape(self.out_ch, self.in_ch, k, k)[:, :, ::-1, ::-1]
                 .transpose(1, 0, 2, 3).reshape(self.in_ch, self.out_ch * k * k))
        w_rot = np.ascontiguousarray(w_rot)
        mm = self.out_ch * k * k
        dx = np.empty((b, self.in_ch, h * w), dtype=self.dtype)
        for i in range(b):
            np.matmul(w_rot, cols[i].reshape(mm, h * w), out=dx[i])
        return dx.reshape(b, self.in_ch, h, w)

    def _backward_dx_scatter(self, dz_flat, b, h, w):
        idx, _, (hp, wp) = self._indices(h, w, self.kernel, self.stride,
                                         self.padding, self.in_ch)
        size = self.in_ch * hp * wp
        p = self.padding
        dx = np.empty((b, self.in_ch, h, w), dtype=self.dtype)
        for i in range(b):
            dcols = np.matmul(self.W.T, dz_flat[i])
            acc = np.bincount(idx, weights=dcols.ravel().astype(np.float64),
                              minlength=size).reshape(self.in_ch, hp, wp)
            if p > 0:
                acc = acc[:, p:p + h, p:p + w]
            dx[i] = acc
        return dx


def _upsample_matrix(n_in: int, factor: int, dtype) -> np.ndarray:
    """Bilinear interpolation matrix (n_in*factor, n_in), edges clamped."""
    n_out = n_in * factor
    m = np.zeros((n_out, n_in), dtype=np.float64)
    for d in range(n_out):
        src = (d + 0.5) / factor - 0.5
        i0 = int(np.floor(src))
        t = src - i0
        i0c = min(max(i0, 0), n_in - 1)
        i1c = min(max(i0 + 1, 0), n_in - 1)
        m[d, i0c] += 1.0 - t
        m[d, i1c] += t
    return m.astype(dtype)


class BilinearUpsample:
    """Bilinear upsampling by an integer factor; an exact linear map."""

    def __init__(self, factor: int, dtype=np.float32):
        self.factor = factor
        self.dtype = dtype
        self._mats = {}
        self._in_shape = None
        self.param_count = 0

    def _mat(self, n):
        if n not in self._mats:
            self._mats[n] = _upsample_matrix(n, self.factor, self.dtype)
        return self._mats[n]

    def forward(self, x: np.ndarray) -> np.ndarray:
        self._in_shape = x.shape
        mh = self._mat(x.shape[2])
        mw = self._mat(x.shape[3])
        return np.matmul(np.matmul(mh, x), mw.T)

    def backward(self, dout: np.ndarray) -> np.ndarray:
        mh = self._mat(self._in_shape[2])
        mw = self._mat(self._in_shape[3])
        return np.matmul(np.matmul(mh.T, dout), mw)


class ConcatInput:
    """Append the raw network input along the channel axis."""

    def __init__(self):
        self._split = None
        self.param_count = 0

    def forward(self, x: np.ndarray, net_input: np.ndarray) -> np.ndarray:
        if x.shape[2:] != net_input.shape[2:]:
            raise ValueError(
                f"feature map {x.shape[2:]} does not match input {net_input.shape[2:]}"
            )
        self._split = x.shape[1]
        return np.concatenate([x, net_input.astype(x.dtype)], axis=1)

    def backward(self, dout: np.ndarray) -> np.ndarray:
        return np.ascontiguousarray(dout[:, : self._split])
