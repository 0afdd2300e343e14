"""Network assembly, forward/backward passes and the model file format.

The reference net is a two-branch fully-convolutional architecture: a coarse
branch subsamples the grid with successively smaller kernels to extract
global context, which is upsampled back to full resolution, concatenated
with the raw input, and refined by a fine branch ending in a 1x1 sigmoid
output of the same spatial size as the input. There are no fully connected
layers; the reference instantiation has roughly 9e4 parameters.
"""
from __future__ import annotations

import struct
from dataclasses import dataclass

import numpy as np

from .layers import BilinearUpsample, ConcatInput, Conv2D

PARAM_COUNT_RANGE = (50_000, 200_000)

_ACTIVATIONS = ("relu", "sigmoid", "none")


@dataclass(frozen=True)
class LayerSpec:
    kind: str  # 'conv' | 'upsample' | 'concat_input'
    kernel: int = 0
    stride: int = 1
    padding: int = 0
    in_ch: int = 0
    out_ch: int = 0
    activation: str = "none"
    factor: int = 0

    def __post_init__(self):
        if self.kind not in ("conv", "upsample", "concat_input"):
            raise ValueError(f"unknown layer kind {self.kind!r}")
        if self.kind == "conv" and self.activation not in _ACTIVATIONS:
            raise ValueError(f"unknown activation {self.activation!r}")


def reference_specs(in_channels: int = 1) -> list[LayerSpec]:
    """Coarse branch (stride-2 convs, shrinking kernels), x8 upsample,
    concat with the input, fine branch, 1x1 sigmoid output."""
    coarse = in_channels
    return [
        LayerSpec("conv", kernel=7, stride=2, padding=3, in_ch=coarse, out_ch=24,
                  activation="relu"),
        LayerSpec("conv", kernel=5, stride=2, padding=2, in_ch=24, out_ch=48,
                  activation="relu"),
        LayerSpec("conv", kernel=3, stride=2, padding=1, in_ch=48, out_ch=96,
                  activation="relu"),
        LayerSpec("upsample", factor=8),
        LayerSpec("concat_input"),
        LayerSpec("conv", kernel=3, stride=1, padding=1, in_ch=96 + in_channels,
                  out_ch=16, activation="relu"),
        LayerSpec("conv", kernel=3, stride=1, padding=1, in_ch=16, out_ch=16,
                  activation="relu"),
        LayerSpec("conv", kernel=1, stride=1, padding=0, in_ch=16, out_ch=1,
                  activation="sigmoid"),
    ]


class NetworkModel:
    """An ordered layer graph (linear chain plus the input-concat skip)."""

    def __init__(self, specs: list[LayerSpec], dtype=np.float32):
        self.specs = list(specs)
        self.dtype = dtype
        self.layers = []
        for i, spec in enumerate(self.specs):
            if spec.kind == "conv":
                self.layers.append(
                    Conv2D(spec.kernel, spec.stride, spec.padding, spec.in_ch,
                           spec.out_ch, spec.activation, need_dx=(i > 0), dtype=dtype)
                )
            elif spec.kind == "upsample":
                self.layers.append(BilinearUpsample(spec.factor, dtype=dtype))
            else:
                self.layers.append(ConcatInput())

    @property
    def param_count(self) -> int:
        return sum(layer.param_count for layer in self.layers)

    def param_layers(self):
        return [l for l in self.layers if isinstance(l, Conv2D)]

    def parameters(self):
        out = []
        for l in self.param_layers():
            out.extend([l.W, l.b])
        return out

    def set_parameters(self, params) -> None:
        i = 0
        for l in self.param_layers():
            l.W = np.asarray(params[i], dtype=self.dtype).reshape(l.W.shape)
            l.b = np.asarray(params[i + 1], dtype=self.dtype).reshape(l.b.shape)
            i += 2

    def gradients(self):
        out = []
        for l in self.param_layers():
            out.extend([l.dW, l.db])
        return out

    def init_params(self, seed: int) -> None:
        rng = np.random.Generator(np.random.PCG64(seed))
        for l in self.param_layers():
            l.init_params(rng)

    def forward(self, x: np.ndarray, collect: list | None = None) -> np.ndarray:
        """Batched forward pass, (B,C,H,W) -> (B,1,H,W).

        `collect`, when given, receives every intermediate activation.
        """
        x = np.asarray(x, dtype=self.dtype)
        if x.ndim != 4:
            raise ValueError(f"expected a (B,C,H,W) tensor, got shape {x.shape}")
        net_input = x
        out = x
        for layer in self.layers:
            if isinstance(layer, ConcatInput):
                out = layer.forward(out, net_input)
            else:
                out = layer.forward(out)
            if collect is not None:
                collect.append(out)
        return out

    def backward(self, dout: np.ndarray) -> None:
        for layer in reversed(self.layers):
            dout = layer.backward(dout)
            if dout is None:
                break


def build_network(specs: list[LayerSpec], seed: int = 0, dtype=np.float32) -> NetworkModel:
    model = NetworkModel(specs, dtype=dtype)
    model.init_params(seed)
    return model


def build_reference_network(grid_size: int, seed: int = 0, dtype=np.float32) -> NetworkModel:
    """The reference two-branch net for grid_size x grid_size inputs."""
    if grid_size % 8 != 0:
        raise ValueError(f"grid size {grid_size} is not divisible by 8")
    model = build_network(reference_specs(), seed=seed, dtype=dtype)
    n = model.param_count
    if not PARAM_COUNT_RANGE[0] <= n <= PARAM_COUNT_RANGE[1]:
        raise AssertionError(
            f"reference parameter count {n} outside {PARAM_COUNT_RANGE}"
        )
    return model


def forward(model: NetworkModel, x: np.ndarray) -> np.ndarray:
    """Single-input forward: (1,H,W) -> (1,H,W), or batched (B,1,H,W) passthrough."""
    arr = np.asarray(x)
    if arr.ndim == 3:
        return model.forward(arr[None])[0]
    return model.forward(arr)


def loss_and_gradient(
    model: NetworkModel,
    x: np.ndarray,
    label: np.ndarray,
    positive_weight: float = 1.0,
):
    """Mean squared error over all pixels plus parameter gradients.

    positive_weight > 1 up-weights pixels whose label is >= 0.5 (path pixels
    are sparse); at the default 1.0 this is the plain MSE.
    """
    xb = np.asarray(x)
    yb = np.asarray(label)
    if xb.ndim == 3:
        xb = xb[None]
        yb = yb[None]
    out = model.forward(xb)
    if out.shape != yb.shape:
        raise ValueError(f"label shape {yb.shape} does not match output {out.shape}")
    diff = (out - yb).astype(np.float64)
    if positive_weight != 1.0:
        w = np.where(yb >= 0.5, positive_weight, 1.0)
        denom = w.sum()
        mse = float((w * diff * diff).sum() / denom)
        dout = (2.0 * w * diff / denom).astype(model.dtype)
    else:
        denom = diff.size
        mse = float((diff * diff).sum() / denom)
        dout = (2.0 * diff / denom).astype(model.dtype)
    model.backward(dout)
    return mse, model.gradients()


def mse_only(model: NetworkModel, x: np.ndarray, label: np.ndarray) -> float:
    xb = np.asarray(x)
    yb = np.asarray(label)
    if xb.ndim == 3:
        xb = xb[None]
        yb = yb[None]
    out = model.forward(xb)
    diff = (out - yb).astype(np.float64)
    return float((diff * diff).mean())


# ---------------------------------------------------------------------------
# model file: "FCN1" magic, ASCII layer lines, float32 parameter blobs


def save_model(model: NetworkModel, filename) -> None:
    with open(filename, "wb") as f:
        f.write(b"FCN1\n")
        for spec in model.specs:
            if spec.kind == "conv":
                line = (f"conv {spec.kernel} {spec.stride} {spec.padding} "
                        f"{spec.in_ch} {spec.out_ch} {spec.activation}\n")
            elif spec.kind == "upsample":
                line = f"upsample {spec.factor}\n"
            else:
                line = "concat_input\n"
            f.write(line.encode("ascii"))
        f.write(b"params\n")
        for layer in model.param_layers():
            f.write(np.ascontiguousarray(layer.W, dtype="<f4").tobytes())
            f.write(np.ascontiguousarray(layer.b, dtype="<f4").tobytes())


def load_model(filename, dtype=np.float32) -> NetworkModel:
    with open(filename, "rb") as f:
        if f.read(5) != b"FCN1\n":
            raise ValueError(f"not a model file: {filename}")
        specs = []
        while True:
            line = b""
            while not line.endswith(b"\n"):
                c = f.read(1)
                if not c:
                    raise ValueError(f"truncated model file: {filename}")
                line += c
            parts = line.decode("ascii").split()
            if parts[0] == "params":
                break
            if parts[0] == "conv":
                specs.append(LayerSpec("conv", kernel=int(parts[1]), stride=int(parts[2]),
                                       padding=int(parts[3]), in_ch=int(parts[4]),
                                       out_ch=int(parts[5]), activation=parts[6]))
            elif parts[0] == "upsample":
                specs.append(LayerSpec("upsample", factor=int(parts[1])))
            elif parts[0] == "concat_input":
                specs.append(LayerSpec("concat_input"))
            else:
                raise ValueError(f"unknown layer line {line!r} in {filename}")
        model = NetworkModel(specs, dtype=dtype)
        for layer in model.param_layers():
            for name, arr in (("W", layer.W), ("b", layer.b)):
                raw = f.read(4 * arr.size)
                if len(raw) != 4 * arr.size:
                    raise ValueError(f"truncated parameters in {filename}")
                vals = np.frombuffer(raw, dtype="<f4").reshape(arr.shape)
                setattr(layer, name, vals.astype(dtype))
        extra = f.read(1)
        if extra:
            raise ValueError(f"trailing bytes in model file: {filename}")
    return model
