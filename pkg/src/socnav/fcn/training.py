"""Mini-batch training for the path-prediction network."""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from ..grid import FloatGrid, GridSpec
from ..raster import encode_input_raster
from ..scenario import Scenario
from .network import NetworkModel, loss_and_gradient, mse_only


class TrainingDiverged(RuntimeError):
    pass


@dataclass
class TrainingReport:
    epochs: int
    learning_rate: float
    batch_size: int
    rng_seed: int
    train_mse: list[float] = field(default_factory=list)
    val_mse: list[float] = field(default_factory=list)

    def write_csv(self, filename) -> None:
        with open(filename, "w", encoding="ascii") as f:
            f.write("epoch,train_mse,val_mse\n")
            for i, tr in enumerate(self.train_mse):
                val = self.val_mse[i] if i < len(self.val_mse) else float("nan")
                f.write(f"{i + 1},{tr!r},{val!r}\n")


class Adam:
    def __init__(self, params, lr, beta1=0.9, beta2=0.999, eps=1e-8):
        self.lr = lr
        self.beta1 = beta1
        self.beta2 = beta2
        self.eps = eps
        self.t = 0
        self.m = [np.zeros_like(p, dtype=np.float64) for p in params]
        self.v = [np.zeros_like(p, dtype=np.float64) for p in params]

    def step(self, params, grads) -> None:
        self.t += 1
        b1t = 1.0 - self.beta1**self.t
        b2t = 1.0 - self.beta2**self.t
        for p, g, m, v in zip(params, grads, self.m, self.v):
            g64 = g.astype(np.float64)
            m *= self.beta1
            m += (1.0 - self.beta1) * g64
            v *= self.beta2
            v += (1.0 - self.beta2) * g64 * g64
            upd = self.lr * (m / b1t) / (np.sqrt(v / b2t) + self.eps)
            p -= upd.astype(p.dtype)


class Sgd:
    def __init__(self, params, lr):
        self.lr = lr

    def step(self, params, grads) -> None:
        for p, g in zip(params, grads):
            p -= (self.lr * g).astype(p.dtype)


def _stack(dataset) -> tuple[np.ndarray, np.ndarray]:
    xs = np.stack([np.asarray(x) for x, _ in dataset])
    ys = np.stack([np.asarray(y) for _, y in dataset])
    return xs, ys


def dataset_mse(model: NetworkModel, xs: np.ndarray, ys: np.ndarray,
                batch_size: int = 16) -> float:
    total = 0.0
    for i in range(0, len(xs), batch_size):
        xb = xs[i:i + batch_size]
        total += mse_only(model, xb, ys[i:i + batch_size]) * len(xb)
    return total / len(xs)


def train(
    model: NetworkModel,
    dataset,
    epochs: int,
    learning_rate: float,
    batch_size: int,
    rng_seed: int,
    val_dataset=None,
    positive_weight: float = 1.0,
    optimizer: str = "adam",
    log_every: int = 0,
) -> TrainingReport:
    """Mini-batch gradient descent on the pixel MSE.

    dataset: sequence of (input, label) pairs of (1,H,W) arrays.
    Deterministic given rng_seed: init is the caller's, batching comes from
    one seeded generator. Raises TrainingDiverged on a NaN loss.
    """
    if len(dataset) == 0:
        raise ValueError("training dataset is empty")
    xs, ys = _stack(dataset)
    val = _stack(val_dataset) if val_dataset else None
    params = model.parameters()
    if optimizer == "adam":
        opt = Adam(params, learning_rate)
    elif optimizer == "sgd":
        opt = Sgd(params, learning_rate)
    else:
        raise ValueError(f"unknown optimizer {optimizer!r}")
    rng = np.random.Generator(np.random.PCG64(rng_seed))
    report = TrainingReport(epochs=epochs, learning_rate=learning_rate,
                            batch_size=batch_size, rng_seed=rng_seed)
    for epoch in range(epochs):
        perm = rng.permutation(len(xs))
        for i in range(0, len(xs), batch_size):
            sel = perm[i:i + batch_size]
            mse, grads = loss_and_gradient(model, xs[sel], ys[sel],
                                           positive_weight=positive_weight)
            if math.isnan(mse):
                raise TrainingDiverged(
                    f"NaN loss at epoch {epoch + 1}, batch {i // batch_size}; "
                    f"lr={learning_rate}"
                )
            opt.step(params, grads)
        report.train_mse.append(dataset_mse(model, xs, ys))
        if val is not None:
            report.val_mse.append(dataset_mse(model, *val))
        if log_every and (epoch + 1) % log_every == 0:
            msg = f"epoch {epoch + 1}/{epochs} train_mse={report.train_mse[-1]:.5f}"
            if val is not None:
                msg += f" val_mse={report.val_mse[-1]:.5f}"
            print(msg, flush=True)
    return report


def predict(model: NetworkModel, scenario: Scenario,
            spec: GridSpec | None = None) -> FloatGrid:
    """Encode a scenario, run the network, return the prediction raster
    in the same robot-centered metric frame as the input."""
    raster = encode_input_raster(scenario, spec)
    x = raster.values.astype(model.dtype)[None]
    out = model.forward(x[None])[0, 0]
    return raster.with_values(out.astype(np.float32))
