"""Forward and backward passes for the 1-D layer types.

Tensors are float64 arrays shaped (batch, channels, length). The pure
functions take their inputs explicitly; the small Layer classes below cache
what the backward pass needs and hold parameter gradients.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Literal

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view

from ..errors import ShapeError

Mode = Literal["train", "infer"]


@dataclass
class ConvParams:
    weight: np.ndarray  # (out_channels, in_channels, kernel)
    bias: np.ndarray    # (out_channels,)


@dataclass
class BatchNormParams:
    gamma: np.ndarray
    beta: np.ndarray
    running_mean: np.ndarray
    running_var: np.ndarray
    eps: float = 1e-5
    momentum: float = 0.1

    @classmethod
    def identity(cls, channels: int) -> "BatchNormParams":
        return cls(
            gamma=np.ones(channels),
            beta=np.zeros(channels),
            running_mean=np.zeros(channels),
            running_var=np.ones(channels),
        )


def _check_3d(x: np.ndarray, what: str) -> None:
    if x.ndim != 3:
        raise ShapeError(f"{what} expects (batch, channels, length), got shape {x.shape}")


def _im2col(x: np.ndarray, kernel: int) -> np.ndarray:
    # cols[b, t, c * kernel + j] = x[b, c, t + j]
    b, c, _ = x.shape
    windows = sliding_window_view(x, kernel, axis=2)
    return windows.transpose(0, 2, 1, 3).reshape(b, -1, c * kernel)


def conv1d_forward(x: np.ndarray, p: ConvParams) -> np.ndarray:
    """Valid (no padding) stride-1 cross-correlation plus bias."""
    _check_3d(x, "conv1d")
    out_ch, in_ch, k = p.weight.shape
    if x.shape[1] != in_ch:
        raise ShapeError(
            f"conv1d expects {in_ch} input channels, got {x.shape[1]}",
            details={"expected": in_ch, "got": x.shape[1]},
        )
    if x.shape[2] < k:
        raise ShapeError(
            f"conv1d input length {x.shape[2]} shorter than kernel {k}",
            details={"length": x.shape[2], "kernel": k},
        )
    cols = _im2col(x, k)
    out = cols @ p.weight.reshape(out_ch, -1).T + p.bias
    return np.ascontiguousarray(out.transpose(0, 2, 1))


def conv1d_backward(x: np.ndarray, p: ConvParams, grad_out: np.ndarray) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Returns (grad_x, grad_weight, grad_bias)."""
    out_ch, in_ch, k = p.weight.shape
    b, _, length = x.shape
    l_out = length - k + 1
    if grad_out.shape != (b, out_ch, l_out):
        raise ShapeError(
            f"conv1d gradient shape {grad_out.shape} does not match output {(b, out_ch, l_out)}"
        )
    g = grad_out.transpose(0, 2, 1).reshape(-1, out_ch)
    cols = _im2col(x, k).reshape(-1, in_ch * k)
    grad_w = (g.T @ cols).reshape(out_ch, in_ch, k)
    grad_b = grad_out.sum(axis=(0, 2))
    grad_cols = (g @ p.weight.reshape(out_ch, -1)).reshape(b, l_out, in_ch, k)
    grad_x = np.zeros_like(x)
    for j in range(k):
        grad_x[:, :, j:j + l_out] += grad_cols[:, :, :, j].transpose(0, 2, 1)
    return grad_x, grad_w, grad_b


def relu_forward(x: np.ndarray) -> np.ndarray:
    return np.maximum(x, 0.0)


def relu_backward(x: np.ndarray, grad_out: np.ndarray) -> np.ndarray:
    return grad_out * (x > 0.0)


def batchnorm_forward(x: np.ndarray, p: BatchNormParams, mode: Mode = "train") -> np.ndarray:
    """Normalise each channel over (batch, length).

    Train mode uses batch statistics and updates the running estimates in
    place, the variance estimate with Bessel's correction. Infer mode uses the
    running estimates only.
    """
    _check_3d(x, "batchnorm")
    if x.shape[1] != p.gamma.shape[0]:
        raise ShapeError(
            f"batchnorm over {p.gamma.shape[0]} channels got {x.shape[1]}",
            details={"expected": p.gamma.shape[0], "got": x.shape[1]},
        )
    if mode == "train":
        n = x.shape[0] * x.shape[2]
        if n < 2:
            raise ShapeError("batchnorm train mode needs at least two values per channel")
        mean = x.mean(axis=(0, 2))
        var = x.var(axis=(0, 2))
        unbiased = var * n / (n - 1)
        p.running_mean *= 1.0 - p.momentum
        p.running_mean += p.momentum * mean
        p.running_var *= 1.0 - p.momentum
        p.running_var += p.momentum * unbiased
    else:
        mean, var = p.running_mean, p.running_var
    inv_std = 1.0 / np.sqrt(var + p.eps)
    xhat = (x - mean[None, :, None]) * inv_std[None, :, None]
    return xhat * p.gamma[None, :, None] + p.beta[None, :, None]


def batchnorm_backward(x: np.ndarray, p: BatchNormParams, grad_out: np.ndarray) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Train-mode gradients; returns (grad_x, grad_gamma, grad_beta)."""
    mean = x.mean(axis=(0, 2))
    var = x.var(axis=(0, 2))
    inv_std = 1.0 / np.sqrt(var + p.eps)
    xhat = (x - mean[None, :, None]) * inv_std[None, :, None]
    grad_gamma = (grad_out * xhat).sum(axis=(0, 2))
    grad_beta = grad_out.sum(axis=(0, 2))
    g_hat = grad_out * p.gamma[None, :, None]
    grad_x = inv_std[None, :, None] * (
        g_hat
        - g_hat.mean(axis=(0, 2), keepdims=True)
        - xhat * (g_hat * xhat).mean(axis=(0, 2), keepdims=True)
    )
    return grad_x, grad_gamma, grad_beta


def avgpool_forward(x: np.ndarray, pool: int, stride: int) -> np.ndarray:
    _check_3d(x, "avgpool")
    if x.shape[2] < pool:
        raise ShapeError(
            f"avgpool input length {x.shape[2]} shorter than pool {pool}",
            details={"length": x.shape[2], "pool": pool},
        )
    return sliding_window_view(x, pool, axis=2)[:, :, ::stride, :].mean(axis=3)


def avgpool_backward(grad_out: np.ndarray, input_length: int, pool: int, stride: int) -> np.ndarray:
    b, c, l_out = grad_out.shape
    grad_x = np.zeros((b, c, input_length))
    share = grad_out / pool
    for t in range(l_out):
        start = t * stride
        grad_x[:, :, start:start + pool] += share[:, :, t:t + 1]
    return grad_x


def global_avg_pool(x: np.ndarray) -> np.ndarray:
    _check_3d(x, "global average pooling")
    return x.mean(axis=2)


def global_avg_pool_backward(grad_out: np.ndarray, length: int) -> np.ndarray:
    return np.repeat(grad_out[:, :, None] / length, length, axis=2)


def softmax(logits: np.ndarray) -> np.ndarray:
    z = logits - logits.max(axis=-1, keepdims=True)
    e = np.exp(z)
    return e / e.sum(axis=-1, keepdims=True)


def softmax_backward(probs: np.ndarray, grad_out: np.ndarray) -> np.ndarray:
    return probs * (grad_out - (grad_out * probs).sum(axis=-1, keepdims=True))


class Layer:
    """Stateful wrapper: caches the forward input for the backward pass."""

    kind = "layer"

    def __init__(self, name: str = ""):
        self.name = name or self.kind
        self._x: np.ndarray | None = None

    def params(self) -> dict[str, np.ndarray]:
        return {}

    def grads(self) -> dict[str, np.ndarray]:
        return {}

    def buffers(self) -> dict[str, np.ndarray]:
        return {}

    def forward(self, x: np.ndarray, mode: Mode) -> np.ndarray:
        try:
            y = self._forward(x, mode)
        except ShapeError as e:
            e.details.setdefault("layer", self.name)
            e.message = f"{self.name}: {e.message}"
            e.args = (e.message,)
            raise
        self._x = x if mode == "train" else None
        return y

    def backward(self, grad_out: np.ndarray) -> np.ndarray:
        if self._x is None:
            raise RuntimeError(f"{self.name}: backward called without a train-mode forward")
        return self._backward(self._x, grad_out)

    def _forward(self, x: np.ndarray, mode: Mode) -> np.ndarray:
        raise NotImplementedError

    def _backward(self, x: np.ndarray, grad_out: np.ndarray) -> np.ndarray:
        raise NotImplementedError


class Conv1d(Layer):
    kind = "conv"

    def __init__(self, p: ConvParams, name: str = ""):
        super().__init__(name)
        self.p = p
        self.grad_weight = np.zeros_like(p.weight)
        self.grad_bias = np.zeros_like(p.bias)

    def params(self) -> dict[str, np.ndarray]:
        return {"weight": self.p.weight, "bias": self.p.bias}

    def grads(self) -> dict[str, np.ndarray]:
        return {"weight": self.grad_weight, "bias": self.grad_bias}

    def _forward(self, x, mode):
        return conv1d_forward(x, self.p)

    def _backward(self, x, grad_out):
        grad_x, self.grad_weight[...], self.grad_bias[...] = conv1d_backward(x, self.p, grad_out)
        return grad_x


class ReLU(Layer):
    kind = "relu"

    def _forward(self, x, mode):
        return relu_forward(x)

    def _backward(self, x, grad_out):
        return relu_backward(x, grad_out)


class BatchNorm1d(Layer):
    kind = "batchnorm"

    def __init__(self, p: BatchNormParams, name: str = ""):
        super().__init__(name)
        self.p = p
        self.grad_gamma = np.zeros_like(p.gamma)
        self.grad_beta = np.zeros_like(p.beta)

    def params(self) -> dict[str, np.ndarray]:
        return {"gamma": self.p.gamma, "beta": self.p.beta}

    def grads(self) -> dict[str, np.ndarray]:
        return {"gamma": self.grad_gamma, "beta": self.grad_beta}

    def buffers(self) -> dict[str, np.ndarray]:
        return {"running_mean": self.p.running_mean, "running_var": self.p.running_var}

    def _forward(self, x, mode):
        return batchnorm_forward(x, self.p, mode)

    def _backward(self, x, grad_out):
        grad_x, self.grad_gamma[...], self.grad_beta[...] = batchnorm_backward(x, self.p, grad_out)
        return grad_x


class AvgPool1d(Layer):
    kind = "avgpool"

    def __init__(self, pool: int, stride: int, name: str = ""):
        super().__init__(name)
        self.pool = pool
        self.stride = stride

    def _forward(self, x, mode):
        return avgpool_forward(x, self.pool, self.stride)

    def _backward(self, x, grad_out):
        return avgpool_backward(grad_out, x.shape[2], self.pool, self.stride)


class GlobalAvgPool(Layer):
    kind = "global_avg_pool"

    def _forward(self, x, mode):
        return global_avg_pool(x)

    def _backward(self, x, grad_out):
        return global_avg_pool_backward(grad_out, x.shape[2])


class Softmax(Layer):
    kind = "softmax"

    def _forward(self, x, mode):
        return softmax(x)

    def _backward(self, x, grad_out):
        return softmax_backward(softmax(x), grad_out)
