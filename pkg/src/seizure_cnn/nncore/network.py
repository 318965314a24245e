from __future__ import annotations

from typing import TYPE_CHECKING, Iterator, Sequence

import numpy as np

from ..errors import ShapeError
from .layers import Layer, Mode, Softmax

if TYPE_CHECKING:
    from ..arch import NetworkSpec

StateEntry = tuple[int, str, np.ndarray]


class Network:
    """Runnable network assembled from a NetworkSpec.

    ``forward_logits`` stops before the softmax head; training feeds those
    logits to ``softmax_cross_entropy`` and passes the gradient back through
    ``backward``. ``forward`` returns class probabilities.
    """

    def __init__(self, spec: "NetworkSpec", layers: Sequence[Layer]):
        self.spec = spec
        self.layers = list(layers)
        self.best_epoch: int | None = None

    @property
    def name(self) -> str:
        return self.spec.name

    def _body(self) -> Iterator[Layer]:
        for layer in self.layers:
            if isinstance(layer, Softmax):
                return
            yield layer

    def forward_logits(self, x: np.ndarray, mode: Mode = "infer") -> np.ndarray:
        if x.ndim != 3 or x.shape[1] != self.spec.input_channels:
            raise ShapeError(
                f"{self.name} expects (batch, {self.spec.input_channels}, length) input, got {x.shape}"
            )
        for layer in self._body():
            x = layer.forward(x, mode)
        return x

    def forward(self, x: np.ndarray, mode: Mode = "infer") -> np.ndarray:
        out = self.forward_logits(x, mode)
        for layer in self.layers:
            if isinstance(layer, Softmax):
                out = layer.forward(out, mode)
        return out

    def backward(self, grad_logits: np.ndarray) -> np.ndarray:
        grad = grad_logits
        for layer in reversed(list(self._body())):
            grad = layer.backward(grad)
        return grad

    def predict_proba(self, windows: np.ndarray, batch_size: int = 512) -> np.ndarray:
        """Seizure-class probability for each (length,) window, inference mode."""
        windows = np.asarray(windows, dtype=np.float64)
        if windows.ndim != 2:
            raise ShapeError(f"expected (n_windows, length) windows, got {windows.shape}")
        out = np.empty(windows.shape[0])
        for start in range(0, windows.shape[0], batch_size):
            chunk = windows[start:start + batch_size, None, :]
            out[start:start + batch_size] = self.forward(chunk, "infer")[:, 1]
        return out

    def parameters(self) -> dict[str, np.ndarray]:
        return {f"{i}.{k}": v for i, layer in enumerate(self.layers) for k, v in layer.params().items()}

    def gradients(self) -> dict[str, np.ndarray]:
        return {f"{i}.{k}": v for i, layer in enumerate(self.layers) for k, v in layer.grads().items()}

    def state(self) -> list[StateEntry]:
        """Every stored array in forward order: trainables, then running stats per layer."""
        entries = []
        for i, layer in enumerate(self.layers):
            for key, arr in (*layer.params().items(), *layer.buffers().items()):
                entries.append((i, key, arr))
        return entries

    def snapshot(self) -> list[np.ndarray]:
        return [arr.copy() for _, _, arr in self.state()]

    def restore(self, arrays: Sequence[np.ndarray]) -> None:
        entries = self.state()
        if len(arrays) != len(entries):
            raise ShapeError(f"{len(arrays)} arrays for {len(entries)} state entries")
        for (i, key, dest), src in zip(entries, arrays):
            if dest.shape != src.shape:
                raise ShapeError(
                    f"layer {i} {key}: stored shape {src.shape} does not match {dest.shape}",
                    details={"layer": i, "name": key},
                )
            dest[...] = src
