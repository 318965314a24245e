import numpy as np

from ..errors import ShapeError
from .layers import softmax

PROB_FLOOR = 1e-12


def cross_entropy(probs: np.ndarray, targets: np.ndarray) -> np.ndarray:
    """Per-sample negative log-likelihood of the target class.

    Probabilities are floored at 1e-12 so a confident miss stays finite.
    """
    targets = np.asarray(targets, dtype=np.intp)
    if probs.ndim != 2 or targets.shape != (probs.shape[0],):
        raise ShapeError(
            f"cross_entropy expects (batch, classes) probabilities and (batch,) targets, "
            f"got {probs.shape} and {targets.shape}"
        )
    picked = probs[np.arange(probs.shape[0]), targets]
    return -np.log(np.maximum(picked, PROB_FLOOR))


def softmax_cross_entropy(logits: np.ndarray, targets: np.ndarray) -> tuple[float, np.ndarray]:
    """Mean loss over the batch and its gradient with respect to the logits.

    The gradient of softmax followed by cross-entropy is (p - onehot) / batch.
    """
    probs = softmax(logits)
    targets = np.asarray(targets, dtype=np.intp)
    loss = float(cross_entropy(probs, targets).mean())
    grad = probs.copy()
    grad[np.arange(grad.shape[0]), targets] -= 1.0
    grad /= grad.shape[0]
    return loss, grad
