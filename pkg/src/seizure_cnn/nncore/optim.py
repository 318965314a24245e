from typing import Mapping, MutableMapping

import numpy as np

from ..config import OptimizerConfig
from ..errors import ShapeError


def sgd_momentum_step(
    params: Mapping[str, np.ndarray],
    grads: Mapping[str, np.ndarray],
    velocity: MutableMapping[str, np.ndarray],
    cfg: OptimizerConfig,
) -> tuple[Mapping[str, np.ndarray], MutableMapping[str, np.ndarray]]:
    """One heavy-ball update, in place: v <- m*v - lr*g, then w <- w + v.

    Missing velocity entries start at zero.
    """
    for key, w in params.items():
        g = grads[key]
        if g.shape != w.shape:
            raise ShapeError(
                f"gradient for {key} has shape {g.shape}, parameter has {w.shape}",
                details={"parameter": key},
            )
        v = velocity.get(key)
        if v is None:
            v = velocity[key] = np.zeros_like(w)
        v *= cfg.momentum
        v -= cfg.learning_rate * g
        w += v
    return params, velocity


class SgdMomentum:
    def __init__(self, cfg: OptimizerConfig):
        self.cfg = cfg
        self.velocity: dict[str, np.ndarray] = {}

    def step(self, params: Mapping[str, np.ndarray], grads: Mapping[str, np.ndarray]) -> None:
        sgd_momentum_step(params, grads, self.velocity, self.cfg)
