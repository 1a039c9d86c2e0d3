"""AdamW with decoupled weight decay and bias correction, over named parameter trees."""

from dataclasses import dataclass, field

import numpy as np

from .errors import TrainingError


@dataclass
class AdamWState:
    """Optimizer hyperparameters plus per-parameter moment accumulators."""

    lr: float = 1e-3
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8
    weight_decay: float = 0.01
    step_count: int = 0
    m: dict = field(default_factory=dict)
    v: dict = field(default_factory=dict)


def adamw_step(state: AdamWState, params: dict, grads: dict) -> None:
    """One update step, in place on the parameter arrays.

    m <- b1 m + (1-b1) g;  v <- b2 v + (1-b2) g^2;  with bias-corrected
    m_hat, v_hat the update is  p <- p - lr * (m_hat / (sqrt(v_hat) + eps) + wd * p).
    """
    state.step_count += 1
    bc1 = 1.0 - state.beta1 ** state.step_count
    bc2 = 1.0 - state.beta2 ** state.step_count
    for name, grad in grads.items():
        if not np.all(np.isfinite(grad)):
            raise TrainingError(f"non-finite gradient for parameter '{name}'")
        param = params[name]
        m = state.m.setdefault(name, np.zeros_like(param))
        v = state.v.setdefault(name, np.zeros_like(param))
        m *= state.beta1
        m += (1.0 - state.beta1) * grad
        v *= state.beta2
        v += (1.0 - state.beta2) * grad * grad
        update = (m / bc1) / (np.sqrt(v / bc2) + state.eps)
        param -= state.lr * (update + state.weight_decay * param)
