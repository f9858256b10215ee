"""Adam with bias correction, operating in place on a ParameterStore."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .params import ParameterStore


@dataclass
class AdamState:
    learning_rate: float = 1e-3
    beta1: float = 0.9
    beta2: float = 0.999
    epsilon: float = 1e-8
    step: int = 0
    m: dict[str, np.ndarray] = field(default_factory=dict)
    v: dict[str, np.ndarray] = field(default_factory=dict)


def adam_step(store: ParameterStore, state: AdamState, grad_clip: float | None = None) -> None:
    """One bias-corrected Adam update over every parameter in the store.

    Parameters with no accumulated gradient are treated as zero-gradient.
    ``grad_clip`` rescales the global gradient norm when it exceeds the bound.
    """
    grads = store.gradients()
    if grad_clip is not None:
        total = np.sqrt(sum(float((g * g).sum()) for g in grads.values()))
        if total > grad_clip:
            scale = grad_clip / total
            for name in grads:
                grads[name] = grads[name] * scale
    state.step += 1
    t = state.step
    bc1 = 1.0 - state.beta1 ** t
    bc2 = 1.0 - state.beta2 ** t
    for name, param in store.items():
        g = grads[name]
        if name not in state.m:
            state.m[name] = np.zeros_like(param.data)
            state.v[name] = np.zeros_like(param.data)
        m = state.m[name]
        v = state.v[name]
        m *= state.beta1
        m += (1.0 - state.beta1) * g
        v *= state.beta2
        v += (1.0 - state.beta2) * g * g
        m_hat = m / bc1
        v_hat = v / bc2
        param.data -= state.learning_rate * m_hat / (np.sqrt(v_hat) + state.epsilon)
