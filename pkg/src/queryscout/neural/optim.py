"""Adam with bias correction."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from ..errors import ModelError


@dataclass
class AdamState:
    lr: float = 1e-4
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8
    step: int = 0
    m: dict[str, np.ndarray] = field(default_factory=dict)
    v: dict[str, np.ndarray] = field(default_factory=dict)
    _scratch: dict[str, tuple[np.ndarray, np.ndarray]] = field(default_factory=dict)


def adam_step(state: AdamState, params: dict[str, np.ndarray], grads: dict[str, np.ndarray]) -> None:
    """One in-place bias-corrected update over every parameter with a
    gradient entry. Scratch buffers avoid per-step allocation; the math is
    the textbook update."""

    state.step += 1
    t = state.step
    bc1 = 1.0 - state.beta1**t
    bc2 = 1.0 - state.beta2**t
    for name in sorted(grads):
        grad = grads[name]
        if not np.all(np.isfinite(grad)):
            raise ModelError(f"non-finite gradient for parameter {name!r}")
        if name not in params:
            raise ModelError(f"gradient for unknown parameter {name!r}")
        if name not in state.m:
            state.m[name] = np.zeros_like(params[name])
            state.v[name] = np.zeros_like(params[name])
            state._scratch[name] = (np.empty_like(params[name]), np.empty_like(params[name]))
        m = state.m[name]
        v = state.v[name]
        s1, s2 = state._scratch[name]
        m *= state.beta1
        m += (1.0 - state.beta1) * grad
        np.multiply(grad, grad, out=s1)
        v *= state.beta2
        s1 *= 1.0 - state.beta2
        v += s1
        # update = lr * (m / bc1) / (sqrt(v / bc2) + eps)
        np.divide(v, bc2, out=s1)
        np.sqrt(s1, out=s1)
        s1 += state.eps
        s1 *= bc1
        np.divide(m, s1, out=s2)
        s2 *= state.lr
        params[name] -= s2
