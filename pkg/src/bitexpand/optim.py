"""Adam optimizer with bias correction, operating on lists of arrays."""

from __future__ import annotations

import numpy as np
from dataclasses import dataclass


@dataclass
class AdamState:
    """First/second moment estimates plus the step counter.

    Moment arrays mirror the parameter shapes and dtypes. The update itself
    is evaluated in float64 and written back in the parameter dtype.
    """

    m: list[np.ndarray]
    v: list[np.ndarray]
    t: int = 0
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8

    @classmethod
    def init(cls, params: list[np.ndarray]) -> "AdamState":
        return cls(m=[np.zeros_like(p) for p in params],
                   v=[np.zeros_like(p) for p in params])


def adam_step(params: list[np.ndarray], grads: list[np.ndarray],
              state: AdamState, lr: float):
    """One bias-corrected Adam update, in place on params and state."""
    if lr <= 0:
        raise ValueError(f"lr must be positive, got {lr}")
    if not (len(params) == len(grads) == len(state.m) == len(state.v)):
        raise ValueError("params, grads and state must have the same length")
    state.t += 1
    b1, b2, eps = state.beta1, state.beta2, state.eps
    c1 = 1.0 - b1 ** state.t
    c2 = 1.0 - b2 ** state.t
    for p, g, m, v in zip(params, grads, state.m, state.v):
        if p.shape != g.shape or p.shape != m.shape:
            raise ValueError(f"shape mismatch: param {p.shape}, grad {g.shape}")
        g64 = g.astype(np.float64, copy=False)
        m64 = b1 * m.astype(np.float64, copy=False) + (1.0 - b1) * g64
        v64 = b2 * v.astype(np.float64, copy=False) + (1.0 - b2) * g64 * g64
        m[...] = m64.astype(m.dtype)
        v[...] = v64.astype(v.dtype)
        step = lr * (m64 / c1) / (np.sqrt(v64 / c2) + eps)
        p[...] = (p.astype(np.float64, copy=False) - step).astype(p.dtype)
    return params, state
