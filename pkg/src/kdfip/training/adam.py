"""Adam with bias correction; frozen parameters never move."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from ..engine.tensor import ShapeError

BETA1 = 0.9
BETA2 = 0.999
EPS = 1e-8


@dataclass
class AdamState:
    m: dict[str, np.ndarray] = field(default_factory=dict)
    v: dict[str, np.ndarray] = field(default_factory=dict)
    t: int = 0


def adam_step(
    params: dict[str, np.ndarray],
    grads: dict[str, np.ndarray],
    state: AdamState,
    lr: float,
    frozen: frozenset[str] = frozenset(),
) -> tuple[dict[str, np.ndarray], AdamState]:
    """One update; functional in params (new arrays for moved parameters)."""
    state.t += 1
    t = state.t
    bc1 = 1.0 - BETA1**t
    bc2 = 1.0 - BETA2**t
    new_params: dict[str, np.ndarray] = {}
    for name, p in params.items():
        if name in frozen or name not in grads:
            new_params[name] = p
            continue
        g = grads[name]
        if g.shape != p.shape:
            raise ShapeError(
                f"adam_step: gradient shape {g.shape} != parameter shape {p.shape} for {name!r}"
            )
        m = state.m.get(name)
        if m is None:
            m = np.zeros_like(p)
            v = np.zeros_like(p)
        else:
            v = state.v[name]
        m = BETA1 * m + (1.0 - BETA1) * g
        v = BETA2 * v + (1.0 - BETA2) * (g * g)
        state.m[name] = m
        state.v[name] = v
        m_hat = m / bc1
        v_hat = v / bc2
        new_params[name] = p - lr * m_hat / (np.sqrt(v_hat) + EPS)
    return new_params, state
