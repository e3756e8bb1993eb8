"""Adam with per-entry learning rates and a step-decay schedule."""
from __future__ import annotations

from dataclasses import dataclass
from typing import Mapping

import numpy as np


class NonFiniteGradientError(FloatingPointError):
    pass


@dataclass(frozen=True)
class AdamState:
    first_moment: np.ndarray
    second_moment: np.ndarray
    step_count: int = 0
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8

    @classmethod
    def zeros(cls, size: int, **kwargs) -> "AdamState":
        return cls(np.zeros(size), np.zeros(size), 0, **kwargs)


def adam_step(state: AdamState, params, grads, lr):
    """One bias-corrected Adam update.

    ``lr`` is a scalar or an array broadcastable to ``params`` (one rate per
    entry, built from parameter groups). Returns ``(new_params, new_state)``.
    """
    params = np.asarray(params, dtype=np.float64)
    grads = np.asarray(grads, dtype=np.float64)
    if params.shape != grads.shape or params.shape != state.first_moment.shape:
        raise ValueError("params, grads and optimizer moments must have equal length")
    if not np.all(np.isfinite(grads)):
        raise NonFiniteGradientError(f"non-finite gradient at step {state.step_count + 1}")
    t = state.step_count + 1
    m = state.beta1 * state.first_moment + (1.0 - state.beta1) * grads
    v = state.beta2 * state.second_moment + (1.0 - state.beta2) * grads**2
    m_hat = m / (1.0 - state.beta1**t)
    v_hat = v / (1.0 - state.beta2**t)
    new_params = params - lr * m_hat / (np.sqrt(v_hat) + state.eps)
    return new_params, AdamState(m, v, t, state.beta1, state.beta2, state.eps)


@dataclass(frozen=True)
class LrSchedule:
    base_lr: Mapping[str, float]
    gamma: float = 1.0
    step_every: int = 1

    def __post_init__(self):
        if not 0.0 < self.gamma <= 1.0:
            raise ValueError("gamma must lie in (0, 1]")
        if self.step_every < 1:
            raise ValueError("step_every must be at least 1")


def scheduled_lr(schedule: LrSchedule, epoch: int) -> dict:
    if epoch < 0:
        raise ValueError("epoch must be non-negative")
    factor = schedule.gamma ** (epoch // schedule.step_every)
    return {group: lr * factor for group, lr in schedule.base_lr.items()}


def lr_vector(groups: np.ndarray, rates: Mapping[str, float]) -> np.ndarray:
    """Expand per-group rates onto a flat parameter vector's group labels."""
    out = np.empty(len(groups))
    for name in np.unique(groups):
        out[groups == name] = rates[name]
    return out
