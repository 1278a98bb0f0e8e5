# Copyright (c) 2025 Mahmood Khordoo
#
# This software is licensed under the MIT License.
# See the LICENSE file in the root directory for details.

"""Adam with bias correction, updating Param values in place."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from finr.autodiff.tape import Param
from finr.errors import ContractError


@dataclass
class AdamState:
    """First/second moments keyed by parameter name, plus the step counter."""

    lr: float = 1e-4
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8
    step: int = 0
    m: dict[str, np.ndarray] = field(default_factory=dict)
    v: dict[str, np.ndarray] = field(default_factory=dict)

    @classmethod
    def for_params(cls, params: Sequence[Param], lr: float = 1e-4) -> "AdamState":
        state = cls(lr=lr)
        for p in params:
            state.m[p.name] = np.zeros_like(p.value)
            state.v[p.name] = np.zeros_like(p.value)
        return state


def adam_step(state: AdamState, params: Sequence[Param]) -> None:
    """One bias-corrected update of every parameter, then zero the gradients."""
    state.step += 1
    bc1 = 1.0 - state.beta1**state.step
    bc2 = 1.0 - state.beta2**state.step
    step_size = state.lr / bc1

    for p in params:
        if p.name not in state.m:
            raise ContractError(f"parameter {p.name!r} has no optimizer state")
        m, v = state.m[p.name], state.v[p.name]
        if m.shape != p.shape:
            raise ContractError(f"moment shape {m.shape} != parameter shape {p.shape}")
        g = p.grad
        m *= state.beta1
        m += (1.0 - state.beta1) * g
        v *= state.beta2
        v += (1.0 - state.beta2) * (g * g)
        denom = np.sqrt(v * (1.0 / bc2)) + state.eps
        p.value -= (step_size * m / denom).astype(p.value.dtype, copy=False)
        p.zero_grad()
