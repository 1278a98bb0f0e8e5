# Copyright (c) 2025 Mahmood Khordoo
#
# This software is licensed under the MIT License.
# See the LICENSE file in the root directory for details.

"""Finite-difference verification of reverse-mode gradients."""

from __future__ import annotations

from typing import Callable, Iterable

import numpy as np

from finr.autodiff.tape import Node, Param, Tape


def grad_check(
    loss_fn: Callable[[Tape], Node],
    params: Iterable[Param],
    eps: float = 1e-5,
) -> float:
    """Worst relative error between reverse-mode and central-difference gradients.

    ``loss_fn`` builds a scalar loss on the tape it is given. The relative
    error of each scalar parameter uses max(|analytic|, |numeric|, 1e-12) as
    denominator. Gradients of ``params`` are left zeroed.
    """
    params = list(params)
    for p in params:
        p.zero_grad()
    tape = Tape()
    tape.backward(loss_fn(tape))
    analytic = [p.grad.copy() for p in params]

    def evaluate() -> float:
        return float(loss_fn(Tape(grad_enabled=False)).value)

    worst = 0.0
    for p, grad in zip(params, analytic):
        for idx in np.ndindex(*p.value.shape):
            original = p.value[idx]
            p.value[idx] = original + eps
            upper = evaluate()
            p.value[idx] = original - eps
            lower = evaluate()
            p.value[idx] = original
            numeric = (upper - lower) / (2.0 * eps)
            exact = float(grad[idx])
            denom = max(abs(exact), abs(numeric), 1e-12)
            worst = max(worst, abs(exact - numeric) / denom)
        p.zero_grad()
    return worst
