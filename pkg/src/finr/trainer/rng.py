# Copyright (c) 2025 Mahmood Khordoo
#
# This software is licensed under the MIT License.
# See the LICENSE file in the root directory for details.

"""
Seeded random streams.

Every random draw in finr comes from a Philox generator keyed by the run seed
plus a stream path, so initialization, batching and evaluation never share
state. Generator state round-trips through JSON for checkpoints.
"""

from __future__ import annotations

import json

import numpy as np

# Stream keys
INIT = 0
TRAIN = 1
EVAL = 2
DATA = 3


def generator(seed: int, *stream: int) -> np.random.Generator:
    return np.random.Generator(np.random.Philox(np.random.SeedSequence([int(seed), *stream])))


def dump_state(rng: np.random.Generator) -> str:
    state = rng.bit_generator.state
    return json.dumps(_to_builtin(state), sort_keys=True)


def load_state(text: str) -> np.random.Generator:
    state = json.loads(text)
    bit_generator = np.random.Philox()
    bit_generator.state = _to_numpy(state)
    return np.random.Generator(bit_generator)


def _to_builtin(obj):
    if isinstance(obj, dict):
        return {k: _to_builtin(v) for k, v in obj.items()}
    if isinstance(obj, np.ndarray):
        return {"__array__": obj.tolist(), "dtype": str(obj.dtype)}
    if isinstance(obj, np.integer):
        return int(obj)
    return obj


def _to_numpy(obj):
    if isinstance(obj, dict):
        if "__array__" in obj:
            return np.array(obj["__array__"], dtype=obj["dtype"])
        return {k: _to_numpy(v) for k, v in obj.items()}
    return obj
