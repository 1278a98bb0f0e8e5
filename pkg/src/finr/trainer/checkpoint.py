# Copyright (c) 2025 Mahmood Khordoo
#
# This software is licensed under the MIT License.
# See the LICENSE file in the root directory for details.

"""
Training checkpoints.

Layout (little-endian):
    magic    b"FINR"
    version  u16
    sections tag (4 ASCII bytes), u64 payload length, payload

Sections, in order:
    SPEC  canonical TOML: [model] spec and [task] settings
    PARM  u32 count, then per parameter: u16 name length, UTF-8 name, FTNR tensor
    ADAM  lr, beta1, beta2, eps as f64, step as u64, then m and v per parameter as FTNR
    RNGS  JSON state of the training generator
    STEP  u64 completed steps
"""

from __future__ import annotations

import struct
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional, Union

import numpy as np
import toml

from finr.core.dense import DenseTensor, read_ftnr
from finr.errors import CheckpointError
from finr.model import AnyModel, FInrSpec, MonolithicSpec, initialize_model
from finr.trainer.adam import AdamState

MAGIC = b"FINR"
VERSION = 1
SECTIONS = (b"SPEC", b"PARM", b"ADAM", b"RNGS", b"STEP")

_SECTION = struct.Struct("<4sQ")
_ADAM = struct.Struct("<ddddQ")


@dataclass
class Checkpoint:
    spec: Union[FInrSpec, MonolithicSpec]
    params: dict[str, np.ndarray]
    adam: AdamState
    step: int
    rng_state: str
    task: dict = field(default_factory=dict)
    version: int = VERSION

    @classmethod
    def capture(cls, model: AnyModel, adam: AdamState, step: int, rng_state: str, task: Optional[dict] = None):
        params = {p.name: p.value.copy() for p in model.params()}
        moments = AdamState(
            lr=adam.lr,
            beta1=adam.beta1,
            beta2=adam.beta2,
            eps=adam.eps,
            step=adam.step,
            m={k: v.copy() for k, v in adam.m.items()},
            v={k: v.copy() for k, v in adam.v.items()},
        )
        return cls(model.spec, params, moments, step, rng_state, dict(task or {}))

    def restore_model(self) -> AnyModel:
        first = next(iter(self.params.values()))
        model = initialize_model(self.spec, seed=0, dtype=first.dtype)
        for p in model.params():
            if p.name not in self.params:
                raise CheckpointError(f"checkpoint lacks parameter {p.name!r}")
            stored = self.params[p.name]
            if stored.shape != p.shape:
                raise CheckpointError(f"parameter {p.name!r} has shape {stored.shape}, expected {p.shape}")
            p.value = np.array(stored, copy=True)
            p.zero_grad()
        return model


def canonical_spec(spec: Union[FInrSpec, MonolithicSpec], task: dict) -> str:
    model = spec.model_dump(mode="json")
    if isinstance(spec, MonolithicSpec):
        model = {"kind": "monolithic", **model}
    else:
        # axis networks as named tables so the text has no arrays of tables
        model["networks"] = {f"axis{k}": net for k, net in enumerate(model["networks"])}
    return toml.dumps({"model": model, "task": task})


def parse_spec(text: str) -> tuple[Union[FInrSpec, MonolithicSpec], dict]:
    data = toml.loads(text)
    model = dict(data["model"])
    task = data.get("task", {})
    if model.pop("kind", "factorized") == "monolithic":
        return MonolithicSpec.model_validate(model), task
    nets = model["networks"]
    model["networks"] = [nets[f"axis{k}"] for k in range(len(nets))]
    return FInrSpec.model_validate(model), task


def _section(tag: bytes, payload: bytes) -> bytes:
    return _SECTION.pack(tag, len(payload)) + payload


def _tensor(array: np.ndarray) -> bytes:
    return DenseTensor(array).to_bytes()


def encode_checkpoint(ckpt: Checkpoint) -> bytes:
    names = list(ckpt.params)

    parm = [struct.pack("<I", len(names))]
    for name in names:
        encoded = name.encode("utf-8")
        parm.append(struct.pack("<H", len(encoded)) + encoded + _tensor(ckpt.params[name]))

    a = ckpt.adam
    adam = [_ADAM.pack(a.lr, a.beta1, a.beta2, a.eps, a.step)]
    for name in names:
        adam.append(_tensor(a.m[name]) + _tensor(a.v[name]))

    body = [
        _section(b"SPEC", canonical_spec(ckpt.spec, ckpt.task).encode("utf-8")),
        _section(b"PARM", b"".join(parm)),
        _section(b"ADAM", b"".join(adam)),
        _section(b"RNGS", ckpt.rng_state.encode("utf-8")),
        _section(b"STEP", struct.pack("<Q", ckpt.step)),
    ]
    return MAGIC + struct.pack("<H", ckpt.version) + b"".join(body)


def decode_checkpoint(payload: bytes) -> Checkpoint:
    try:
        return _decode(payload)
    except struct.error as e:
        raise CheckpointError(f"corrupt checkpoint: {e}") from e
    except UnicodeDecodeError as e:
        raise CheckpointError(f"checkpoint text is not valid UTF-8: {e}") from e


def _decode(payload: bytes) -> Checkpoint:
    if payload[:4] != MAGIC:
        raise CheckpointError(f"not a finr checkpoint (magic {payload[:4]!r})")
    if len(payload) < 6:
        raise CheckpointError("truncated checkpoint header")
    (version,) = struct.unpack_from("<H", payload, 4)
    if version != VERSION:
        raise CheckpointError(f"checkpoint version {version} is not supported (expected {VERSION})")

    sections, offset = {}, 6
    while offset < len(payload):
        if len(payload) - offset < _SECTION.size:
            raise CheckpointError("truncated section header")
        tag, length = _SECTION.unpack_from(payload, offset)
        offset += _SECTION.size
        if len(payload) - offset < length:
            raise CheckpointError(f"truncated {tag!r} section")
        sections[tag] = payload[offset : offset + length]
        offset += length
    missing = [t.decode() for t in SECTIONS if t not in sections]
    if missing:
        raise CheckpointError(f"checkpoint is missing sections: {', '.join(missing)}")

    try:
        spec, task = parse_spec(sections[b"SPEC"].decode("utf-8"))
    except (toml.TomlDecodeError, KeyError, ValueError) as e:
        raise CheckpointError(f"unreadable model spec: {e}") from e

    params = _read_params(sections[b"PARM"])
    adam = _read_adam(sections[b"ADAM"], list(params))
    (step,) = struct.unpack("<Q", sections[b"STEP"])
    return Checkpoint(
        spec=spec,
        params=params,
        adam=adam,
        step=step,
        rng_state=sections[b"RNGS"].decode("utf-8"),
        task=task,
        version=version,
    )


def _read_params(blob: bytes) -> dict[str, np.ndarray]:
    (count,) = struct.unpack_from("<I", blob, 0)
    offset, params = 4, {}
    for _ in range(count):
        (length,) = struct.unpack_from("<H", blob, offset)
        offset += 2
        name = blob[offset : offset + length].decode("utf-8")
        offset += length
        tensor, offset = read_ftnr(blob, offset)
        params[name] = np.array(tensor.array)
    return params


def _read_adam(blob: bytes, names: list[str]) -> AdamState:
    lr, beta1, beta2, eps, step = _ADAM.unpack_from(blob, 0)
    state = AdamState(lr=lr, beta1=beta1, beta2=beta2, eps=eps, step=step)
    offset = _ADAM.size
    for name in names:
        m, offset = read_ftnr(blob, offset)
        v, offset = read_ftnr(blob, offset)
        state.m[name] = np.array(m.array)
        state.v[name] = np.array(v.array)
    return state


def save_checkpoint(path: Path, ckpt: Checkpoint) -> None:
    Path(path).write_bytes(encode_checkpoint(ckpt))


def load_checkpoint(path: Path) -> Checkpoint:
    try:
        payload = Path(path).read_bytes()
    except OSError as e:
        raise CheckpointError(f"cannot read checkpoint {path}: {e}") from e
    try:
        return decode_checkpoint(payload)
    except CheckpointError as e:
        raise CheckpointError(f"{path}: {e}") from e
