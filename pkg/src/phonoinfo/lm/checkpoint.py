"""Single-file checkpoint container.

Layout::

    8 bytes   magic b"PHLMCKPT"
    4 bytes   format version, little-endian uint32
    8 bytes   header length N, little-endian uint64
    N bytes   UTF-8 JSON header (config, iteration, dev_loss, vocab_hash,
              tensor table, payload sha256, extra metadata)
    ...       tensors as raw little-endian float32, in header order
"""

from __future__ import annotations

import hashlib
import json
import struct
from dataclasses import dataclass, field

import numpy as np
import torch

from .model import GPT, ModelConfig

MAGIC = b"PHLMCKPT"
VERSION = 1


class CheckpointError(ValueError):
    pass


class VocabularyMismatch(CheckpointError):
    pass


@dataclass
class Checkpoint:
    config: ModelConfig
    weights: dict
    iteration: int
    dev_loss: float
    vocab_hash: str
    optimizer: dict = field(default_factory=dict)
    extra: dict = field(default_factory=dict)


def model_weights(model: GPT) -> dict:
    """Named parameters with the tied output projection stored once."""
    return {name: p.detach().clone() for name, p in model.named_parameters()}


def save_checkpoint(ckpt: Checkpoint) -> bytes:
    names = list(ckpt.weights) + [f"optim/{k}" for k in ckpt.optimizer]
    tensors = list(ckpt.weights.values()) + list(ckpt.optimizer.values())
    table = []
    chunks = []
    for name, t in zip(names, tensors):
        arr = np.array(t.detach().cpu().numpy(), dtype="<f4", order="C")
        table.append({"name": name, "shape": list(arr.shape)})
        chunks.append(arr.tobytes())
    payload = b"".join(chunks)
    header = {
        "config": ckpt.config.to_dict(),
        "iteration": int(ckpt.iteration),
        "dev_loss": float(ckpt.dev_loss),
        "vocab_hash": ckpt.vocab_hash,
        "tensors": table,
        "payload_bytes": len(payload),
        "payload_sha256": hashlib.sha256(payload).hexdigest(),
        "extra": ckpt.extra,
    }
    hbytes = json.dumps(header, sort_keys=True).encode("utf-8")
    return MAGIC + struct.pack("<IQ", VERSION, len(hbytes)) + hbytes + payload


def read_checkpoint(data: bytes, vocab_hash: str | None = None) -> Checkpoint:
    """Decode a checkpoint; with *vocab_hash* given, refuse a mismatching one."""
    if len(data) < 20 or data[:8] != MAGIC:
        raise CheckpointError("not a checkpoint file (bad magic or truncated header)")
    version, hlen = struct.unpack("<IQ", data[8:20])
    if version != VERSION:
        raise CheckpointError(f"unsupported checkpoint version {version}")
    if len(data) < 20 + hlen:
        raise CheckpointError("checkpoint truncated inside header")
    try:
        header = json.loads(data[20:20 + hlen].decode("utf-8"))
    except (UnicodeDecodeError, json.JSONDecodeError) as err:
        raise CheckpointError(f"corrupt checkpoint header: {err}") from None
    payload = data[20 + hlen:]
    if len(payload) != header["payload_bytes"]:
        raise CheckpointError(
            f"checkpoint payload is {len(payload)} bytes, header declares {header['payload_bytes']}"
        )
    if hashlib.sha256(payload).hexdigest() != header["payload_sha256"]:
        raise CheckpointError("checkpoint payload checksum mismatch")
    if vocab_hash is not None and header["vocab_hash"] != vocab_hash:
        raise VocabularyMismatch(
            f"checkpoint was trained with vocabulary {header['vocab_hash'][:12]}..., "
            f"supplied vocabulary is {vocab_hash[:12]}..."
        )

    weights, optim = {}, {}
    offset = 0
    for entry in header["tensors"]:
        shape = tuple(entry["shape"])
        count = int(np.prod(shape)) if shape else 1
        arr = np.frombuffer(payload, dtype="<f4", count=count, offset=offset).reshape(shape)
        offset += 4 * count
        t = torch.from_numpy(arr.astype(np.float32))
        if entry["name"].startswith("optim/"):
            optim[entry["name"][6:]] = t
        else:
            weights[entry["name"]] = t
    return Checkpoint(
        config=ModelConfig(**header["config"]),
        weights=weights,
        iteration=header["iteration"],
        dev_loss=header["dev_loss"],
        vocab_hash=header["vocab_hash"],
        optimizer=optim,
        extra=header.get("extra", {}),
    )


def model_from_checkpoint(ckpt: Checkpoint) -> GPT:
    model = GPT(ckpt.config)
    params = dict(model.named_parameters())
    if set(params) != set(ckpt.weights):
        missing = set(params) ^ set(ckpt.weights)
        raise CheckpointError(f"checkpoint tensors do not match the model: {sorted(missing)}")
    with torch.no_grad():
        for name, p in params.items():
            w = ckpt.weights[name]
            if tuple(w.shape) != tuple(p.shape):
                raise CheckpointError(f"{name}: shape {tuple(w.shape)} != expected {tuple(p.shape)}")
            p.copy_(w)
    model.eval()
    return model


def load_checkpoint(data: bytes, vocab_hash: str | None = None) -> GPT:
    return model_from_checkpoint(read_checkpoint(data, vocab_hash))


def checkpoint_digest(ckpt: Checkpoint) -> str:
    return hashlib.sha256(save_checkpoint(ckpt)).hexdigest()
