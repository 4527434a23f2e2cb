"""Self-describing, byte-deterministic checkpoint files.

Layout: a magic line, one JSON header line (config, vocabulary, epoch,
validation F1, array manifest), then the raw little-endian float64 array
bytes concatenated in manifest order. Two training runs with the same seed
and config produce byte-identical files, which the determinism test relies
on; there are deliberately no timestamps.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .config import EncoderConfig
from .model import EncoderModel, Params
from .vocab import Vocabulary

MAGIC = b"EMKIT-CKPT v1\n"


class CheckpointError(ValueError):
    pass


@dataclass(frozen=True)
class Checkpoint:
    """A parameter snapshot with its epoch index and validation F1."""

    config: EncoderConfig
    vocab: Vocabulary
    params: Params
    epoch: int
    val_f1: float

    def to_model(self) -> EncoderModel:
        return EncoderModel(
            config=self.config,
            vocab=self.vocab,
            params={k: v.copy() for k, v in self.params.items()},
        )


def save_checkpoint(ckpt: Checkpoint, path: str | Path) -> None:
    names = sorted(ckpt.params)
    header = {
        "format": 1,
        "config": ckpt.config.to_dict(),
        "vocab": list(ckpt.vocab.tokens),
        "specials": sorted(ckpt.vocab.specials),
        "epoch": ckpt.epoch,
        "val_f1": ckpt.val_f1,
        "arrays": [
            {"name": n, "shape": list(ckpt.params[n].shape)} for n in names
        ],
    }
    blob = bytearray(MAGIC)
    blob += json.dumps(header, sort_keys=True, separators=(",", ":")).encode("utf-8")
    blob += b"\n"
    for name in names:
        blob += np.ascontiguousarray(ckpt.params[name], dtype="<f8").tobytes()
    tmp = Path(path).with_suffix(Path(path).suffix + ".tmp")
    tmp.write_bytes(bytes(blob))
    tmp.replace(path)


def load_checkpoint(path: str | Path) -> Checkpoint:
    data = Path(path).read_bytes()
    if not data.startswith(MAGIC):
        raise CheckpointError(f"{path}: not an emkit checkpoint")
    newline = data.index(b"\n", len(MAGIC))
    header = json.loads(data[len(MAGIC) : newline].decode("utf-8"))
    if header.get("format") != 1:
        raise CheckpointError(f"unsupported checkpoint format {header.get('format')!r}")
    params: Params = {}
    offset = newline + 1
    for spec in header["arrays"]:
        shape = tuple(spec["shape"])
        count = int(np.prod(shape)) if shape else 1
        end = offset + 8 * count
        params[spec["name"]] = np.frombuffer(data[offset:end], dtype="<f8").reshape(shape).copy()
        offset = end
    if offset != len(data):
        raise CheckpointError("trailing bytes in checkpoint")
    return Checkpoint(
        config=EncoderConfig.from_dict(header["config"]),
        vocab=Vocabulary(tuple(header["vocab"]), frozenset(header["specials"])),
        params=params,
        epoch=int(header["epoch"]),
        val_f1=float(header["val_f1"]),
    )
