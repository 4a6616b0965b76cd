"""Model checkpoints: one JSON header line, then raw little-endian float64.

The header carries the architecture, seed, epoch, validation accuracy, and a
name/shape/offset index into the payload. Round trips are bit-exact.
"""

from __future__ import annotations

import json
from pathlib import Path

import numpy as np

from ..errors import ArtifactError
from .model import ArchConfig, Model

CKPT_FORMAT = "sigdistill.ckpt"
CKPT_VERSION = 1


def save_checkpoint(
    model: Model,
    path: str | Path,
    epoch: int = -1,
    val_accuracy: float = float("nan"),
) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    tensors = []
    payload = bytearray()
    for name in sorted(model.params):
        arr = np.ascontiguousarray(model.params[name], dtype="<f8")
        tensors.append(
            {
                "name": name,
                "shape": list(arr.shape),
                "offset": len(payload),
                "nbytes": arr.nbytes,
            }
        )
        payload.extend(arr.tobytes())
    header = {
        "format": CKPT_FORMAT,
        "version": CKPT_VERSION,
        "arch": {
            "input_length": model.arch.input_length,
            "conv_stages": [list(s) for s in model.arch.conv_stages],
            "hidden": model.arch.hidden,
        },
        "seed": model.seed,
        "epoch": epoch,
        "val_accuracy": val_accuracy,
        "tensors": tensors,
    }
    with path.open("wb") as fh:
        fh.write(json.dumps(header, sort_keys=True).encode("utf-8") + b"\n")
        fh.write(bytes(payload))


def load_checkpoint(path: str | Path) -> tuple[Model, dict]:
    path = Path(path)
    if not path.exists():
        raise ArtifactError(f"missing checkpoint {path}")
    with path.open("rb") as fh:
        try:
            header = json.loads(fh.readline().decode("utf-8"))
        except (UnicodeDecodeError, json.JSONDecodeError) as exc:
            raise ArtifactError(f"{path} is not a checkpoint: {exc}") from exc
        if header.get("format") != CKPT_FORMAT:
            raise ArtifactError(f"{path} is not a checkpoint file")
        if header.get("version") != CKPT_VERSION:
            raise ArtifactError(f"unsupported checkpoint version in {path}")
        payload = fh.read()
    arch = ArchConfig(
        input_length=header["arch"]["input_length"],
        conv_stages=tuple(tuple(s) for s in header["arch"]["conv_stages"]),
        hidden=header["arch"]["hidden"],
    )
    params: dict[str, np.ndarray] = {}
    for t in header["tensors"]:
        raw = payload[t["offset"] : t["offset"] + t["nbytes"]]
        if len(raw) != t["nbytes"]:
            raise ArtifactError(f"truncated checkpoint payload in {path}")
        params[t["name"]] = np.frombuffer(raw, dtype="<f8").reshape(t["shape"]).copy()
    expected = set(arch.param_shapes())
    if set(params) != expected:
        raise ArtifactError(f"checkpoint tensors do not match the architecture in {path}")
    model = Model(arch=arch, params=params, seed=header["seed"])
    return model, header
