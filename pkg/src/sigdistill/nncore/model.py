"""Student classifier: 1-D conv encoder, mean pool over time, two-layer head.

Activations are kept time-major, shape (batch, time, channels); conv weights
are stored flat as (in_channels * kernel, out_channels) so the windowed input
multiplies them directly. Convolutions use "same"-style zero padding with
output length ceil(L / stride). The rectifier is the only nonlinearity.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from ..errors import ValidationError
from ..rng import stream

NUM_CLASSES = 10


@dataclass(frozen=True)
class ArchConfig:
    """Architecture descriptor; fully determines every parameter shape.

    With ``position_channel`` the input is (value, normalized time) pairs, so
    features that survive the mean pool can still encode where a pattern sits
    in the window.
    """

    input_length: int = 256
    conv_stages: tuple[tuple[int, int, int], ...] = ((16, 7, 2), (32, 7, 2))  # (channels, kernel, stride)
    hidden: int = 64
    position_channel: bool = True

    def __post_init__(self) -> None:
        if self.input_length < 2:
            raise ValidationError("input_length must be >= 2")
        if self.hidden < 1:
            raise ValidationError("hidden width must be >= 1")
        for ch, k, s in self.conv_stages:
            if ch < 1 or k < 1 or s < 1:
                raise ValidationError(f"bad conv stage ({ch}, {k}, {s})")

    def stage_lengths(self) -> list[int]:
        """Output length after each conv stage."""
        lengths = []
        length = self.input_length
        for _, _, s in self.conv_stages:
            length = -(-length // s)
            lengths.append(length)
        return lengths

    def param_shapes(self) -> dict[str, tuple[int, ...]]:
        shapes: dict[str, tuple[int, ...]] = {}
        in_ch = 2 if self.position_channel else 1
        for i, (ch, k, _) in enumerate(self.conv_stages):
            shapes[f"conv{i}.w"] = (in_ch * k, ch)
            shapes[f"conv{i}.b"] = (ch,)
            in_ch = ch
        shapes["fc1.w"] = (in_ch, self.hidden)
        shapes["fc1.b"] = (self.hidden,)
        shapes["fc2.w"] = (self.hidden, NUM_CLASSES)
        shapes["fc2.b"] = (NUM_CLASSES,)
        return shapes


@dataclass
class Model:
    arch: ArchConfig
    params: dict[str, np.ndarray]
    seed: int

    def copy(self) -> "Model":
        return Model(self.arch, {k: v.copy() for k, v in self.params.items()}, self.seed)


def param_count(arch: ArchConfig) -> int:
    return sum(int(np.prod(s)) for s in arch.param_shapes().values())


def init_model(arch: ArchConfig, seed: int) -> Model:
    """Fan-in-scaled uniform init: weights ~ U(-1/sqrt(fan_in), 1/sqrt(fan_in)), biases zero."""
    rng = stream(seed, "init")
    params: dict[str, np.ndarray] = {}
    for name, shape in arch.param_shapes().items():
        if name.endswith(".b"):
            params[name] = np.zeros(shape, dtype=np.float64)
        else:
            bound = 1.0 / np.sqrt(shape[0])
            params[name] = rng.uniform(-bound, bound, size=shape)
    return Model(arch=arch, params=params, seed=seed)


def _pad_amount(length: int, kernel: int, stride: int) -> tuple[int, int, int]:
    out_len = -(-length // stride)
    total = max(0, (out_len - 1) * stride + kernel - length)
    return out_len, total // 2, total - total // 2


def _as_input(arch: ArchConfig, x: np.ndarray) -> np.ndarray:
    if arch.position_channel:
        t = np.linspace(0.0, 1.0, arch.input_length)
        pos = np.broadcast_to(t, x.shape)
        return np.stack([x, pos], axis=2)
    return x[:, :, None]


def _conv_forward(x: np.ndarray, w: np.ndarray, b: np.ndarray, kernel: int, stride: int):
    batch, length, in_ch = x.shape
    out_len, pad_l, pad_r = _pad_amount(length, kernel, stride)
    xp = np.pad(x, ((0, 0), (pad_l, pad_r), (0, 0)))
    win = np.lib.stride_tricks.sliding_window_view(xp, kernel, axis=1)[:, ::stride]
    # win: (batch, out_len, in_ch, kernel) -> flatten per position to in_ch*kernel
    cols = win.transpose(0, 1, 3, 2).reshape(batch * out_len, in_ch * kernel)
    y = (cols @ w + b).reshape(batch, out_len, -1)
    return y, cols, xp.shape[1], pad_l


def forward(model: Model, batch: np.ndarray, want_cache: bool = False):
    """Logits for a (B, L) batch; optionally the activation cache for backward."""
    x = np.asarray(batch, dtype=np.float64)
    if x.ndim != 2 or x.shape[1] != model.arch.input_length:
        raise ValidationError(
            f"batch shape {x.shape} does not match input length {model.arch.input_length}"
        )
    p = model.params
    h = x[:, :, None]
    cache: dict = {"stages": []}
    for i, (ch, k, s) in enumerate(model.arch.conv_stages):
        y, cols, padded_len, pad_l = _conv_forward(h, p[f"conv{i}.w"], p[f"conv{i}.b"], k, s)
        a = np.maximum(y, 0.0)
        if want_cache:
            cache["stages"].append(
                {"in_shape": h.shape, "cols": cols, "pre": y, "padded_len": padded_len, "pad_l": pad_l}
            )
        h = a
    pooled = h.mean(axis=1)
    z1 = pooled @ p["fc1.w"] + p["fc1.b"]
    a1 = np.maximum(z1, 0.0)
    logits = a1 @ p["fc2.w"] + p["fc2.b"]
    if not np.all(np.isfinite(logits)):
        raise ValidationError("non-finite logits")
    if want_cache:
        cache.update({"pool_in_len": h.shape[1], "pooled": pooled, "z1": z1, "a1": a1})
        return logits, cache
    return logits


def backward(model: Model, cache: dict, dlogits: np.ndarray) -> dict[str, np.ndarray]:
    """Exact gradients of the (already reduced) loss w.r.t. every parameter."""
    if "a1" not in cache or not cache.get("stages"):
        raise ValidationError("backward needs the cache from forward(want_cache=True)")
    p = model.params
    grads: dict[str, np.ndarray] = {}
    a1, z1, pooled = cache["a1"], cache["z1"], cache["pooled"]
    grads["fc2.w"] = a1.T @ dlogits
    grads["fc2.b"] = dlogits.sum(axis=0)
    da1 = dlogits @ p["fc2.w"].T
    dz1 = da1 * (z1 > 0)
    grads["fc1.w"] = pooled.T @ dz1
    grads["fc1.b"] = dz1.sum(axis=0)
    dpooled = dz1 @ p["fc1.w"].T
    pool_len = cache["pool_in_len"]
    dh = np.broadcast_to(dpooled[:, None, :] / pool_len, (dpooled.shape[0], pool_len, dpooled.shape[1]))
    for i in range(len(model.arch.conv_stages) - 1, -1, -1):
        ch, k, s = model.arch.conv_stages[i]
        st = cache["stages"][i]
        dy = dh * (st["pre"] > 0)
        batch, out_len, _ = dy.shape
        dyf = dy.reshape(batch * out_len, ch)
        grads[f"conv{i}.w"] = st["cols"].T @ dyf
        grads[f"conv{i}.b"] = dyf.sum(axis=0)
        if i == 0:
            break  # no gradient needed below the first stage
        in_ch = st["in_shape"][2]
        dcols = (dyf @ p[f"conv{i}.w"].T).reshape(batch, out_len, k, in_ch)
        dxp = np.zeros((batch, st["padded_len"], in_ch))
        for j in range(k):
            dxp[:, j : j + s * out_len : s, :] += dcols[:, :, j, :]
        pad_l = st["pad_l"]
        dh = dxp[:, pad_l : pad_l + st["in_shape"][1], :]
    return grads


def predict(model: Model, batch: np.ndarray, batch_size: int = 512) -> np.ndarray:
    """Argmax class ids for a (N, L) array, evaluated in chunks."""
    x = np.asarray(batch, dtype=np.float64)
    out = np.empty(x.shape[0], dtype=np.int64)
    for start in range(0, x.shape[0], batch_size):
        logits = forward(model, x[start : start + batch_size])
        out[start : start + batch_size] = np.argmax(logits, axis=1)
    return out


def embed(model: Model, batch: np.ndarray, batch_size: int = 512) -> np.ndarray:
    """Penultimate activations (hidden layer after the rectifier), shape (N, hidden)."""
    x = np.asarray(batch, dtype=np.float64)
    p = model.params
    chunks = []
    for start in range(0, x.shape[0], batch_size):
        h = x[start : start + batch_size, :, None]
        for i, (ch, k, s) in enumerate(model.arch.conv_stages):
            y, _, _, _ = _conv_forward(h, p[f"conv{i}.w"], p[f"conv{i}.b"], k, s)
            h = np.maximum(y, 0.0)
        pooled = h.mean(axis=1)
        chunks.append(np.maximum(pooled @ p["fc1.w"] + p["fc1.b"], 0.0))
    return np.concatenate(chunks, axis=0)
