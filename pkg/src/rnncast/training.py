"""Adam optimizer, mini-batch training loop, and checkpoint serialization.

Adam update (standard constants: lr 0.001, beta1 0.9, beta2 0.999,
eps 1e-8), applied per tensor:

    m <- beta1*m + (1-beta1)*g        mhat = m / (1 - beta1^t)
    v <- beta2*v + (1-beta2)*g^2      vhat = v / (1 - beta2^t)
    theta <- theta - lr * mhat / (sqrt(vhat) + eps)

Training runs `epochs` passes over the windowed dataset in mini-batches,
reshuffling each epoch from the model's own seeded generator, so a run is
fully determined by (kind, dataset, config). The per-epoch loss recorded
in the history is the sample-weighted mean of batch losses, i.e. the mean
training loss over the epoch.

Checkpoints are a small binary format (magic "TSFC", version u16, then
metadata and row-major float64 little-endian tensors) chosen so that a
save/load round trip is bit-identical.
"""

from __future__ import annotations

import io
import json
import struct
from dataclasses import asdict, dataclass, field

import numpy as np

from .cells import (DenseParams, GruParams, LstmParams, ModelState,
                    backward_batch, init_model)
from .dataprep import WindowedDataset
from .numkit import NumericError, Rng, ShapeError

CHECKPOINT_MAGIC = b"TSFC"
CHECKPOINT_VERSION = 1
_KIND_CODES = {"lstm": 0, "gru": 1}
_KIND_NAMES = {v: k for k, v in _KIND_CODES.items()}


class CheckpointVersionError(ValueError):
    """Checkpoint was written by an incompatible format version."""


class CheckpointCorruptError(ValueError):
    """Checkpoint payload is malformed or truncated."""


@dataclass
class AdamState:
    """Optimizer state; moment buffers appear lazily, keyed like the grads."""

    learning_rate: float = 0.001
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8
    t: int = 0
    m: dict = field(default_factory=dict)
    v: dict = field(default_factory=dict)

    def __post_init__(self):
        if not 0.0 <= self.beta1 < 1.0 or not 0.0 <= self.beta2 < 1.0:
            raise ValueError(
                f"beta1 and beta2 must lie in [0, 1), got {self.beta1}, {self.beta2}")
        if self.learning_rate <= 0.0:
            raise ValueError(f"learning_rate must be positive, got {self.learning_rate}")
        if self.eps <= 0.0:
            raise ValueError(f"eps must be positive, got {self.eps}")


def adam_step(adam: AdamState, params: dict, grads: dict) -> dict:
    """One Adam update over named tensors, in place. Returns params."""
    if params.keys() != grads.keys():
        raise ShapeError(
            f"params/grads key mismatch: {sorted(params)} vs {sorted(grads)}")
    for name, g in grads.items():
        if g.shape != params[name].shape:
            raise ShapeError(
                f"gradient {name!r} has shape {g.shape}, parameter has "
                f"{params[name].shape}")
        if not np.isfinite(g).all():
            raise NumericError(f"non-finite gradient in {name!r}")

    adam.t += 1
    b1, b2 = adam.beta1, adam.beta2
    bias1 = 1.0 - b1 ** adam.t
    bias2 = 1.0 - b2 ** adam.t
    for name, g in grads.items():
        theta = params[name]
        if name not in adam.m:
            adam.m[name] = np.zeros_like(theta)
            adam.v[name] = np.zeros_like(theta)
        m = adam.m[name]
        v = adam.v[name]
        m *= b1
        m += (1.0 - b1) * g
        v *= b2
        v += (1.0 - b2) * (g * g)
        theta -= adam.learning_rate * (m / bias1) / (np.sqrt(v / bias2) + adam.eps)
    return params


def clip_gradients(grads: dict, max_norm: float) -> float:
    """Scale all gradients so their global L2 norm is at most max_norm.

    Returns the pre-clip norm.
    """
    if max_norm <= 0:
        raise ValueError(f"max_norm must be positive, got {max_norm}")
    total = 0.0
    for g in grads.values():
        total += float((g * g).sum())
    norm = total ** 0.5
    if norm > max_norm:
        scale = max_norm / norm
        for g in grads.values():
            g *= scale
    return norm


@dataclass(frozen=True)
class TrainConfig:
    """Knobs for one training run; the optimizer settings ride along so
    experiments can vary them without touching code."""

    epochs: int = 200
    batch_size: int = 32
    seed: int = 0
    units: int = 128
    shuffle: bool = True
    learning_rate: float = 0.001
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8
    grad_clip: float | None = None

    def __post_init__(self):
        if self.epochs < 1:
            raise ValueError(f"epochs must be >= 1, got {self.epochs}")
        if self.batch_size < 1:
            raise ValueError(f"batch_size must be >= 1, got {self.batch_size}")
        if self.units < 1:
            raise ValueError(f"units must be >= 1, got {self.units}")


@dataclass
class Checkpoint:
    """A trained model plus everything needed to use it on raw data."""

    model: ModelState
    raw_min: float | None
    raw_max: float | None
    config: dict
    version: int = CHECKPOINT_VERSION

    @property
    def kind(self) -> str:
        return self.model.kind


def train(kind: str, dataset: WindowedDataset, config: TrainConfig,
          progress=None) -> tuple[Checkpoint, list[float]]:
    """Train a fresh model of `kind` on the dataset; returns (checkpoint,
    per-epoch mean loss history).

    `progress`, if given, is called as progress(epoch_index, epoch_loss)
    after each epoch.
    """
    n = len(dataset)
    if n == 0:
        raise ValueError("cannot train on an empty dataset")
    rng = Rng(config.seed)
    model = init_model(kind, config.units, dataset.window, dataset.horizon, rng)
    adam = AdamState(learning_rate=config.learning_rate, beta1=config.beta1,
                     beta2=config.beta2, eps=config.eps)

    params = model.tensors()
    grads = model.grad_tensors()
    history: list[float] = []
    for epoch in range(config.epochs):
        order = rng.permutation(n) if config.shuffle else np.arange(n)
        total = 0.0
        for b, lo in enumerate(range(0, n, config.batch_size)):
            idx = order[lo:lo + config.batch_size]
            try:
                loss = backward_batch(model, dataset.inputs[idx], dataset.targets[idx])
                if config.grad_clip is not None:
                    clip_gradients(grads, config.grad_clip)
                adam_step(adam, params, grads)
            except NumericError as exc:
                raise NumericError(
                    f"training diverged at epoch {epoch + 1}, batch {b + 1}: {exc}"
                ) from exc
            total += loss * len(idx)
        epoch_loss = total / n
        history.append(epoch_loss)
        if progress is not None:
            progress(epoch, epoch_loss)

    checkpoint = Checkpoint(model=model, raw_min=dataset.raw_min,
                            raw_max=dataset.raw_max, config=asdict(config))
    return checkpoint, history


# ---------------------------------------------------------------------------
# Checkpoint file format (version 1, all integers little-endian):
#   magic     4 bytes  "TSFC"
#   version   u16
#   kind      u8       0 = lstm, 1 = gru
#   units     u32
#   window    u32
#   horizon   u32
#   bounds    u8       0 = absent, 1 = present
#             f64 f64  raw_min, raw_max (zeros when absent)
#   config    u32 + n bytes of UTF-8 JSON
#   tensors   u32 count, then per tensor:
#             u16 + n bytes  name
#             u8             ndim
#             u32 * ndim     dims
#             f64 * prod     row-major data
# No trailing bytes are allowed.
# ---------------------------------------------------------------------------

def save_checkpoint(checkpoint: Checkpoint, path) -> None:
    model = checkpoint.model
    buf = io.BytesIO()
    buf.write(CHECKPOINT_MAGIC)
    buf.write(struct.pack("<HB", CHECKPOINT_VERSION, _KIND_CODES[model.kind]))
    buf.write(struct.pack("<III", model.units, model.window, model.horizon))
    has_bounds = checkpoint.raw_min is not None and checkpoint.raw_max is not None
    buf.write(struct.pack("<Bdd", int(has_bounds),
                          checkpoint.raw_min if has_bounds else 0.0,
                          checkpoint.raw_max if has_bounds else 0.0))
    blob = json.dumps(checkpoint.config, sort_keys=True).encode("utf-8")
    buf.write(struct.pack("<I", len(blob)))
    buf.write(blob)
    tensors = model.tensors()
    buf.write(struct.pack("<I", len(tensors)))
    for name, tensor in tensors.items():
        encoded = name.encode("utf-8")
        buf.write(struct.pack("<H", len(encoded)))
        buf.write(encoded)
        buf.write(struct.pack("<B", tensor.ndim))
        buf.write(struct.pack(f"<{tensor.ndim}I", *tensor.shape))
        buf.write(np.ascontiguousarray(tensor, dtype="<f8").tobytes())
    with open(path, "wb") as fh:
        fh.write(buf.getvalue())


def _read_exact(fh, n: int, what: str) -> bytes:
    data = fh.read(n)
    if len(data) != n:
        raise CheckpointCorruptError(
            f"checkpoint truncated while reading {what} "
            f"(wanted {n} bytes, got {len(data)})")
    return data


def load_checkpoint(path) -> Checkpoint:
    with open(path, "rb") as fh:
        magic = _read_exact(fh, 4, "magic")
        if magic != CHECKPOINT_MAGIC:
            raise CheckpointCorruptError(
                f"bad magic {magic!r}, expected {CHECKPOINT_MAGIC!r}")
        (version,) = struct.unpack("<H", _read_exact(fh, 2, "version"))
        if version != CHECKPOINT_VERSION:
            raise CheckpointVersionError(
                f"checkpoint version {version} unsupported "
                f"(this build reads version {CHECKPOINT_VERSION})")
        (kind_code,) = struct.unpack("<B", _read_exact(fh, 1, "kind"))
        if kind_code not in _KIND_NAMES:
            raise CheckpointCorruptError(f"unknown model kind code {kind_code}")
        kind = _KIND_NAMES[kind_code]
        units, window, horizon = struct.unpack("<III", _read_exact(fh, 12, "dimensions"))
        has_bounds, raw_min, raw_max = struct.unpack("<Bdd", _read_exact(fh, 17, "bounds"))
        (blob_len,) = struct.unpack("<I", _read_exact(fh, 4, "config length"))
        try:
            config = json.loads(_read_exact(fh, blob_len, "config").decode("utf-8"))
        except (UnicodeDecodeError, json.JSONDecodeError) as exc:
            raise CheckpointCorruptError(f"config block unreadable: {exc}") from exc
        (count,) = struct.unpack("<I", _read_exact(fh, 4, "tensor count"))
        tensors = {}
        for _ in range(count):
            (name_len,) = struct.unpack("<H", _read_exact(fh, 2, "tensor name length"))
            name = _read_exact(fh, name_len, "tensor name").decode("utf-8")
            (ndim,) = struct.unpack("<B", _read_exact(fh, 1, f"{name} ndim"))
            shape = struct.unpack(f"<{ndim}I", _read_exact(fh, 4 * ndim, f"{name} dims"))
            size = int(np.prod(shape, dtype=np.int64)) if ndim else 1
            data = _read_exact(fh, 8 * size, f"{name} data")
            tensors[name] = np.frombuffer(data, dtype="<f8").reshape(shape).copy()
        if fh.read(1):
            raise CheckpointCorruptError("trailing bytes after checkpoint payload")

    try:
        if kind == "lstm":
            cell = LstmParams(**{f: tensors[f] for f in LstmParams.__dataclass_fields__})
        else:
            cell = GruParams(**{f: tensors[f] for f in GruParams.__dataclass_fields__})
        head = DenseParams(weight=tensors["w_out"], bias=tensors["b_out"])
    except KeyError as exc:
        raise CheckpointCorruptError(f"missing tensor {exc}") from exc
    model = ModelState(kind=kind, cell=cell, head=head,
                       units=units, window=window, horizon=horizon)
    return Checkpoint(model=model,
                      raw_min=raw_min if has_bounds else None,
                      raw_max=raw_max if has_bounds else None,
                      config=config, version=version)
