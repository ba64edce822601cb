"""From-scratch feed-forward classifier: ReLU hidden layers, softmax output,
cross-entropy loss, mini-batch Adam, per-layer freezing and a versioned
binary model file.

Everything is seeded through ``numpy.random.default_rng``; identical inputs
and seeds reproduce identical weights, losses and predictions bit for bit.
"""

from __future__ import annotations

import copy
import json
import logging
import struct
from dataclasses import dataclass, field
from pathlib import Path
from typing import Sequence

import numpy as np

from .dataset import CLASS_VALUES

logger = logging.getLogger(__name__)

__all__ = [
    "DenseLayer",
    "MlpModel",
    "TrainConfig",
    "TrainResult",
    "TrainingDivergedError",
    "ModelFormatError",
    "init_model",
    "init_layers",
    "forward",
    "loss_and_gradients",
    "train",
    "predict",
    "predict_proba",
    "parameter_count",
    "save_model",
    "load_model",
]

class TrainingDivergedError(ArithmeticError):
    """Loss or parameters became non-finite during training."""


class ModelFormatError(Exception):
    """Model file is not in the expected binary format."""


@dataclass
class DenseLayer:
    """Fully connected layer; ``weights`` is [fan_in, fan_out], row-major.

    ``frozen`` layers still propagate gradients to the layers below them but
    receive no parameter updates themselves.
    """

    weights: np.ndarray
    biases: np.ndarray
    activation: str  # "relu" | "softmax" | "linear"
    frozen: bool = False

    @property
    def fan_in(self) -> int:
        return self.weights.shape[0]

    @property
    def fan_out(self) -> int:
        return self.weights.shape[1]


@dataclass
class MlpModel:
    """Classifier over the merged five-point sensation scale."""

    layers: list[DenseLayer]
    feature_names: tuple[str, ...]
    class_labels: tuple[int, ...] = CLASS_VALUES
    provenance: dict = field(default_factory=dict)

    @property
    def layer_widths(self) -> tuple[int, ...]:
        return (self.layers[0].fan_in,) + tuple(l.fan_out for l in self.layers)

    def copy(self) -> "MlpModel":
        return copy.deepcopy(self)


@dataclass
class TrainConfig:
    """Optimization settings.

    Early stopping watches the epoch training loss and halts once the loss
    has not improved by ``min_delta`` for ``patience`` epochs. When the
    caller hands :func:`train` held-out rows, those are watched instead and
    the weights roll back to the best held-out epoch, which is what keeps
    small noisy training sets from being memorized.
    """

    learning_rate: float = 1e-3
    batch_size: int = 200
    max_epochs: int = 500
    beta1: float = 0.9
    beta2: float = 0.999
    epsilon: float = 1e-8
    seed: int | Sequence[int] = 0
    early_stop: bool = False
    patience: int = 25
    min_delta: float = 1e-4


@dataclass
class TrainResult:
    model: MlpModel
    loss_history: list[float]
    epochs_run: int
    stopped_early: bool
    val_history: list[float] = field(default_factory=list)
    best_epoch: int | None = None  # 1-based epoch the returned weights come from


def init_layers(
    widths: Sequence[int],
    seed: int | Sequence[int],
    activations: Sequence[str] | None = None,
) -> list[DenseLayer]:
    """He-uniform initialized dense stack: U(-b, b) with b = sqrt(6 / fan_in).

    ``widths`` runs input -> hidden... -> output. Default activations are
    relu on every layer but the last, which is linear (callers pick softmax
    via :func:`init_model`).
    """
    if len(widths) < 2 or any(w < 1 for w in widths):
        raise ValueError(f"need at least two positive widths, got {widths!r}")
    if activations is None:
        activations = ["relu"] * (len(widths) - 2) + ["linear"]
    if len(activations) != len(widths) - 1:
        raise ValueError("one activation per layer required")
    rng = np.random.default_rng(seed)
    layers = []
    for fan_in, fan_out, act in zip(widths[:-1], widths[1:], activations):
        bound = np.sqrt(6.0 / fan_in)
        layers.append(DenseLayer(
            weights=rng.uniform(-bound, bound, size=(fan_in, fan_out)),
            biases=np.zeros(fan_out, dtype=np.float64),
            activation=act,
        ))
    return layers


def init_model(
    widths: Sequence[int],
    seed: int | Sequence[int],
    feature_names: Sequence[str] | None = None,
    class_labels: Sequence[int] = CLASS_VALUES,
) -> MlpModel:
    """Fresh classifier with relu hidden layers and a softmax output.

    ``widths[0]`` must match ``feature_names`` and ``widths[-1]`` must match
    the number of class labels.
    """
    if len(widths) < 3:
        raise ValueError("classifier needs at least one hidden layer")
    if widths[-1] != len(class_labels):
        raise ValueError(f"output width {widths[-1]} != {len(class_labels)} classes")
    if feature_names is None:
        feature_names = tuple(f"x{i}" for i in range(widths[0]))
    if len(feature_names) != widths[0]:
        raise ValueError(f"{len(feature_names)} feature names for input width {widths[0]}")
    activations = ["relu"] * (len(widths) - 2) + ["softmax"]
    layers = init_layers(widths, seed, activations)
    return MlpModel(
        layers=layers,
        feature_names=tuple(feature_names),
        class_labels=tuple(int(c) for c in class_labels),
        provenance={"init_seed": _seed_repr(seed)},
    )


def _seed_repr(seed) -> int | list[int]:
    return list(seed) if isinstance(seed, (tuple, list)) else int(seed)


def parameter_count(model: MlpModel) -> int:
    return int(sum(l.weights.size + l.biases.size for l in model.layers))


def _check_input(model: MlpModel, X: np.ndarray) -> np.ndarray:
    X = np.asarray(X, dtype=np.float64)
    if X.ndim != 2 or X.shape[1] != model.layers[0].fan_in:
        raise ValueError(f"expected [n, {model.layers[0].fan_in}] input, got {X.shape}")
    if not np.all(np.isfinite(X)):
        raise ValueError("input matrix contains non-finite values")
    return X


def _forward_pass(layers: Sequence[DenseLayer], X: np.ndarray) -> list[np.ndarray]:
    """Activations per layer; last entry is the output (probabilities for
    softmax). Index 0 is the input itself."""
    acts = [X]
    a = X
    for layer in layers:
        z = a @ layer.weights + layer.biases
        if layer.activation == "relu":
            a = np.maximum(z, 0.0)
        elif layer.activation == "softmax":
            z = z - z.max(axis=1, keepdims=True)  # stabilized
            e = np.exp(z)
            a = e / e.sum(axis=1, keepdims=True)
        elif layer.activation == "linear":
            a = z
        else:
            raise ValueError(f"unknown activation {layer.activation!r}")
        acts.append(a)
    return acts


def forward(model: MlpModel, X: np.ndarray) -> np.ndarray:
    """Class probabilities, shape [n, n_classes]."""
    X = _check_input(model, X)
    return _forward_pass(model.layers, X)[-1]


def _one_hot(model: MlpModel, y: np.ndarray) -> np.ndarray:
    index = {c: i for i, c in enumerate(model.class_labels)}
    try:
        cols = np.array([index[int(v)] for v in y], dtype=np.int64)
    except KeyError as exc:
        raise ValueError(f"label {exc} not in {model.class_labels}") from None
    Y = np.zeros((len(y), len(model.class_labels)), dtype=np.float64)
    Y[np.arange(len(y)), cols] = 1.0
    return Y


def loss_and_gradients(
    model: MlpModel, X: np.ndarray, y: np.ndarray
) -> tuple[float, list[tuple[np.ndarray, np.ndarray]]]:
    """Mean cross-entropy over the batch and its exact parameter gradients.

    Gradients are returned for every layer (frozen or not) as
    ``(d_weights, d_biases)`` pairs, so finite-difference checks can probe
    the whole stack.
    """
    X = _check_input(model, X)
    Y = _one_hot(model, y)
    acts = _forward_pass(model.layers, X)
    probs = acts[-1]
    n = X.shape[0]
    # clip only inside the log; the gradient below uses the exact softmax identity
    loss = float(-np.sum(Y * np.log(np.clip(probs, 1e-300, None))) / n)

    grads: list[tuple[np.ndarray, np.ndarray]] = [None] * len(model.layers)  # type: ignore
    delta = (probs - Y) / n  # d loss / d logits for softmax + cross-entropy
    for i in range(len(model.layers) - 1, -1, -1):
        layer = model.layers[i]
        a_prev = acts[i]
        grads[i] = (a_prev.T @ delta, delta.sum(axis=0))
        if i > 0:
            delta = delta @ layer.weights.T
            if model.layers[i - 1].activation == "relu":
                delta = delta * (acts[i] > 0.0)
    return loss, grads


def train(
    model: MlpModel,
    X: np.ndarray,
    y: np.ndarray,
    config: TrainConfig,
    val_data: tuple[np.ndarray, np.ndarray] | None = None,
) -> TrainResult:
    """Mini-batch Adam on the unfrozen layers; returns a trained copy.

    The input model is left untouched. Rows are reshuffled every epoch from
    the config seed. Raises :class:`TrainingDivergedError` on non-finite
    loss and ``ValueError`` when every layer is frozen.

    ``val_data`` is a held-out ``(X, y)`` pair the optimizer never trains
    on. Its loss is recorded per epoch, drives early stopping in place of
    the training loss, and the returned model carries the weights from the
    best held-out epoch rather than the last one.
    """
    model = model.copy()
    X = _check_input(model, X)
    y = np.asarray(y)
    if len(y) != X.shape[0]:
        raise ValueError(f"{X.shape[0]} rows but {len(y)} labels")
    if len(y) == 0:
        raise ValueError("empty training set")
    if all(l.frozen for l in model.layers):
        raise ValueError("all layers frozen: nothing to train")
    Y = _one_hot(model, y)
    if val_data is not None:
        Xv = _check_input(model, val_data[0])
        Yv = _one_hot(model, np.asarray(val_data[1]))
        if len(Yv) == 0:
            raise ValueError("empty validation set")

    rng = np.random.default_rng(config.seed)
    n = X.shape[0]
    batch = max(1, min(config.batch_size, n))
    # Adam moment state per trainable layer
    m_state = {i: (np.zeros_like(l.weights), np.zeros_like(l.biases))
               for i, l in enumerate(model.layers) if not l.frozen}
    v_state = {i: (np.zeros_like(l.weights), np.zeros_like(l.biases))
               for i, l in enumerate(model.layers) if not l.frozen}
    step = 0

    loss_history: list[float] = []
    val_history: list[float] = []
    best_loss = np.inf
    best_weights: list[tuple[np.ndarray, np.ndarray]] | None = None
    best_epoch: int | None = None
    stale_epochs = 0
    stopped_early = False
    epochs_run = 0

    for epoch in range(config.max_epochs):
        order = rng.permutation(n)
        epoch_loss = 0.0
        for start in range(0, n, batch):
            rows = order[start:start + batch]
            xb, yb = X[rows], Y[rows]
            acts = _forward_pass(model.layers, xb)
            probs = acts[-1]
            b = len(rows)
            epoch_loss += float(-np.sum(yb * np.log(np.clip(probs, 1e-300, None))))

            delta = (probs - yb) / b
            step += 1
            for i in range(len(model.layers) - 1, -1, -1):
                layer = model.layers[i]
                if not layer.frozen:
                    gw = acts[i].T @ delta
                    gb = delta.sum(axis=0)
                if i > 0:
                    back = delta @ layer.weights.T
                    if model.layers[i - 1].activation == "relu":
                        back = back * (acts[i] > 0.0)
                    delta_next = back
                if not layer.frozen:
                    mw, mb = m_state[i]
                    vw, vb = v_state[i]
                    mw *= config.beta1; mw += (1 - config.beta1) * gw
                    mb *= config.beta1; mb += (1 - config.beta1) * gb
                    vw *= config.beta2; vw += (1 - config.beta2) * gw * gw
                    vb *= config.beta2; vb += (1 - config.beta2) * gb * gb
                    bias1 = 1 - config.beta1**step
                    bias2 = 1 - config.beta2**step
                    layer.weights -= config.learning_rate * (mw / bias1) / (
                        np.sqrt(vw / bias2) + config.epsilon)
                    layer.biases -= config.learning_rate * (mb / bias1) / (
                        np.sqrt(vb / bias2) + config.epsilon)
                if i > 0:
                    delta = delta_next

        epoch_loss /= n
        if not np.isfinite(epoch_loss):
            raise TrainingDivergedError(
                f"loss became non-finite at epoch {epoch + 1} "
                f"(lr={config.learning_rate}, batch={batch})")
        loss_history.append(epoch_loss)
        epochs_run = epoch + 1

        watched = epoch_loss
        if val_data is not None:
            probs_v = _forward_pass(model.layers, Xv)[-1]
            val_loss = float(-np.sum(Yv * np.log(np.clip(probs_v, 1e-300, None))) / len(Yv))
            if not np.isfinite(val_loss):
                raise TrainingDivergedError(
                    f"held-out loss became non-finite at epoch {epoch + 1}")
            val_history.append(val_loss)
            watched = val_loss

        if watched < best_loss - config.min_delta:
            best_loss = watched
            stale_epochs = 0
            if val_data is not None:
                best_weights = [(l.weights.copy(), l.biases.copy())
                                for l in model.layers]
                best_epoch = epoch + 1
        else:
            stale_epochs += 1
            if config.early_stop and stale_epochs >= config.patience:
                stopped_early = True
                break

    if best_weights is not None:
        for layer, (w, b) in zip(model.layers, best_weights):
            layer.weights = w
            layer.biases = b

    return TrainResult(model=model, loss_history=loss_history,
                       epochs_run=epochs_run, stopped_early=stopped_early,
                       val_history=val_history, best_epoch=best_epoch)


def predict_proba(model: MlpModel, X: np.ndarray) -> np.ndarray:
    return forward(model, X)


def predict(model: MlpModel, X: np.ndarray) -> np.ndarray:
    """Predicted class values. Probability ties resolve to the lower class
    (argmax takes the first maximum and class labels are stored ascending)."""
    probs = forward(model, X)
    labels = np.asarray(model.class_labels, dtype=np.int64)
    return labels[np.argmax(probs, axis=1)]


# ---------------------------------------------------------------------------
# Binary model file
# ---------------------------------------------------------------------------

_MAGIC = b"CLMLP\n"
_VERSION = 1


def save_model(model: MlpModel, path: str | Path) -> None:
    """Write the versioned binary model file.

    Layout: magic, u32 version, u32 header length, JSON header (shapes,
    activations, freeze flags, feature names, class labels, provenance),
    then each layer's weights and biases as row-major little-endian float64.
    """
    header = {
        "feature_names": list(model.feature_names),
        "class_labels": list(model.class_labels),
        "layers": [
            {
                "fan_in": l.fan_in,
                "fan_out": l.fan_out,
                "activation": l.activation,
                "frozen": bool(l.frozen),
            }
            for l in model.layers
        ],
        "provenance": model.provenance,
    }
    blob = json.dumps(header, sort_keys=True).encode("utf-8")
    with open(path, "wb") as fh:
        fh.write(_MAGIC)
        fh.write(struct.pack("<II", _VERSION, len(blob)))
        fh.write(blob)
        for l in model.layers:
            fh.write(np.ascontiguousarray(l.weights, dtype="<f8").tobytes())
            fh.write(np.ascontiguousarray(l.biases, dtype="<f8").tobytes())


def load_model(path: str | Path) -> MlpModel:
    """Read a model file back; bit-exact inverse of :func:`save_model`."""
    data = Path(path).read_bytes()
    if data[: len(_MAGIC)] != _MAGIC:
        raise ModelFormatError(f"{path}: bad magic; not a model file")
    offset = len(_MAGIC)
    if len(data) < offset + 8:
        raise ModelFormatError(f"{path}: truncated header")
    version, header_len = struct.unpack_from("<II", data, offset)
    if version != _VERSION:
        raise ModelFormatError(f"{path}: format version {version} unsupported "
                               f"(expected {_VERSION})")
    offset += 8
    if len(data) < offset + header_len:
        raise ModelFormatError(f"{path}: truncated header")
    try:
        header = json.loads(data[offset:offset + header_len].decode("utf-8"))
    except (UnicodeDecodeError, json.JSONDecodeError) as exc:
        raise ModelFormatError(f"{path}: unreadable header ({exc})") from None
    offset += header_len

    layers = []
    for spec in header["layers"]:
        fan_in, fan_out = int(spec["fan_in"]), int(spec["fan_out"])
        w_bytes = fan_in * fan_out * 8
        b_bytes = fan_out * 8
        if len(data) < offset + w_bytes + b_bytes:
            raise ModelFormatError(f"{path}: truncated weight payload")
        weights = np.frombuffer(data, dtype="<f8", count=fan_in * fan_out,
                                offset=offset).reshape(fan_in, fan_out).copy()
        offset += w_bytes
        biases = np.frombuffer(data, dtype="<f8", count=fan_out, offset=offset).copy()
        offset += b_bytes
        layers.append(DenseLayer(weights=weights, biases=biases,
                                 activation=spec["activation"],
                                 frozen=bool(spec["frozen"])))
    if offset != len(data):
        raise ModelFormatError(f"{path}: {len(data) - offset} trailing bytes")
    return MlpModel(
        layers=layers,
        feature_names=tuple(header["feature_names"]),
        class_labels=tuple(int(c) for c in header["class_labels"]),
        provenance=dict(header.get("provenance", {})),
    )
