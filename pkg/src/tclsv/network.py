"""Feed-forward sigmoid network with one or two softmax heads, trained by SGD.

Hidden layers are named L1..Ln and any of them can be read out as a deep
feature.  Multi-task training attaches one softmax head per label stream and
combines the per-head cross-entropies with fixed weights.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import DataError, DimensionMismatch, UnknownLayer


@dataclass(frozen=True)
class NetworkArch:
    input_dim: int
    hidden_layers: tuple[int, ...] = (1024,) * 6
    output_heads: tuple[tuple[str, int], ...] = ()

    def __post_init__(self):
        if self.input_dim <= 0 or any(w <= 0 for w in self.hidden_layers):
            raise DataError("all layer widths must be positive")
        if not self.output_heads:
            raise DataError("at least one output head is required")
        if any(k <= 0 for _, k in self.output_heads):
            raise DataError("head class counts must be positive")

    @property
    def head_names(self) -> tuple[str, ...]:
        return tuple(name for name, _ in self.output_heads)

    def layer_index(self, layer: str) -> int:
        """Map a layer name like ``L2`` to its 0-based hidden-layer index."""
        if layer.startswith("L"):
            try:
                idx = int(layer[1:]) - 1
            except ValueError:
                idx = -1
            if 0 <= idx < len(self.hidden_layers):
                return idx
        raise UnknownLayer(
            f"no hidden layer {layer!r}; valid: L1..L{len(self.hidden_layers)}"
        )


@dataclass
class NetworkParams:
    """Weights and biases for the hidden stack and the output heads."""

    arch: NetworkArch
    weights: list[np.ndarray]
    biases: list[np.ndarray]
    head_weights: list[np.ndarray]
    head_biases: list[np.ndarray]
    rng_seed: int = 0


@dataclass(frozen=True)
class TrainConfig:
    learning_rate: float = 0.008
    epochs: int = 20
    minibatch_size: int = 256
    shuffle_seed: int = 0
    init_seed: int = 0
    task_weights: tuple[float, ...] = (1.0,)

    def __post_init__(self):
        if self.learning_rate < 0:
            raise DataError("learning_rate must be non-negative")
        if self.epochs < 1 or self.minibatch_size < 1:
            raise DataError("epochs and minibatch_size must be positive")
        if abs(sum(self.task_weights) - 1.0) > 1e-9:
            raise DataError("task_weights must sum to 1")


@dataclass(frozen=True)
class LabeledDataset:
    """Context-stacked inputs plus one integer label vector per head."""

    inputs: np.ndarray
    labels: dict[str, np.ndarray]

    def __post_init__(self):
        for name, vec in self.labels.items():
            if len(vec) != len(self.inputs):
                raise DataError(
                    f"head {name!r}: {len(vec)} labels for {len(self.inputs)} rows"
                )

    @property
    def num_rows(self) -> int:
        return len(self.inputs)


@dataclass(frozen=True)
class ForwardPass:
    hidden: list[np.ndarray]
    head_log_posteriors: list[np.ndarray]

    @property
    def head_posteriors(self) -> list[np.ndarray]:
        return [np.exp(lp) for lp in self.head_log_posteriors]


@dataclass
class Gradients:
    weights: list[np.ndarray]
    biases: list[np.ndarray]
    head_weights: list[np.ndarray]
    head_biases: list[np.ndarray]


def stack_context(features, left: int = 5, right: int = 5) -> np.ndarray:
    """One row per frame: the frame plus its left/right context, edges replicated."""
    frames = features.frames if hasattr(features, "frames") else np.asarray(features)
    T = frames.shape[0]
    offsets = np.arange(-left, right + 1)
    idx = np.clip(np.arange(T)[:, None] + offsets[None, :], 0, T - 1)
    return frames[idx].reshape(T, -1)


def init_network(arch: NetworkArch, seed: int = 0) -> NetworkParams:
    """Uniform +/- sqrt(6 / (fan_in + fan_out)) weights, zero biases."""
    rng = np.random.default_rng(seed)

    def draw(fan_in: int, fan_out: int) -> np.ndarray:
        limit = np.sqrt(6.0 / (fan_in + fan_out))
        return rng.uniform(-limit, limit, size=(fan_in, fan_out))

    weights, biases = [], []
    prev = arch.input_dim
    for width in arch.hidden_layers:
        weights.append(draw(prev, width))
        biases.append(np.zeros(width))
        prev = width
    head_weights, head_biases = [], []
    for _, num_classes in arch.output_heads:
        head_weights.append(draw(prev, num_classes))
        head_biases.append(np.zeros(num_classes))
    return NetworkParams(arch, weights, biases, head_weights, head_biases, rng_seed=seed)


def _sigmoid(z: np.ndarray) -> np.ndarray:
    out = np.empty_like(z)
    pos = z >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-z[pos]))
    ez = np.exp(z[~pos])
    out[~pos] = ez / (1.0 + ez)
    return out


def _log_softmax(logits: np.ndarray) -> np.ndarray:
    shifted = logits - logits.max(axis=1, keepdims=True)
    return shifted - np.log(np.exp(shifted).sum(axis=1, keepdims=True))


def forward(params: NetworkParams, input_batch: np.ndarray) -> ForwardPass:
    """Forward pass; returns per-layer sigmoid activations and per-head posteriors."""
    x = np.atleast_2d(np.asarray(input_batch, dtype=np.float64))
    if x.shape[1] != params.arch.input_dim:
        raise DimensionMismatch(
            f"input dim {x.shape[1]}, network expects {params.arch.input_dim}"
        )
    hidden = []
    a = x
    for W, b in zip(params.weights, params.biases):
        a = _sigmoid(a @ W + b)
        hidden.append(a)
    log_posts = [
        _log_softmax(a @ W + b)
        for W, b in zip(params.head_weights, params.head_biases)
    ]
    return ForwardPass(hidden=hidden, head_log_posteriors=log_posts)


def loss(
    posteriors: list[np.ndarray],
    labels: list[np.ndarray],
    task_weights: tuple[float, ...] | None = None,
) -> float:
    """Weighted sum over heads of the mean negative log posterior of the true class.

    With no explicit weights the heads share equal weight (0.5/0.5 for the
    two-head multi-task case).
    """
    if task_weights is None:
        task_weights = (1.0 / len(posteriors),) * len(posteriors)
    if len(task_weights) != len(posteriors):
        raise DataError("task_weights must match the number of heads")
    total = 0.0
    for post, y, w in zip(posteriors, labels, task_weights):
        rows = np.arange(len(y))
        total += w * float(-np.mean(np.log(post[rows, y])))
    return total


def _loss_from_log(fp: ForwardPass, labels: list[np.ndarray], task_weights) -> float:
    total = 0.0
    for lp, y, w in zip(fp.head_log_posteriors, labels, task_weights):
        total += w * float(-np.mean(lp[np.arange(len(y)), y]))
    return total


def backward(
    params: NetworkParams,
    batch: LabeledDataset,
    task_weights: tuple[float, ...] | None = None,
) -> Gradients:
    """Gradients of the (weighted) cross-entropy loss for one batch."""
    arch = params.arch
    if task_weights is None:
        task_weights = (1.0 / len(arch.output_heads),) * len(arch.output_heads)
    x = np.atleast_2d(np.asarray(batch.inputs, dtype=np.float64))
    fp = forward(params, x)
    m = x.shape[0]
    last = fp.hidden[-1] if fp.hidden else x

    g_head_w, g_head_b = [], []
    delta_into_hidden = np.zeros_like(last)
    for h, (name, _) in enumerate(arch.output_heads):
        y = batch.labels[name]
        post = np.exp(fp.head_log_posteriors[h])
        post[np.arange(m), y] -= 1.0
        delta = post * (task_weights[h] / m)
        g_head_w.append(last.T @ delta)
        g_head_b.append(delta.sum(axis=0))
        delta_into_hidden += delta @ params.head_weights[h].T

    g_w = [None] * len(params.weights)
    g_b = [None] * len(params.biases)
    delta = delta_into_hidden
    for layer in range(len(params.weights) - 1, -1, -1):
        a = fp.hidden[layer]
        delta = delta * a * (1.0 - a)
        below = fp.hidden[layer - 1] if layer > 0 else x
        g_w[layer] = below.T @ delta
        g_b[layer] = delta.sum(axis=0)
        delta = delta @ params.weights[layer].T
    return Gradients(g_w, g_b, g_head_w, g_head_b)


def train(
    dataset: LabeledDataset, arch: NetworkArch, config: TrainConfig
) -> tuple[NetworkParams, list[float]]:
    """Plain minibatch SGD; returns the trained parameters and the loss trace.

    The trace holds the full-dataset loss before training and after each
    epoch.  Minibatch order is drawn from ``config.shuffle_seed``, parameter
    initialization from ``config.init_seed``; reruns are bit-identical.
    """
    if dataset.num_rows == 0:
        raise DataError("training dataset is empty")
    for name, _ in arch.output_heads:
        if name not in dataset.labels:
            raise DataError(f"dataset has no labels for head {name!r}")
    task_weights = config.task_weights
    if len(task_weights) != len(arch.output_heads):
        raise DataError("task_weights must have one entry per head")

    params = init_network(arch, config.init_seed)
    label_order = [dataset.labels[name] for name, _ in arch.output_heads]

    def full_loss() -> float:
        fp = forward(params, dataset.inputs)
        return _loss_from_log(fp, label_order, task_weights)

    trace = [full_loss()]
    rng = np.random.default_rng(config.shuffle_seed)
    lr = config.learning_rate
    for _ in range(config.epochs):
        order = rng.permutation(dataset.num_rows)
        for start in range(0, dataset.num_rows, config.minibatch_size):
            sel = order[start : start + config.minibatch_size]
            batch = LabeledDataset(
                inputs=dataset.inputs[sel],
                labels={name: vec[sel] for name, vec in dataset.labels.items()},
            )
            grads = backward(params, batch, task_weights)
            for W, g in zip(params.weights, grads.weights):
                W -= lr * g
            for b, g in zip(params.biases, grads.biases):
                b -= lr * g
            for W, g in zip(params.head_weights, grads.head_weights):
                W -= lr * g
            for b, g in zip(params.head_biases, grads.head_biases):
                b -= lr * g
        trace.append(full_loss())
    return params, trace


def extract_deep_features(
    params: NetworkParams, inputs: np.ndarray, layer: str = "L2"
) -> np.ndarray:
    """Post-sigmoid activations of the named hidden layer for each input row."""
    idx = params.arch.layer_index(layer)
    x = np.atleast_2d(np.asarray(inputs, dtype=np.float64))
    if x.shape[1] != params.arch.input_dim:
        raise DimensionMismatch(
            f"input dim {x.shape[1]}, network expects {params.arch.input_dim}"
        )
    a = x
    for W, b in zip(params.weights[: idx + 1], params.biases[: idx + 1]):
        a = _sigmoid(a @ W + b)
    return a
