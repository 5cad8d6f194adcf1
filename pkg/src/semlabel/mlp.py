"""Multilayer perceptron trained by mini-batch SGD with momentum (numpy).

The default architecture is three fully connected hidden layers of 100 tanh
units with an inverted-dropout layer (p = 0.5) after the first hidden layer
and a softmax output. Dropout is active only during training; inference
needs no rescaling. Loss is mean cross-entropy.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import TrainingError
from .streams import rng_for

Params = list[tuple[np.ndarray, np.ndarray]]  # (W, b) per layer


@dataclass(frozen=True)
class MlpConfig:
    hidden_layers: tuple[int, ...] = (100, 100, 100)
    dropout: float = 0.5  # applied after the first hidden layer
    epochs: int = 100
    batch_size: int = 32
    learning_rate: float = 0.01
    momentum: float = 0.9
    seed: int = 0
    input_width: int | None = None  # when set, training validates the data width

    def __post_init__(self) -> None:
        if not self.hidden_layers or any(h < 1 for h in self.hidden_layers):
            raise TrainingError("hidden_layers must be positive")
        if not (0.0 <= self.dropout < 1.0):
            raise TrainingError("dropout must be in [0, 1)")
        if self.epochs < 1 or self.batch_size < 1:
            raise TrainingError("epochs and batch_size must be >= 1")


def init_params(
    input_width: int, hidden_layers: tuple[int, ...], n_classes: int, rng: np.random.Generator
) -> Params:
    """Glorot-uniform weights, zero biases."""
    widths = [input_width, *hidden_layers, n_classes]
    params: Params = []
    for fan_in, fan_out in zip(widths[:-1], widths[1:]):
        limit = np.sqrt(6.0 / (fan_in + fan_out))
        W = rng.uniform(-limit, limit, size=(fan_in, fan_out))
        params.append((W, np.zeros(fan_out)))
    return params


def _softmax(z: np.ndarray) -> np.ndarray:
    z = z - z.max(axis=1, keepdims=True)
    e = np.exp(z)
    return e / e.sum(axis=1, keepdims=True)


def forward(params: Params, X: np.ndarray, dropout_mask: np.ndarray | None = None) -> np.ndarray:
    """Softmax class probabilities; rows sum to 1."""
    h = X
    for i, (W, b) in enumerate(params[:-1]):
        h = np.tanh(h @ W + b)
        if i == 0 and dropout_mask is not None:
            h = h * dropout_mask
    W, b = params[-1]
    return _softmax(h @ W + b)


def loss_and_grads(
    params: Params,
    X: np.ndarray,
    y: np.ndarray,
    dropout_mask: np.ndarray | None = None,
) -> tuple[float, Params]:
    """Mean cross-entropy and its gradients w.r.t. every parameter.

    The tanh derivative is taken on the pre-dropout activation; the mask is
    applied separately on the backward path, mirroring the forward pass.
    """
    n = len(X)
    inputs = [X]  # input to each layer
    tanh_out = []  # tanh outputs of hidden layers, before dropout
    h = X
    for i, (W, b) in enumerate(params[:-1]):
        t = np.tanh(h @ W + b)
        tanh_out.append(t)
        h = t * dropout_mask if (i == 0 and dropout_mask is not None) else t
        inputs.append(h)
    W, b = params[-1]
    probs = _softmax(h @ W + b)
    loss = float(-np.log(probs[np.arange(n), y] + 1e-300).mean())
    if not np.isfinite(loss):
        return loss, [(np.zeros_like(W), np.zeros_like(b)) for W, b in params]

    delta = probs.copy()
    delta[np.arange(n), y] -= 1.0
    delta /= n
    grads: Params = [None] * len(params)  # type: ignore[list-item]
    grads[-1] = (inputs[-1].T @ delta, delta.sum(axis=0))
    for layer in range(len(params) - 2, -1, -1):
        delta = delta @ params[layer + 1][0].T
        if layer == 0 and dropout_mask is not None:
            delta = delta * dropout_mask
        t = tanh_out[layer]
        delta = delta * (1.0 - t * t)
        grads[layer] = (inputs[layer].T @ delta, delta.sum(axis=0))
    return loss, grads


def fit_mlp(X: np.ndarray, y: np.ndarray, n_classes: int, cfg: MlpConfig) -> Params:
    """Train for the configured epoch budget; deterministic per seed."""
    if cfg.input_width is not None and cfg.input_width != X.shape[1]:
        raise TrainingError(
            f"input width mismatch: config expects {cfg.input_width}, data has {X.shape[1]}"
        )
    rng = rng_for(cfg.seed, "mlp")
    params = init_params(X.shape[1], cfg.hidden_layers, n_classes, rng)
    velocity = [(np.zeros_like(W), np.zeros_like(b)) for W, b in params]
    n = len(X)
    h1 = cfg.hidden_layers[0]
    for epoch in range(cfg.epochs):
        perm = rng.permutation(n)
        for start in range(0, n, cfg.batch_size):
            batch = perm[start : start + cfg.batch_size]
            mask = None
            if cfg.dropout > 0.0:
                keep = rng.random((len(batch), h1)) >= cfg.dropout
                mask = keep / (1.0 - cfg.dropout)
            loss, grads = loss_and_grads(params, X[batch], y[batch], mask)
            if not np.isfinite(loss):
                raise TrainingError(f"non-finite loss at epoch {epoch}")
            for i, ((W, b), (gW, gb), (vW, vb)) in enumerate(zip(params, grads, velocity)):
                vW = cfg.momentum * vW - cfg.learning_rate * gW
                vb = cfg.momentum * vb - cfg.learning_rate * gb
                params[i] = (W + vW, b + vb)
                velocity[i] = (vW, vb)
    return params
