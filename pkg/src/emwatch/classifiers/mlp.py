"""Multilayer perceptron: ReLU hidden layers, linear output head, trained by
mini-batch gradient descent on softmax cross-entropy with L2 weight decay.
Epoch count is fixed up front (no early stopping) so runs are reproducible."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

_BATCH_SIZE = 32


@dataclass
class MlpParams:
    weights: list  # list of (fan_in, fan_out) arrays
    biases: list   # list of (fan_out,) arrays


def _forward(params: MlpParams, X: np.ndarray) -> tuple[list, np.ndarray]:
    activations = [X]
    h = X
    for W, b in zip(params.weights[:-1], params.biases[:-1]):
        h = np.maximum(h @ W + b, 0.0)
        activations.append(h)
    logits = h @ params.weights[-1] + params.biases[-1]
    return activations, logits


def _softmax_rows(z: np.ndarray) -> np.ndarray:
    shifted = z - z.max(axis=1, keepdims=True)
    e = np.exp(shifted)
    return e / e.sum(axis=1, keepdims=True)


def fit_mlp(
    X: np.ndarray,
    y: np.ndarray,
    n_classes: int,
    hidden_layers: tuple,
    learning_rate: float,
    epochs: int,
    l2_penalty: float,
    seed: int,
) -> MlpParams:
    n, d = X.shape
    rng = np.random.default_rng(seed)
    dims = [d, *hidden_layers, n_classes]
    weights = [
        rng.normal(0.0, np.sqrt(2.0 / dims[k]), size=(dims[k], dims[k + 1]))
        for k in range(len(dims) - 1)
    ]
    biases = [np.zeros(dims[k + 1]) for k in range(len(dims) - 1)]
    params = MlpParams(weights=weights, biases=biases)
    onehot = np.eye(n_classes)[y]

    for _ in range(epochs):
        order = rng.permutation(n)
        for start in range(0, n, _BATCH_SIZE):
            batch = order[start:start + _BATCH_SIZE]
            activations, logits = _forward(params, X[batch])
            delta = (_softmax_rows(logits) - onehot[batch]) / batch.size
            for k in range(len(params.weights) - 1, -1, -1):
                grad_w = activations[k].T @ delta + l2_penalty * params.weights[k]
                grad_b = delta.sum(axis=0)
                if k > 0:
                    delta = (delta @ params.weights[k].T) * (activations[k] > 0)
                params.weights[k] -= learning_rate * grad_w
                params.biases[k] -= learning_rate * grad_b
    return params


def mlp_scores(params: MlpParams, X: np.ndarray) -> np.ndarray:
    """Raw output-layer activations (logits), shape (n_samples, n_classes)."""
    _, logits = _forward(params, X)
    return logits
