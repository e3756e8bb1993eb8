"""Fully connected perceptron with hand-written backpropagation."""
from __future__ import annotations

import json
from dataclasses import dataclass
from typing import Sequence

import numpy as np

ACTIVATIONS = ("relu", "sigmoid", "identity")


def _sigmoid(z):
    # split by sign to avoid overflow in exp
    out = np.empty_like(z)
    pos = z >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-z[pos]))
    ez = np.exp(z[~pos])
    out[~pos] = ez / (1.0 + ez)
    return out


def activate(name: str, z: np.ndarray) -> np.ndarray:
    if name == "relu":
        return np.maximum(z, 0.0)
    if name == "sigmoid":
        return _sigmoid(z)
    if name == "identity":
        return z
    raise ValueError(f"unknown activation {name!r}")


def activation_grad(name: str, z: np.ndarray, a: np.ndarray) -> np.ndarray:
    """Derivative of the activation at pre-activation ``z`` (``a`` is its output)."""
    if name == "relu":
        return (z > 0).astype(z.dtype)
    if name == "sigmoid":
        return a * (1.0 - a)
    if name == "identity":
        return np.ones_like(z)
    raise ValueError(f"unknown activation {name!r}")


@dataclass
class DenseLayer:
    weights: np.ndarray  # (out_dim, in_dim)
    biases: np.ndarray  # (out_dim,)
    activation: str

    def __post_init__(self):
        self.weights = np.atleast_2d(np.asarray(self.weights, dtype=np.float64))
        self.biases = np.atleast_1d(np.asarray(self.biases, dtype=np.float64))
        if self.activation not in ACTIVATIONS:
            raise ValueError(f"unknown activation {self.activation!r}")
        if self.biases.shape != (self.weights.shape[0],):
            raise ValueError("bias length must equal the layer's output dimension")

    @property
    def in_dim(self) -> int:
        return self.weights.shape[1]

    @property
    def out_dim(self) -> int:
        return self.weights.shape[0]


@dataclass
class MlpModel:
    layers: list

    def __post_init__(self):
        if not self.layers:
            raise ValueError("an MLP needs at least one layer")
        for prev, nxt in zip(self.layers, self.layers[1:]):
            if prev.out_dim != nxt.in_dim:
                raise ValueError("consecutive layer dimensions do not chain")

    @property
    def input_dim(self) -> int:
        return self.layers[0].in_dim

    @property
    def output_dim(self) -> int:
        return self.layers[-1].out_dim

    @property
    def layout(self) -> list:
        return [self.input_dim] + [layer.out_dim for layer in self.layers]

    @property
    def activations(self) -> list:
        return [layer.activation for layer in self.layers]

    @property
    def parameter_count(self) -> int:
        return sum(layer.weights.size + layer.biases.size for layer in self.layers)

    def flat_parameters(self) -> np.ndarray:
        """Weights (row-major) then biases, layer by layer."""
        return np.concatenate([np.concatenate([l.weights.ravel(), l.biases]) for l in self.layers])

    def with_flat_parameters(self, flat) -> "MlpModel":
        flat = np.asarray(flat, dtype=np.float64)
        if flat.shape != (self.parameter_count,):
            raise ValueError(f"expected {self.parameter_count} values, got {flat.shape}")
        layers, pos = [], 0
        for l in self.layers:
            nw = l.weights.size
            w = flat[pos:pos + nw].reshape(l.weights.shape)
            b = flat[pos + nw:pos + nw + l.out_dim]
            pos += nw + l.out_dim
            layers.append(DenseLayer(w.copy(), b.copy(), l.activation))
        return MlpModel(layers)

    def to_dict(self) -> dict:
        return {
            "layout": self.layout,
            "activations": self.activations,
            "weights": [l.weights.ravel().tolist() for l in self.layers],
            "biases": [l.biases.tolist() for l in self.layers],
        }

    @classmethod
    def from_dict(cls, doc: dict) -> "MlpModel":
        layout = doc["layout"]
        layers = []
        for i, act in enumerate(doc["activations"]):
            w = np.array(doc["weights"][i], dtype=np.float64).reshape(layout[i + 1], layout[i])
            layers.append(DenseLayer(w, np.array(doc["biases"][i], dtype=np.float64), act))
        return cls(layers)

    def to_json(self) -> str:
        return json.dumps(self.to_dict())

    @classmethod
    def from_json(cls, text: str) -> "MlpModel":
        return cls.from_dict(json.loads(text))


def init_mlp(layout: Sequence[int], activations: Sequence[str], seed: int) -> MlpModel:
    """Fan-in scaled uniform weights, zero biases, deterministic in ``seed``."""
    layout = list(layout)
    if len(layout) < 2:
        raise ValueError("layout needs an input and at least one layer width")
    if len(activations) != len(layout) - 1:
        raise ValueError("need one activation per layer")
    if min(layout) < 1:
        raise ValueError("layer widths must be positive")
    rng = np.random.default_rng(seed)
    layers = []
    for n_in, n_out, act in zip(layout, layout[1:], activations):
        bound = 1.0 / np.sqrt(n_in)
        layers.append(DenseLayer(rng.uniform(-bound, bound, size=(n_out, n_in)),
                                 np.zeros(n_out), act))
    return MlpModel(layers)


@dataclass
class ForwardCache:
    inputs: list  # input to each layer
    pre: list  # pre-activations
    post: list  # activations
    model_id: int
    single: bool


def mlp_forward(model: MlpModel, x):
    """Forward pass for one vector (shape (N,)) or a batch (shape (B, N)).

    Returns ``(output, cache)``; the cache feeds :func:`mlp_backward`.
    """
    x = np.asarray(x, dtype=np.float64)
    single = x.ndim == 1
    a = np.atleast_2d(x)
    if a.shape[1] != model.input_dim:
        raise ValueError(f"expected input dimension {model.input_dim}, got {a.shape[1]}")
    inputs, pre, post = [], [], []
    for layer in model.layers:
        inputs.append(a)
        z = a @ layer.weights.T + layer.biases
        a = activate(layer.activation, z)
        pre.append(z)
        post.append(a)
    cache = ForwardCache(inputs, pre, post, id(model), single)
    return (a[0] if single else a), cache


def mlp_backward(model: MlpModel, cache: ForwardCache, output_gradient):
    """Backpropagate ``output_gradient`` (dL/d output).

    Returns ``(weight_grads, bias_grads, input_grad)``; parameter gradients
    are summed over the batch.
    """
    if cache.model_id != id(model) or len(cache.pre) != len(model.layers):
        raise ValueError("cache was not produced by this model")
    g = np.atleast_2d(np.asarray(output_gradient, dtype=np.float64))
    if g.shape != cache.post[-1].shape:
        raise ValueError("output gradient shape does not match the cached forward pass")
    wgrads, bgrads = [None] * len(model.layers), [None] * len(model.layers)
    for i in range(len(model.layers) - 1, -1, -1):
        layer = model.layers[i]
        delta = g * activation_grad(layer.activation, cache.pre[i], cache.post[i])
        wgrads[i] = delta.T @ cache.inputs[i]
        bgrads[i] = delta.sum(axis=0)
        g = delta @ layer.weights
    return wgrads, bgrads, (g[0] if cache.single else g)


def flatten_grads(wgrads, bgrads) -> np.ndarray:
    """Flatten in the same order as :meth:`MlpModel.flat_parameters`."""
    return np.concatenate([np.concatenate([w.ravel(), b]) for w, b in zip(wgrads, bgrads)])
