"""Parallel hybrid network: a VQC and an MLP on the same inputs, mixed linearly.

Each output is ``o_m = s_c[m] * c_m + s_q[m] * q_m`` where ``q`` comes from
the circuit and ``c`` from the perceptron. The single-branch baselines drop
one term but keep their scaling weight.
"""
from __future__ import annotations

import json
from dataclasses import dataclass, field, replace
from typing import Optional

import numpy as np

from phn.mlp import MlpModel, flatten_grads, init_mlp, mlp_backward, mlp_forward
from phn.quantum import Feature, Gate, Parameter, VqcModel

MODES = ("full", "vqc", "mlp")
GROUPS = ("vqc", "mlp", "combiner")
_ACTIVE = {
    "full": {"vqc", "mlp"},
    "vqc": {"vqc"},
    "mlp": {"mlp"},
}


@dataclass
class PhnModel:
    vqc: VqcModel
    theta: np.ndarray
    mlp: MlpModel
    s_q: np.ndarray
    s_c: np.ndarray
    mode: str = "full"
    seed: Optional[int] = None
    metadata: dict = field(default_factory=dict)

    def __post_init__(self):
        self.theta = np.asarray(self.theta, dtype=np.float64)
        self.s_q = np.atleast_1d(np.asarray(self.s_q, dtype=np.float64))
        self.s_c = np.atleast_1d(np.asarray(self.s_c, dtype=np.float64))
        if self.mode not in MODES:
            raise ValueError(f"mode must be one of {MODES}, got {self.mode!r}")
        m = self.vqc.num_outputs
        if self.mlp.output_dim != m or self.s_q.shape != (m,) or self.s_c.shape != (m,):
            raise ValueError("VQC outputs, MLP outputs and combiner pairs must agree")
        if self.vqc.num_features != self.mlp.input_dim:
            raise ValueError("VQC and MLP must take the same number of features")
        if self.theta.shape != (self.vqc.num_parameters,):
            raise ValueError("theta length does not match the circuit's parameter count")

    @property
    def num_outputs(self) -> int:
        return self.vqc.num_outputs

    @property
    def num_features(self) -> int:
        return self.vqc.num_features

    @property
    def num_trainable(self) -> int:
        return self.vqc.num_parameters + self.mlp.parameter_count + 2 * self.num_outputs

    # -- flat parameter view -------------------------------------------------

    def flat_parameters(self) -> np.ndarray:
        combiner = np.column_stack([self.s_q, self.s_c]).ravel()
        return np.concatenate([self.theta, self.mlp.flat_parameters(), combiner])

    def parameter_groups(self) -> np.ndarray:
        """Group label ('vqc', 'mlp' or 'combiner') for each flat entry."""
        return np.array(["vqc"] * self.vqc.num_parameters
                        + ["mlp"] * self.mlp.parameter_count
                        + ["combiner"] * (2 * self.num_outputs))

    def with_flat_parameters(self, flat) -> "PhnModel":
        flat = np.asarray(flat, dtype=np.float64)
        if flat.shape != (self.num_trainable,):
            raise ValueError(f"expected {self.num_trainable} values, got {flat.shape}")
        p, k = self.vqc.num_parameters, self.mlp.parameter_count
        comb = flat[p + k:].reshape(-1, 2)
        return replace(self, theta=flat[:p].copy(), mlp=self.mlp.with_flat_parameters(flat[p:p + k]),
                       s_q=comb[:, 0].copy(), s_c=comb[:, 1].copy())

    # -- serialization -------------------------------------------------------

    def to_dict(self) -> dict:
        return {
            "format": "phn-checkpoint/1",
            "mode": self.mode,
            "seed": self.seed,
            "vqc": self.vqc.to_dict(),
            "theta": self.theta.tolist(),
            "mlp": self.mlp.to_dict(),
            "combiner": {"s_q": self.s_q.tolist(), "s_c": self.s_c.tolist()},
            "metadata": self.metadata,
        }

    @classmethod
    def from_dict(cls, doc: dict) -> "PhnModel":
        return cls(
            vqc=VqcModel.from_dict(doc["vqc"]),
            theta=np.array(doc["theta"], dtype=np.float64),
            mlp=MlpModel.from_dict(doc["mlp"]),
            s_q=np.array(doc["combiner"]["s_q"], dtype=np.float64),
            s_c=np.array(doc["combiner"]["s_c"], dtype=np.float64),
            mode=doc["mode"],
            seed=doc.get("seed"),
            metadata=doc.get("metadata", {}),
        )

    def to_json(self) -> str:
        return json.dumps(self.to_dict())

    @classmethod
    def from_json(cls, text: str) -> "PhnModel":
        return cls.from_dict(json.loads(text))


def branch_outputs(model: PhnModel, X):
    """Raw branch outputs ``(q, c)`` for a batch, each of shape (B, M).

    An inactive branch is reported as zeros and never evaluated.
    """
    X = np.atleast_2d(np.asarray(X, dtype=np.float64))
    active = _ACTIVE[model.mode]
    m = model.num_outputs
    q = model.vqc.run_batch(model.theta, X) if "vqc" in active else np.zeros((len(X), m))
    c = mlp_forward(model.mlp, X)[0] if "mlp" in active else np.zeros((len(X), m))
    return q, c


def phn_forward_batch(model: PhnModel, X) -> np.ndarray:
    q, c = branch_outputs(model, X)
    return model.s_c * c + model.s_q * q


def phn_forward(model: PhnModel, x) -> np.ndarray:
    x = np.asarray(x, dtype=np.float64)
    if x.shape != (model.num_features,):
        raise ValueError(f"expected a feature vector of length {model.num_features}")
    return phn_forward_batch(model, x[None, :])[0]


def loss_and_grad(model: PhnModel, X, Y):
    """Squared error (summed over outputs, averaged over samples) and its flat gradient."""
    X = np.atleast_2d(np.asarray(X, dtype=np.float64))
    Y = np.asarray(Y, dtype=np.float64).reshape(len(X), -1)
    n = len(X)
    active = _ACTIVE[model.mode]
    grad_theta = np.zeros(model.vqc.num_parameters)
    grad_mlp = np.zeros(model.mlp.parameter_count)
    m = model.num_outputs
    q = c = np.zeros((n, m))
    if "vqc" in active:
        q = model.vqc.run_batch(model.theta, X)
    if "mlp" in active:
        c, cache = mlp_forward(model.mlp, X)
    o = model.s_c * c + model.s_q * q
    resid = o - Y
    loss = float(np.mean(np.sum(resid**2, axis=1)))
    err = 2.0 * resid / n
    grad_sq = np.sum(err * q, axis=0) if "vqc" in active else np.zeros(m)
    grad_sc = np.sum(err * c, axis=0) if "mlp" in active else np.zeros(m)
    if "vqc" in active and model.vqc.num_parameters:
        jac = model.vqc.jacobian_batch(model.theta, X)
        grad_theta = np.einsum("bm,bmp->p", err * model.s_q, jac)
    if "mlp" in active:
        wg, bg, _ = mlp_backward(model.mlp, cache, err * model.s_c)
        grad_mlp = flatten_grads(wg, bg)
    combiner = np.column_stack([grad_sq, grad_sc]).ravel()
    return loss, np.concatenate([grad_theta, grad_mlp, combiner])


def phn_gradients(model: PhnModel, x, y_target, groups=None) -> np.ndarray:
    """Gradient of the squared error at one sample over the flat parameter view.

    ``groups`` restricts the result to the named parameter groups; asking for
    a branch that the model's mode switches off is an error.
    """
    if groups is not None:
        active = _ACTIVE[model.mode]
        for g in groups:
            if g not in GROUPS:
                raise ValueError(f"unknown parameter group {g!r}")
            if g in ("vqc", "mlp") and g not in active:
                raise ValueError(f"{g} gradients requested but mode is {model.mode!r}")
    x = np.asarray(x, dtype=np.float64)
    if x.shape != (model.num_features,):
        raise ValueError(f"expected a feature vector of length {model.num_features}")
    _, grad = loss_and_grad(model, x[None, :], np.atleast_1d(y_target)[None, :])
    if groups is None:
        return grad
    return grad[np.isin(model.parameter_groups(), list(groups))]


def primacy_ratio(model: PhnModel) -> float:
    """|s_c| / |s_q|; +inf when the circuit weight is exactly zero."""
    if model.num_outputs != 1:
        raise ValueError("the primacy ratio is only defined for a single output")
    sc, sq = abs(float(model.s_c[0])), abs(float(model.s_q[0]))
    if sq == 0.0:
        return float("inf") if sc != 0.0 else float("nan")
    return sc / sq


def circuit_1d() -> VqcModel:
    """Single-qubit re-uploading circuit: RY RX(x) RZ RX(x) RY, measured in Z.

    The middle gate must not be real: with only RY between RX encodings the
    output is even in x and cannot represent an odd target.
    """
    program = [
        Gate("RY", 0, source=Parameter(0)),
        Gate("RX", 0, source=Feature(0)),
        Gate("RZ", 0, source=Parameter(1)),
        Gate("RX", 0, source=Feature(0)),
        Gate("RY", 0, source=Parameter(2)),
    ]
    return VqcModel(1, program, ["Z"])


def circuit_2d(layers: int = 2) -> VqcModel:
    """Two-qubit circuit with x1 on qubit 0 and x2 on qubit 1, measured in Z (x) I.

    Variational layers alternate RY, RZ, RY, ... for the same parity reason
    as :func:`circuit_1d`.
    """
    program, p = [], 0
    for layer in range(layers):
        kind = "RY" if layer % 2 == 0 else "RZ"
        program += [
            Gate(kind, 0, source=Parameter(p)),
            Gate(kind, 1, source=Parameter(p + 1)),
            Gate("CNOT", 1, control=0),
            Gate("RX", 0, source=Feature(0)),
            Gate("RX", 1, source=Feature(1)),
        ]
        p += 2
    program += [Gate("RY", 0, source=Parameter(p)), Gate("RY", 1, source=Parameter(p + 1))]
    return VqcModel(2, program, ["ZI"])


def build_paper_architecture(experiment: str, seed: int, mode: str = "full") -> PhnModel:
    """The 1D (1 qubit, MLP 1-256-1) or 2D (2 qubits, MLP 2-128-1) network.

    Circuit angles are uniform on [0, 2pi); the combiner starts at (0.5, 0.5).
    """
    if experiment == "1d":
        vqc, layout = circuit_1d(), [1, 256, 1]
    elif experiment == "2d":
        vqc, layout = circuit_2d(), [2, 128, 1]
    else:
        raise ValueError(f"experiment must be '1d' or '2d', got {experiment!r}")
    theta_seq, mlp_seq = np.random.SeedSequence(seed).spawn(2)
    theta = np.random.default_rng(theta_seq).uniform(0.0, 2 * np.pi, vqc.num_parameters)
    mlp = init_mlp(layout, ["relu", "sigmoid"], seed=mlp_seq)
    return PhnModel(vqc, theta, mlp, s_q=[0.5], s_c=[0.5], mode=mode, seed=seed,
                    metadata={"experiment": experiment})
