"""Exact statevector simulation of small variational circuits.

Rotations follow ``R_P(phi) = exp(-i phi P / 2)``. Qubit 0 is the most
significant bit of the basis index, so ``|10>`` is index 2 for two qubits.
"""
from __future__ import annotations

import json
from dataclasses import dataclass, field
from functools import cached_property
from typing import Optional, Sequence, Union

import numpy as np

from phn._backend import kernels

MAX_QUBITS = 20

ROTATIONS = ("RX", "RY", "RZ")
KINDS = ROTATIONS + ("H", "CNOT")
_KIND_CODE = {k: i for i, k in enumerate(KINDS)}


@dataclass(frozen=True)
class Feature:
    index: int


@dataclass(frozen=True)
class Parameter:
    index: int


@dataclass(frozen=True)
class Fixed:
    value: float


AngleSource = Union[Feature, Parameter, Fixed]


@dataclass(frozen=True)
class Gate:
    kind: str
    target: int
    control: Optional[int] = None
    source: Optional[AngleSource] = None

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ValueError(f"unknown gate kind {self.kind!r}")
        if self.target < 0:
            raise ValueError("negative qubit index")
        if self.kind == "CNOT":
            if self.control is None or self.control < 0:
                raise ValueError("CNOT needs a non-negative control qubit")
            if self.control == self.target:
                raise ValueError("CNOT control equals target")
        elif self.control is not None:
            raise ValueError(f"{self.kind} takes no control qubit")
        if self.is_rotation:
            if not isinstance(self.source, (Feature, Parameter, Fixed)):
                raise ValueError(f"{self.kind} needs an angle source")
        elif self.source is not None:
            raise ValueError(f"{self.kind} takes no angle")

    @property
    def is_rotation(self) -> bool:
        return self.kind in ROTATIONS

    @property
    def qubits(self) -> tuple:
        return (self.target,) if self.control is None else (self.control, self.target)


@dataclass(frozen=True)
class Observable:
    """Tensor product of per-qubit Z or I factors, e.g. ``Observable("ZI")``."""

    factors: str

    def __post_init__(self):
        if not self.factors or set(self.factors) - {"Z", "I"}:
            raise ValueError(f"observable must be a string over Z/I, got {self.factors!r}")
        if "Z" not in self.factors:
            raise ValueError("observable needs at least one Z factor")

    @property
    def num_qubits(self) -> int:
        return len(self.factors)

    @property
    def mask(self) -> int:
        n = len(self.factors)
        return sum(1 << (n - 1 - q) for q, f in enumerate(self.factors) if f == "Z")


@dataclass
class StateVector:
    num_qubits: int
    amplitudes: np.ndarray

    def __post_init__(self):
        self.amplitudes = np.asarray(self.amplitudes, dtype=np.complex128)
        if self.amplitudes.shape != (1 << self.num_qubits,):
            raise ValueError("amplitude count must be 2**num_qubits")

    def norm(self) -> float:
        return float(np.sqrt(np.sum(np.abs(self.amplitudes) ** 2)))


def new_state(num_qubits: int) -> StateVector:
    if not 1 <= num_qubits <= MAX_QUBITS:
        raise ValueError(f"num_qubits must be in [1, {MAX_QUBITS}], got {num_qubits}")
    amps = np.zeros(1 << num_qubits, dtype=np.complex128)
    amps[0] = 1.0
    return StateVector(num_qubits, amps)


def apply_gate(state: StateVector, gate: Gate, angle: Optional[float] = None) -> StateVector:
    """Return a new state with ``gate`` applied; rotations need ``angle``."""
    if gate.is_rotation and angle is None:
        raise ValueError(f"{gate.kind} requires an angle")
    if not gate.is_rotation and angle is not None:
        raise ValueError(f"{gate.kind} takes no angle")
    if max(gate.qubits) >= state.num_qubits:
        raise IndexError("gate qubit index out of range")
    states = state.amplitudes.copy().reshape(1, -1)
    out = kernels.apply_program(
        states,
        np.array([_KIND_CODE[gate.kind]], dtype=np.int8),
        np.array([gate.target], dtype=np.int32),
        np.array([gate.control if gate.control is not None else -1], dtype=np.int32),
        state.num_qubits,
        np.array([[0.0 if angle is None else float(angle)]]),
    )
    return StateVector(state.num_qubits, np.asarray(out)[0])


def expectation(state: StateVector, obs: Observable) -> float:
    if obs.num_qubits != state.num_qubits:
        raise ValueError("observable and state dimensions differ")
    states = state.amplitudes.reshape(1, -1)
    return float(kernels.z_expectations(np.ascontiguousarray(states), [obs.mask])[0, 0])


@dataclass(frozen=True)
class VqcModel:
    num_qubits: int
    program: tuple
    observables: tuple = field(default=())

    def __post_init__(self):
        object.__setattr__(self, "program", tuple(self.program))
        obs = tuple(Observable(o) if isinstance(o, str) else o for o in self.observables)
        object.__setattr__(self, "observables", obs)
        if not 1 <= self.num_qubits <= MAX_QUBITS:
            raise ValueError(f"num_qubits must be in [1, {MAX_QUBITS}]")
        if not obs:
            raise ValueError("at least one observable is required")
        for o in obs:
            if o.num_qubits != self.num_qubits:
                raise ValueError("observable width does not match num_qubits")
        for g in self.program:
            if max(g.qubits) >= self.num_qubits:
                raise ValueError(f"gate {g} addresses a qubit outside the register")
        for cls, count in ((Parameter, self.num_parameters), (Feature, self.num_features)):
            used = {g.source.index for g in self.program if isinstance(g.source, cls)}
            if used != set(range(count)):
                raise ValueError(f"{cls.__name__} indices must cover 0..{count - 1} without gaps")

    @property
    def num_parameters(self) -> int:
        idx = [g.source.index for g in self.program if isinstance(g.source, Parameter)]
        return max(idx) + 1 if idx else 0

    @property
    def num_features(self) -> int:
        idx = [g.source.index for g in self.program if isinstance(g.source, Feature)]
        return max(idx) + 1 if idx else 0

    @property
    def num_outputs(self) -> int:
        return len(self.observables)

    @cached_property
    def _compiled(self):
        kinds = np.array([_KIND_CODE[g.kind] for g in self.program], dtype=np.int8)
        targets = np.array([g.target for g in self.program], dtype=np.int32)
        controls = np.array(
            [g.control if g.control is not None else -1 for g in self.program], dtype=np.int32
        )
        masks = np.array([o.mask for o in self.observables], dtype=np.int64)
        return kinds, targets, controls, masks

    def angle_table(self, params, features) -> np.ndarray:
        """Per-gate rotation angles, one row per feature vector in ``features``."""
        params = np.asarray(params, dtype=np.float64)
        features = np.atleast_2d(np.asarray(features, dtype=np.float64))
        if params.shape != (self.num_parameters,):
            raise ValueError(f"expected {self.num_parameters} parameters, got {params.shape}")
        if features.shape[1] != self.num_features:
            raise ValueError(f"expected {self.num_features} features, got {features.shape[1]}")
        angles = np.zeros((features.shape[0], len(self.program)))
        for g, gate in enumerate(self.program):
            src = gate.source
            if isinstance(src, Feature):
                angles[:, g] = features[:, src.index]
            elif isinstance(src, Parameter):
                angles[:, g] = params[src.index]
            elif isinstance(src, Fixed):
                angles[:, g] = src.value
        return angles

    def _run_angles(self, angles: np.ndarray) -> np.ndarray:
        kinds, targets, controls, masks = self._compiled
        states = kernels.simulate(kinds, targets, controls, self.num_qubits,
                                  np.ascontiguousarray(angles))
        return np.asarray(kernels.z_expectations(np.ascontiguousarray(states), masks))

    def run_batch(self, params, features) -> np.ndarray:
        """Expectations of shape (batch, num_outputs)."""
        return self._run_angles(self.angle_table(params, features))

    def jacobian_batch(self, params, features) -> np.ndarray:
        """Parameter-shift Jacobian of shape (batch, num_outputs, num_parameters)."""
        base = self.angle_table(params, features)
        n = base.shape[0]
        occurrences = [(g, gate.source.index) for g, gate in enumerate(self.program)
                       if isinstance(gate.source, Parameter)]
        jac = np.zeros((n, self.num_outputs, self.num_parameters))
        if not occurrences:
            return jac
        blocks = []
        for g, _ in occurrences:
            for shift in (np.pi / 2, -np.pi / 2):
                shifted = base.copy()
                shifted[:, g] += shift
                blocks.append(shifted)
        values = self._run_angles(np.concatenate(blocks)).reshape(len(occurrences), 2, n, -1)
        for o, (_, p) in enumerate(occurrences):
            jac[:, :, p] += 0.5 * (values[o, 0] - values[o, 1])
        return jac

    def to_dict(self) -> dict:
        gates = []
        for g in self.program:
            entry = {"kind": g.kind, "target": g.target}
            if g.control is not None:
                entry["control"] = g.control
            src = g.source
            if isinstance(src, Feature):
                entry["angle_source"] = {"type": "feature", "index": src.index}
            elif isinstance(src, Parameter):
                entry["angle_source"] = {"type": "parameter", "index": src.index}
            elif isinstance(src, Fixed):
                entry["angle_source"] = {"type": "fixed", "value": float(src.value)}
            gates.append(entry)
        return {
            "num_qubits": self.num_qubits,
            "gates": gates,
            "observables": [o.factors for o in self.observables],
        }

    @classmethod
    def from_dict(cls, doc: dict) -> "VqcModel":
        gates = []
        for entry in doc["gates"]:
            src = entry.get("angle_source")
            if src is None:
                source = None
            elif src["type"] == "feature":
                source = Feature(int(src["index"]))
            elif src["type"] == "parameter":
                source = Parameter(int(src["index"]))
            elif src["type"] == "fixed":
                source = Fixed(float(src["value"]))
            else:
                raise ValueError(f"unknown angle source {src['type']!r}")
            gates.append(Gate(entry["kind"], int(entry["target"]), entry.get("control"), source))
        return cls(int(doc["num_qubits"]), gates, doc["observables"])

    def to_json(self) -> str:
        return json.dumps(self.to_dict())

    @classmethod
    def from_json(cls, text: str) -> "VqcModel":
        return cls.from_dict(json.loads(text))


def run_circuit(model: VqcModel, params: Sequence[float], features: Sequence[float]) -> np.ndarray:
    features = np.asarray(features, dtype=np.float64)
    if features.ndim != 1:
        raise ValueError("run_circuit takes a single feature vector; use run_batch")
    return model.run_batch(params, features[None, :])[0]


def parameter_shift_grad(model: VqcModel, params, features, param_index: int) -> np.ndarray:
    """d<obs>/d theta_p for each observable, summed over every occurrence of p."""
    if not 0 <= param_index < model.num_parameters:
        raise IndexError(f"param_index {param_index} out of range")
    features = np.asarray(features, dtype=np.float64)
    return model.jacobian_batch(params, features[None, :])[0, :, param_index]
