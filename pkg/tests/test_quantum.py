import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from conftest import random_circuit
from oracles import central_difference, dense_expectations
from phn.hybrid import circuit_1d, circuit_2d
from phn.quantum import (Feature, Fixed, Gate, Observable, Parameter, StateVector, VqcModel,
                         apply_gate, expectation, new_state, parameter_shift_grad, run_circuit)


# -- new_state ---------------------------------------------------------------

@pytest.mark.parametrize("k,expected", [(1, [1, 0]), (2, [1, 0, 0, 0])])
def test_new_state_is_ground_state(k, expected):
    np.testing.assert_array_equal(new_state(k).amplitudes, expected)


@pytest.mark.parametrize("k", [0, 21, -1])
def test_new_state_rejects_bad_register(k):
    with pytest.raises(ValueError):
        new_state(k)


# -- apply_gate --------------------------------------------------------------

def test_hadamard_on_zero():
    s = apply_gate(new_state(1), Gate("H", 0))
    np.testing.assert_allclose(s.amplitudes, [1 / math.sqrt(2)] * 2, atol=1e-15)


def test_cnot_truth_table_10_to_11():
    s = StateVector(2, [0, 0, 1, 0])  # |10>
    out = apply_gate(s, Gate("CNOT", 1, control=0))
    np.testing.assert_array_equal(out.amplitudes, [0, 0, 0, 1])


@pytest.mark.parametrize("theta", [0.0, 0.3, 1.7, -2.5, math.pi])
def test_ry_on_zero(theta):
    s = apply_gate(new_state(1), Gate("RY", 0, source=Parameter(0)), theta)
    np.testing.assert_allclose(s.amplitudes, [math.cos(theta / 2), math.sin(theta / 2)], atol=1e-15)


def test_apply_gate_does_not_mutate_input():
    s = new_state(1)
    apply_gate(s, Gate("H", 0))
    np.testing.assert_array_equal(s.amplitudes, [1, 0])


def test_apply_gate_angle_errors():
    with pytest.raises(ValueError):
        apply_gate(new_state(1), Gate("RX", 0, source=Parameter(0)))
    with pytest.raises(ValueError):
        apply_gate(new_state(1), Gate("H", 0), 0.5)
    with pytest.raises(IndexError):
        apply_gate(new_state(1), Gate("H", 1))


@pytest.mark.parametrize("kwargs", [
    dict(kind="CNOT", target=0),
    dict(kind="CNOT", target=0, control=0),
    dict(kind="H", target=0, control=1),
    dict(kind="RX", target=0),
    dict(kind="H", target=0, source=Fixed(1.0)),
    dict(kind="SWAP", target=0),
])
def test_gate_invariants(kwargs):
    with pytest.raises(ValueError):
        Gate(**kwargs)


# -- expectation -------------------------------------------------------------

def test_expectation_examples():
    assert expectation(new_state(1), Observable("Z")) == 1.0
    plus = StateVector(1, [1 / math.sqrt(2)] * 2)
    assert abs(expectation(plus, Observable("Z"))) < 1e-15
    for theta in (0.0, 0.4, 2.0, -1.1):
        s = apply_gate(new_state(2), Gate("RY", 0, source=Parameter(0)), theta)
        assert abs(expectation(s, Observable("ZI")) - math.cos(theta)) < 1e-14


def test_expectation_dimension_mismatch():
    with pytest.raises(ValueError):
        expectation(new_state(1), Observable("ZI"))


@pytest.mark.parametrize("bad", ["", "II", "ZX"])
def test_observable_needs_z(bad):
    with pytest.raises(ValueError):
        Observable(bad)


# -- run_circuit -------------------------------------------------------------

def test_run_circuit_trivial_rotations():
    m = VqcModel(1, [Gate("RY", 0, source=Parameter(0))], ["Z"])
    np.testing.assert_allclose(run_circuit(m, [0.0], []), [1.0])
    np.testing.assert_allclose(run_circuit(m, [math.pi], []), [-1.0], atol=1e-15)


def test_run_circuit_1d_zero_parameters_matches_oracle():
    m = circuit_1d()
    value = run_circuit(m, [0.0, 0.0, 0.0], [0.7])[0]
    # frozen from the dense matrix-product oracle; equals cos(1.4)
    assert abs(value - 0.1699671429002409) < 1e-12
    assert abs(value - dense_expectations(m, [0, 0, 0], [0.7])[0]) < 1e-12


def test_run_circuit_length_checks():
    m = circuit_1d()
    with pytest.raises(ValueError):
        run_circuit(m, [0.0, 0.0], [0.7])
    with pytest.raises(ValueError):
        run_circuit(m, [0.0, 0.0, 0.0], [0.7, 0.1])


def test_vqc_model_index_coverage():
    with pytest.raises(ValueError):
        VqcModel(1, [Gate("RY", 0, source=Parameter(1))], ["Z"])
    with pytest.raises(ValueError):
        VqcModel(1, [Gate("RY", 0, source=Parameter(0))], ["ZI"])
    with pytest.raises(ValueError):
        VqcModel(1, [Gate("H", 1)], ["Z"])


def test_oracle_agreement_random_circuits():
    rng = np.random.default_rng(1)
    for _ in range(100):
        model, p, x = random_circuit(rng, max_qubits=3)
        np.testing.assert_allclose(run_circuit(model, p, x), dense_expectations(model, p, x),
                                   atol=1e-10)


def test_batch_equals_single_runs():
    m = circuit_2d()
    rng = np.random.default_rng(3)
    theta = rng.uniform(0, 6, m.num_parameters)
    X = rng.uniform(0, 6, (7, 2))
    batch = m.run_batch(theta, X)
    for i in range(7):
        np.testing.assert_allclose(batch[i], run_circuit(m, theta, X[i]), atol=1e-14)


# -- kernels -----------------------------------------------------------------

def test_kernel_backends_agree(kernels):
    from phn import _pykernels
    rng = np.random.default_rng(5)
    for _ in range(30):
        model, p, x = random_circuit(rng, max_qubits=4, max_gates=30)
        kinds, targets, controls, masks = model._compiled
        angles = np.ascontiguousarray(model.angle_table(p, np.vstack([x, x + 0.3])))
        ref = _pykernels.simulate(kinds, targets, controls, model.num_qubits, angles)
        got = kernels.simulate(kinds, targets, controls, model.num_qubits, angles)
        np.testing.assert_allclose(got, ref, atol=1e-13)
        np.testing.assert_allclose(kernels.z_expectations(np.ascontiguousarray(got), masks),
                                   _pykernels.z_expectations(ref, masks), atol=1e-13)


# -- parameter shift ---------------------------------------------------------

def test_shift_gradient_of_cos():
    m = VqcModel(1, [Gate("RY", 0, source=Parameter(0))], ["Z"])
    assert abs(parameter_shift_grad(m, [0.3], [], 0)[0] + math.sin(0.3)) < 1e-14
    assert abs(parameter_shift_grad(m, [0.0], [], 0)[0]) < 1e-15


def test_shift_gradient_1d_circuit_matches_finite_difference():
    m = circuit_1d()
    theta = np.array([0.1, 0.2, 0.3])
    fd = central_difference(lambda t: run_circuit(m, t, [1.0]), theta)
    for p in range(3):
        np.testing.assert_allclose(parameter_shift_grad(m, theta, [1.0], p), fd[p], atol=1e-6)


def test_shift_gradient_index_error():
    with pytest.raises(IndexError):
        parameter_shift_grad(circuit_1d(), [0, 0, 0], [0.1], 3)


def test_shift_gradient_sums_repeated_parameter():
    m = VqcModel(1, [Gate("RY", 0, source=Parameter(0)), Gate("RX", 0, source=Feature(0)),
                     Gate("RY", 0, source=Parameter(0))], ["Z"])
    fd = central_difference(lambda t: run_circuit(m, t, [0.8]), [0.4])
    np.testing.assert_allclose(parameter_shift_grad(m, [0.4], [0.8], 0), fd[0], atol=1e-6)


def test_shift_gradient_random_instances():
    rng = np.random.default_rng(11)
    checked = 0
    while checked < 100:
        model, p, x = random_circuit(rng, max_qubits=3)
        if model.num_parameters == 0:
            continue
        fd = central_difference(lambda t: run_circuit(model, t, x), p)
        jac = model.jacobian_batch(p, x[None, :])[0]
        np.testing.assert_allclose(jac.T, fd, atol=1e-6)
        checked += 1


# -- properties --------------------------------------------------------------

@given(seed=st.integers(0, 2**32 - 1))
def test_norm_preserved_and_expectations_bounded(seed):
    rng = np.random.default_rng(seed)
    model, p, x = random_circuit(rng, max_qubits=4, max_gates=50)
    state = new_state(model.num_qubits)
    angles = model.angle_table(p, x)[0]
    for g, gate in enumerate(model.program):
        state = apply_gate(state, gate, angles[g] if gate.is_rotation else None)
        assert abs(state.norm() - 1.0) < 1e-12
    values = run_circuit(model, p, x)
    assert np.all(np.abs(values) <= 1.0 + 1e-12)


# -- serialization -----------------------------------------------------------

@pytest.mark.parametrize("seed", range(10))
def test_json_round_trip_bit_exact(seed):
    model, p, x = random_circuit(np.random.default_rng(seed), max_qubits=3)
    back = VqcModel.from_json(model.to_json())
    assert back == model
    assert back.to_json() == model.to_json()
    np.testing.assert_array_equal(run_circuit(back, p, x), run_circuit(model, p, x))


def test_json_document_shape():
    doc = circuit_2d().to_dict()
    assert doc["num_qubits"] == 2 and doc["observables"] == ["ZI"]
    cnot = next(g for g in doc["gates"] if g["kind"] == "CNOT")
    assert cnot == {"kind": "CNOT", "target": 1, "control": 0}
    assert doc["gates"][0]["angle_source"] == {"type": "parameter", "index": 0}
