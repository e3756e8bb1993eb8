"""Pure numpy statevector kernels.

Qubit 0 is the most significant bit of the basis index. Both this module and
the compiled ``_ckernels`` expose the same three functions:

``apply_program(states, kinds, targets, controls, num_qubits, angles)``
    Apply a gate program to a batch of states, one angle row per state.
``simulate(kinds, targets, controls, num_qubits, angles)``
    Same, starting every row from the ground state.
``z_expectations(states, masks)``
    Expectation of Z-string observables given as bitmasks over basis indices.
"""
import numpy as np

RX, RY, RZ, H, CNOT = 0, 1, 2, 3, 4

_INV_SQRT2 = 1.0 / np.sqrt(2.0)


def _cnot_permutation(num_qubits, control, target):
    idx = np.arange(1 << num_qubits)
    cbit = 1 << (num_qubits - 1 - control)
    tbit = 1 << (num_qubits - 1 - target)
    return np.where(idx & cbit, idx ^ tbit, idx)


def apply_program(states, kinds, targets, controls, num_qubits, angles):
    states = np.asarray(states, dtype=np.complex128)
    rows, dim = states.shape
    for g in range(len(kinds)):
        kind = kinds[g]
        t = int(targets[g])
        if kind == CNOT:
            states = states[:, _cnot_permutation(num_qubits, int(controls[g]), t)]
            continue
        view = states.reshape(rows, 1 << t, 2, dim >> (t + 1))
        a0 = view[:, :, 0, :]
        a1 = view[:, :, 1, :]
        if kind == H:
            new0 = (a0 + a1) * _INV_SQRT2
            new1 = (a0 - a1) * _INV_SQRT2
        else:
            half = 0.5 * angles[:, g]
            c = np.cos(half)[:, None, None]
            s = np.sin(half)[:, None, None]
            if kind == RX:
                new0 = c * a0 - 1j * s * a1
                new1 = -1j * s * a0 + c * a1
            elif kind == RY:
                new0 = c * a0 - s * a1
                new1 = s * a0 + c * a1
            elif kind == RZ:
                new0 = (c - 1j * s) * a0
                new1 = (c + 1j * s) * a1
            else:
                raise ValueError(f"unknown gate code {kind}")
        states = np.stack([new0, new1], axis=2).reshape(rows, dim)
    return states


def simulate(kinds, targets, controls, num_qubits, angles):
    angles = np.asarray(angles, dtype=np.float64)
    states = np.zeros((angles.shape[0], 1 << num_qubits), dtype=np.complex128)
    states[:, 0] = 1.0
    return apply_program(states, kinds, targets, controls, num_qubits, angles)


def z_expectations(states, masks):
    probs = states.real**2 + states.imag**2
    idx = np.arange(states.shape[1])
    signs = np.empty((len(masks), states.shape[1]))
    for m, mask in enumerate(masks):
        parity = np.zeros_like(idx)
        bits = idx & int(mask)
        while bits.any():
            parity ^= bits & 1
            bits = bits >> 1
        signs[m] = 1.0 - 2.0 * parity
    return probs @ signs.T
