# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled statevector kernels; same contract as ``phn._pykernels``."""
import numpy as np
from libc.math cimport cos, sin, sqrt

cdef enum:
    RX = 0
    RY = 1
    RZ = 2
    H = 3
    CNOT = 4


def apply_program(double complex[:, ::1] states, const signed char[::1] kinds,
                  const int[::1] targets, const int[::1] controls, int num_qubits,
                  const double[:, ::1] angles):
    cdef Py_ssize_t rows = states.shape[0]
    cdef Py_ssize_t dim = states.shape[1]
    cdef Py_ssize_t ngates = kinds.shape[0]
    cdef Py_ssize_t r, g, i, j
    cdef long tbit, cbit
    cdef double c, s, h = 1.0 / sqrt(2.0)
    cdef double complex m00, m01, m10, m11, a0, a1
    cdef signed char kind
    if dim != (1 << num_qubits):
        raise ValueError("state dimension does not match num_qubits")
    for r in range(rows):
        for g in range(ngates):
            kind = kinds[g]
            tbit = 1 << (num_qubits - 1 - targets[g])
            if kind == CNOT:
                cbit = 1 << (num_qubits - 1 - controls[g])
                for i in range(dim):
                    if (i & cbit) and not (i & tbit):
                        j = i | tbit
                        a0 = states[r, i]
                        states[r, i] = states[r, j]
                        states[r, j] = a0
                continue
            if kind == H:
                m00 = h; m01 = h; m10 = h; m11 = -h
            else:
                c = cos(0.5 * angles[r, g])
                s = sin(0.5 * angles[r, g])
                if kind == RX:
                    m00 = c; m01 = -1j * s; m10 = -1j * s; m11 = c
                elif kind == RY:
                    m00 = c; m01 = -s; m10 = s; m11 = c
                elif kind == RZ:
                    m00 = c - 1j * s; m01 = 0; m10 = 0; m11 = c + 1j * s
                else:
                    raise ValueError(f"unknown gate code {kind}")
            for i in range(dim):
                if not (i & tbit):
                    j = i | tbit
                    a0 = states[r, i]
                    a1 = states[r, j]
                    states[r, i] = m00 * a0 + m01 * a1
                    states[r, j] = m10 * a0 + m11 * a1
    return np.asarray(states)


def simulate(kinds, targets, controls, int num_qubits, angles):
    angles = np.ascontiguousarray(angles, dtype=np.float64)
    states = np.zeros((angles.shape[0], 1 << num_qubits), dtype=np.complex128)
    states[:, 0] = 1.0
    return apply_program(states, kinds, targets, controls, num_qubits, angles)


def z_expectations(const double complex[:, ::1] states, masks):
    cdef Py_ssize_t rows = states.shape[0]
    cdef Py_ssize_t dim = states.shape[1]
    cdef long[::1] mk = np.ascontiguousarray(masks, dtype=np.int64)
    cdef Py_ssize_t nobs = mk.shape[0]
    out = np.zeros((rows, nobs), dtype=np.float64)
    cdef double[:, ::1] res = out
    cdef Py_ssize_t r, m, i
    cdef long bits
    cdef double p, acc
    cdef int parity
    for r in range(rows):
        for m in range(nobs):
            acc = 0.0
            for i in range(dim):
                p = states[r, i].real * states[r, i].real + states[r, i].imag * states[r, i].imag
                bits = i & mk[m]
                parity = 0
                while bits:
                    parity ^= 1
                    bits &= bits - 1
                acc += -p if parity else p
            res[r, m] = acc
    return out
