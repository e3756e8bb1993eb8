"""Compare the compiled and numpy statevector kernels.

    python3 benchmarks/bench_kernels.py [--repeats 5]

Times the batched simulate + expectation call for the 1D and 2D circuits
(shaped like one parameter-shift Jacobian over 100 samples), a random
4-qubit circuit, and one full-batch training epoch of each experiment.
"""
import argparse
import importlib
import time

import numpy as np

import phn.quantum as quantum
from phn import _pykernels
from phn.datasets import make_dataset
from phn.hybrid import build_paper_architecture, circuit_1d, circuit_2d, loss_and_grad
from phn.quantum import Feature, Gate, Parameter, VqcModel


def best_of(fn, repeats):
    times = []
    for _ in range(repeats):
        start = time.perf_counter()
        fn()
        times.append(time.perf_counter() - start)
    return min(times)


def random_4q(seed=0, depth=40):
    rng = np.random.default_rng(seed)
    gates, n_par = [], 0
    for _ in range(depth):
        t = int(rng.integers(4))
        kind = str(rng.choice(["RX", "RY", "RZ", "CNOT"]))
        if kind == "CNOT":
            gates.append(Gate("CNOT", t, control=(t + 1) % 4))
        elif rng.random() < 0.3:
            gates.append(Gate(kind, t, source=Feature(0)))
        else:
            gates.append(Gate(kind, t, source=Parameter(n_par)))
            n_par += 1
    return VqcModel(4, gates, ["ZIII", "IZZI"])


def simulate_case(model, rows, seed=0):
    rng = np.random.default_rng(seed)
    angles = np.ascontiguousarray(rng.uniform(0, 2 * np.pi, (rows, len(model.program))))
    kinds, targets, controls, masks = model._compiled

    def run(k):
        states = k.simulate(kinds, targets, controls, model.num_qubits, angles)
        k.z_expectations(np.ascontiguousarray(states), masks)
    return run


def epoch_case(experiment):
    model = build_paper_architecture(experiment, 0)
    data = make_dataset(experiment, 100)
    return lambda k: loss_and_grad(model, data.features, data.labels[:, None])


def main(argv=None):
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--repeats", type=int, default=5)
    args = parser.parse_args(argv)
    try:
        compiled = importlib.import_module("phn._ckernels")
    except ImportError:
        print("compiled kernels not built; run `pip install -e . --no-build-isolation` first")
        return 1
    one, two, four = circuit_1d(), circuit_2d(), random_4q()
    cases = [
        ("1D circuit, 600 rows", simulate_case(one, 6 * 100), False),
        ("2D circuit, 1200 rows", simulate_case(two, 12 * 100), False),
        ("random 4-qubit, 40 gates, 1000 rows", simulate_case(four, 1000), False),
        ("1D training epoch", epoch_case("1d"), True),
        ("2D training epoch", epoch_case("2d"), True),
    ]
    print(f"{'case':40s} {'numpy ms':>10s} {'cython ms':>10s} {'speedup':>8s}")
    for name, fn, swap in cases:
        timings = []
        for k in (_pykernels, compiled):
            if swap:
                # training goes through phn.quantum, so swap the module-level binding
                quantum.kernels = k
            timings.append(best_of(lambda: fn(k), args.repeats) * 1e3)
        quantum.kernels = compiled
        print(f"{name:40s} {timings[0]:10.3f} {timings[1]:10.3f} {timings[0] / timings[1]:7.1f}x")
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
