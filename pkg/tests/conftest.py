import importlib
import os
import sys

import numpy as np
import pytest
from hypothesis import settings

sys.path.insert(0, os.path.dirname(__file__))

settings.register_profile("default", deadline=None, max_examples=100)
settings.load_profile("default")

from phn.quantum import Feature, Fixed, Gate, Parameter, VqcModel  # noqa: E402


@pytest.fixture(params=["python", "cython"])
def kernels(request):
    """Each kernel implementation in turn; skips the compiled one if not built."""
    if request.param == "python":
        return importlib.import_module("phn._pykernels")
    try:
        return importlib.import_module("phn._ckernels")
    except ImportError:
        pytest.skip("compiled kernels not built")


def random_circuit(rng, max_qubits=3, max_gates=20, n_features=2):
    """Random VqcModel; parameter and feature indices are renumbered to be contiguous."""
    n = int(rng.integers(1, max_qubits + 1))
    gates, n_par = [], 0
    feats_used = set()
    for _ in range(int(rng.integers(1, max_gates + 1))):
        kind = rng.choice(["RX", "RY", "RZ", "H", "CNOT"] if n > 1 else ["RX", "RY", "RZ", "H"])
        t = int(rng.integers(n))
        if kind == "CNOT":
            c = int(rng.choice([q for q in range(n) if q != t]))
            gates.append(Gate("CNOT", t, control=c))
        elif kind == "H":
            gates.append(Gate("H", t))
        else:
            r = rng.random()
            if r < 0.5:
                src = Parameter(n_par)
                n_par += 1
            elif r < 0.8:
                f = int(rng.integers(n_features))
                feats_used.add(f)
                src = Feature(f)
            else:
                src = Fixed(float(rng.uniform(-np.pi, np.pi)))
            gates.append(Gate(str(kind), t, source=src))
    remap = {f: i for i, f in enumerate(sorted(feats_used))}
    gates = [Gate(g.kind, g.target, g.control, Feature(remap[g.source.index]))
             if isinstance(g.source, Feature) else g for g in gates]
    n_obs = int(rng.integers(1, 3))
    obs = []
    for _ in range(n_obs):
        f = ["Z" if rng.random() < 0.5 else "I" for _ in range(n)]
        f[int(rng.integers(n))] = "Z"
        obs.append("".join(f))
    model = VqcModel(n, gates, obs)
    params = rng.uniform(-np.pi, np.pi, model.num_parameters)
    features = rng.uniform(0, 2 * np.pi, model.num_features)
    return model, params, features


def pytest_terminal_summary(terminalreporter):
    mod = sys.modules.get("test_acceptance")
    if mod is not None and mod.RESULTS:
        terminalreporter.section("acceptance criteria")
        for line in sorted(mod.RESULTS):
            terminalreporter.write_line(line)
