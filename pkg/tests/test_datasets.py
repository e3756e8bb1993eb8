import csv
import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from phn.datasets import (Dataset, ground_truth_1d, ground_truth_2d, make_dataset, minmax_scale,
                          sample_grid)


def test_ground_truth_1d_values():
    assert ground_truth_1d(0.0) == 0.0
    assert abs(ground_truth_1d(math.pi)) < 1e-12
    assert abs(ground_truth_1d(math.pi / 2) - 1.0) < 1e-12


@given(x=st.floats(-50, 50))
def test_ground_truth_1d_is_odd(x):
    assert ground_truth_1d(-x) == -ground_truth_1d(x)


def test_ground_truth_2d_values():
    assert ground_truth_2d(0.0, 0.0) == 0.0
    assert abs(ground_truth_2d(math.pi / 2, 0.0) - 2.1) < 1e-12
    a = 0.37
    diag = (2 * math.sin(a) + 0.8 * math.sin(2 * a) + 0.09 * math.sin(12 * a)
            + 0.05 * math.sin(4 * a) + 0.04 * math.sin(20 * a))
    assert abs(ground_truth_2d(a, a) - diag) < 1e-12


def test_sample_grid_1d():
    g = sample_grid(1, 100, (0, 2 * math.pi))
    assert g.shape == (100, 1) and g[0, 0] == 0.0
    np.testing.assert_allclose(np.diff(g[:, 0]), 2 * math.pi / 100, atol=1e-12)
    assert g[-1, 0] < 2 * math.pi


@pytest.mark.parametrize("n,side", [(100, 10), (10000, 100)])
def test_sample_grid_2d_lattice(n, side):
    g = sample_grid(2, n)
    assert g.shape == (n, 2)
    assert len(np.unique(g[:, 0])) == side and len(np.unique(g[:, 1])) == side
    # row-major: x2 varies fastest
    assert g[1, 0] == g[0, 0] and g[1, 1] > g[0, 1]
    np.testing.assert_allclose(np.diff(np.unique(g[:, 0])), 2 * math.pi / side, atol=1e-12)


@pytest.mark.parametrize("dims,n", [(2, 99), (3, 9), (1, 0)])
def test_sample_grid_errors(dims, n):
    with pytest.raises(ValueError):
        sample_grid(dims, n)


def test_minmax_examples():
    y, bounds = minmax_scale([0, 5, 10])
    np.testing.assert_array_equal(y, [-1, 0, 1])
    assert bounds == (0, 10)
    same = np.array([-1.0, 0.25, 1.0])
    np.testing.assert_array_equal(minmax_scale(same)[0], same)
    with pytest.raises(ValueError):
        minmax_scale([2.0, 2.0])


@given(st.lists(st.floats(-1e6, 1e6), min_size=2, max_size=50, unique=True))
def test_minmax_order_preserving(raw):
    y, _ = minmax_scale(raw)
    assert y.min() == -1.0 and y.max() == 1.0
    # near-equal raw values may round to ties, so check monotonicity not strict order
    assert np.all(np.diff(y[np.argsort(raw)]) >= 0)


@pytest.mark.parametrize("kind", ["1d", "2d"])
def test_training_labels_span_exactly(kind):
    d = make_dataset(kind, 100)
    assert d.labels.min() == -1.0 and d.labels.max() == 1.0
    assert d.metadata["ground_truth"] == kind and len(d) == 100


def test_test_grid_uses_training_scale():
    train = make_dataset("2d", 100)
    test = make_dataset("2d", 10000, bounds=(train.metadata["raw_min"], train.metadata["raw_max"]))
    assert test.metadata["raw_min"] == train.metadata["raw_min"]


def test_csv_export(tmp_path):
    d = make_dataset("2d", 100)
    path = tmp_path / "d.csv"
    d.to_csv(path)
    rows = list(csv.reader(open(path)))
    assert rows[0] == ["x1", "x2", "y"] and len(rows) == 101
    back = np.array(rows[1:], dtype=float)
    np.testing.assert_array_equal(back[:, :2], d.features)
    np.testing.assert_array_equal(back[:, 2], d.labels)


def test_dataset_length_check():
    with pytest.raises(ValueError):
        Dataset(np.zeros((3, 1)), np.zeros(2))
