"""Synthetic periodic ground truths with high-frequency protrusions."""
from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from typing import Optional, Sequence, Tuple

import numpy as np

DEFAULT_DOMAIN = (0.0, 2 * math.pi)


def ground_truth_1d(x):
    return np.sin(x) + 0.05 * np.sin(8 * x) + 0.03 * np.sin(16 * x) + 0.01 * np.sin(32 * x)


def ground_truth_2d(x1, x2):
    return (np.sin(x1) + np.sin(x2) + 0.8 * np.sin(x1 + x2) + 0.3 * np.sin(x1 - x2)
            + 0.09 * np.sin(8 * x1 + 4 * x2) + 0.05 * np.sin(16 * x1 - 12 * x2)
            + 0.04 * np.sin(12 * x1 + 8 * x2))


GROUND_TRUTHS = {"1d": (1, lambda X: ground_truth_1d(X[:, 0])),
                 "2d": (2, lambda X: ground_truth_2d(X[:, 0], X[:, 1]))}


def sample_grid(dims: int, n_total: int, domain: Sequence[float] = DEFAULT_DOMAIN) -> np.ndarray:
    """Equispaced half-open grid; 2D grids are row-major over (x1, x2).

    Returns an array of shape (n_total, dims).
    """
    if n_total < 1:
        raise ValueError("n_total must be positive")
    lo, hi = float(domain[0]), float(domain[1])
    if dims == 1:
        return (lo + np.arange(n_total) * (hi - lo) / n_total)[:, None]
    if dims == 2:
        side = math.isqrt(n_total)
        if side * side != n_total:
            raise ValueError(f"2D grids need a perfect-square point count, got {n_total}")
        axis = lo + np.arange(side) * (hi - lo) / side
        x1, x2 = np.meshgrid(axis, axis, indexing="ij")
        return np.column_stack([x1.ravel(), x2.ravel()])
    raise ValueError("dims must be 1 or 2")


def minmax_scale(raw, bounds: Optional[Tuple[float, float]] = None):
    """Map labels affinely onto [-1, 1].

    ``bounds`` reuses another set's (min, max), e.g. to put a test grid on the
    training scale. Returns ``(scaled, (min, max))``.
    """
    raw = np.asarray(raw, dtype=np.float64)
    lo, hi = (float(raw.min()), float(raw.max())) if bounds is None else bounds
    if not hi > lo:
        raise ValueError("cannot scale constant labels")
    scaled = 2.0 * (raw - lo) / (hi - lo) - 1.0
    if bounds is None:
        # pin the extremes exactly against rounding
        scaled[raw == lo] = -1.0
        scaled[raw == hi] = 1.0
    return scaled, (lo, hi)


@dataclass
class Dataset:
    features: np.ndarray
    labels: np.ndarray
    metadata: dict = field(default_factory=dict)

    def __post_init__(self):
        if len(self.features) != len(self.labels):
            raise ValueError("features and labels must have equal length")

    def __len__(self):
        return len(self.labels)

    def to_csv(self, path) -> None:
        dims = self.features.shape[1]
        with open(path, "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow([f"x{i + 1}" for i in range(dims)] + ["y"])
            for x, y in zip(self.features, self.labels):
                writer.writerow([f"{v:.17g}" for v in x] + [f"{y:.17g}"])


def make_dataset(kind: str, n: int = 100, domain: Sequence[float] = DEFAULT_DOMAIN,
                 bounds: Optional[Tuple[float, float]] = None) -> Dataset:
    if kind not in GROUND_TRUTHS:
        raise ValueError(f"unknown dataset kind {kind!r}")
    dims, fn = GROUND_TRUTHS[kind]
    X = sample_grid(dims, n, domain)
    y, (lo, hi) = minmax_scale(fn(X), bounds)
    meta = {"ground_truth": kind, "domain": [float(domain[0]), float(domain[1])],
            "n": n, "raw_min": lo, "raw_max": hi}
    return Dataset(X, y, meta)


def scaled_truth(kind: str, X, bounds: Tuple[float, float]) -> np.ndarray:
    """Ground truth at ``X`` on a given (min, max) label scale."""
    _, fn = GROUND_TRUTHS[kind]
    return minmax_scale(fn(np.atleast_2d(X)), bounds)[0]
