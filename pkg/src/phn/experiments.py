"""Training loop, primacy sweep, Fourier analyzer and result writers."""
from __future__ import annotations

import csv
import json
import logging
import math
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field, replace
from typing import Callable, Optional, Sequence, Union

import numpy as np

from phn import __version__
from phn._backend import BACKEND
from phn.datasets import Dataset, make_dataset, scaled_truth
from phn.hybrid import (PhnModel, branch_outputs, build_paper_architecture, loss_and_grad,
                        phn_forward_batch, primacy_ratio)
from phn.optim import AdamState, LrSchedule, NonFiniteGradientError, adam_step, lr_vector, scheduled_lr

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class TrainConfig:
    mode: str = "full"
    epochs: int = 1000
    lr_vqc: float = 0.01
    lr_mlp: float = 0.001
    lr_combiner: float = 0.001
    gamma: Optional[float] = None
    step_every: int = 10
    seed: int = 0
    dataset: str = "1d"
    n_train: int = 100

    def __post_init__(self):
        if self.epochs < 1:
            raise ValueError("epochs must be at least 1")
        if min(self.lr_vqc, self.lr_mlp, self.lr_combiner) < 0:
            raise ValueError("learning rates must be non-negative")
        if self.gamma is not None:
            LrSchedule({}, self.gamma, self.step_every)

    @property
    def schedule(self) -> LrSchedule:
        base = {"vqc": self.lr_vqc, "mlp": self.lr_mlp, "combiner": self.lr_combiner}
        if self.gamma is None:
            return LrSchedule(base)
        return LrSchedule(base, self.gamma, self.step_every)


@dataclass
class TrainRecord:
    config: TrainConfig
    losses: list
    ratios: Optional[list]
    lr_trace: list
    initial_loss: float
    model: PhnModel
    wall_time: float = 0.0
    diverged: bool = False
    diverged_epoch: Optional[int] = None

    @property
    def final_loss(self) -> float:
        return self.losses[-1] if self.losses else self.initial_loss

    @property
    def final_ratio(self) -> Optional[float]:
        return self.ratios[-1] if self.ratios else None


def training_data(config: TrainConfig) -> Dataset:
    return make_dataset(config.dataset, config.n_train)


def initial_model(config: TrainConfig) -> PhnModel:
    return build_paper_architecture(config.dataset, config.seed, mode=config.mode)


def train(config: TrainConfig, model: Optional[PhnModel] = None,
          data: Optional[Dataset] = None) -> TrainRecord:
    """Full-batch Adam on the squared error; losses are logged after each update."""
    data = training_data(config) if data is None else data
    model = initial_model(config) if model is None else replace(model, mode=config.mode)
    model = replace(model, metadata={
        **model.metadata, "experiment": config.dataset, "domain": data.metadata["domain"],
        "label_bounds": [data.metadata["raw_min"], data.metadata["raw_max"]]})
    X, Y = data.features, data.labels
    track_ratio = model.mode == "full" and model.num_outputs == 1
    groups = model.parameter_groups()
    params = model.flat_parameters()
    state = AdamState.zeros(len(params))
    loss, grad = loss_and_grad(model, X, Y)
    record = TrainRecord(config, [], [] if track_ratio else None, [], loss, model)
    if not math.isfinite(loss):
        record.diverged, record.diverged_epoch = True, 0
        return record
    start = time.perf_counter()
    for epoch in range(config.epochs):
        rates = scheduled_lr(config.schedule, epoch)
        try:
            params, state = adam_step(state, params, grad, lr_vector(groups, rates))
        except NonFiniteGradientError:
            record.diverged, record.diverged_epoch = True, epoch
            break
        model = model.with_flat_parameters(params)
        loss, grad = loss_and_grad(model, X, Y)
        if not math.isfinite(loss):
            record.diverged, record.diverged_epoch = True, epoch
            break
        record.losses.append(loss)
        record.lr_trace.append(rates)
        record.model = model
        if track_ratio:
            record.ratios.append(primacy_ratio(model))
    record.wall_time = time.perf_counter() - start
    if record.diverged:
        log.warning("run diverged at epoch %d (seed %d)", record.diverged_epoch, config.seed)
    return record


# -- primacy sweep -----------------------------------------------------------

def alpha_grid(mantissas: Sequence[int] = range(1, 10), exponents: Sequence[int] = range(-7, -1)):
    """{m * 10**e}; the defaults give the 54-point grid 1e-7 .. 9e-2."""
    return sorted(float(f"{m}e{e}") for e in exponents for m in mantissas)


@dataclass
class SweepPoint:
    alpha_c: float
    final_loss: float
    final_ratio: float
    initial_loss: float
    diverged: bool

    @property
    def included(self) -> bool:
        """Whether the point belongs in a loss-vs-ratio comparison."""
        return (not self.diverged) and math.isfinite(self.final_loss) \
            and self.final_loss < self.initial_loss


def sweep_config(base: TrainConfig, alpha_c: float) -> TrainConfig:
    return replace(base, mode="full", lr_mlp=alpha_c, lr_combiner=alpha_c)


def _sweep_one(args) -> SweepPoint:
    base, alpha = args
    rec = train(sweep_config(base, alpha))
    ratio = rec.final_ratio if rec.final_ratio is not None else float("nan")
    return SweepPoint(alpha, rec.final_loss, ratio, rec.initial_loss, rec.diverged)


def sweep_primacy(alpha_c_values: Sequence[float], base: TrainConfig,
                  workers: int = 1) -> list:
    """One full-mode run per MLP learning rate, all from the same initial model.

    The combiner trains at the MLP rate; the circuit keeps ``base.lr_vqc``.
    """
    jobs = [(base, float(a)) for a in sorted(alpha_c_values)]
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            return list(pool.map(_sweep_one, jobs))
    return [_sweep_one(job) for job in jobs]


# -- Fourier analysis --------------------------------------------------------

@dataclass
class FourierSpectrum:
    ks: np.ndarray
    coefficients: np.ndarray
    grid_size: int
    degree: int

    def coefficient(self, k: int) -> complex:
        return complex(self.coefficients[int(k) + int(self.ks[-1])])


def model_curve(model: PhnModel, branch: str = "full") -> Callable:
    """1D callable x -> output of the whole model or one raw branch."""
    if model.num_features != 1:
        raise ValueError("Fourier analysis supports single-feature models only")
    if branch not in ("full", "vqc", "mlp"):
        raise ValueError(f"unknown branch {branch!r}")

    def curve(x):
        X = np.asarray(x, dtype=np.float64)[:, None]
        if branch == "full":
            return phn_forward_batch(model, X)[:, 0]
        q, c = branch_outputs(replace(model, mode="full"), X)
        return (q if branch == "vqc" else c)[:, 0]

    return curve


def fourier_spectrum(f: Union[Callable, PhnModel], grid_size: int = 64,
                     max_degree: Optional[int] = None, branch: str = "full",
                     threshold: float = 1e-8) -> FourierSpectrum:
    """Coefficients c_k = (1/n) sum_j f(x_j) exp(-i k x_j) on n points over [0, 2pi)."""
    if grid_size < 4 or grid_size & (grid_size - 1):
        raise ValueError("grid_size must be a power of two >= 4")
    max_degree = grid_size // 4 if max_degree is None else max_degree
    if grid_size < 4 * max_degree:
        raise ValueError("grid_size must be at least 4 * max_degree")
    if isinstance(f, PhnModel):
        f = model_curve(f, branch)
    x = 2 * np.pi * np.arange(grid_size) / grid_size
    values = np.asarray(f(x), dtype=np.float64).reshape(grid_size)
    spec = np.fft.fft(values) / grid_size
    ks = np.arange(-max_degree, max_degree + 1)
    coeffs = spec[ks % grid_size]
    big = np.abs(ks[np.abs(coeffs) > threshold])
    return FourierSpectrum(ks, coeffs, grid_size, int(big.max()) if big.size else 0)


# -- evaluation and export ---------------------------------------------------

def evaluate(model: PhnModel, data: Dataset) -> float:
    if len(data) == 0:
        raise ValueError("cannot evaluate on an empty dataset")
    pred = phn_forward_batch(model, data.features)
    y = np.asarray(data.labels, dtype=np.float64).reshape(pred.shape)
    return float(np.mean(np.sum((pred - y) ** 2, axis=1)))


def dense_test_set(model: PhnModel, n: int) -> Dataset:
    """Dense grid labelled on the training set's label scale."""
    meta = model.metadata
    return make_dataset(meta["experiment"], n, meta.get("domain", (0.0, 2 * np.pi)),
                        bounds=tuple(meta["label_bounds"]))


def export_predictions(model: PhnModel, grid, path, truth: Optional[str] = None,
                       bounds=None) -> int:
    """Write ``x1[,x2],prediction,ground_truth`` rows; returns the row count."""
    grid = np.atleast_2d(np.asarray(grid, dtype=np.float64))
    if grid.shape[1] != model.num_features:
        grid = grid.T
    pred = phn_forward_batch(model, grid)[:, 0]
    truth = truth or model.metadata.get("experiment")
    bounds = bounds or model.metadata.get("label_bounds")
    gt = scaled_truth(truth, grid, tuple(bounds)) if truth and bounds else np.full(len(grid), np.nan)
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow([f"x{i + 1}" for i in range(grid.shape[1])] + ["prediction", "ground_truth"])
        for x, p, y in zip(grid, pred, gt):
            writer.writerow([f"{v:.17g}" for v in x] + [f"{p:.17g}", f"{y:.17g}"])
    return len(grid)


def write_loss_csv(record: TrainRecord, path) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["epoch", "loss", "ratio", "lr_vqc", "lr_mlp"])
        for e, loss in enumerate(record.losses):
            ratio = record.ratios[e] if record.ratios is not None else ""
            rates = record.lr_trace[e]
            writer.writerow([e + 1, repr(loss), "" if ratio == "" else repr(ratio),
                             repr(rates["vqc"]), repr(rates["mlp"])])


def write_sweep_csv(points: Sequence[SweepPoint], path) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["alpha_c", "final_loss", "final_ratio", "diverged"])
        for p in points:
            writer.writerow([repr(p.alpha_c), repr(p.final_loss), repr(p.final_ratio),
                             int(p.diverged)])


def write_spectrum_csv(spec: FourierSpectrum, path) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["k", "re", "im", "abs"])
        for k, c in zip(spec.ks, spec.coefficients):
            writer.writerow([int(k), repr(float(c.real)), repr(float(c.imag)), repr(float(abs(c)))])


def run_metadata(config: Optional[TrainConfig] = None, **extra) -> dict:
    meta = {"code_version": __version__, "kernel_backend": BACKEND,
            "optimizer": "adam(beta1=0.9, beta2=0.999, eps=1e-8)"}
    if config is not None:
        meta["config"] = asdict(config)
        meta["seed"] = config.seed
    meta.update(extra)
    return meta


def write_json(obj, path) -> None:
    with open(path, "w") as fh:
        json.dump(obj, fh, indent=2, sort_keys=True)
        fh.write("\n")
