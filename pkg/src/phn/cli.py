"""Command-line entry point: ``phn {dataset,train,sweep,fourier,eval}``.

Exit codes: 0 success, 1 usage or config error, 2 run diverged (partial
results are still written).
"""
from __future__ import annotations

import argparse
import json
import logging
import os
import sys
from dataclasses import fields, replace
from importlib import resources
from pathlib import Path

from phn.datasets import make_dataset
from phn.experiments import (TrainConfig, alpha_grid, dense_test_set, evaluate, export_predictions,
                             fourier_spectrum, run_metadata, sweep_primacy, train, write_json,
                             write_loss_csv, write_spectrum_csv, write_sweep_csv)
from phn.hybrid import PhnModel

log = logging.getLogger("phn")

RESULTS_ENV = "PHN_RESULTS_DIR"
KINDS = ("train-1d", "train-2d", "sweep", "fourier", "eval", "dataset")
MODE_ALIASES = {"full": "full", "vqc": "vqc", "mlp": "mlp", "vqc-only": "vqc", "mlp-only": "mlp"}

_TRAIN_KEYS = {f.name for f in fields(TrainConfig)}
_COMMON_KEYS = {"kind", "out_dir", "overwrite"}
ALLOWED_KEYS = {
    "train-1d": _COMMON_KEYS | _TRAIN_KEYS,
    "train-2d": _COMMON_KEYS | _TRAIN_KEYS,
    "sweep": _COMMON_KEYS | _TRAIN_KEYS | {"alpha_mantissas", "alpha_exponents", "alpha_values",
                                           "workers"},
    "fourier": _COMMON_KEYS | {"checkpoint", "grid_size", "max_degree", "branch"},
    "eval": _COMMON_KEYS | {"checkpoint", "n_test"},
    "dataset": _COMMON_KEYS | {"dataset", "n", "domain"},
}


class ConfigError(ValueError):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(1, f"{self.prog}: error: {message}\n")


def load_config(ref: str) -> dict:
    """Read a flat JSON config from a path or a shipped name ('1d', '2d.json', ...)."""
    path = Path(ref)
    if path.is_file():
        text = path.read_text()
    else:
        name = ref if ref.endswith(".json") else f"{ref}.json"
        res = resources.files("phn") / "configs" / name
        if not res.is_file():
            raise ConfigError(f"config {ref!r} not found")
        text = res.read_text()
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"cannot parse {ref}: {exc}") from exc
    if not isinstance(doc, dict):
        raise ConfigError("config must be a JSON object")
    return doc


def validate_config(doc: dict, kind: str = None) -> dict:
    kind = doc.get("kind", kind)
    if kind not in KINDS:
        raise ConfigError(f"unknown experiment kind {kind!r}")
    unknown = set(doc) - ALLOWED_KEYS[kind]
    if unknown:
        raise ConfigError(f"unknown config keys for {kind}: {sorted(unknown)}")
    return {**doc, "kind": kind}


def train_config(doc: dict, args) -> TrainConfig:
    values = {k: doc[k] for k in _TRAIN_KEYS if k in doc}
    if doc["kind"] == "train-2d":
        values.setdefault("dataset", "2d")
    for key in ("seed", "epochs"):
        if getattr(args, key, None) is not None:
            values[key] = getattr(args, key)
    if getattr(args, "mode", None):
        values["mode"] = args.mode
    if "mode" in values:
        if values["mode"] not in MODE_ALIASES:
            raise ConfigError(f"unknown mode {values['mode']!r}")
        values["mode"] = MODE_ALIASES[values["mode"]]
    try:
        return TrainConfig(**values)
    except (TypeError, ValueError) as exc:
        raise ConfigError(str(exc)) from exc


def output_dir(doc: dict, args, default_name: str) -> Path:
    if getattr(args, "out", None):
        out = Path(args.out)
    elif doc.get("out_dir"):
        out = Path(doc["out_dir"])
    else:
        out = Path(os.environ.get(RESULTS_ENV, "results")) / default_name
    overwrite = getattr(args, "overwrite", False) or doc.get("overwrite", False)
    if (out / "run.json").exists() and not overwrite:
        raise ConfigError(f"{out} already holds results; pass --overwrite")
    out.mkdir(parents=True, exist_ok=True)
    return out


def _config_from_args(args, kind):
    doc = load_config(args.config) if getattr(args, "config", None) else {}
    return validate_config(doc, kind)


def cmd_dataset(args) -> int:
    if args.n < 1:
        raise ConfigError("--n must be positive")
    try:
        data = make_dataset(args.kind, args.n, tuple(args.domain))
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc
    out = Path(args.out or f"dataset_{args.kind}.csv")
    try:
        data.to_csv(out)
    except OSError as exc:
        raise ConfigError(f"cannot write {out}: {exc}") from exc
    print(len(data))
    return 0


def cmd_train(args) -> int:
    doc = _config_from_args(args, "train-1d")
    if doc["kind"] not in ("train-1d", "train-2d"):
        raise ConfigError(f"train needs a train-1d/train-2d config, got {doc['kind']}")
    config = train_config(doc, args)
    out = output_dir(doc, args, f"train-{config.dataset}-{config.mode}")
    record = train(config)
    write_loss_csv(record, out / "loss.csv")
    (out / "checkpoint.json").write_text(record.model.to_json())
    n_grid = 1000 if config.dataset == "1d" else 10000
    export_predictions(record.model, dense_test_set(record.model, n_grid).features,
                       out / "predictions.csv")
    meta = run_metadata(config, kind=doc["kind"], wall_time=record.wall_time,
                        initial_loss=record.initial_loss, final_loss=record.final_loss,
                        final_ratio=record.final_ratio, diverged=record.diverged,
                        diverged_epoch=record.diverged_epoch)
    write_json(meta, out / "run.json")
    print(f"final loss {record.final_loss:.6g} -> {out}")
    return 2 if record.diverged else 0


def cmd_sweep(args) -> int:
    doc = _config_from_args(args, "sweep")
    if doc["kind"] != "sweep":
        raise ConfigError(f"sweep needs a sweep config, got {doc['kind']}")
    base = train_config({**doc, "kind": "train-1d"}, args)
    if "alpha_values" in doc:
        alphas = sorted(float(a) for a in doc["alpha_values"])
    else:
        alphas = alpha_grid(doc.get("alpha_mantissas", range(1, 10)),
                            doc.get("alpha_exponents", range(-7, -1)))
    out = output_dir(doc, args, "sweep")
    workers = args.workers or doc.get("workers", 1)
    points = sweep_primacy(alphas, base, workers=workers)
    write_sweep_csv(points, out / "sweep.csv")
    best = min((p for p in points if p.included), key=lambda p: p.final_loss, default=None)
    meta = run_metadata(base, kind="sweep", alpha_values=alphas,
                        combiner_lr="alpha_c", n_points=len(points),
                        best={"alpha_c": best.alpha_c, "final_loss": best.final_loss,
                              "final_ratio": best.final_ratio} if best else None)
    write_json(meta, out / "run.json")
    print(f"{len(points)} sweep points -> {out}")
    return 0


def _load_checkpoint(path) -> PhnModel:
    if not path:
        raise ConfigError("a checkpoint is required")
    try:
        return PhnModel.from_json(Path(path).read_text())
    except FileNotFoundError as exc:
        raise ConfigError(f"checkpoint {path} not found") from exc


def cmd_fourier(args) -> int:
    doc = _config_from_args(args, "fourier")
    model = _load_checkpoint(args.checkpoint or doc.get("checkpoint"))
    grid = args.grid_size or doc.get("grid_size", 64)
    branch = args.branch or doc.get("branch", "full")
    try:
        spec = fourier_spectrum(model, grid, doc.get("max_degree"), branch=branch)
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc
    out = output_dir(doc, args, "fourier")
    write_spectrum_csv(spec, out / "spectrum.csv")
    write_json(run_metadata(kind="fourier", grid_size=grid, branch=branch,
                            degree=spec.degree), out / "run.json")
    print(f"inferred degree {spec.degree}")
    return 0


def cmd_eval(args) -> int:
    doc = _config_from_args(args, "eval")
    model = _load_checkpoint(args.checkpoint or doc.get("checkpoint"))
    if "label_bounds" not in model.metadata:
        raise ConfigError("checkpoint lacks the training label scale (metadata.label_bounds)")
    n = args.n or doc.get("n_test") or (1000 if model.num_features == 1 else 10000)
    try:
        mse = evaluate(model, dense_test_set(model, n))
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc
    out = output_dir(doc, args, "eval")
    write_json(run_metadata(kind="eval", n_test=n, mse=mse,
                            checkpoint=str(args.checkpoint or doc.get("checkpoint"))),
               out / "run.json")
    print(f"mse {mse!r}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="phn", description=__doc__.splitlines()[0])
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    def common(p, config=True):
        if config:
            p.add_argument("--config", help="JSON config path or shipped name (1d, 2d, sweep)")
        p.add_argument("--out", help="output directory (default $%s/<run>)" % RESULTS_ENV)
        p.add_argument("--overwrite", action="store_true")

    p = sub.add_parser("dataset", help="write a synthetic dataset as CSV")
    p.add_argument("--kind", choices=["1d", "2d"], required=True)
    p.add_argument("--n", type=int, default=100)
    p.add_argument("--domain", type=float, nargs=2, default=[0.0, 6.283185307179586])
    p.add_argument("--out", help="CSV path")
    p.set_defaults(func=cmd_dataset)

    for name, func in (("train", cmd_train), ("sweep", cmd_sweep)):
        p = sub.add_parser(name)
        common(p)
        p.add_argument("--seed", type=int)
        p.add_argument("--epochs", type=int)
        if name == "train":
            p.add_argument("--mode", choices=sorted(MODE_ALIASES))
        else:
            p.add_argument("--workers", type=int)
        p.set_defaults(func=func)

    p = sub.add_parser("fourier", help="Fourier spectrum of a 1D checkpoint")
    common(p)
    p.add_argument("--checkpoint")
    p.add_argument("--grid-size", type=int)
    p.add_argument("--branch", choices=["full", "vqc", "mlp"])
    p.set_defaults(func=cmd_fourier)

    p = sub.add_parser("eval", help="test MSE of a checkpoint on a dense grid")
    common(p)
    p.add_argument("--checkpoint")
    p.add_argument("--n", type=int)
    p.set_defaults(func=cmd_eval)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"phn: error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
