"""``brann`` command line: prepare, train, sweep, evaluate, predict, rank, classify.

Every command writes into a run directory ``<out>/<command>-<hash>`` where the
hash covers the resolved configuration and the contents of every input file.
Rerunning an identical command refuses to overwrite unless ``--force`` is
given. Files are assembled in a temporary directory and moved into place only
when the command succeeds, so a failed run leaves nothing behind.

Run-config file (``--config``), all keys optional::

    features = prepared/features.csv   # or: manifest = data/manifest.txt
    schema = nasa                      # strict column check when set
    targets = vb_mm                    # target columns when no schema is set

    [split]
    train_fraction = 0.7
    mode = random                      # or by_case

    [network]
    hidden = 32                        # comma list for several hidden layers
    transfer = tansig

    [training]
    algorithm = trainbr                # any TrainingConfig field may appear here
    max_epochs = 1000

    [run]
    seed = 0
    repeats = 1

    [sweep]
    preset = transfer                  # or explicit axes:
    hidden = 8,16,32                   # hidden / transfer / train_fraction / algorithm

Relative paths are resolved against the config file's directory. Command-line
flags override the file.

Exit codes: 0 success, 2 configuration error, 3 data error, 4 training abort.
"""

from __future__ import annotations

import argparse
import csv
import hashlib
import io
import itertools
import json
import logging
import os
import shutil
import statistics
import sys
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, fields, replace
from pathlib import Path
from typing import Sequence

import numpy as np

from . import kvfile, metrics
from .classify import ConditionLabel, classification_report, classify_condition, resolve_threshold
from .data import (DataError, Dataset, SchemaError, SplitSpec, collapse_targets, dataset_to_csv,
                   get_schema, load_feature_table, load_features, qualify_cases, split, union_features)
from .experiment import Model, Preprocessor, fit, imputation_message
from .features import extract_dataset
from .mrmr import RANKING_HEADER, rank_features, ranking_rows
from .network import ShapeError, TransferKind, load_checkpoint, save_checkpoint
from .trainers import AlgorithmKind, StoppingRule, TrainingAborted, TrainingConfig

log = logging.getLogger("brann")

EXIT_OK, EXIT_CONFIG, EXIT_DATA, EXIT_ABORT = 0, 2, 3, 4

SWEEP_PRESETS = {
    "hidden": {"hidden": [(8,), (16,), (32,), (64,)]},
    "transfer": {"transfer": [t.value for t in TransferKind]},
    "ratio": {"train_fraction": [round(0.1 * i, 1) for i in range(1, 10)]},
    "algorithm": {"algorithm": [a.value for a in AlgorithmKind]},
}
SWEEP_AXES = ("hidden", "transfer", "train_fraction", "algorithm")


class ConfigError(Exception):
    pass


class DataFailure(Exception):
    pass


class RunExists(ConfigError):
    pass


# ----------------------------------------------------------------- run config

@dataclass(frozen=True)
class RunConfig:
    features: str | None = None
    manifest: str | None = None
    schema: str | None = None
    targets: tuple[str, ...] = ("vb_mm",)
    split: SplitSpec = field(default_factory=SplitSpec)
    hidden: tuple[int, ...] = (32,)
    transfer: str = "tansig"
    training: TrainingConfig = field(default_factory=TrainingConfig)
    seed: int = 0
    repeats: int = 1

    def validate(self) -> "RunConfig":
        if self.features is None and self.manifest is None:
            raise ConfigError("no input: set 'features' or 'manifest' (or pass a features CSV)")
        for p in (self.features, self.manifest):
            if p is not None and not Path(p).is_file():
                raise ConfigError(f"input file not found: {p}")
        if self.schema is not None:
            try:
                get_schema(self.schema)
            except SchemaError as exc:
                raise ConfigError(str(exc)) from None
        if self.repeats < 1:
            raise ConfigError("repeats must be >= 1")
        if not self.hidden or any(h < 1 for h in self.hidden):
            raise ConfigError("hidden sizes must be positive")
        try:
            TransferKind(self.transfer)
        except ValueError:
            raise ConfigError(f"unknown transfer function {self.transfer!r}") from None
        return self

    def as_dict(self) -> dict:
        return {
            "features": self.features, "manifest": self.manifest, "schema": self.schema,
            "targets": list(self.targets),
            "split": {"train_fraction": self.split.train_fraction, "mode": self.split.mode},
            "hidden": list(self.hidden), "transfer": self.transfer,
            "training": {k: (v if not isinstance(v, dict) else dict(sorted(v.items())))
                         for k, v in self.training.as_dict().items() if k != "seed"},
            "seed": self.seed, "repeats": self.repeats,
        }


def _int_list(text: str) -> tuple[int, ...]:
    return tuple(int(v) for v in text.replace("-", ",").split(",") if v.strip())


_TRAINING_FIELDS = {f.name: f for f in fields(TrainingConfig)}
_STOP_FIELDS = {f.name: f for f in fields(StoppingRule)}


def _coerce(value: str, like):
    if isinstance(like, bool):
        return value.lower() in ("1", "true", "yes", "on")
    if isinstance(like, int):
        return int(value)
    if isinstance(like, float):
        return float(value)
    return value


def load_run_config(path: str | None) -> tuple[RunConfig, dict]:
    """Parse a run-config file; returns the config and the raw ``[sweep]`` section."""
    if path is None:
        return RunConfig(), {}
    path = Path(path)
    try:
        sections = kvfile.load(path)
    except kvfile.KVError as exc:
        raise ConfigError(str(exc)) from None
    base = path.parent
    cfg = RunConfig()
    split_kw: dict = {}
    train_kw: dict = {}
    stop_kw: dict = {}
    sweep: dict = {}
    defaults_t = TrainingConfig()
    for sec in sections:
        for key, (value, line) in sec.entries.items():
            where = f"{path}:{line}"
            try:
                if sec.name == "":
                    if key in ("features", "manifest"):
                        cfg = replace(cfg, **{key: str(base / value)})
                    elif key == "schema":
                        cfg = replace(cfg, schema=value)
                    elif key == "targets":
                        cfg = replace(cfg, targets=tuple(v.strip() for v in value.split(",")))
                    else:
                        raise ConfigError(f"{where}: unknown key {key!r}")
                elif sec.name == "split":
                    if key not in ("train_fraction", "mode"):
                        raise ConfigError(f"{where}: unknown split key {key!r}")
                    split_kw[key] = float(value) if key == "train_fraction" else value
                elif sec.name == "network":
                    if key == "hidden":
                        cfg = replace(cfg, hidden=_int_list(value))
                    elif key == "transfer":
                        cfg = replace(cfg, transfer=value)
                    else:
                        raise ConfigError(f"{where}: unknown network key {key!r}")
                elif sec.name == "training":
                    if key in _STOP_FIELDS:
                        stop_kw[key] = _coerce(value, getattr(StoppingRule(), key))
                    elif key in _TRAINING_FIELDS and key not in ("stop", "seed"):
                        like = getattr(defaults_t, key)
                        train_kw[key] = value if key == "algorithm" else _coerce(value, like)
                    else:
                        raise ConfigError(f"{where}: unknown training key {key!r}")
                elif sec.name == "run":
                    if key not in ("seed", "repeats"):
                        raise ConfigError(f"{where}: unknown run key {key!r}")
                    cfg = replace(cfg, **{key: int(value)})
                elif sec.name == "sweep":
                    if key != "preset" and key not in SWEEP_AXES:
                        raise ConfigError(f"{where}: unknown sweep key {key!r}")
                    sweep[key] = value
                else:
                    raise ConfigError(f"{path}:{sec.line}: unknown section [{sec.name}]")
            except ValueError as exc:
                raise ConfigError(f"{where}: {exc}") from None
    try:
        if split_kw:
            cfg = replace(cfg, split=SplitSpec(**split_kw))
        if train_kw or stop_kw:
            cfg = replace(cfg, training=TrainingConfig(stop=StoppingRule(**stop_kw), **train_kw))
    except ValueError as exc:
        raise ConfigError(f"{path}: {exc}") from None
    return cfg, sweep


def _apply_overrides(cfg: RunConfig, args) -> RunConfig:
    try:
        if getattr(args, "features", None):
            cfg = replace(cfg, features=args.features, manifest=None)
        if getattr(args, "schema", None):
            cfg = replace(cfg, schema=args.schema)
        if args.seed is not None:
            cfg = replace(cfg, seed=args.seed)
        if args.repeats is not None:
            cfg = replace(cfg, repeats=args.repeats)
        if getattr(args, "hidden", None):
            cfg = replace(cfg, hidden=_int_list(args.hidden))
        if getattr(args, "transfer", None):
            cfg = replace(cfg, transfer=args.transfer)
        split_kw = {}
        if getattr(args, "train_fraction", None) is not None:
            split_kw["train_fraction"] = args.train_fraction
        if getattr(args, "split_mode", None):
            split_kw["mode"] = args.split_mode
        if split_kw:
            cfg = replace(cfg, split=replace(cfg.split, **split_kw))
        train_kw = {}
        if getattr(args, "algorithm", None):
            train_kw["algorithm"] = args.algorithm
        if getattr(args, "max_epochs", None):
            train_kw["max_epochs"] = args.max_epochs
        if train_kw:
            cfg = replace(cfg, training=replace(cfg.training, **train_kw))
    except ValueError as exc:
        raise ConfigError(str(exc)) from None
    return cfg.validate()


# ------------------------------------------------------------- run directories

def _sha256(path) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 16), b""):
            h.update(chunk)
    return h.hexdigest()


def config_hash(command: str, payload: dict, inputs: Sequence = ()) -> str:
    doc = {"command": command, "config": payload,
           "inputs": [_sha256(p) for p in inputs]}
    text = json.dumps(doc, sort_keys=True, separators=(",", ":"), default=str)
    return hashlib.sha256(text.encode()).hexdigest()[:12]


class RunDir:
    """Temporary build directory that is renamed to its final name on success."""

    def __init__(self, out, command: str, digest: str, force: bool):
        self.final = Path(out) / f"{command}-{digest}"
        if self.final.exists() and not force:
            raise RunExists(f"run directory {self.final} exists; pass --force to overwrite")
        self.final.parent.mkdir(parents=True, exist_ok=True)
        self.path = self.final.parent / f".{self.final.name}.tmp-{os.getpid()}"
        shutil.rmtree(self.path, ignore_errors=True)
        self.path.mkdir()

    def __enter__(self) -> Path:
        return self.path

    def __exit__(self, exc_type, exc, tb):
        if exc_type is not None:
            shutil.rmtree(self.path, ignore_errors=True)
            return False
        if self.final.exists():
            shutil.rmtree(self.final)
        os.replace(self.path, self.final)
        return False


def _write_rows(path, header, rows) -> None:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for row in rows:
        w.writerow([repr(float(v)) if isinstance(v, (float, np.floating)) else v for v in row])
    Path(path).write_text(buf.getvalue())


# ------------------------------------------------------------------ data input

def _data_error(exc: Exception) -> DataFailure:
    return DataFailure(str(exc))


def load_dataset(cfg: RunConfig) -> Dataset:
    try:
        if cfg.features is not None:
            if cfg.schema is not None:
                return load_features(cfg.features, get_schema(cfg.schema))
            return load_feature_table(cfg.features, cfg.targets)
        ds, report = extract_dataset(cfg.manifest)
        log.info("extracted %d rows, dropped %d unmeasured cuts", report.kept, report.dropped)
        return ds
    except (ValueError, OSError) as exc:
        raise _data_error(exc) from None


def load_model(path) -> tuple[Model, dict]:
    path = Path(path)
    if path.is_dir():
        path = path / "checkpoint_r0.txt"
    try:
        net, header = load_checkpoint(path)
        prep = Preprocessor.from_json(header["preprocessor"])
    except (OSError, KeyError, ValueError) as exc:
        raise DataFailure(f"cannot load model from {path}: {exc}") from None
    return Model(net, prep), header


def _features_for_model(path, model: Model, need_targets: bool) -> Dataset:
    try:
        ds = load_feature_table(path, model.prep.target_names)
    except (ValueError, OSError) as exc:
        raise _data_error(exc) from None
    if need_targets and ds.target_names != model.prep.target_names:
        raise DataFailure(f"{path}: expected target columns {', '.join(model.prep.target_names)}")
    return ds


# ------------------------------------------------------------------- training

@dataclass
class RepeatResult:
    report: list[tuple]
    trace_csv: str
    stop_reason: str
    epochs: int


def _fit_repeat(ds: Dataset, cfg: RunConfig, r: int, run: Path | None, plots: bool,
                tag: str = "") -> RepeatResult:
    seed = cfg.seed + r
    spec = replace(cfg.split, seed=seed)
    try:
        parts = split(ds, spec)
    except (ValueError, DataError) as exc:
        raise DataFailure(str(exc)) from None
    tcfg = replace(cfg.training, seed=seed)
    res = fit(parts.train, parts.test, cfg.hidden, cfg.transfer, tcfg, seed)
    if run is not None:
        sfx = f"{tag}r{r}"
        res.trace.write(run / f"trace_{sfx}.csv", tcfg.as_dict())
        (run / f"split_{sfx}.txt").write_text(parts.report())
        (run / f"metrics_{sfx}.csv").write_text(metrics.format_report(res.report))
        save_checkpoint(res.model.net, run / f"checkpoint_{sfx}.txt", seed,
                        {"algorithm": tcfg.algorithm.value, "preprocessor": res.model.prep.to_json()})
        if plots:
            from . import plotting

            plotting.plot_trace(res.trace, run / f"trace_{sfx}.png", f"{tcfg.algorithm.value}, seed {seed}")
            if res.test_pred is not None:
                plotting.plot_regression(parts.test.Y, res.test_pred, run / f"regression_{sfx}.png",
                                         title="test split")
    return RepeatResult(res.report, res.trace.to_csv(), res.trace.stop_reason.value, len(res.trace))


def median_report(reports: Sequence[list[tuple]]) -> list[tuple]:
    """Element-wise median of metric rows over repeats (rows matched by split and target)."""
    out = []
    for rows in zip(*reports):
        split_name, target = rows[0][0], rows[0][1]
        med = [statistics.median(float(r[i]) for r in rows) for i in (2, 3, 4)]
        out.append((split_name, target, *med, rows[0][5]))
    return out


def _metric(report, split_name: str, name: str) -> float:
    idx = metrics.REPORT_HEADER.index(name)
    for row in report:
        if row[0] == split_name and row[1] == "all":
            return float(row[idx])
    return float("nan")


# ------------------------------------------------------------------- commands

def cmd_synth(args) -> int:
    from .synthetic import synthetic_cuts, write_manifest

    try:
        schema = get_schema(args.schema)
    except SchemaError as exc:
        raise ConfigError(str(exc)) from None
    target = Path(args.directory)
    if (target / "manifest.txt").exists() and not args.force:
        raise RunExists(f"{target / 'manifest.txt'} exists; pass --force to overwrite")
    cuts = synthetic_cuts(schema, n_cases=args.cases, n_cuts=args.cuts, seed=args.seed or 0)
    print(write_manifest(target, schema, cuts))
    return EXIT_OK


def cmd_prepare(args) -> int:
    manifests = [Path(m) for m in args.manifests]
    for m in manifests:
        if not m.is_file():
            raise ConfigError(f"manifest not found: {m}")
    payload = {"manifests": [m.name for m in manifests], "collapse": args.collapse}
    digest = config_hash("prepare", payload, manifests)
    with RunDir(args.out, "prepare", digest, args.force) as run:
        datasets, lines = [], []
        for m in manifests:
            try:
                ds, report = extract_dataset(m)
            except (ValueError, OSError) as exc:
                raise _data_error(exc) from None
            lines.append(f"[manifest {len(lines) + 1}: {m.name}]\n{report.text()}")
            datasets.append(ds)
        if len(datasets) > 1:
            try:
                collapsed = [qualify_cases(collapse_targets(d, how=args.collapse), f"m{i + 1}")
                             for i, d in enumerate(datasets)]
                ds = union_features(collapsed)
            except (SchemaError, DataError) as exc:
                raise DataFailure(str(exc)) from None
        else:
            ds = datasets[0]
        (run / "features.csv").write_text(dataset_to_csv(ds))
        (run / "extraction_report.txt").write_text("\n".join(lines))
    log.info("%d rows, %d feature columns", len(ds), len(ds.feature_names))
    print(run_path_message(args.out, "prepare", digest))
    return EXIT_OK


def run_path_message(out, command, digest) -> str:
    return str(Path(out) / f"{command}-{digest}")


def _inputs(cfg: RunConfig) -> list[str]:
    return [p for p in (cfg.features, cfg.manifest) if p]


def _hashed(cfg: RunConfig) -> dict:
    # input files enter the hash by content, not by path
    return {k: v for k, v in cfg.as_dict().items() if k not in ("features", "manifest")}


def cmd_train(args) -> int:
    base, _ = load_run_config(args.config)
    cfg = _apply_overrides(base, args)
    ds = load_dataset(cfg)
    digest = config_hash("train", _hashed(cfg), _inputs(cfg))
    with RunDir(args.out, "train", digest, args.force) as run:
        (run / "config.json").write_text(json.dumps(cfg.as_dict(), indent=2, sort_keys=True) + "\n")
        results = []
        for r in range(cfg.repeats):
            results.append(_fit_repeat(ds, cfg, r, run, not args.no_plots))
            log.info("repeat %d: %s after %d epochs, test rmse %.6g", r, results[-1].stop_reason,
                     results[-1].epochs, _metric(results[-1].report, "test", "rmse"))
        (run / "metrics.csv").write_text(metrics.format_report(median_report([x.report for x in results])))
    print(run_path_message(args.out, "train", digest))
    return EXIT_OK


def _sweep_grid(cfg: RunConfig, sweep_cfg: dict, preset: str | None) -> list[dict]:
    axes: dict[str, list] = {}
    preset = preset or sweep_cfg.get("preset")
    if preset:
        if preset not in SWEEP_PRESETS:
            raise ConfigError(f"unknown sweep preset {preset!r}; known: {', '.join(SWEEP_PRESETS)}")
        axes.update(SWEEP_PRESETS[preset])
    try:
        for key in SWEEP_AXES:
            if key in sweep_cfg:
                items = [v.strip() for v in sweep_cfg[key].split(",") if v.strip()]
                if key == "hidden":
                    axes[key] = [_int_list(v) for v in items]
                elif key == "train_fraction":
                    axes[key] = [float(v) for v in items]
                else:
                    axes[key] = items
    except ValueError as exc:
        raise ConfigError(f"sweep: {exc}") from None
    if not axes or any(not v for v in axes.values()):
        raise ConfigError("empty sweep grid: give --preset or [sweep] axes")
    names = [k for k in SWEEP_AXES if k in axes]
    return [dict(zip(names, combo)) for combo in itertools.product(*(axes[n] for n in names))]


def _point_config(cfg: RunConfig, point: dict) -> RunConfig:
    try:
        if "hidden" in point:
            cfg = replace(cfg, hidden=tuple(point["hidden"]))
        if "transfer" in point:
            cfg = replace(cfg, transfer=point["transfer"])
        if "train_fraction" in point:
            cfg = replace(cfg, split=replace(cfg.split, train_fraction=point["train_fraction"]))
        if "algorithm" in point:
            cfg = replace(cfg, training=replace(cfg.training, algorithm=point["algorithm"]))
    except ValueError as exc:
        raise ConfigError(str(exc)) from None
    return cfg.validate()


def _sweep_job(job) -> tuple[str, list[tuple] | None, str]:
    """Run every repeat of one grid point; returns (status, median report, message)."""
    index, ds, cfg, run, plots = job
    tag = f"p{index:02d}_"
    try:
        results = [_fit_repeat(ds, cfg, r, run, plots, tag) for r in range(cfg.repeats)]
    except TrainingAborted as exc:
        return "aborted", None, f"point {index}: {exc}"
    return "ok", median_report([x.report for x in results]), ""


SWEEP_HEADER = ("point", "hidden", "transfer", "train_fraction", "algorithm", "repeats", "status",
                "train_mae", "train_rmse", "train_r2", "test_mae", "test_rmse", "test_r2")


def cmd_sweep(args) -> int:
    base, sweep_cfg = load_run_config(args.config)
    cfg = _apply_overrides(base, args)
    grid = _sweep_grid(cfg, sweep_cfg, args.preset)
    configs = [_point_config(cfg, p) for p in grid]
    ds = load_dataset(cfg)
    payload = {"base": _hashed(cfg), "grid": [{k: v for k, v in sorted(p.items())} for p in grid]}
    digest = config_hash("sweep", payload, _inputs(cfg))
    plots = not args.no_plots
    with RunDir(args.out, "sweep", digest, args.force) as run:
        (run / "config.json").write_text(json.dumps(payload, indent=2, sort_keys=True, default=list) + "\n")
        jobs = [(i, ds, c, run, plots) for i, c in enumerate(configs)]
        if args.jobs > 1:
            with ProcessPoolExecutor(max_workers=args.jobs) as pool:
                outcomes = list(pool.map(_sweep_job, jobs))
        else:
            outcomes = [_sweep_job(j) for j in jobs]
        rows = []
        for (i, c), (status, report, msg) in zip(enumerate(configs), outcomes):
            if msg:
                log.error(msg)
            vals = [_metric(report, s, m) if report else float("nan")
                    for s in ("train", "test") for m in ("mae", "rmse", "r2")]
            rows.append((i, "-".join(map(str, c.hidden)), c.transfer, c.split.train_fraction,
                         c.training.algorithm.value, c.repeats, status, *vals))
        _write_rows(run / "comparison.csv", SWEEP_HEADER, rows)
        if plots:
            from . import plotting

            varying = [k for k in SWEEP_AXES if len({str(p.get(k)) for p in grid}) > 1] or list(grid[0])
            labels = [" ".join(str(p[k]) if k != "hidden" else "-".join(map(str, p[k])) for k in varying)
                      for p in grid]
            plotting.plot_sweep(labels, [r[8] for r in rows], [r[11] for r in rows],
                                run / "comparison_rmse.png", "median rmse", ", ".join(varying))
    print(run_path_message(args.out, "sweep", digest))
    return EXIT_ABORT if any(r[6] != "ok" for r in rows) else EXIT_OK


def _predict(model: Model, ds: Dataset, run: Path) -> np.ndarray:
    pred, missing = model.predict(ds)
    msg = imputation_message(missing)
    if msg:
        (run / "imputation.txt").write_text(msg + "\n")
    return pred


def cmd_predict(args) -> int:
    model, _ = load_model(args.model)
    ds = _features_for_model(args.features, model, need_targets=False)
    digest = config_hash("predict", {}, [_model_file(args.model), args.features])
    with RunDir(args.out, "predict", digest, args.force) as run:
        pred = _predict(model, ds, run)
        header = ("case_id", "cut_index", *(f"{t}_pred" for t in model.prep.target_names))
        _write_rows(run / "predictions.csv", header,
                    [(c, i, *map(float, p)) for (c, i), p in zip(ds.provenance, pred)])
    print(run_path_message(args.out, "predict", digest))
    return EXIT_OK


def _model_file(path) -> Path:
    path = Path(path)
    return path / "checkpoint_r0.txt" if path.is_dir() else path


def cmd_evaluate(args) -> int:
    model, _ = load_model(args.model)
    ds = _features_for_model(args.features, model, need_targets=True)
    digest = config_hash("evaluate", {}, [_model_file(args.model), args.features])
    with RunDir(args.out, "evaluate", digest, args.force) as run:
        pred = _predict(model, ds, run)
        report = metrics.metric_report(ds.Y, pred, ds.target_names, "eval")
        (run / "metrics.csv").write_text(metrics.format_report(report))
        header = ("case_id", "cut_index", *(f"{t}_true" for t in ds.target_names),
                  *(f"{t}_pred" for t in ds.target_names))
        _write_rows(run / "predictions.csv", header,
                    [(c, i, *map(float, y), *map(float, p)) for (c, i), y, p in zip(ds.provenance, ds.Y, pred)])
        if not args.no_plots:
            from . import plotting

            plotting.plot_regression(ds.Y, pred, run / "regression.png")
    print(run_path_message(args.out, "evaluate", digest))
    return EXIT_OK


def cmd_rank(args) -> int:
    targets = tuple(t.strip() for t in args.target.split(","))
    try:
        ds = load_feature_table(args.features, targets)
        if not ds.target_names:
            raise DataError(f"{args.features}: no target column among {', '.join(targets)}")
        if ds.has_missing:
            raise DataError(f"{args.features}: ranking needs complete feature columns")
        y = ds.Y.max(axis=1)
        ranking = rank_features(ds.X, y, bins=args.bins, criterion=args.criterion)
    except (ValueError, OSError) as exc:
        raise _data_error(exc) from None
    payload = {"target": list(targets), "bins": args.bins, "criterion": args.criterion}
    digest = config_hash("rank", payload, [args.features])
    with RunDir(args.out, "rank", digest, args.force) as run:
        rows = ranking_rows(ranking, ds.feature_names)
        _write_rows(run / "ranking.csv", RANKING_HEADER, rows)
        if not args.no_plots:
            from . import plotting

            plotting.plot_ranking([r[1] for r in rows], [r[3] for r in rows], run / "ranking.png")
    print(run_path_message(args.out, "rank", digest))
    return EXIT_OK


CLASSIFICATION_HEADER = ("sample", "vb_pred_mm", "label_pred", "label_true", "correct")


def cmd_classify(args) -> int:
    try:
        threshold = resolve_threshold(args.threshold)
    except ValueError as exc:
        raise ConfigError(f"threshold: {exc}") from None
    model, _ = load_model(args.model)
    ds = _features_for_model(args.features, model, need_targets=True)
    digest = config_hash("classify", {"threshold": threshold.vb_max_mm},
                         [_model_file(args.model), args.features])
    with RunDir(args.out, "classify", digest, args.force) as run:
        pred = _predict(model, ds, run).max(axis=1)
        truth = ds.Y.max(axis=1)
        labels_pred = [classify_condition(v, threshold) for v in pred]
        labels_true = [classify_condition(v, threshold) for v in truth]
        rows = [(i + 1, float(v), lp.value, lt.value, int(lp is lt))
                for i, (v, lp, lt) in enumerate(zip(pred, labels_pred, labels_true))]
        _write_rows(run / "classification.csv", CLASSIFICATION_HEADER, rows)
        rep = classification_report(labels_pred, labels_true)
        summary = [("overall", rep.overall, rep.total)]
        summary += [(lbl.value, rep.per_class[lbl], rep.counts[lbl]) for lbl in ConditionLabel
                    if lbl in rep.per_class]
        _write_rows(run / "classification_summary.csv", ("class", "accuracy", "n"), summary)
        if not args.no_plots:
            from . import plotting

            plotting.plot_classification(pred, labels_true, threshold.vb_max_mm, run / "classification.png")
    for name, acc, n in summary:
        log.info("%s accuracy %.2f%% (n=%d)", name, 100 * acc, n)
    print(run_path_message(args.out, "classify", digest))
    return EXIT_OK


# ---------------------------------------------------------------------- parser

def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    g = common.add_argument_group("global options")
    g.add_argument("--config", help="run-config file (key = value with [sections])")
    g.add_argument("--seed", type=int, default=None, help="base seed; repeat r uses seed + r")
    g.add_argument("--jobs", type=int, default=1, help="parallel sweep workers")
    g.add_argument("--out", default="runs", help="parent directory for run directories")
    g.add_argument("--force", action="store_true", help="overwrite an existing run directory")
    g.add_argument("--repeats", type=int, default=None, help="training repeats; reports use the median")
    g.add_argument("--no-plots", action="store_true", help="skip PNG figures")
    g.add_argument("-v", "--verbose", action="store_true")

    model_opts = argparse.ArgumentParser(add_help=False)
    m = model_opts.add_argument_group("model options")
    m.add_argument("--schema", help="feature schema for a strict header check")
    m.add_argument("--hidden", help="hidden layer sizes, e.g. 32 or 16,8")
    m.add_argument("--transfer", help="hidden-layer transfer function")
    m.add_argument("--algorithm", help="training algorithm")
    m.add_argument("--max-epochs", type=int)
    m.add_argument("--train-fraction", type=float)
    m.add_argument("--split-mode", choices=("random", "by_case"))

    parser = argparse.ArgumentParser(prog="brann", description=__doc__.split("\n\n")[0],
                                     parents=[common])
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("synth", parents=[common], help="write a synthetic dataset manifest")
    p.add_argument("directory")
    p.add_argument("--schema", default="nasa")
    p.add_argument("--cases", type=int, default=4)
    p.add_argument("--cuts", type=int, default=12)
    p.set_defaults(func=cmd_synth)

    p = sub.add_parser("prepare", parents=[common], help="extract features from dataset manifests")
    p.add_argument("manifests", nargs="+", help="one manifest, or several to build a union")
    p.add_argument("--collapse", choices=("max", "mean"), default="max",
                   help="how multi-output wear becomes one target in a union")
    p.set_defaults(func=cmd_prepare)

    p = sub.add_parser("train", parents=[common, model_opts], help="train and report")
    p.add_argument("features", nargs="?", help="feature CSV (overrides the config)")
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("sweep", parents=[common, model_opts], help="compare grid points")
    p.add_argument("features", nargs="?")
    p.add_argument("--preset", choices=sorted(SWEEP_PRESETS))
    p.set_defaults(func=cmd_sweep)

    for name, func, helptext in (("evaluate", cmd_evaluate, "metrics of a trained model"),
                                 ("predict", cmd_predict, "predictions of a trained model")):
        p = sub.add_parser(name, parents=[common], help=helptext)
        p.add_argument("model", help="train run directory or checkpoint file")
        p.add_argument("features")
        p.set_defaults(func=func)

    p = sub.add_parser("rank", parents=[common], help="mRMR input ranking")
    p.add_argument("features")
    p.add_argument("--target", default="vb_mm", help="target column(s); several are reduced by max")
    p.add_argument("--bins", type=int, default=None)
    p.add_argument("--criterion", choices=("MID", "MIQ"), default="MID")
    p.set_defaults(func=cmd_rank)

    p = sub.add_parser("classify", parents=[common], help="broken/unbroken from predicted wear")
    p.add_argument("model")
    p.add_argument("features")
    p.add_argument("--threshold", default="0.6", help="mm, or a preset: max_flank_wear, iso_average")
    p.set_defaults(func=cmd_classify)
    return parser


def main(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.INFO,
                        format="%(levelname)s %(message)s", stream=sys.stderr, force=True)
    if args.jobs < 1:
        parser.error("--jobs must be >= 1")
    try:
        return args.func(args)
    except ConfigError as exc:
        log.error("%s", exc)
        return EXIT_CONFIG
    except (DataFailure, DataError, SchemaError, ShapeError) as exc:
        log.error("%s", exc)
        return EXIT_DATA
    except TrainingAborted as exc:
        log.error("training aborted: %s", exc)
        for event in exc.trace.events:
            log.error("  %s", event)
        return EXIT_ABORT


if __name__ == "__main__":
    sys.exit(main())
