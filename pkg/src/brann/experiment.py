"""Fit pipeline shared by the CLI and the benchmarks.

Inputs and targets are MinMax-scaled with parameters fitted on the training
rows. Missing input cells (NaN) are filled with the training mean in scaled
space. Predictions are mapped back to target units before any metric is
computed.
"""

from __future__ import annotations

import json
import logging
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from . import metrics
from .data import STATS, Dataset, align_features
from .features import ScalerParams, apply_scaler, fit_scaler, inverse_scaler
from .network import Network, NetworkLayout, TransferKind, forward, init_weights
from .trainers import TrainingConfig, TrainingTrace, train

log = logging.getLogger(__name__)


def parameter_of(column: str) -> str:
    """Input parameter behind a feature column (``force_x_mean`` -> ``force_x``)."""
    for stat in STATS:
        if column.endswith("_" + stat):
            return column[: -len(stat) - 1]
    return column


@dataclass(frozen=True)
class Preprocessor:
    feature_names: tuple[str, ...]
    target_names: tuple[str, ...]
    x_scaler: ScalerParams
    y_scaler: ScalerParams
    fill: np.ndarray

    @classmethod
    def fit(cls, train_set: Dataset) -> "Preprocessor":
        x_scaler = fit_scaler(train_set.X)
        y_scaler = fit_scaler(train_set.Y)
        Z = apply_scaler(x_scaler, train_set.X)
        observed = ~np.isnan(Z)
        counts = observed.sum(axis=0)
        sums = np.where(observed, Z, 0.0).sum(axis=0)
        # columns never observed in training are constant there, so any fill works
        fill = np.divide(sums, counts, out=np.zeros(Z.shape[1]), where=counts > 0)
        return cls(train_set.feature_names, train_set.target_names, x_scaler, y_scaler, fill)

    def inputs(self, ds: Dataset) -> tuple[np.ndarray, list[str]]:
        """Scaled, filled inputs in training column order, plus the absent column names."""
        X, missing = align_features(ds, self.feature_names)
        extra = [c for c in ds.feature_names if c not in self.feature_names]
        if extra:
            log.warning("ignoring %d columns unknown to the model: %s", len(extra), ", ".join(extra))
        Z = apply_scaler(self.x_scaler, X)
        return np.where(np.isnan(Z), self.fill, Z), missing

    def targets(self, Y) -> np.ndarray:
        return apply_scaler(self.y_scaler, Y)

    def unscale_targets(self, Z) -> np.ndarray:
        return inverse_scaler(self.y_scaler, Z)

    def to_json(self) -> str:
        return json.dumps({
            "feature_names": list(self.feature_names),
            "target_names": list(self.target_names),
            "x_scaler": {"mins": self.x_scaler.mins.tolist(), "maxs": self.x_scaler.maxs.tolist()},
            "y_scaler": {"mins": self.y_scaler.mins.tolist(), "maxs": self.y_scaler.maxs.tolist()},
            "fill": self.fill.tolist(),
        }, separators=(",", ":"))

    @classmethod
    def from_json(cls, text: str) -> "Preprocessor":
        d = json.loads(text)
        return cls(tuple(d["feature_names"]), tuple(d["target_names"]),
                   ScalerParams(np.array(d["x_scaler"]["mins"]), np.array(d["x_scaler"]["maxs"])),
                   ScalerParams(np.array(d["y_scaler"]["mins"]), np.array(d["y_scaler"]["maxs"])),
                   np.array(d["fill"], dtype=float))


def imputation_message(missing: Sequence[str]) -> str | None:
    if not missing:
        return None
    params = sorted({parameter_of(c) for c in missing})
    return (f"{len(params)} columns imputed ({len(missing)} feature columns, training-mean fill): "
            + ", ".join(params))


@dataclass
class Model:
    net: Network
    prep: Preprocessor

    def predict(self, ds: Dataset) -> tuple[np.ndarray, list[str]]:
        Z, missing = self.prep.inputs(ds)
        msg = imputation_message(missing)
        if msg:
            log.warning(msg)
        return self.prep.unscale_targets(forward(self.net, Z)), missing


@dataclass
class FitResult:
    model: Model
    trace: TrainingTrace
    train_pred: np.ndarray
    test_pred: np.ndarray | None
    report: list[tuple]

    def metric(self, split: str, name: str) -> float:
        idx = metrics.REPORT_HEADER.index(name)
        for row in self.report:
            if row[0] == split and row[1] == "all":
                return float(row[idx])
        raise KeyError(split)


def fit(train_set: Dataset, test_set: Dataset | None, hidden: Sequence[int] = (32,),
        transfer: TransferKind | str = TransferKind.TANSIG,
        config: TrainingConfig | None = None, seed: int = 0) -> FitResult:
    """Scale, train a ``n_in-hidden-n_out`` network from seed ``seed`` and score it in target units."""
    config = config or TrainingConfig(seed=seed)
    prep = Preprocessor.fit(train_set)
    Z, _ = prep.inputs(train_set)
    layout = NetworkLayout.mlp(Z.shape[1], hidden, len(train_set.target_names), transfer)
    net, trace = train(init_weights(layout, seed), (Z, prep.targets(train_set.Y)), config)
    model = Model(net, prep)
    train_pred = model.predict(train_set)[0]
    report = metrics.metric_report(train_set.Y, train_pred, train_set.target_names, "train")
    scaled = [(train_set, train_pred, "train_scaled")]
    test_pred = None
    if test_set is not None and len(test_set):
        test_pred = model.predict(test_set)[0]
        report += metrics.metric_report(test_set.Y, test_pred, test_set.target_names, "test")
        scaled.append((test_set, test_pred, "test_scaled"))
    # the same scores on MinMax-scaled targets, labeled by split name
    for ds, pred, label in scaled:
        report += metrics.metric_report(prep.targets(ds.Y), prep.targets(pred), ds.target_names, label)
    return FitResult(model, trace, train_pred, test_pred, report)


def sine_benchmark(algorithm: str = "trainbr", seed: int = 0, transfer: str = "tansig",
                   hidden: int = 50, **config) -> FitResult:
    """The oversized-network benchmark: noisy sine, 60/40 points, one hidden layer."""
    from .synthetic import noisy_sine

    train_set, test_set = noisy_sine(seed)
    cfg = TrainingConfig(algorithm=algorithm, seed=seed, **config)
    return fit(train_set, test_set, (hidden,), transfer, cfg, seed)
