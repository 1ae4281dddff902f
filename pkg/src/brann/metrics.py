"""MAE, RMSE and R^2 in target units.

Multi-output targets are pooled: every entry of the target matrix counts as
one observation. :func:`metric_report` adds a per-target breakdown.
"""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np


class DegenerateTargetsError(ValueError):
    pass


def _pair(y_true, y_pred) -> tuple[np.ndarray, np.ndarray]:
    t = np.asarray(y_true, dtype=float)
    p = np.asarray(y_pred, dtype=float)
    if t.size != p.size or (t.ndim > 1 and p.ndim > 1 and t.shape != p.shape):
        raise ValueError(f"length mismatch: {t.shape} vs {p.shape}")
    if t.size == 0:
        raise ValueError("empty input")
    return t.reshape(-1), p.reshape(-1)


def mae(y_true, y_pred) -> float:
    t, p = _pair(y_true, y_pred)
    return float(np.mean(np.abs(t - p)))


def mse(y_true, y_pred) -> float:
    t, p = _pair(y_true, y_pred)
    return float(np.mean((t - p) ** 2))


def rmse(y_true, y_pred) -> float:
    return math.sqrt(mse(y_true, y_pred))


def r2(y_true, y_pred) -> float:
    t, p = _pair(y_true, y_pred)
    ss_tot = float(np.sum((t - t.mean()) ** 2))
    if ss_tot == 0.0:
        raise DegenerateTargetsError("degenerate targets: zero variance")
    return 1.0 - float(np.sum((t - p) ** 2)) / ss_tot


@dataclass(frozen=True)
class MetricReport:
    mae: float
    rmse: float
    r2: float
    n: int

    @classmethod
    def compute(cls, y_true, y_pred) -> "MetricReport":
        t, p = _pair(y_true, y_pred)
        try:
            score = r2(t, p)
        except DegenerateTargetsError:
            score = math.nan
        return cls(mae(t, p), rmse(t, p), score, t.size)


REPORT_HEADER = ("split", "target", "mae", "rmse", "r2", "n")


def metric_report(y_true, y_pred, target_names: Sequence[str], split: str) -> list[tuple]:
    """Rows ``(split, target, mae, rmse, r2, n)``: pooled ``all`` first, then one per target."""
    t = np.asarray(y_true, dtype=float).reshape(len(y_true), -1)
    p = np.asarray(y_pred, dtype=float).reshape(t.shape)
    rows = []
    pooled = MetricReport.compute(t, p)
    rows.append((split, "all", pooled.mae, pooled.rmse, pooled.r2, pooled.n))
    if t.shape[1] > 1:
        for j, name in enumerate(target_names):
            rep = MetricReport.compute(t[:, j], p[:, j])
            rows.append((split, name, rep.mae, rep.rmse, rep.r2, rep.n))
    return rows


def format_report(rows: Sequence[tuple]) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(REPORT_HEADER)
    for split, target, a, b, c, n in rows:
        writer.writerow([split, target, repr(float(a)), repr(float(b)), repr(float(c)), int(n)])
    return buf.getvalue()
