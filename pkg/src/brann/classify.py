"""Tool-condition labels from predicted flank wear."""

from __future__ import annotations

import enum
import math
import warnings
from dataclasses import dataclass
from typing import Sequence


class ConditionLabel(str, enum.Enum):
    BROKEN = "broken"
    UNBROKEN = "unbroken"


class ExtrapolationWarning(UserWarning):
    """A negative wear prediction was classified; the model is extrapolating."""


@dataclass(frozen=True)
class ConditionThreshold:
    vb_max_mm: float = 0.6

    def __post_init__(self):
        if not (math.isfinite(self.vb_max_mm) and self.vb_max_mm > 0):
            raise ValueError("threshold must be positive and finite")


# maximum flank wear used for breakage, and the average-wear tool-life limit
THRESHOLD_PRESETS = {
    "max_flank_wear": ConditionThreshold(0.6),
    "iso_average": ConditionThreshold(0.3),
}


def resolve_threshold(value) -> ConditionThreshold:
    if isinstance(value, ConditionThreshold):
        return value
    if isinstance(value, str) and value in THRESHOLD_PRESETS:
        return THRESHOLD_PRESETS[value]
    return ConditionThreshold(float(value))


def classify_condition(vb_pred: float, threshold: ConditionThreshold | float = 0.6) -> ConditionLabel:
    """``broken`` iff the prediction strictly exceeds the threshold."""
    threshold = resolve_threshold(threshold)
    vb_pred = float(vb_pred)
    if not math.isfinite(vb_pred):
        raise ValueError("prediction must be finite")
    if vb_pred < 0:
        warnings.warn(f"negative wear prediction {vb_pred:g} mm", ExtrapolationWarning, stacklevel=2)
    return ConditionLabel.BROKEN if vb_pred > threshold.vb_max_mm else ConditionLabel.UNBROKEN


@dataclass(frozen=True)
class ClassificationReport:
    overall: float
    per_class: dict[ConditionLabel, float]
    counts: dict[ConditionLabel, int]
    correct: int
    total: int


def classification_report(labels_pred: Sequence, labels_true: Sequence) -> ClassificationReport:
    if len(labels_pred) != len(labels_true):
        raise ValueError(f"length mismatch: {len(labels_pred)} vs {len(labels_true)}")
    if not labels_true:
        raise ValueError("empty input")
    pred = [ConditionLabel(p) for p in labels_pred]
    true = [ConditionLabel(t) for t in labels_true]
    per_class, counts = {}, {}
    for label in ConditionLabel:
        idx = [i for i, t in enumerate(true) if t is label]
        counts[label] = len(idx)
        if idx:
            per_class[label] = sum(pred[i] is label for i in idx) / len(idx)
    correct = sum(p is t for p, t in zip(pred, true))
    return ClassificationReport(correct / len(true), per_class, counts, correct, len(true))
