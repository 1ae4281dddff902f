"""From per-cut monitoring signals to normalized feature rows.

Wear at cut ``n`` depends on everything the tool has gone through, so the
signal window for cut ``n`` runs from the start of cut 1 to the end of cut
``n``. Each channel is reduced to its minimum, maximum and mean over that
window and appended to the process parameters.

Dataset manifest
----------------
A ``key = value`` file (see :mod:`brann.kvfile`)::

    [dataset]
    schema = nasa                 # name in brann.data.SCHEMAS
    vb_file = vb.csv              # case_id,cut_index,<targets>; empty = unmeasured
    signal_pattern = signals/{case_id}/cut{cut_index}_{channel}.csv
    cumulative = true             # false: window is the single cut

    [case 1]
    DOC = 1.5
    FEED = 0.5

Paths are relative to the manifest. Each signal file holds one ``value``
column, with or without a header line. Every cut listed in ``vb_file`` for a
declared case is read, even when its wear cell is empty.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Mapping, Sequence

import numpy as np

from . import kvfile
from .data import Dataset, FeatureSchema, SchemaError, get_schema


class GapError(ValueError):
    pass


@dataclass(frozen=True)
class SignalSeries:
    channel: str
    values: np.ndarray
    units: str = ""

    def __post_init__(self):
        v = np.array(self.values, dtype=float).reshape(-1)
        if v.size == 0:
            raise ValueError(f"signal {self.channel!r} is empty")
        if not np.all(np.isfinite(v)):
            raise ValueError(f"signal {self.channel!r} contains non-finite samples")
        v.setflags(write=False)
        object.__setattr__(self, "values", v)


@dataclass(frozen=True)
class CutRecord:
    case_id: str
    cut_index: int
    process_params: Mapping[str, float]
    signals: Mapping[str, SignalSeries]
    vb: tuple[float, ...] | None = None

    def __post_init__(self):
        if self.cut_index < 1:
            raise ValueError("cut_index must be >= 1")
        sig = {k: (v if isinstance(v, SignalSeries) else SignalSeries(k, v)) for k, v in self.signals.items()}
        object.__setattr__(self, "signals", sig)
        object.__setattr__(self, "case_id", str(self.case_id))
        if self.vb is not None:
            vb = (float(self.vb),) if np.isscalar(self.vb) else tuple(float(v) for v in self.vb)
            if any(not math.isfinite(v) or v < 0 for v in vb):
                raise ValueError(f"case {self.case_id} cut {self.cut_index}: wear must be finite and >= 0")
            object.__setattr__(self, "vb", vb)


def extract_stats(segment) -> tuple[float, float, float]:
    x = np.asarray(segment, dtype=float).reshape(-1)
    if x.size == 0:
        raise ValueError("cannot summarize an empty segment")
    return float(x.min()), float(x.max()), float(x.mean())


def _case_cuts(cuts: Sequence[CutRecord], n: int) -> list[CutRecord]:
    by_index = {c.cut_index: c for c in cuts}
    for i in range(1, n + 1):
        if i not in by_index:
            raise GapError(f"case {cuts[0].case_id if cuts else '?'}: cut {i} is missing")
    return [by_index[i] for i in range(1, n + 1)]


def cumulative_window(case_cuts: Sequence[CutRecord], n: int) -> dict[str, np.ndarray]:
    """Concatenated samples of cuts ``1..n`` for every channel."""
    window = _case_cuts(case_cuts, n)
    channels = window[-1].signals.keys()
    return {ch: np.concatenate([c.signals[ch].values for c in window]) for ch in channels}


class RunningStats:
    """Min, max and mean of a growing sample, updated one segment at a time."""

    def __init__(self):
        self.lo, self.hi, self.total, self.count = math.inf, -math.inf, 0.0, 0

    def add(self, segment: np.ndarray) -> None:
        self.lo = min(self.lo, float(segment.min()))
        self.hi = max(self.hi, float(segment.max()))
        self.total += float(segment.sum())
        self.count += segment.size

    def stats(self) -> tuple[float, float, float]:
        return self.lo, self.hi, self.total / self.count


@dataclass(frozen=True)
class FeatureRow:
    features: np.ndarray
    target: tuple[float, ...]
    provenance: tuple[str, int]


@dataclass
class ExtractionReport:
    kept: int = 0
    dropped: int = 0
    dropped_cuts: list[tuple[str, int]] = field(default_factory=list)

    def text(self) -> str:
        lines = [f"kept={self.kept}", f"dropped={self.dropped}"]
        lines.extend(f"dropped_cut={c},{i}" for c, i in self.dropped_cuts)
        return "\n".join(lines) + "\n"


def _check_schema(cut: CutRecord, schema: FeatureSchema) -> None:
    need_p = {p.name for p in schema.process_params}
    need_c = {c.name for c in schema.channels}
    if set(cut.process_params) != need_p:
        raise SchemaError(f"case {cut.case_id} cut {cut.cut_index}: process parameters "
                          f"{sorted(cut.process_params)} do not match schema {sorted(need_p)}")
    if set(cut.signals) != need_c:
        raise SchemaError(f"case {cut.case_id} cut {cut.cut_index}: channels "
                          f"{sorted(cut.signals)} do not match schema {sorted(need_c)}")
    if cut.vb is not None and len(cut.vb) != len(schema.targets):
        raise SchemaError(f"case {cut.case_id} cut {cut.cut_index}: expected {len(schema.targets)} wear values")


def build_rows(cuts: Iterable[CutRecord], schema: FeatureSchema,
               cumulative: bool = True) -> tuple[list[FeatureRow], ExtractionReport]:
    """One feature row per measured cut, ordered by ``(case_id, cut_index)``.

    Cuts without a wear measurement still extend the cumulative window but
    produce no row; they are counted in the report.
    """
    by_case: dict[str, list[CutRecord]] = {}
    for cut in cuts:
        _check_schema(cut, schema)
        by_case.setdefault(cut.case_id, []).append(cut)
    rows: list[FeatureRow] = []
    report = ExtractionReport()
    for case in sorted(by_case, key=_case_sort_key):
        case_cuts = sorted(by_case[case], key=lambda c: c.cut_index)
        indices = [c.cut_index for c in case_cuts]
        if len(set(indices)) != len(indices):
            raise ValueError(f"case {case}: duplicate cut indices")
        _case_cuts(case_cuts, indices[-1])
        running = {ch.name: RunningStats() for ch in schema.channels}
        for cut in case_cuts:
            if not cumulative:
                running = {ch.name: RunningStats() for ch in schema.channels}
            for ch in schema.channels:
                running[ch.name].add(cut.signals[ch.name].values)
            if cut.vb is None:
                report.dropped += 1
                report.dropped_cuts.append((case, cut.cut_index))
                continue
            feats = [float(cut.process_params[p.name]) for p in schema.process_params]
            for ch in schema.channels:
                feats.extend(running[ch.name].stats())
            rows.append(FeatureRow(np.array(feats), cut.vb, (case, cut.cut_index)))
            report.kept += 1
    return rows, report


def _case_sort_key(case: str):
    # numeric case ids sort numerically, others lexicographically after them
    try:
        return (0, float(case), case)
    except ValueError:
        return (1, 0.0, case)


def rows_to_dataset(rows: Sequence[FeatureRow], schema: FeatureSchema) -> Dataset:
    n = len(rows)
    X = np.array([r.features for r in rows], dtype=float).reshape(n, schema.n_features)
    Y = np.array([r.target for r in rows], dtype=float).reshape(n, len(schema.targets))
    return Dataset(X, Y, schema.feature_names, schema.targets,
                   tuple(r.provenance for r in rows), schema.feature_units)


@dataclass(frozen=True)
class ScalerParams:
    mins: np.ndarray
    maxs: np.ndarray

    def __post_init__(self):
        mins = np.array(self.mins, dtype=float).reshape(-1)
        maxs = np.array(self.maxs, dtype=float).reshape(-1)
        if mins.shape != maxs.shape or np.any(maxs < mins):
            raise ValueError("scaler needs max >= min for every feature")
        object.__setattr__(self, "mins", mins)
        object.__setattr__(self, "maxs", maxs)

    @property
    def span(self) -> np.ndarray:
        return self.maxs - self.mins

    def to_dict(self) -> dict:
        return {"mins": [repr(float(v)) for v in self.mins], "maxs": [repr(float(v)) for v in self.maxs]}

    @classmethod
    def from_dict(cls, d: dict) -> "ScalerParams":
        return cls(np.array([float(v) for v in d["mins"]]), np.array([float(v) for v in d["maxs"]]))


class ScalerNotFittedError(RuntimeError):
    pass


def fit_scaler(X) -> ScalerParams:
    """Per-column min/max over the training rows, ignoring missing (NaN) cells.

    Columns with no observed value get ``min = max = 0``.
    """
    X = np.asarray(X, dtype=float)
    if X.ndim == 1:
        X = X.reshape(-1, 1)
    if X.shape[0] == 0:
        raise ValueError("need at least one training row to fit a scaler")
    observed = ~np.isnan(X)
    any_obs = observed.any(axis=0)
    mins = np.where(any_obs, np.nanmin(np.where(observed, X, np.inf), axis=0), 0.0)
    maxs = np.where(any_obs, np.nanmax(np.where(observed, X, -np.inf), axis=0), 0.0)
    return ScalerParams(mins, maxs)


def apply_scaler(params: ScalerParams | None, X) -> np.ndarray:
    """``(x - min) / (max - min)``; constant columns map to 0. Out-of-range values are not clipped."""
    if params is None:
        raise ScalerNotFittedError("scaler has not been fitted")
    X = np.asarray(X, dtype=float)
    span = params.span
    safe = np.where(span > 0, span, 1.0)
    out = (X - params.mins) / safe
    return np.where(span > 0, out, np.where(np.isnan(X), np.nan, 0.0))


def inverse_scaler(params: ScalerParams | None, Z) -> np.ndarray:
    if params is None:
        raise ScalerNotFittedError("scaler has not been fitted")
    return np.asarray(Z, dtype=float) * params.span + params.mins


def read_signal_file(path) -> np.ndarray:
    """One numeric column, optionally headed by ``value``."""
    path = Path(path)
    try:
        lines = path.read_text().splitlines()
    except OSError as exc:
        raise ValueError(f"{path}: {exc}") from exc
    values = []
    for lineno, line in enumerate(lines, start=1):
        cell = line.strip()
        if not cell:
            continue
        if lineno == 1 and cell.lower() == "value":
            continue
        try:
            v = float(cell)
        except ValueError:
            raise ValueError(f"{path}:{lineno}: not a number: {cell!r}") from None
        if not math.isfinite(v):
            raise ValueError(f"{path}:{lineno}: non-finite sample {cell!r}")
        values.append(v)
    if not values:
        raise ValueError(f"{path}: no samples")
    return np.array(values)


@dataclass
class Manifest:
    path: Path
    schema: FeatureSchema
    vb_file: Path
    signal_pattern: str
    cumulative: bool
    cases: dict[str, dict[str, float]]

    def signal_path(self, case_id: str, cut_index: int, channel: str) -> Path:
        return self.path.parent / self.signal_pattern.format(case_id=case_id, cut_index=cut_index,
                                                             channel=channel)


def _parse_bool(value: str, path, line) -> bool:
    v = value.strip().lower()
    if v in ("true", "yes", "1", "on"):
        return True
    if v in ("false", "no", "0", "off"):
        return False
    raise kvfile.KVError(path, line, f"expected a boolean, got {value!r}")


def load_manifest(path) -> Manifest:
    path = Path(path)
    sections = kvfile.load(path)
    head = next((s for s in sections if s.name == "dataset"), None)
    if head is None:
        raise kvfile.KVError(path, None, "missing [dataset] section")
    for key in ("schema", "vb_file", "signal_pattern"):
        if head.get(key) is None:
            raise kvfile.KVError(path, head.line, f"[dataset] is missing {key!r}")
    try:
        schema = get_schema(head.get("schema"))
    except SchemaError as exc:
        raise kvfile.KVError(path, head.line_of("schema"), str(exc)) from None
    cumulative = _parse_bool(head.get("cumulative", "true"), path, head.line_of("cumulative"))
    cases: dict[str, dict[str, float]] = {}
    need = [p.name for p in schema.process_params]
    for sec in sections:
        if not sec.name.startswith("case "):
            if sec.name not in ("", "dataset"):
                raise kvfile.KVError(path, sec.line, f"unknown section [{sec.name}]")
            continue
        case_id = sec.name[5:].strip()
        params = {}
        for key, (value, line) in sec.entries.items():
            if key not in need:
                raise kvfile.KVError(path, line, f"{key!r} is not a process parameter of schema {schema.name!r}")
            try:
                params[key] = float(value)
            except ValueError:
                raise kvfile.KVError(path, line, f"{key!r} is not a number: {value!r}") from None
        missing = [k for k in need if k not in params]
        if missing:
            raise kvfile.KVError(path, sec.line, f"case {case_id} is missing {', '.join(missing)}")
        cases[case_id] = params
    if not cases:
        raise kvfile.KVError(path, None, "no [case ...] sections")
    return Manifest(path, schema, path.parent / head.get("vb_file"), head.get("signal_pattern"),
                    cumulative, cases)


def read_vb_file(path, targets: Sequence[str]) -> list[tuple[str, int, tuple[float, ...] | None]]:
    import csv

    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise ValueError(f"{path}: {exc}") from exc
    rows = list(csv.reader(text.splitlines()))
    header = [h.strip() for h in rows[0]] if rows else []
    expected = ["case_id", "cut_index", *targets]
    if header != expected:
        raise ValueError(f"{path}:1: expected header {','.join(expected)}")
    out = []
    for lineno, rec in enumerate(rows[1:], start=2):
        if not rec or all(not c.strip() for c in rec):
            continue
        if len(rec) != len(expected):
            raise ValueError(f"{path}:{lineno}: expected {len(expected)} cells")
        try:
            cut = int(rec[1])
            cells = [c.strip() for c in rec[2:]]
            if all(c == "" for c in cells):
                vb = None
            else:
                vb = tuple(float(c) for c in cells)
        except ValueError:
            raise ValueError(f"{path}:{lineno}: malformed row {','.join(rec)!r}") from None
        out.append((rec[0].strip(), cut, vb))
    return out


def read_manifest_cuts(manifest: Manifest) -> list[CutRecord]:
    cuts = []
    units = {c.name: c.units for c in manifest.schema.channels}
    for case_id, cut_index, vb in read_vb_file(manifest.vb_file, manifest.schema.targets):
        if case_id not in manifest.cases:
            continue
        signals = {}
        for ch in units:
            spath = manifest.signal_path(case_id, cut_index, ch)
            signals[ch] = SignalSeries(ch, read_signal_file(spath), units[ch])
        cuts.append(CutRecord(case_id, cut_index, manifest.cases[case_id], signals, vb))
    return cuts


def extract_dataset(manifest_path) -> tuple[Dataset, ExtractionReport]:
    manifest = load_manifest(manifest_path)
    rows, report = build_rows(read_manifest_cuts(manifest), manifest.schema, manifest.cumulative)
    return rows_to_dataset(rows, manifest.schema), report
