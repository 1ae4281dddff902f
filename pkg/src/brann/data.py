"""Feature schemas, datasets, CSV round-trips, splitting and schema unions.

Feature CSV layout (one header line, comma separated)::

    case_id,cut_index,<feature columns...>,<target columns...>

An empty feature cell marks a missing value (used by unions of datasets that
do not share every input). Literal ``nan``/``inf`` cells are rejected.
"""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

STATS = ("min", "max", "mean")


class SchemaError(ValueError):
    pass


class DataError(ValueError):
    pass


@dataclass(frozen=True)
class Parameter:
    name: str
    units: str = ""
    description: str = ""


@dataclass(frozen=True)
class FeatureSchema:
    """Inputs and outputs of one dataset.

    Process parameters enter the feature vector as-is; each signal channel
    contributes its ``min``, ``max`` and ``mean`` over the cut window.
    """

    name: str
    process_params: tuple[Parameter, ...] = ()
    channels: tuple[Parameter, ...] = ()
    targets: tuple[str, ...] = ("vb_mm",)
    target_units: str = "mm"

    @property
    def input_parameters(self) -> tuple[Parameter, ...]:
        return self.process_params + self.channels

    @property
    def feature_names(self) -> tuple[str, ...]:
        names = [p.name for p in self.process_params]
        for ch in self.channels:
            names.extend(f"{ch.name}_{s}" for s in STATS)
        return tuple(names)

    @property
    def feature_units(self) -> tuple[str, ...]:
        units = [p.units for p in self.process_params]
        for ch in self.channels:
            units.extend([ch.units] * len(STATS))
        return tuple(units)

    @property
    def n_features(self) -> int:
        return len(self.feature_names)


def _p(name, units, description=""):
    return Parameter(name, units, description)


NASA = FeatureSchema(
    "nasa",
    process_params=(_p("DOC", "mm", "depth of cut"), _p("FEED", "mm/rev", "feed rate")),
    channels=(
        _p("SMCAC", "A", "AC spindle motor current"),
        _p("SMCDC", "A", "DC spindle motor current"),
        _p("TableVibration", "V", "table vibration"),
        _p("SpindleVibration", "V", "spindle vibration"),
        _p("AeAtTable", "V", "acoustic emission at table"),
        _p("AeAtSpindle", "V", "acoustic emission at spindle"),
    ),
    targets=("vb_mm",),
)

PHM2010 = FeatureSchema(
    "phm2010",
    channels=(
        _p("force_x", "N"), _p("force_y", "N"), _p("force_z", "N"),
        _p("vibration_x", "g"), _p("vibration_y", "g"), _p("vibration_z", "g"),
        _p("ae_rms", "V"),
    ),
    targets=("flute_1", "flute_2", "flute_3"),
)

NUAA = FeatureSchema(
    "nuaa",
    channels=(
        _p("axial_force", "N"),
        _p("bending_moment_x", "N.m"),
        _p("bending_moment_y", "N.m"),
        _p("torsion_z", "N.m"),
        _p("vibration_ch1", "g"),
        _p("vibration_ch2", "g"),
        _p("spindle_power", "W"),
        _p("spindle_current", "A"),
    ),
    targets=("edge_1", "edge_2", "edge_3", "edge_4"),
)

# in-house end milling: forces and acoustic emission only, no wear measurements
INHOUSE = FeatureSchema(
    "inhouse",
    channels=(_p("force_x", "N"), _p("force_y", "N"), _p("force_z", "N"), _p("ae_rms", "V")),
    targets=("vb_mm",),
)


def union_schemas(schemas: Sequence[FeatureSchema], name: str = "union",
                  targets: tuple[str, ...] = ("vb_mm",)) -> FeatureSchema:
    """Union of input parameters; shared names must agree on units.

    Parameters are ordered lexicographically by name. The union has a single
    wear target (see :func:`collapse_targets`).
    """
    proc: dict[str, Parameter] = {}
    chans: dict[str, Parameter] = {}
    for schema in schemas:
        for group, params in ((proc, schema.process_params), (chans, schema.channels)):
            for p in params:
                seen = proc.get(p.name) or chans.get(p.name)
                if seen is not None and seen.units != p.units:
                    raise SchemaError(f"parameter {p.name!r} has conflicting units {seen.units!r} and {p.units!r}")
                if seen is not None and p.name not in group:
                    raise SchemaError(f"{p.name!r} is a process parameter in one schema and a channel in another")
                group.setdefault(p.name, p)
    return FeatureSchema(
        name,
        process_params=tuple(proc[k] for k in sorted(proc)),
        channels=tuple(chans[k] for k in sorted(chans)),
        targets=targets,
    )


SCHEMAS: dict[str, FeatureSchema] = {s.name: s for s in (NASA, PHM2010, NUAA, INHOUSE)}
SCHEMAS["union"] = union_schemas((NASA, PHM2010, NUAA))


def get_schema(name: str) -> FeatureSchema:
    try:
        return SCHEMAS[name]
    except KeyError:
        raise SchemaError(f"unknown schema {name!r}; known: {', '.join(sorted(SCHEMAS))}") from None


@dataclass(frozen=True, eq=False)
class Dataset:
    X: np.ndarray
    Y: np.ndarray
    feature_names: tuple[str, ...]
    target_names: tuple[str, ...]
    provenance: tuple[tuple[str, int], ...]
    feature_units: tuple[str, ...] | None = None

    def __post_init__(self):
        X = np.array(self.X, dtype=float)
        Y = np.array(self.Y, dtype=float)
        if Y.ndim == 1:
            Y = Y.reshape(-1, 1)
        if X.ndim != 2:
            X = X.reshape(Y.shape[0], -1)
        n = X.shape[0]
        if Y.shape[0] != n or len(self.provenance) != n:
            raise DataError(f"row counts disagree: X {n}, Y {Y.shape[0]}, provenance {len(self.provenance)}")
        if X.shape[1] != len(self.feature_names) or Y.shape[1] != len(self.target_names):
            raise DataError("column names do not match matrix widths")
        if np.any(np.isinf(X)) or not np.all(np.isfinite(Y)):
            raise DataError("dataset contains infinite values or non-finite targets")
        if self.feature_units is not None and len(self.feature_units) != X.shape[1]:
            raise DataError("feature_units length does not match the feature count")
        X.setflags(write=False)
        Y.setflags(write=False)
        object.__setattr__(self, "X", X)
        object.__setattr__(self, "Y", Y)
        object.__setattr__(self, "feature_names", tuple(self.feature_names))
        object.__setattr__(self, "target_names", tuple(self.target_names))
        object.__setattr__(self, "provenance", tuple((str(c), int(i)) for c, i in self.provenance))

    def __len__(self) -> int:
        return self.X.shape[0]

    @property
    def has_missing(self) -> bool:
        return bool(np.any(np.isnan(self.X)))

    def subset(self, rows: Sequence[int]) -> "Dataset":
        rows = np.asarray(rows, dtype=int)
        return Dataset(self.X[rows], self.Y[rows], self.feature_names, self.target_names,
                       tuple(self.provenance[i] for i in rows), self.feature_units)

    def select_features(self, names: Sequence[str]) -> "Dataset":
        idx = [self.feature_names.index(n) for n in names]
        units = None if self.feature_units is None else tuple(self.feature_units[i] for i in idx)
        return Dataset(self.X[:, idx], self.Y, tuple(names), self.target_names, self.provenance, units)


def _fmt(v: float) -> str:
    return "" if math.isnan(v) else repr(float(v))


def dataset_to_csv(ds: Dataset) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(("case_id", "cut_index", *ds.feature_names, *ds.target_names))
    for (case, cut), x, y in zip(ds.provenance, ds.X, ds.Y):
        w.writerow((case, cut, *(_fmt(v) for v in x), *(_fmt(v) for v in y)))
    return buf.getvalue()


def save_features(ds: Dataset, path) -> None:
    Path(path).write_text(dataset_to_csv(ds))


@dataclass
class Table:
    """Raw feature-CSV contents before they are matched to a schema."""

    columns: list[str]
    provenance: list[tuple[str, int]] = field(default_factory=list)
    values: np.ndarray = field(default_factory=lambda: np.zeros((0, 0)))


def read_table(path) -> Table:
    """Parse a feature CSV; empty cells become NaN, non-numeric or nan/inf text is an error."""
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise DataError(f"{path}: {exc}") from exc
    reader = csv.reader(io.StringIO(text))
    try:
        header = next(reader)
    except StopIteration:
        raise DataError(f"{path}: empty file") from None
    header = [h.strip() for h in header]
    if header[:2] != ["case_id", "cut_index"]:
        raise DataError(f"{path}:1: header must start with 'case_id,cut_index'")
    cols = header[2:]
    prov, rows = [], []
    for lineno, rec in enumerate(reader, start=2):
        if not rec or all(not c.strip() for c in rec):
            continue
        if len(rec) != len(header):
            raise DataError(f"{path}:{lineno}: expected {len(header)} cells, got {len(rec)}")
        try:
            cut = int(rec[1])
        except ValueError:
            raise DataError(f"{path}:{lineno}: column 'cut_index': not an integer: {rec[1]!r}") from None
        vals = []
        for name, cell in zip(cols, rec[2:]):
            cell = cell.strip()
            if cell == "":
                vals.append(math.nan)
                continue
            try:
                v = float(cell)
            except ValueError:
                raise DataError(f"{path}:{lineno}: column {name!r}: non-numeric cell {cell!r}") from None
            if not math.isfinite(v):
                raise DataError(f"{path}:{lineno}: column {name!r}: non-finite cell {cell!r}")
            vals.append(v)
        prov.append((rec[0].strip(), cut))
        rows.append(vals)
    values = np.array(rows, dtype=float).reshape(len(rows), len(cols))
    return Table(cols, prov, values)


def load_features(path, schema: FeatureSchema) -> Dataset:
    """Strict load: the header must equal ``case_id,cut_index`` + schema features + targets."""
    table = read_table(path)
    expected = list(schema.feature_names) + list(schema.targets)
    for i, (got, want) in enumerate(zip(table.columns, expected)):
        if got != want:
            raise DataError(f"{path}: header mismatch at column {i + 3}: expected {want!r}, got {got!r}")
    if len(table.columns) != len(expected):
        raise DataError(f"{path}: header has {len(table.columns)} data columns, schema "
                        f"{schema.name!r} expects {len(expected)}")
    if not table.provenance:
        raise DataError(f"{path}: no rows")
    nf = schema.n_features
    Y = table.values[:, nf:]
    bad = np.argwhere(np.isnan(Y))
    if bad.size:
        r, c = bad[0]
        raise DataError(f"{path}:{r + 2}: column {schema.targets[c]!r}: missing target value")
    return Dataset(table.values[:, :nf], Y, schema.feature_names, schema.targets,
                   tuple(table.provenance), schema.feature_units)


def load_feature_table(path, target_names: Sequence[str] = ()) -> Dataset:
    """Lenient load: any feature columns; columns named in ``target_names`` become targets."""
    table = read_table(path)
    if not table.provenance:
        raise DataError(f"{path}: no rows")
    tcols = [c for c in table.columns if c in target_names]
    fcols = [c for c in table.columns if c not in target_names]
    fi = [table.columns.index(c) for c in fcols]
    ti = [table.columns.index(c) for c in tcols]
    Y = table.values[:, ti] if ti else np.zeros((len(table.provenance), 0))
    if np.any(np.isnan(Y)):
        raise DataError(f"{path}: missing target values")
    return Dataset(table.values[:, fi], Y, tuple(fcols), tuple(tcols), tuple(table.provenance))


def align_features(ds: Dataset, feature_names: Sequence[str]) -> tuple[np.ndarray, list[str]]:
    """Reorder ``ds`` columns to ``feature_names``; absent columns become NaN.

    Returns the matrix and the names of the columns that were absent.
    """
    X = np.full((len(ds), len(feature_names)), np.nan)
    missing = []
    for j, name in enumerate(feature_names):
        if name in ds.feature_names:
            X[:, j] = ds.X[:, ds.feature_names.index(name)]
        else:
            missing.append(name)
    return X, missing


@dataclass(frozen=True)
class SplitSpec:
    train_fraction: float = 0.7
    mode: str = "random"
    seed: int = 0

    def __post_init__(self):
        if not 0.0 < self.train_fraction < 1.0:
            raise ValueError("train_fraction must lie strictly between 0 and 1")
        if self.mode not in ("random", "by_case"):
            raise ValueError(f"unknown split mode {self.mode!r}")


@dataclass(frozen=True)
class SplitResult:
    train: Dataset
    test: Dataset
    train_rows: tuple[int, ...]
    test_rows: tuple[int, ...]
    spec: SplitSpec

    def __iter__(self):
        return iter((self.train, self.test))

    def report(self) -> str:
        return (f"seed = {self.spec.seed}\nmode = {self.spec.mode}\n"
                f"train_fraction = {self.spec.train_fraction}\n"
                f"train_rows = {' '.join(map(str, self.train_rows))}\n"
                f"test_rows = {' '.join(map(str, self.test_rows))}\n")


def _case_groups(ds: Dataset) -> dict[str, list[int]]:
    groups: dict[str, list[int]] = {}
    for i, (case, _) in enumerate(ds.provenance):
        groups.setdefault(case, []).append(i)
    return groups


def split(ds: Dataset, spec: SplitSpec) -> SplitResult:
    """Partition rows into train and test.

    ``random`` shuffles with the seed and takes the rounded ``fraction * N``
    prefix. ``by_case`` keeps whole cases together, visiting cases from
    largest to smallest and adding one to the training side whenever that
    moves the training row count closer to the target.
    """
    n = len(ds)
    target = spec.train_fraction * n
    if spec.mode == "random":
        n_train = int(math.floor(target + 0.5))
        if n_train == 0 or n_train == n:
            raise DataError(f"train fraction {spec.train_fraction} leaves one side empty for N={n}")
        perm = np.random.default_rng(spec.seed).permutation(n)
        train_rows = sorted(int(i) for i in perm[:n_train])
    else:
        groups = _case_groups(ds)
        order = sorted(groups, key=lambda c: (-len(groups[c]), list(groups).index(c)))
        chosen, count = [], 0
        for case in order:
            size = len(groups[case])
            if abs(count + size - target) < abs(count - target):
                chosen.append(case)
                count += size
        train_rows = sorted(i for c in chosen for i in groups[c])
        if not train_rows or len(train_rows) == n:
            raise DataError("by_case split leaves one side empty")
    test_rows = sorted(set(range(n)) - set(train_rows))
    return SplitResult(ds.subset(train_rows), ds.subset(test_rows),
                       tuple(train_rows), tuple(test_rows), spec)


def union_features(datasets: Iterable[Dataset]) -> Dataset:
    """Stack datasets over the union of their feature columns.

    Columns are sorted by name; cells a dataset does not provide are NaN.
    All datasets must share target names.
    """
    datasets = list(datasets)
    if not datasets:
        raise DataError("nothing to union")
    targets = datasets[0].target_names
    units: dict[str, str] = {}
    for ds in datasets:
        if ds.target_names != targets:
            raise SchemaError(f"target names differ: {targets} vs {ds.target_names}; collapse targets first")
        for j, name in enumerate(ds.feature_names):
            u = ds.feature_units[j] if ds.feature_units is not None else None
            if u is None:
                units.setdefault(name, None)  # type: ignore[arg-type]
                continue
            if units.get(name) not in (None, u):
                raise SchemaError(f"column {name!r} has conflicting units {units[name]!r} and {u!r}")
            units[name] = u
    names = tuple(sorted(units))
    blocks = [align_features(ds, names)[0] for ds in datasets]
    unit_tuple = tuple(units[n] or "" for n in names)
    return Dataset(np.vstack(blocks), np.vstack([ds.Y for ds in datasets]), names, targets,
                   tuple(p for ds in datasets for p in ds.provenance), unit_tuple)


def collapse_targets(ds: Dataset, name: str = "vb_mm", how: str = "max") -> Dataset:
    """Reduce multi-output wear targets (flutes, edges) to one column."""
    if how not in ("max", "mean"):
        raise ValueError("how must be 'max' or 'mean'")
    y = ds.Y.max(axis=1) if how == "max" else ds.Y.mean(axis=1)
    return Dataset(ds.X, y.reshape(-1, 1), ds.feature_names, (name,), ds.provenance, ds.feature_units)


def qualify_cases(ds: Dataset, prefix: str) -> Dataset:
    """Prefix case ids (``nasa:1``) so unions keep provenance unique."""
    prov = tuple((f"{prefix}:{c}", i) for c, i in ds.provenance)
    return Dataset(ds.X, ds.Y, ds.feature_names, ds.target_names, prov, ds.feature_units)
