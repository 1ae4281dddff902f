"""Deterministic synthetic data: the noisy-sine benchmark, an mRMR fixture and milling-like runs.

Everything here is seeded through ``numpy.random.default_rng`` so fixtures
are reproducible byte for byte.
"""

from __future__ import annotations

from pathlib import Path

import numpy as np

from .data import Dataset, FeatureSchema
from .features import CutRecord, build_rows, rows_to_dataset


def noisy_sine(seed: int, n_train: int = 60, n_test: int = 40, noise: float = 0.05,
               freq: float = 3.0) -> tuple[Dataset, Dataset]:
    """``y = sin(freq * x) + N(0, noise^2)`` with ``x ~ U[-1, 1]``.

    The first ``n_train`` draws form the training set and the rest the test set.
    """
    rng = np.random.default_rng(seed)
    n = n_train + n_test
    x = rng.uniform(-1.0, 1.0, n)
    y = np.sin(freq * x) + rng.normal(0.0, noise, n)
    prov = [("sine", i + 1) for i in range(n)]
    full = Dataset(x.reshape(-1, 1), y.reshape(-1, 1), ("x",), ("y",), tuple(prov))
    return full.subset(range(n_train)), full.subset(range(n_train, n))


def redundant_features(n: int = 200, seed: int = 0, noise: float = 0.05) -> tuple[np.ndarray, np.ndarray]:
    """Columns ``f0 = y + small noise``, ``f1 = f0`` (exact duplicate), ``f2`` independent noise."""
    rng = np.random.default_rng(seed)
    y = rng.uniform(0.0, 1.0, n)
    f0 = y + rng.normal(0.0, noise, n)
    f2 = rng.normal(0.0, 1.0, n)
    return np.column_stack([f0, f0.copy(), f2]), y


def _wear_curve(n_cuts: int, rate: float) -> np.ndarray:
    # break-in, steady growth, then accelerating wear near end of life
    n = np.arange(1, n_cuts + 1) / n_cuts
    return 0.08 + rate * (0.25 * (1 - np.exp(-8 * n)) + 0.35 * n + 0.4 * n ** 4)


def synthetic_cuts(schema: FeatureSchema, n_cases: int = 4, n_cuts: int = 12, samples: int = 40,
                   seed: int = 0, unmeasured_every: int = 5) -> list[CutRecord]:
    """Milling-like runs for ``schema``: sensor levels grow with flank wear.

    Every ``unmeasured_every``-th cut has no wear measurement (0 disables).
    """
    rng = np.random.default_rng(seed)
    channels = [c.name for c in schema.channels]
    base = rng.uniform(0.5, 2.0, len(channels))
    gain = rng.uniform(0.5, 3.0, len(channels))
    cuts = []
    for case in range(1, n_cases + 1):
        params = {p.name: float(np.round(rng.uniform(0.5, 1.5), 3)) for p in schema.process_params}
        rate = 0.6 + 0.3 * sum(params.values()) / max(1, len(params)) + rng.uniform(-0.1, 0.1)
        vb = _wear_curve(n_cuts, rate)
        for i in range(n_cuts):
            level = base * (1.0 + gain * vb[i])
            t = np.linspace(0, 2 * np.pi, samples)
            signals = {}
            for j, ch in enumerate(channels):
                wave = level[j] * (1 + 0.3 * np.sin(t * (j + 1))) + rng.normal(0, 0.05, samples)
                signals[ch] = np.round(wave, 6)
            measured = not (unmeasured_every and (i + 1) % unmeasured_every == 0)
            if measured:
                spread = 1.0 + 0.05 * np.arange(len(schema.targets))
                target = tuple(float(np.round(vb[i] * s, 4)) for s in spread)
            else:
                target = None
            cuts.append(CutRecord(str(case), i + 1, params, signals, target))
    return cuts


def synthetic_dataset(schema: FeatureSchema, seed: int = 0, **kwargs) -> Dataset:
    rows, _ = build_rows(synthetic_cuts(schema, seed=seed, **kwargs), schema)
    return rows_to_dataset(rows, schema)


def write_manifest(directory, schema: FeatureSchema, cuts: list[CutRecord]) -> Path:
    """Write ``manifest.txt``, ``vb.csv`` and per-cut signal files under ``directory``."""
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    pattern = "signals/{case_id}/cut{cut_index}_{channel}.csv"
    lines = ["[dataset]", f"schema = {schema.name}", "vb_file = vb.csv",
             f"signal_pattern = {pattern}", "cumulative = true", ""]
    seen = {}
    for cut in cuts:
        seen.setdefault(cut.case_id, cut.process_params)
    for case, params in seen.items():
        lines.append(f"[case {case}]")
        lines.extend(f"{k} = {v!r}" for k, v in params.items())
        lines.append("")
    (directory / "manifest.txt").write_text("\n".join(lines))
    vb_lines = [",".join(("case_id", "cut_index", *schema.targets))]
    for cut in cuts:
        cells = ["" for _ in schema.targets] if cut.vb is None else [repr(v) for v in cut.vb]
        vb_lines.append(",".join((cut.case_id, str(cut.cut_index), *cells)))
        for ch, series in cut.signals.items():
            path = directory / pattern.format(case_id=cut.case_id, cut_index=cut.cut_index, channel=ch)
            path.parent.mkdir(parents=True, exist_ok=True)
            path.write_text("value\n" + "\n".join(repr(float(v)) for v in series.values) + "\n")
    (directory / "vb.csv").write_text("\n".join(vb_lines) + "\n")
    return directory / "manifest.txt"
