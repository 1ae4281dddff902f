from __future__ import annotations

import math
from dataclasses import dataclass, field
from pathlib import Path

from .config import StopReason

TRACE_HEADER = ("epoch", "objective", "sse", "ssw", "alpha", "beta", "gamma", "mu", "grad_norm")


@dataclass(frozen=True)
class TraceRow:
    epoch: int
    objective: float
    sse: float
    ssw: float
    alpha: float
    beta: float
    gamma: float
    mu: float
    grad_norm: float

    def values(self) -> tuple:
        return (self.epoch, self.objective, self.sse, self.ssw, self.alpha,
                self.beta, self.gamma, self.mu, self.grad_norm)


@dataclass
class TrainingTrace:
    rows: list[TraceRow] = field(default_factory=list)
    stop_reason: StopReason | None = None
    # free-form notes: clamps, line-search fallbacks, aborts
    events: list[str] = field(default_factory=list)
    best_epoch: int = 0

    def append(self, row: TraceRow) -> None:
        if self.rows and row.epoch <= self.rows[-1].epoch:
            raise ValueError("trace epochs must be strictly increasing")
        if not math.isfinite(row.objective):
            raise ValueError(f"non-finite objective at epoch {row.epoch}")
        self.rows.append(row)

    def column(self, name: str) -> list[float]:
        idx = TRACE_HEADER.index(name)
        return [r.values()[idx] for r in self.rows]

    @property
    def last(self) -> TraceRow:
        return self.rows[-1]

    def __len__(self) -> int:
        return len(self.rows)

    def to_csv(self) -> str:
        lines = [",".join(TRACE_HEADER)]
        for row in self.rows:
            lines.append(",".join(str(row.epoch) if i == 0 else repr(float(v))
                                  for i, v in enumerate(row.values())))
        return "\n".join(lines) + "\n"

    def write(self, path, config: dict | None = None) -> None:
        """Write ``<path>`` (CSV) and ``<path>.meta.txt`` (stop reason, config echo)."""
        path = Path(path)
        path.write_text(self.to_csv())
        meta = [f"stop_reason = {self.stop_reason.value if self.stop_reason else ''}",
                f"best_epoch = {self.best_epoch}",
                f"epochs = {len(self.rows)}"]
        for key, value in sorted((config or {}).items()):
            meta.append(f"config.{key} = {value}")
        meta.extend(f"event = {e}" for e in self.events)
        path.with_name(path.name + ".meta.txt").write_text("\n".join(meta) + "\n")


def read_trace_csv(path) -> list[dict[str, float]]:
    lines = Path(path).read_text().splitlines()
    if not lines or tuple(lines[0].split(",")) != TRACE_HEADER:
        raise ValueError(f"{path}: unexpected trace header")
    out = []
    for line in lines[1:]:
        vals = line.split(",")
        out.append({k: (int(v) if k == "epoch" else float(v)) for k, v in zip(TRACE_HEADER, vals)})
    return out
