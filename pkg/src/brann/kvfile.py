"""Tiny ``key = value`` file format with ``[section]`` headers and ``#`` comments.

Unlike configparser this keeps the line number of every entry so that
semantic errors can point at ``file:line``.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path


class KVError(ValueError):
    def __init__(self, path, line: int | None, message: str):
        where = f"{path}:{line}" if line else str(path)
        super().__init__(f"{where}: {message}")
        self.path, self.line = path, line


@dataclass
class Section:
    name: str
    line: int
    entries: dict[str, tuple[str, int]] = field(default_factory=dict)

    def get(self, key: str, default=None):
        return self.entries[key][0] if key in self.entries else default

    def line_of(self, key: str) -> int:
        return self.entries[key][1] if key in self.entries else self.line


def parse(text: str, path="<string>") -> list[Section]:
    sections = [Section("", 0)]
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if line.startswith("["):
            if not line.endswith("]"):
                raise KVError(path, lineno, f"malformed section header {raw.strip()!r}")
            sections.append(Section(line[1:-1].strip(), lineno))
            continue
        key, sep, value = line.partition("=")
        if not sep or not key.strip():
            raise KVError(path, lineno, f"expected 'key = value', got {raw.strip()!r}")
        key = key.strip()
        if key in sections[-1].entries:
            raise KVError(path, lineno, f"duplicate key {key!r}")
        sections[-1].entries[key] = (value.strip(), lineno)
    return sections


def load(path) -> list[Section]:
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise KVError(path, None, str(exc)) from exc
    return parse(text, path)
