"""Canonical JSON rendering, atomic file writes, and JSONL logs.

Canonical form means: fixed key order (insertion order of the dicts we
build), compact separators, no ASCII escaping of non-ASCII text. Two equal
values always render to identical bytes, which the serialization contracts
and the detection-log determinism tests rely on.
"""

from __future__ import annotations

import json
import math
import os
import tempfile
from pathlib import Path
from typing import Any, Iterator


def dumps_canonical(obj: Any) -> str:
    """Render ``obj`` compactly with the dict key order preserved."""
    return json.dumps(obj, separators=(",", ":"), ensure_ascii=False, allow_nan=False)


def fmt_number(value: float) -> str:
    """Human-facing number rendering: integral floats lose the trailing .0,
    long binary fractions are trimmed to 12 significant digits."""
    if isinstance(value, int):
        return str(value)
    if math.isfinite(value) and value == int(value) and abs(value) < 1e15:
        return str(int(value))
    return format(value, ".12g")


def atomic_write_text(path: Path, text: str) -> None:
    """Write-temp-then-rename so readers never observe partial content."""
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=path.name, suffix=".tmp")
    try:
        with os.fdopen(fd, "w", encoding="utf-8") as handle:
            handle.write(text)
            handle.flush()
            os.fsync(handle.fileno())
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def append_jsonl(path: Path, obj: Any) -> None:
    """Append one canonical JSON line in a single write call."""
    path.parent.mkdir(parents=True, exist_ok=True)
    line = (dumps_canonical(obj) + "\n").encode("utf-8")
    with open(path, "ab") as handle:
        handle.write(line)
        handle.flush()
        os.fsync(handle.fileno())


def read_jsonl(path: Path) -> Iterator[Any]:
    """Yield parsed lines; a truncated trailing line (crash artifact) is
    ignored rather than raised."""
    if not path.exists():
        return
    with open(path, "rb") as handle:
        raw = handle.read()
    lines = raw.split(b"\n")
    for index, line in enumerate(lines):
        if not line.strip():
            continue
        try:
            yield json.loads(line)
        except json.JSONDecodeError:
            # Only the final non-empty line may be partial; anything earlier
            # is real corruption the caller should hear about.
            if any(later.strip() for later in lines[index + 1 :]):
                raise
            return
