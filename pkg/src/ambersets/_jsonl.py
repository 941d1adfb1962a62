from __future__ import annotations

import json
from pathlib import Path
from typing import Any, Iterable, Iterator

from .errors import ParseError


def dumps(obj: Any) -> str:
    # sort_keys + fixed separators keep outputs byte-stable across runs
    return json.dumps(obj, sort_keys=True, ensure_ascii=False, separators=(",", ":"))


def iter_lines(path: str | Path) -> Iterator[tuple[int, str]]:
    """Yield (lineno, line) for non-blank lines of a UTF-8 file."""
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, 1):
            if line.strip():
                yield lineno, line


def iter_records(path: str | Path) -> Iterator[tuple[int, dict]]:
    for lineno, line in iter_lines(path):
        try:
            obj = json.loads(line)
        except json.JSONDecodeError as exc:
            raise ParseError(f"invalid JSON ({exc.msg})", lineno, path) from None
        if not isinstance(obj, dict):
            raise ParseError("record is not a JSON object", lineno, path)
        yield lineno, obj


def write_records(path: str | Path, records: Iterable[Any]) -> int:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    n = 0
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        for rec in records:
            fh.write(dumps(rec))
            fh.write("\n")
            n += 1
    return n
