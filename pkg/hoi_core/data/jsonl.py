# -*- coding: utf-8 -*-
"""Line-delimited JSON helpers shared by every file format."""

import json
from pathlib import Path
from typing import Any, Dict, Iterable, List, Tuple, Union

from ..errors import ValidationError

PathLike = Union[str, Path]


def write_jsonl(path: PathLike, records: Iterable[Dict[str, Any]]) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", encoding="utf-8", newline="\n") as f:
        for record in records:
            f.write(json.dumps(record, separators=(",", ":"), allow_nan=False))
            f.write("\n")


def read_jsonl(path: PathLike) -> List[Tuple[int, Dict[str, Any]]]:
    """(line number, record) pairs; blank lines are skipped."""
    path = Path(path)
    if not path.is_file():
        raise ValidationError(f"file not found: {path}")
    records = []
    with open(path, "r", encoding="utf-8") as f:
        try:
            lines = list(f)
        except UnicodeDecodeError as e:
            raise ValidationError(f"{path}: not UTF-8 text: {e.reason}") from e
    for lineno, line in enumerate(lines, start=1):
        if not line.strip():
            continue
        try:
            records.append((lineno, json.loads(line)))
        except json.JSONDecodeError as e:
            raise ValidationError(f"{path}:{lineno}: invalid JSON: {e.msg}") from e
    if not records:
        raise ValidationError(f"{path} is empty")
    return records
