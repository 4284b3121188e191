"""Small shared helpers: atomic file writes and threshold encoding."""

from __future__ import annotations

import math
import os
import tempfile
from pathlib import Path


def atomic_write_text(path: str | Path, text: str) -> None:
    """Write `text` to `path` via a temp file + rename.

    Either the complete file appears at `path` or nothing does; a failure
    mid-write leaves no partial output behind.
    """
    path = Path(path)
    fd, tmp_name = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.", suffix=".tmp")
    try:
        with os.fdopen(fd, "w", encoding="utf-8") as fh:
            fh.write(text)
        os.replace(tmp_name, path)
    except BaseException:
        try:
            os.unlink(tmp_name)
        except OSError:
            pass
        raise


def parse_threshold(value: str | float | int) -> float:
    """Parse a threshold that may be a number or the "+inf"/"-inf" sentinels."""
    if isinstance(value, bool):
        raise ValueError(f"not a threshold: {value!r}")
    if isinstance(value, (int, float)):
        out = float(value)
    elif isinstance(value, str):
        text = value.strip().lower()
        if text in ("+inf", "inf", "+infinity", "infinity"):
            return math.inf
        if text in ("-inf", "-infinity"):
            return -math.inf
        try:
            out = float(text)
        except ValueError:
            raise ValueError(f"not a threshold: {value!r}") from None
    else:
        raise ValueError(f"not a threshold: {value!r}")
    if math.isnan(out):
        raise ValueError("threshold may not be NaN")
    return out


def encode_threshold(value: float) -> float | str:
    """Inverse of parse_threshold for JSON payloads: ±inf become strings."""
    if value == math.inf:
        return "+inf"
    if value == -math.inf:
        return "-inf"
    return float(value)


def format_float(x: float) -> str:
    """Fixed decimal formatting used for exported tables (12 significant digits)."""
    return f"{x:.12g}"
