"""Shared file-format helpers for the CSV/JSON interchange files.

CSV files carry '#'-prefixed ``key=value`` metadata lines before the header
row; floats are written with repr precision so that files round-trip exactly.
Writes go through a temporary file plus rename so readers never observe a
partially written file.
"""

from __future__ import annotations

import os
import tempfile

__all__ = ["fmt", "atomic_write_text", "split_csv", "SchemaError"]


class SchemaError(ValueError):
    """An interchange file does not match the expected schema."""


def fmt(x) -> str:
    """Format a float with full round-trip precision."""
    return format(float(x), ".17g")


def atomic_write_text(path, text: str) -> None:
    path = os.fspath(path)
    directory = os.path.dirname(path) or "."
    fd, tmp = tempfile.mkstemp(dir=directory, prefix=".tmp-", suffix="~")
    try:
        with os.fdopen(fd, "w") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        try:
            os.unlink(tmp)
        except OSError:
            pass
        raise


def split_csv(text: str, expected_columns):
    """Split CSV text into (meta dict, list of row value-lists).

    Metadata lines are '# key=value'.  The header row must contain exactly
    ``expected_columns``; a mismatch raises :class:`SchemaError` naming the
    offending column.
    """
    meta = {}
    header = None
    rows = []
    for line in text.splitlines():
        line = line.strip()
        if not line:
            continue
        if line.startswith("#"):
            body = line.lstrip("#").strip()
            if "=" in body:
                key, _, value = body.partition("=")
                meta[key.strip()] = value.strip()
            continue
        cells = [c.strip() for c in line.split(",")]
        if header is None:
            header = cells
            expected = list(expected_columns)
            if header != expected:
                missing = [c for c in expected if c not in header]
                extra = [c for c in header if c not in expected]
                detail = []
                if missing:
                    detail.append(f"missing column(s) {missing}")
                if extra:
                    detail.append(f"unexpected column(s) {extra}")
                if not detail:
                    detail.append(f"column order must be {expected}")
                raise SchemaError("bad CSV header: " + "; ".join(detail))
            continue
        if len(cells) != len(header):
            raise SchemaError(
                f"row has {len(cells)} cells, expected {len(header)}: {line!r}")
        rows.append(cells)
    if header is None:
        raise SchemaError(f"no header row found (expected {list(expected_columns)})")
    return meta, rows
