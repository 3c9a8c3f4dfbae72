"""Deterministic, bit-exact output emission.

CSV files are RFC-4180 with LF line endings and a header row; exact
rationals are written as "num/den" strings (never decimals) and floats as
the shortest round-tripping decimal.  All files are written atomically
(temp file in the target directory, then rename).
"""

import csv
import json
import os
import tempfile
from fractions import Fraction


def format_cell(value) -> str:
    if isinstance(value, Fraction):
        return str(value)
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, float):
        return repr(value)
    if isinstance(value, int):
        return str(value)
    if value is None:
        return ""
    return str(value)


def _atomic_write(path: str, writer_fn) -> None:
    directory = os.path.dirname(os.path.abspath(path)) or "."
    os.makedirs(directory, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=directory, prefix=".tmp-", suffix=".part")
    try:
        with os.fdopen(fd, "w", newline="") as handle:
            writer_fn(handle)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def emit_csv(path: str, header, rows) -> None:
    """Write header + rows; empty rows still produce a header-only file."""

    def write(handle):
        writer = csv.writer(handle, lineterminator="\n")
        writer.writerow(list(header))
        for row in rows:
            writer.writerow([format_cell(v) for v in row])

    _atomic_write(path, write)


def parse_csv(path: str):
    """Read back (header, rows-of-strings); inverse of emit_csv up to types."""
    with open(path, newline="") as handle:
        reader = csv.reader(handle)
        rows = list(reader)
    if not rows:
        return [], []
    return rows[0], rows[1:]


def write_json(path: str, payload: dict) -> None:
    def write(handle):
        json.dump(payload, handle, indent=2, sort_keys=True)
        handle.write("\n")

    _atomic_write(path, write)
