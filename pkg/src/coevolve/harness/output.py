"""CSV artifacts with a versioned schema comment on the first line."""

from __future__ import annotations

import csv
import os
from pathlib import Path

import numpy as np

SCHEMA_VERSION = 1
OUTPUT_ENV = "COEVOLVE_OUTPUT_DIR"
DEFAULT_OUTPUT = "coevolve-output"


def output_dir(explicit=None) -> Path:
    """``explicit`` if given, else $COEVOLVE_OUTPUT_DIR, else ./coevolve-output."""
    if explicit:
        return Path(explicit)
    return Path(os.environ.get(OUTPUT_ENV) or DEFAULT_OUTPUT)


def _format(value) -> str:
    if isinstance(value, (float, np.floating)):
        return repr(float(value))
    if isinstance(value, np.integer):
        return str(int(value))
    return str(value)


def write_csv(path, kind: str, columns, rows) -> Path:
    """Write ``rows`` (sequences or dicts keyed by column) below a schema comment."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("w", newline="") as fh:
        fh.write(f"# coevolve-csv schema={SCHEMA_VERSION} kind={kind}\n")
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(columns)
        for row in rows:
            if isinstance(row, dict):
                row = [row.get(c, "") for c in columns]
            writer.writerow([_format(v) for v in row])
    return path


def read_csv(path):
    """Return (schema comment, header, rows as dicts of strings)."""
    with Path(path).open() as fh:
        comment = fh.readline().rstrip("\n")
        if not comment.startswith("# coevolve-csv"):
            raise ValueError(f"{path} lacks the coevolve schema comment")
        reader = csv.DictReader(fh)
        rows = list(reader)
        return comment, reader.fieldnames, rows
