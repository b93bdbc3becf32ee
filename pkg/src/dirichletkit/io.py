"""CSV ingest and atomic CSV/JSON output."""

from __future__ import annotations

import csv
import io
import json
import os
import tempfile
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .exceptions import IngestError

SCHEMA_VERSION = 1


@dataclass(frozen=True)
class Table:
    """Numeric table read from CSV; missing entries are ``NaN``.

    ``lines`` holds the 1-based file line of each data row.
    """

    values: np.ndarray
    columns: list
    lines: tuple = ()

    @property
    def has_missing(self):
        return bool(np.isnan(self.values).any())


def _is_number(text):
    try:
        float(text)
    except ValueError:
        return False
    return True


def read_csv(path, missing_token="NA", zeros_as_missing=False):
    """Read a comma-delimited UTF-8 file of numbers.

    The first row is taken as a header when any of its fields is neither a
    number nor the missing token. Blank fields count as missing. Errors carry
    the 1-based file row and column.

    Returns
    -------
    Table
    """
    try:
        with open(path, newline="", encoding="utf-8") as fh:
            rows = list(csv.reader(fh))
    except UnicodeDecodeError as exc:
        raise IngestError(f"{path} is not valid UTF-8") from exc
    except OSError as exc:
        raise IngestError(f"cannot read {path}: {exc.strerror}") from exc

    numbered = [(i + 1, r) for i, r in enumerate(rows) if any(f.strip() for f in r)]
    if not numbered:
        raise IngestError(f"{path} has no data")
    first = [f.strip() for f in numbered[0][1]]
    header = any(f and f != missing_token and not _is_number(f) for f in first)
    if header:
        columns = first
        numbered = numbered[1:]
        if not numbered:
            raise IngestError(f"{path} has a header but no data rows")
    else:
        columns = [f"x{j + 1}" for j in range(len(first))]

    width = len(columns)
    out = np.empty((len(numbered), width))
    for r, (lineno, fields) in enumerate(numbered):
        if len(fields) != width:
            raise IngestError(f"expected {width} fields, found {len(fields)}", row=lineno)
        for c, raw in enumerate(fields):
            text = raw.strip()
            if text == "" or text == missing_token:
                out[r, c] = np.nan
                continue
            try:
                v = float(text)
            except ValueError:
                raise IngestError(f"cannot parse {raw!r} as a number", row=lineno, column=c + 1) from None
            if not np.isfinite(v):
                raise IngestError(f"non-finite value {raw!r}", row=lineno, column=c + 1)
            if v < 0:
                raise IngestError(f"negative value {v:g}", row=lineno, column=c + 1)
            if v == 0 and not zeros_as_missing:
                raise IngestError("zero entry; pass zeros-as-missing to impute it", row=lineno, column=c + 1)
            out[r, c] = np.nan if v == 0 else v
    return Table(out, columns, tuple(lineno for lineno, _ in numbered))


def atomic_write_text(path, text):
    """Write via a temporary file in the same directory and rename over ``path``."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(prefix=f".{path.name}.", dir=path.parent)
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def csv_text(values, columns=None, missing_token="NA"):
    """Format a 2-D array with full float precision (``repr``); NaN becomes ``missing_token``."""
    values = np.atleast_2d(np.asarray(values, dtype=float))
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    if columns is not None:
        w.writerow(columns)
    for row in values:
        w.writerow([missing_token if np.isnan(v) else repr(float(v)) for v in row])
    return buf.getvalue()


def write_csv(path, values, columns=None, missing_token="NA"):
    atomic_write_text(path, csv_text(values, columns, missing_token))


def _clean(obj):
    if isinstance(obj, dict):
        return {str(k): _clean(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_clean(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return _clean(obj.tolist())
    if isinstance(obj, (np.floating, np.integer, np.bool_)):
        obj = obj.item()
    if isinstance(obj, float) and not np.isfinite(obj):
        return None
    return obj


def to_json(payload):
    """Serialise with ``schema_version`` first; NaN and infinities become null."""
    body = _clean({"schema_version": SCHEMA_VERSION, **payload})
    return json.dumps(body, indent=2, allow_nan=False) + "\n"


def write_json(path, payload):
    atomic_write_text(path, to_json(payload))
