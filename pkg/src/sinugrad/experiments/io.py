"""Experiment persistence: deterministic CSV, JSON manifests, sample files.

CSV cells are formatted with ``repr`` for floats (shortest round-trip
form), so a re-run with the same configuration and seed reproduces the
files byte for byte. Vector-valued cells join their elements with ``;``.
Wall-clock times and other run-varying facts belong in the manifest, never
in the CSVs.
"""

import csv
import json
import os

import numpy as np

from ..errors import SampleFileError, ValidationError

__all__ = [
    "format_cell",
    "parse_float_list",
    "write_csv",
    "read_csv",
    "write_manifest",
    "trace_filename",
    "write_trace",
    "load_samples",
    "BINARY_EXTENSIONS",
]

BINARY_EXTENSIONS = (".f64", ".bin", ".raw")


def format_cell(value) -> str:
    """One CSV cell: '' for None, repr for floats, ';'-joined for vectors."""
    if value is None:
        return ""
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    if isinstance(value, (float, np.floating)):
        return repr(float(value))
    if isinstance(value, str):
        if any(c in value for c in ",\"\n\r;"):
            raise ValidationError(f"cell value {value!r} contains CSV delimiter characters")
        return value
    if isinstance(value, (list, tuple, np.ndarray)):
        return ";".join(format_cell(v) for v in value)
    raise ValidationError(f"cannot format {type(value).__name__} as a CSV cell")


def parse_float_list(cell: str) -> np.ndarray:
    """Inverse of a ';'-joined float cell; '' parses to an empty array."""
    if cell == "":
        return np.empty(0)
    return np.array([float(part) for part in cell.split(";")])


def write_csv(path, header, rows) -> None:
    """Write rows of cell values under a header, with LF line endings."""
    with open(path, "w", encoding="utf-8", newline="") as handle:
        handle.write(",".join(header) + "\n")
        for row in rows:
            if len(row) != len(header):
                raise ValidationError(
                    f"row has {len(row)} cells but header has {len(header)}"
                )
            handle.write(",".join(format_cell(cell) for cell in row) + "\n")


def read_csv(path) -> tuple[list, list]:
    """Read back (header, rows) with all cells as strings."""
    with open(path, "r", encoding="utf-8", newline="") as handle:
        reader = csv.reader(handle)
        try:
            header = next(reader)
        except StopIteration:
            raise ValidationError(f"{path}: empty CSV") from None
        return header, list(reader)


def write_manifest(path, payload: dict) -> None:
    """Pretty-printed JSON manifest (config hash, versions, timings...)."""
    with open(path, "w", encoding="utf-8") as handle:
        json.dump(payload, handle, indent=2, sort_keys=True)
        handle.write("\n")


def trace_filename(trace_id: str) -> str:
    return f"trace_{trace_id}.csv"


def write_trace(out_dir, trace_id: str, trace) -> str:
    """Persist one fit trajectory; returns the file name written."""
    name = trace_filename(trace_id)
    rows = [[point.step, point.loss, point.metric_db] for point in trace]
    write_csv(os.path.join(out_dir, name), ["step", "loss", "metric_db"], rows)
    return name


def _load_binary_samples(path: str) -> np.ndarray:
    size = os.path.getsize(path)
    if size % 8 != 0:
        raise SampleFileError(
            f"{path}: trailing {size % 8} bytes at offset {size - size % 8} are not a "
            "complete little-endian float64"
        )
    data = np.fromfile(path, dtype="<f8")
    bad = np.flatnonzero(~np.isfinite(data))
    if bad.size:
        raise SampleFileError(
            f"{path}: non-finite sample at byte offset {int(bad[0]) * 8}"
        )
    return data.astype(np.float64)


def _load_text_samples(path: str) -> np.ndarray:
    values = []
    with open(path, "r", encoding="utf-8") as handle:
        for lineno, line in enumerate(handle, start=1):
            text = line.strip()
            if not text:
                continue
            try:
                value = float(text)
            except ValueError:
                raise SampleFileError(
                    f"{path}: line {lineno}: {text!r} is not a number"
                ) from None
            if not np.isfinite(value):
                raise SampleFileError(f"{path}: line {lineno}: non-finite sample {text}")
            values.append(value)
    return np.array(values, dtype=np.float64)


def load_samples(path: str) -> np.ndarray:
    """Load a target signal from disk.

    Files ending in .f64/.bin/.raw are read as little-endian float64;
    anything else is headerless text with one float per line (blank lines
    skipped). At least two samples are required.
    """
    if not os.path.exists(path):
        raise SampleFileError(f"{path}: no such file")
    ext = os.path.splitext(path)[1].lower()
    data = _load_binary_samples(path) if ext in BINARY_EXTENSIONS else _load_text_samples(path)
    if data.size < 2:
        raise SampleFileError(f"{path}: need at least 2 samples, got {data.size}")
    return data
