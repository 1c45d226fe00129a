"""UCR dataset files and CSV reports."""
from __future__ import annotations

import csv
import os
import re
from pathlib import Path

import numpy as np

from ..core import Dataset, ValidationError


class DataError(ValidationError):
    """Input data is missing, unreadable or malformed."""


REPORT_HEADER = (
    "dataset", "technique", "error_kind", "sigma", "param",
    "precision", "precision_ci", "recall", "recall_ci", "f1", "f1_ci",
    "mean_query_ms", "queries", "skipped",
)
_TEXT = {"dataset", "technique", "error_kind", "param"}
_INT = {"queries", "skipped"}
_SUFFIXES = ("", ".tsv", ".csv", ".txt")


def _split(line: str, comma: bool):
    return [c.strip() for c in line.split(",")] if comma else line.split()


def read_ucr_file(path):
    """``(labels, values)`` from one UCR file: a label then the values on every row.

    The delimiter (comma or whitespace) is detected from the first data row.
    """
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise DataError(f"cannot read {path}: {exc.strerror or exc}") from None
    rows = [(i + 1, ln) for i, ln in enumerate(text.splitlines()) if ln.strip()]
    if not rows:
        raise DataError(f"{path}: no data rows")
    comma = "," in rows[0][1]
    labels, values, width = [], [], None
    for lineno, line in rows:
        cells = _split(line, comma)
        if width is None:
            width = len(cells)
            if width < 2:
                raise DataError(f"{path}: row {lineno} has no values after the label")
        elif len(cells) != width:
            raise DataError(
                f"{path}: row {lineno} has {len(cells) - 1} values, expected {width - 1}"
            )
        parsed = []
        for col, cell in enumerate(cells):
            try:
                parsed.append(float(cell))
            except ValueError:
                raise DataError(f"{path}: non-numeric cell {cell!r} at row {lineno}, column {col + 1}") from None
        labels.append(parsed[0])
        values.append(parsed[1:])
    return np.array(labels), np.array(values, dtype=np.float64)


def load_ucr(path_train, path_test, name=None) -> Dataset:
    """Training and test files joined into one dataset (train rows first)."""
    lab_a, val_a = read_ucr_file(path_train)
    lab_b, val_b = read_ucr_file(path_test)
    if val_a.shape[1] != val_b.shape[1]:
        raise DataError(
            f"series length differs between {path_train} ({val_a.shape[1]}) and {path_test} ({val_b.shape[1]})"
        )
    if name is None:
        name = re.sub(r"_TRAIN$", "", Path(path_train).stem)
    try:
        return Dataset(name, np.vstack([val_a, val_b]), np.concatenate([lab_a, lab_b]))
    except ValidationError as exc:
        raise DataError(f"{name}: {exc}") from None


def _find(directory: Path, stem: str):
    for suffix in _SUFFIXES:
        p = directory / f"{stem}{suffix}"
        if p.is_file():
            return p
    return None


def load_dataset(data_dir, name: str) -> Dataset:
    """Find ``<name>_TRAIN`` / ``<name>_TEST`` in ``data_dir/<name>/`` or ``data_dir/``."""
    base = Path(data_dir)
    for directory in (base / name, base):
        train, test = _find(directory, f"{name}_TRAIN"), _find(directory, f"{name}_TEST")
        if train and test:
            return load_ucr(train, test, name)
    raise DataError(f"dataset {name!r} not found under {base}")


def write_ucr_file(path, values, labels=None):
    """Write rows as ``label,v1,...,vn`` with full float precision."""
    values = np.atleast_2d(np.asarray(values, dtype=np.float64))
    labels = np.zeros(values.shape[0]) if labels is None else np.asarray(labels)
    try:
        with open(path, "w") as fh:
            for lab, row in zip(labels, values):
                fh.write(",".join([f"{lab:g}"] + [repr(float(v)) for v in row]) + "\n")
    except OSError as exc:
        raise DataError(f"cannot write {path}: {exc.strerror or exc}") from None


def _fmt(name, value):
    if name in _TEXT:
        return str(value)
    if name in _INT:
        return str(int(value))
    return f"{float(value):.6f}"


def report_rows(report):
    cells = report.sorted_cells() if hasattr(report, "sorted_cells") else list(report)
    return [[_fmt(h, getattr(c, h)) for h in REPORT_HEADER] for c in cells]


def write_report(report, path):
    """CSV with one row per cell, sorted by (dataset, technique, sigma, param)."""
    try:
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(REPORT_HEADER)
            w.writerows(report_rows(report))
    except OSError as exc:
        raise DataError(f"cannot write {path}: {exc.strerror or exc}") from None


def read_report(path):
    """Rows of a report CSV as dicts with numeric columns converted."""
    try:
        with open(path, newline="") as fh:
            reader = csv.DictReader(fh)
            if tuple(reader.fieldnames or ()) != REPORT_HEADER:
                raise DataError(f"{path}: unexpected report header")
            out = []
            for row in reader:
                out.append({k: (v if k in _TEXT else int(v) if k in _INT else float(v)) for k, v in row.items()})
            return out
    except OSError as exc:
        raise DataError(f"cannot read {path}: {exc.strerror or exc}") from None
