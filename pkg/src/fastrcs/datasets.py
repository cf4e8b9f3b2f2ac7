"""CSV ingestion and the concrete slump case-study data."""

from __future__ import annotations

import csv
import math
import os
import tempfile
from pathlib import Path

import numpy as np

from .rcs import Dataset

SLUMP_ENV = "FASTRCS_SLUMP"
SLUMP_COLUMNS = ["cement", "slag", "fly_ash", "water", "superplasticizer",
                 "coarse_aggregate", "fine_aggregate", "strength"]
SLUMP_N_OLD = 35
SLUMP_N_NEW = 24


class CsvFormatError(ValueError):
    """Input CSV is unreadable or not a numeric table."""


def read_table(path):
    """Read a headed numeric CSV into ``(names, array)``; NaN and inf are rejected."""
    try:
        with open(path, newline="", encoding="utf-8") as fh:
            rows = [r for r in csv.reader(fh) if r and not r[0].startswith("#")]
    except (OSError, UnicodeDecodeError) as exc:
        raise CsvFormatError(f"cannot read {path}: {exc}") from exc
    if len(rows) < 2:
        raise CsvFormatError(f"{path}: need a header row and at least one data row")
    names = [c.strip() for c in rows[0]]
    if len(set(names)) != len(names):
        raise CsvFormatError(f"{path}: duplicate column names")
    values = np.empty((len(rows) - 1, len(names)))
    for i, row in enumerate(rows[1:], start=2):
        if len(row) != len(names):
            raise CsvFormatError(f"{path}:{i}: expected {len(names)} fields, got {len(row)}")
        for j, cell in enumerate(row):
            try:
                v = float(cell)
            except ValueError:
                raise CsvFormatError(f"{path}:{i}: non-numeric value {cell!r}") from None
            if not math.isfinite(v):
                raise CsvFormatError(f"{path}:{i}: non-finite value {cell!r}")
            values[i - 2, j] = v
    return names, values


def load_csv(path, response):
    """Load a CSV as a :class:`Dataset`; every column except ``response`` is a predictor.

    Returns ``(dataset, predictor_names)``.
    """
    names, values = read_table(path)
    if response not in names:
        raise CsvFormatError(f"{path}: no column named {response!r}")
    j = names.index(response)
    predictors = [c for c in names if c != response]
    X = np.delete(values, j, axis=1)
    try:
        data = Dataset(X, values[:, j])
    except ValueError as exc:
        raise CsvFormatError(f"{path}: {exc}") from exc
    return data, predictors


def prepare_slump(raw):
    """Filter the UCI ``slump_test.data`` table down to the 59-row case study.

    Rows whose slag or fly-ash content is exactly zero are dropped; the 28-day
    compressive strength is the response. Returns ``(X, y)`` in file order.
    """
    names, values = read_table(raw)
    lower = [n.lower() for n in names]

    def col(prefix):
        hits = [i for i, n in enumerate(lower) if n.startswith(prefix)]
        if not hits:
            raise CsvFormatError(f"{raw}: missing column starting with {prefix!r}")
        return values[:, hits[0]]

    X = np.column_stack([col("cement"), col("slag"), col("fly ash"), col("water"),
                         col("sp"), col("coarse"), col("fine")])
    y = col("compressive")
    keep = (X[:, 1] != 0) & (X[:, 2] != 0)
    return X[keep], y[keep]


def write_slump_csv(X, y, path):
    def write(fh):
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(SLUMP_COLUMNS)
        for row, target in zip(X, y):
            w.writerow([repr(float(v)) for v in row] + [repr(float(target))])

    atomic_write(path, write)


def slump_path():
    """Location of the prepared slump CSV, or None when it is not installed."""
    candidates = []
    if os.environ.get(SLUMP_ENV):
        candidates.append(Path(os.environ[SLUMP_ENV]))
    candidates.append(Path(__file__).parent / "data" / "slump.csv")
    candidates.append(Path(__file__).resolve().parents[2] / "data" / "slump.csv")
    for c in candidates:
        if c.is_file():
            return c
    return None


def load_slump(path=None):
    """The 59-row slump data; returns ``(dataset, is_new_batch)``.

    The first 35 rows are the older measurements, the last 24 the newer ones.
    """
    path = Path(path) if path else slump_path()
    if path is None:
        raise FileNotFoundError(
            "slump data not found; run `fastrcs prepare-slump slump_test.data data/slump.csv` "
            f"or point {SLUMP_ENV} at the prepared CSV")
    data, _ = load_csv(path, "strength")
    if data.n != SLUMP_N_OLD + SLUMP_N_NEW:
        raise CsvFormatError(f"{path}: expected 59 rows, found {data.n}")
    is_new = np.zeros(data.n, dtype=bool)
    is_new[SLUMP_N_OLD:] = True
    return data, is_new


def atomic_write(path, writer):
    """Call ``writer(fh)`` on a temporary file, then move it onto ``path``."""
    path = os.fspath(path)
    d = os.path.dirname(os.path.abspath(path))
    fd, tmp = tempfile.mkstemp(dir=d, prefix=".tmp-")
    try:
        with os.fdopen(fd, "w", newline="", encoding="utf-8") as fh:
            writer(fh)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise
