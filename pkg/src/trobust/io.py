"""CSV ingestion, the bundled stack-loss fixture, and table serialisation."""

import csv
import io
import json
import math
from importlib import resources

import numpy as np

from .likelihood import Dataset

__all__ = [
    "CsvFormatError",
    "read_csv_table",
    "read_dataset",
    "stackloss_path",
    "load_stackloss",
    "STACKLOSS_SHA256",
    "write_rows_csv",
    "dumps_json",
]

STACKLOSS_SHA256 = "456c076d8dd07affbf7704b1ae984c504a277f2a5197474f6e14aaedc1042e0f"


class CsvFormatError(ValueError):
    def __init__(self, line, msg):
        self.line = line
        super().__init__(f"line {line}: {msg}")


def read_csv_table(text):
    """Parse header + numeric rows. Returns ``(header, array)``."""
    reader = csv.reader(io.StringIO(text))
    try:
        header = [h.strip() for h in next(reader)]
    except StopIteration:
        raise CsvFormatError(1, "empty file") from None
    if not header or any(h == "" for h in header):
        raise CsvFormatError(1, "header row has empty column names")
    if len(set(header)) != len(header):
        raise CsvFormatError(1, "duplicate column names")
    rows = []
    for row in reader:
        line = reader.line_num
        if not row or all(c.strip() == "" for c in row):
            continue
        if len(row) != len(header):
            raise CsvFormatError(line, f"expected {len(header)} fields, found {len(row)}")
        try:
            vals = [float(c) for c in row]
        except ValueError:
            bad = next(c for c in row if not _is_float(c))
            raise CsvFormatError(line, f"non-numeric value {bad!r}") from None
        if not all(math.isfinite(v) for v in vals):
            raise CsvFormatError(line, "non-finite value")
        rows.append(vals)
    if not rows:
        raise CsvFormatError(2, "no data rows")
    return header, np.array(rows, dtype=float)


def _is_float(s):
    try:
        float(s)
        return True
    except ValueError:
        return False


def read_dataset(path_or_text, response, predictors=None, add_intercept=False, text=False):
    """Build a :class:`Dataset` from a CSV file with a header row.

    ``predictors`` defaults to every column other than ``response``.
    """
    if text:
        content = path_or_text
    else:
        with open(path_or_text, encoding="utf-8") as fh:
            content = fh.read()
    header, table = read_csv_table(content)
    if response not in header:
        raise KeyError(f"response column {response!r} not found; columns are {header}")
    if predictors is None:
        predictors = [h for h in header if h != response]
    missing = [c for c in predictors if c not in header]
    if missing:
        raise KeyError(f"predictor columns not found: {missing}")
    y = table[:, header.index(response)]
    X = table[:, [header.index(c) for c in predictors]] if predictors else np.empty((len(y), 0))
    names = list(predictors)
    if add_intercept:
        X = np.column_stack([np.ones(len(y)), X])
        names = ["(intercept)"] + names
    if X.shape[1] == 0:
        raise ValueError("no predictor columns selected")
    return Dataset(X, y, tuple(names))


def stackloss_path():
    return resources.files("trobust") / "data" / "stackloss.csv"


def load_stackloss(add_intercept=True):
    """Brownlee's stack-loss data: response stack_loss, three process predictors."""
    text = stackloss_path().read_text(encoding="utf-8")
    return read_dataset(text, "stack_loss", add_intercept=add_intercept, text=True)


def _cell(v):
    if v is None:
        return "NA"
    if isinstance(v, float):
        return repr(v) if math.isfinite(v) else "NA"
    return v


def write_rows_csv(rows, fh, columns):
    w = csv.writer(fh, lineterminator="\n")
    w.writerow(columns)
    for r in rows:
        w.writerow([_cell(r.get(c)) for c in columns])


def _json_default(o):
    if isinstance(o, np.ndarray):
        return o.tolist()
    if isinstance(o, (np.floating, np.integer)):
        return o.item()
    raise TypeError(f"not JSON serialisable: {type(o).__name__}")


def _finite_or_none(o):
    if isinstance(o, float) and not math.isfinite(o):
        return None
    if isinstance(o, dict):
        return {k: _finite_or_none(v) for k, v in o.items()}
    if isinstance(o, (list, tuple)):
        return [_finite_or_none(v) for v in o]
    return o


def dumps_json(obj, **kw):
    return json.dumps(_finite_or_none(obj), default=_json_default, **kw)
