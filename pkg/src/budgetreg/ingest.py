"""CSV loading, label binarization, and ball normalization.

The file format is deliberately rigid: comma-separated ASCII decimal
numbers, an optional single header line, one label column addressed by
index.  No quoting or escapes.  Scaling factors are always fit on a
training split and reapplied verbatim to test data; test examples that
land outside the ball after scaling are rescaled onto the boundary and
counted.
"""

from dataclasses import dataclass, field

import numpy as np

from .core import Dataset, Regime

__all__ = [
    "load_csv",
    "write_csv",
    "binarize_labels",
    "Scaler",
    "normalize",
]


def load_csv(path, has_header=False, label_column=-1):
    """Rectangular numeric CSV -> raw Dataset (no regime attached).

    Row numbers in error messages are 1-based file line numbers, header
    included.
    """
    with open(path, "r", encoding="ascii") as fh:
        lines = fh.read().splitlines()
    start = 1 if has_header else 0
    rows = []
    width = None
    for lineno, line in enumerate(lines, start=1):
        if lineno == 1 and has_header:
            continue
        if line == "":
            continue
        cells = line.split(",")
        if width is None:
            width = len(cells)
            if width < 2:
                raise ValueError(f"row {lineno}: need at least one attribute and a label")
        elif len(cells) != width:
            raise ValueError(f"row {lineno}: expected {width} columns, found {len(cells)}")
        try:
            rows.append([float(c) for c in cells])
        except ValueError:
            bad = next(c for c in cells if not _is_number(c))
            raise ValueError(f"row {lineno}: non-numeric value {bad!r}") from None
    if not rows:
        raise ValueError("empty file: no data rows")
    data = np.asarray(rows, dtype=float)
    label = label_column if label_column >= 0 else data.shape[1] + label_column
    if not 0 <= label < data.shape[1]:
        raise ValueError(f"label column {label_column} out of range for {data.shape[1]} columns")
    y = data[:, label]
    x = np.delete(data, label, axis=1)
    return Dataset(x, y, None)


def _is_number(cell):
    try:
        float(cell)
        return True
    except ValueError:
        return False


def write_csv(path, dataset):
    """Dataset -> CSV with the label as the last column.

    Values are written with 17 significant digits, enough to reproduce
    every float64 exactly on reload.
    """
    with open(path, "w", encoding="ascii") as fh:
        for row, label in zip(dataset.x, dataset.y):
            cells = [f"{v:.17g}" for v in row] + [f"{label:.17g}"]
            fh.write(",".join(cells) + "\n")


def binarize_labels(dataset, positive_class_value, keep=None):
    """Map labels to +1 (the positive class) and -1 (everything else).

    With ``keep``, rows whose label is outside that set are dropped first
    (two-class subproblems carved out of a multiclass dataset).
    """
    y = dataset.y
    x = dataset.x
    if keep is not None:
        keep_arr = np.asarray(sorted(keep), dtype=float)
        mask = np.isin(y, keep_arr)
        x, y = x[mask], y[mask]
    if y.size == 0:
        raise ValueError("no rows left after filtering")
    if np.unique(y).size < 2:
        raise ValueError("labels take fewer than two distinct values")
    if not np.any(y == positive_class_value):
        raise ValueError("positive class absent")
    new_y = np.where(y == positive_class_value, 1.0, -1.0)
    return Dataset(x, new_y, dataset.regime)


@dataclass
class Scaler:
    """Per-regime scaling fit on training data, reusable on test data.

    L2 divides every example by the largest training-example norm; Linf
    divides each column by its largest training absolute value.  Columns
    that are identically zero keep factor 1.
    """

    regime: Regime
    factors: np.ndarray | None = None  # scalar array (L2) or per-column (Linf)
    clipped: int = field(default=0)  # out-of-ball transform rows, cumulative

    def fit(self, dataset):
        x = dataset.x
        if not np.any(x != 0):
            raise ValueError("all-zero dataset")
        if self.regime == Regime.L2:
            self.factors = np.array([np.sqrt((x * x).sum(axis=1)).max()])
        else:
            col_max = np.abs(x).max(axis=0)
            self.factors = np.where(col_max > 0, col_max, 1.0)
        return self

    def transform(self, dataset):
        if self.factors is None:
            raise ValueError("scaler not fitted")
        x = dataset.x / self.factors
        if self.regime == Regime.L2:
            scale = np.sqrt((x * x).sum(axis=1))
        else:
            scale = np.abs(x).max(axis=1) if x.size else np.zeros(len(dataset))
        outside = scale > 1.0
        if np.any(outside):
            self.clipped += int(outside.sum())
            x[outside] /= scale[outside, None]
        return Dataset(x, dataset.y.copy(), self.regime)


def normalize(dataset, regime):
    """Fit-and-transform in one step; training-split use only."""
    return Scaler(regime).fit(dataset).transform(dataset)
