"""Dense matrix I/O and seeded construction.

Matrices are float64 numpy arrays in C order. Data matrices are laid out
features x samples: column n is one sample. Labels are a flat int64 vector
aligned with the columns.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import DataError

__all__ = [
    "LabeledDataset",
    "load_csv",
    "load_labels",
    "random_nonneg",
    "read_matrix",
    "save_csv",
    "save_labels",
]


def _as_matrix(values, name: str = "matrix") -> np.ndarray:
    m = np.ascontiguousarray(values, dtype=np.float64)
    if m.ndim != 2 or m.shape[0] < 1 or m.shape[1] < 1:
        raise DataError(f"{name} must be 2-D with at least one row and one column, got shape {m.shape}")
    if not np.all(np.isfinite(m)):
        raise DataError(f"{name} contains NaN or Inf entries")
    return m


@dataclass(frozen=True)
class LabeledDataset:
    """Non-negative data matrix with optional per-column integer labels.

    `class_ids` caches the distinct label values in ascending order; it is
    derived, never passed in.
    """

    matrix: np.ndarray
    labels: np.ndarray | None = None
    class_ids: np.ndarray | None = field(default=None, init=False)

    def __post_init__(self):
        m = _as_matrix(self.matrix, "data matrix")
        if np.any(m < 0):
            raise DataError("data matrix has negative entries")
        object.__setattr__(self, "matrix", m)
        if self.labels is not None:
            y = np.ascontiguousarray(self.labels, dtype=np.int64)
            if y.ndim != 1:
                raise DataError(f"labels must be a flat vector, got shape {y.shape}")
            if y.shape[0] != m.shape[1]:
                raise DataError(
                    f"label count {y.shape[0]} does not match sample count {m.shape[1]}"
                )
            object.__setattr__(self, "labels", y)
            object.__setattr__(self, "class_ids", np.unique(y))

    @property
    def n_features(self) -> int:
        return self.matrix.shape[0]

    @property
    def n_samples(self) -> int:
        return self.matrix.shape[1]


def read_matrix(path, allow_negative: bool = False) -> np.ndarray:
    """Read a headerless comma-separated matrix of floats.

    Errors carry 1-based row/column positions. Negative entries are
    rejected unless `allow_negative` is set (most consumers here are
    non-negative by construction; Laplacians and the like opt out).
    """
    rows: list[list[float]] = []
    width = -1
    with open(path, "r", encoding="utf-8") as fh:
        for i, line in enumerate(fh):
            line = line.strip()
            if not line:
                continue
            cells = line.split(",")
            if width < 0:
                width = len(cells)
            elif len(cells) != width:
                raise DataError(
                    f"{path}: row {i + 1} has {len(cells)} cells, expected {width}"
                )
            parsed = []
            for j, cell in enumerate(cells):
                try:
                    v = float(cell)
                except ValueError:
                    raise DataError(
                        f"{path}: non-numeric cell at row {i + 1}, column {j + 1}: {cell.strip()!r}"
                    ) from None
                if not math.isfinite(v):
                    raise DataError(
                        f"{path}: non-finite cell at row {i + 1}, column {j + 1}"
                    )
                if v < 0 and not allow_negative:
                    raise DataError(
                        f"{path}: negative entry at row {i + 1}, column {j + 1}: {cell.strip()!r}"
                    )
                parsed.append(v)
            rows.append(parsed)
    if not rows:
        raise DataError(f"{path}: empty matrix file")
    return np.array(rows, dtype=np.float64)


def load_labels(path) -> np.ndarray:
    """Read a single-column CSV of integer labels."""
    values: list[int] = []
    with open(path, "r", encoding="utf-8") as fh:
        for i, line in enumerate(fh):
            line = line.strip()
            if not line:
                continue
            if "," in line:
                raise DataError(f"{path}: labels must be a single column (row {i + 1})")
            try:
                values.append(int(line))
            except ValueError:
                raise DataError(
                    f"{path}: non-integer label at row {i + 1}: {line!r}"
                ) from None
    if not values:
        raise DataError(f"{path}: empty label file")
    return np.array(values, dtype=np.int64)


def load_csv(path, labels_path=None) -> LabeledDataset:
    """Load a features x samples CSV, optionally with a label column file."""
    matrix = read_matrix(path)
    labels = load_labels(labels_path) if labels_path is not None else None
    return LabeledDataset(matrix=matrix, labels=labels)


def save_csv(matrix, path) -> None:
    """Write a matrix as headerless CSV.

    %.17g preserves float64 exactly, so read_matrix(save_csv(m)) == m.
    """
    m = _as_matrix(matrix)
    np.savetxt(path, m, delimiter=",", fmt="%.17g")


def save_labels(labels, path) -> None:
    """Write integer labels, one per line."""
    y = np.ascontiguousarray(labels, dtype=np.int64)
    if y.ndim != 1:
        raise DataError(f"labels must be a flat vector, got shape {y.shape}")
    np.savetxt(path, y, fmt="%d")


def random_nonneg(rows: int, cols: int, seed: int) -> np.ndarray:
    """Seeded uniform matrix with entries in (0, 1].

    Uses numpy's PCG64 via default_rng; the open-at-zero interval keeps
    multiplicative-update initializers strictly positive.
    """
    if rows < 1 or cols < 1:
        raise DataError(f"matrix dimensions must be positive, got {rows}x{cols}")
    rng = np.random.default_rng(seed)
    return 1.0 - rng.random((rows, cols))
