"""CSV datasets and the seeded synthetic point sets used by the experiments."""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass
from pathlib import Path
from typing import Optional

import numpy as np

from . import rng

STREAM_DATA = 11
STREAM_GRID = 12


class DatasetError(ValueError):
    pass


@dataclass(frozen=True, eq=False)
class Dataset:
    points: np.ndarray
    labels: Optional[np.ndarray]
    source: str

    @property
    def n_rows(self) -> int:
        return self.points.shape[0]

    @property
    def n_cols(self) -> int:
        return self.points.shape[1]


def parse_dataset(path, has_labels: bool = False) -> Dataset:
    """Read a numeric CSV; with ``has_labels`` the last column must be +1 / -1."""
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise DatasetError(f"cannot read {path}: {exc.strerror}") from None
    rows = []
    width = None
    for lineno, row in enumerate(csv.reader(text.splitlines()), start=1):
        if not row or all(not c.strip() for c in row):
            continue
        if width is None:
            width = len(row)
        elif len(row) != width:
            raise DatasetError(f"{path}: row {lineno} has {len(row)} columns, expected {width}")
        vals = []
        for col, cell in enumerate(row, start=1):
            try:
                v = float(cell)
            except ValueError:
                raise DatasetError(f"{path}: non-numeric cell {cell.strip()!r} at row {lineno}, column {col}") from None
            if not math.isfinite(v):
                raise DatasetError(f"{path}: non-finite cell at row {lineno}, column {col}")
            vals.append(v)
        rows.append(vals)
    if not rows:
        raise DatasetError(f"{path}: no data rows")
    arr = np.array(rows)
    labels = None
    if has_labels:
        if arr.shape[1] < 2:
            raise DatasetError(f"{path}: a labelled dataset needs at least one feature column")
        labels = arr[:, -1]
        bad = np.flatnonzero(~np.isin(labels, (-1.0, 1.0)))
        if bad.size:
            raise DatasetError(f"{path}: label {labels[bad[0]]:g} at data row {bad[0] + 1} is not +1 or -1")
        labels = labels.astype(int)
        arr = arr[:, :-1]
    return Dataset(arr, labels, str(path))


def write_points_csv(path, points, labels=None) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        for i, row in enumerate(np.asarray(points)):
            cells = [format(float(v), ".17g") for v in row]
            if labels is not None:
                cells.append(str(int(labels[i])))
            w.writerow(cells)


def gaussian_points(n: int, d: int, seed: int, scale: float = 1.0) -> np.ndarray:
    i = np.arange(n, dtype=np.uint64)[:, None]
    j = np.arange(d, dtype=np.uint64)[None, :]
    return scale * rng.normal(rng.hash_counters(seed, STREAM_DATA), i, j)


def clustered_points(n: int, d: int, seed: int, clusters: int = 2, spread: float = 0.05, separation: float = 4.0) -> np.ndarray:
    """n points split evenly over tight clusters whose centres are ``separation`` apart along axis 0."""
    centres = np.zeros((clusters, d))
    centres[:, 0] = separation * np.arange(clusters)
    which = np.arange(n) % clusters
    return centres[which] + gaussian_points(n, d, seed, spread)


def xor_set() -> tuple[np.ndarray, np.ndarray]:
    pts = np.array([[0.0, 0.0], [1.0, 1.0], [0.0, 1.0], [1.0, 0.0]])
    return pts, np.array([1, 1, -1, -1])


def jittered_grid(lo: float, hi: float, m: int, seed: int) -> np.ndarray:
    """m x m grid over [lo, hi]^2, each node moved uniformly within its own cell."""
    axis = np.linspace(lo, hi, m)
    step = axis[1] - axis[0]
    base = np.array([[a, b] for a in axis for b in axis])
    u = rng.uniform(seed, STREAM_GRID, np.arange(m * m, dtype=np.uint64)[:, None], np.arange(2, dtype=np.uint64)[None, :])
    return base + (u - 0.5) * step
