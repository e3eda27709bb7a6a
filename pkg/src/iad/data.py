"""Dataset ingestion, preprocessing and contamination scenarios.

Datasets carry their features and (optionally) evaluation-only labels.
Training entry points throughout the package take a bare feature matrix,
never a ``Dataset``, so the only way labels reach a computation is
through the metrics module.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .exceptions import ConfigurationError, DatasetError
from .rng import RngStream
from .validation import check_binary_labels, check_matrix


@dataclass(frozen=True)
class Dataset:
    """Immutable feature matrix with optional held-back labels."""

    name: str
    X: np.ndarray
    labels: np.ndarray | None = None
    provenance: tuple[str, ...] = ()

    def __post_init__(self):
        X = check_matrix(self.X, name="X")
        X.setflags(write=False)
        object.__setattr__(self, "X", X)
        if self.X.shape[0] < 2:
            raise DatasetError("a dataset needs at least 2 rows")
        if self.labels is not None:
            y = check_binary_labels(self.labels, self.X.shape[0])
            y.setflags(write=False)
            object.__setattr__(self, "labels", y)

    @property
    def n(self) -> int:
        return self.X.shape[0]

    @property
    def d(self) -> int:
        return self.X.shape[1]

    @property
    def has_labels(self) -> bool:
        return self.labels is not None

    @property
    def contamination(self) -> float | None:
        if self.labels is None:
            return None
        return float(self.labels.mean())


@dataclass(frozen=True)
class ScenarioSpec:
    """Target contamination scenario built by subsampling anomalies."""

    contamination: float
    seed: int = 0

    def __post_init__(self):
        if not 0.0 <= self.contamination < 1.0:
            raise ConfigurationError(
                f"contamination ratio must be in [0, 1), got {self.contamination}"
            )


@dataclass(frozen=True)
class FeatureStats:
    mean: np.ndarray
    std: np.ndarray


def load_csv(path, label_column=None, name: str | None = None) -> Dataset:
    """Load a rectangular numeric CSV, optionally splitting off a label column.

    The first line is treated as a header when any of its cells is not
    numeric. ``label_column`` selects by name (requires a header) or
    0-based index. Ragged rows, non-numeric cells and NaNs are load
    errors that name the offending row and column.
    """
    path = Path(path)
    with path.open(newline="") as fh:
        rows = [row for row in csv.reader(fh) if row]
    if not rows:
        raise DatasetError(f"{path}: file is empty")
    header = None
    if not all(_is_number(cell) for cell in rows[0]):
        header = [cell.strip() for cell in rows[0]]
        rows = rows[1:]
        if not rows:
            raise DatasetError(f"{path}: no data rows below the header")
    width = len(rows[0])
    values = np.empty((len(rows), width), dtype=np.float64)
    for i, row in enumerate(rows, start=2 if header else 1):
        if len(row) != width:
            raise DatasetError(
                f"{path}: row {i} has {len(row)} cells, expected {width}"
            )
        for j, cell in enumerate(row):
            try:
                v = float(cell)
            except ValueError:
                raise DatasetError(
                    f"{path}: non-numeric cell at row {i}, column {j}: {cell!r}"
                ) from None
            if not np.isfinite(v):
                raise DatasetError(f"{path}: non-finite value at row {i}, column {j}")
            values[i - (2 if header else 1), j] = v

    labels = None
    if label_column is not None:
        col = _resolve_column(label_column, header, width, path)
        labels = values[:, col]
        if not np.all(np.isin(labels, (0.0, 1.0))):
            raise DatasetError(f"{path}: label column must contain only 0/1")
        values = np.delete(values, col, axis=1)
        labels = labels.astype(np.int64)
    return Dataset(
        name=name or path.stem,
        X=values,
        labels=labels,
        provenance=(f"loaded from {path}",),
    )


def _is_number(cell: str) -> bool:
    try:
        float(cell)
        return True
    except ValueError:
        return False


def _resolve_column(label_column, header, width, path):
    if isinstance(label_column, str):
        if header is None:
            raise DatasetError(
                f"{path}: label column named {label_column!r} needs a header row"
            )
        if label_column not in header:
            raise DatasetError(f"{path}: no column named {label_column!r}")
        return header.index(label_column)
    col = int(label_column)
    if col < 0:
        col += width
    if not 0 <= col < width:
        raise DatasetError(f"{path}: label column {label_column} out of range")
    return col


def standardize(dataset: Dataset) -> tuple[Dataset, FeatureStats]:
    """Shift/scale each feature to zero mean and unit (population) variance.

    Constant features are mapped to zero and their recorded std is 1, so
    the transform is always invertible on the stats it reports.
    """
    X = dataset.X
    mean = X.mean(axis=0)
    std = X.std(axis=0)  # population (1/n) estimator
    std = np.where(std == 0.0, 1.0, std)
    out = (X - mean) / std
    ds = Dataset(
        name=dataset.name,
        X=out,
        labels=dataset.labels,
        provenance=dataset.provenance + ("standardized to zero mean, unit variance",),
    )
    return ds, FeatureStats(mean=mean, std=std)


def build_scenario(dataset: Dataset, spec: ScenarioSpec) -> Dataset:
    """Subsample anomalies to hit a target contamination ratio.

    All normal samples are kept; the anomaly count is the integer closest
    to the target ratio (at least 1 when the ratio is positive), drawn
    without replacement. Rows are then shuffled by the scenario seed and
    the realised ratio recorded in the provenance.
    """
    if dataset.labels is None:
        raise ConfigurationError("scenario construction needs labels")
    y = dataset.labels
    normal_idx = np.flatnonzero(y == 0)
    anomaly_idx = np.flatnonzero(y == 1)
    n_normal = normal_idx.size
    rho = spec.contamination
    if rho == 0.0:
        k = 0
    else:
        k = max(1, int(round(rho * n_normal / (1.0 - rho))))
    if k > anomaly_idx.size:
        raise ConfigurationError(
            f"target ratio {rho} needs {k} anomalies, only "
            f"{anomaly_idx.size} available"
        )
    rng = RngStream(spec.seed, 0).generator()
    chosen = np.sort(rng.choice(anomaly_idx, size=k, replace=False)) if k else (
        np.empty(0, dtype=np.int64)
    )
    keep = np.concatenate([normal_idx, chosen])
    keep = keep[rng.permutation(keep.size)]
    realized = k / (n_normal + k)
    return Dataset(
        name=f"{dataset.name}@{rho:g}",
        X=dataset.X[keep],
        labels=y[keep],
        provenance=dataset.provenance
        + (
            f"scenario: target ratio {rho:g}, realized {realized:.6f} "
            f"({k} anomalies + {n_normal} normals), seed {spec.seed}",
        ),
    )


def scenario_manifest(dataset: Dataset) -> dict:
    """Structured summary of a dataset for the run directory."""
    return {
        "name": dataset.name,
        "rows": int(dataset.n),
        "features": int(dataset.d),
        "has_labels": dataset.has_labels,
        "contamination": dataset.contamination,
        "provenance": list(dataset.provenance),
    }


def synth_two_gaussian(
    n: int, d: int, contamination: float, separation: float, seed: int = 0
) -> Dataset:
    """Labeled synthetic mixture: normals at the origin, anomalies offset.

    Normals are N(0, I_d); anomalies are N(separation * 1, I_d). Row order
    is shuffled; the same arguments always produce the same bytes.
    """
    if not 0.0 <= contamination < 1.0:
        raise ConfigurationError("contamination must be in [0, 1)")
    if separation <= 0.0:
        raise ConfigurationError("separation must be > 0")
    rng = RngStream(seed, 0).generator()
    n_anom = int(round(n * contamination))
    n_norm = n - n_anom
    X = np.vstack(
        [
            rng.standard_normal((n_norm, d)),
            rng.standard_normal((n_anom, d)) + separation,
        ]
    )
    y = np.concatenate([np.zeros(n_norm, dtype=np.int64),
                        np.ones(n_anom, dtype=np.int64)])
    order = rng.permutation(n)
    return Dataset(
        name=f"two-gaussian-{n}x{d}",
        X=X[order],
        labels=y[order],
        provenance=(
            f"synthetic two-gaussian: n={n}, d={d}, contamination={contamination:g}, "
            f"separation={separation:g}, seed={seed}",
        ),
    )
