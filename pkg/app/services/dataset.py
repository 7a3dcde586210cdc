"""
Dataset Service
CSV ingestion/emission, exploratory statistics and deterministic splitting
of simulation records.
"""

import logging
import math
from pathlib import Path
from typing import Dict, List, Sequence, Tuple, Union

import numpy as np
import pandas as pd
from pydantic import ValidationError

from app.core.exceptions import (
    BoundsError,
    ConfigError,
    CorrelationError,
    DatasetFormatError,
    DuplicateDesignError,
    InputError,
    SplitSizeError,
)
from app.core.rng import make_rng
from app.schemas.dataset import (
    CSV_COLUMNS,
    FEATURE_LABELS,
    Dataset,
    OutlierWarning,
    Provenance,
    SimRecord,
    SplitIndices,
)
from app.schemas.design import DESIGN_VARIABLES, DesignPoint, check_in_bounds

logger = logging.getLogger(__name__)

PathLike = Union[str, Path]

DEFAULT_RATIOS: Tuple[float, float, float] = (0.8, 0.1, 0.1)
DEFAULT_FOLDS = 5
OUTLIER_Z = 3.0


# ==================== CSV I/O ====================

def read_csv(path: PathLike) -> Dataset:
    """
    Load a dataset CSV with the exact header
    `t_beam_mm,t_cross_mm,spacing_mm,fx_n,fy_n,dx_mm,dy_mm`.

    Rows are numbered from 1 (first data row) in error messages.
    """
    path = Path(path)
    if not path.exists():
        raise FileNotFoundError(f"dataset file not found: {path}")

    try:
        frame = pd.read_csv(path, dtype=str, keep_default_na=False, encoding="utf-8")
    except pd.errors.EmptyDataError:
        raise DatasetFormatError("file is empty; expected a header row")
    except pd.errors.ParserError as e:
        raise DatasetFormatError(f"could not parse CSV: {e}")

    header = list(frame.columns)
    missing = [c for c in CSV_COLUMNS if c not in header]
    extra = [c for c in header if c not in CSV_COLUMNS]
    if missing:
        raise DatasetFormatError(f"missing columns: {', '.join(missing)}")
    if extra:
        raise DatasetFormatError(f"unexpected columns: {', '.join(extra)}")
    if header != list(CSV_COLUMNS):
        raise DatasetFormatError(f"columns out of order; expected {','.join(CSV_COLUMNS)}")

    records: List[SimRecord] = []
    seen: Dict[Tuple[float, float, float], int] = {}
    for position, raw in enumerate(frame.itertuples(index=False, name=None)):
        row = position + 1
        values = [_parse_cell(cell, row, column) for cell, column in zip(raw, CSV_COLUMNS)]

        for variable, column, value in zip(DESIGN_VARIABLES, CSV_COLUMNS[:3], values[:3]):
            try:
                check_in_bounds(variable, value)
            except BoundsError as e:
                raise DatasetFormatError(f"out of bounds: {e.message}", row=row, column=column)

        key = (values[0], values[1], values[2])
        if key in seen:
            raise DuplicateDesignError(row, seen[key])
        seen[key] = row

        try:
            records.append(
                SimRecord(
                    design=DesignPoint.from_values(values[:3]),
                    fx=values[3],
                    fy=values[4],
                    dx=values[5],
                    dy=values[6],
                )
            )
        except ValidationError as e:
            raise DatasetFormatError(f"invalid record: {e.errors()[0]['msg']}", row=row)

    logger.info("Dataset loaded", extra={"path": str(path), "records": len(records)})
    return Dataset(records=records, provenance=Provenance.FILE)


def _parse_cell(cell: str, row: int, column: str) -> float:
    try:
        value = float(cell)
    except (TypeError, ValueError):
        raise DatasetFormatError(f"non-numeric value {cell!r}", row=row, column=column)
    if not math.isfinite(value):
        raise DatasetFormatError(f"non-finite value {cell!r}", row=row, column=column)
    return value


def dataset_frame(dataset: Dataset) -> pd.DataFrame:
    return pd.DataFrame(dataset.feature_matrix(), columns=list(CSV_COLUMNS))


def write_csv(dataset: Dataset, path: PathLike) -> None:
    """Write the dataset; floats use their shortest round-trip representation."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    dataset_frame(dataset).to_csv(path, index=False, lineterminator="\n", encoding="utf-8")


# ==================== Statistics ====================

def pearson(x: Sequence[float], y: Sequence[float]) -> float:
    """
    Pearson correlation coefficient:
    r = sum((x - mean x)(y - mean y)) / sqrt(sum((x - mean x)^2) * sum((y - mean y)^2))
    """
    a = np.asarray(x, dtype=float)
    b = np.asarray(y, dtype=float)
    if a.shape != b.shape or a.ndim != 1:
        raise InputError(f"vectors must be 1-D with equal lengths, got {a.shape} and {b.shape}")
    if a.size < 2:
        raise InputError("need at least 2 observations")

    da = a - a.mean()
    db = b - b.mean()
    sxx = float(np.dot(da, da))
    syy = float(np.dot(db, db))
    if sxx == 0.0:
        raise CorrelationError("x")
    if syy == 0.0:
        raise CorrelationError("y")
    r = float(np.dot(da, db)) / math.sqrt(sxx * syy)
    return max(-1.0, min(1.0, r))


def correlation_matrix(dataset: Dataset) -> np.ndarray:
    """Symmetric 7x7 Pearson matrix over (t_beam, t_cross, spacing, fx, fy, dx, dy)."""
    features = dataset.feature_matrix()
    n = len(FEATURE_LABELS)
    matrix = np.eye(n)
    for i in range(n):
        for j in range(i + 1, n):
            try:
                r = pearson(features[:, i], features[:, j])
            except CorrelationError:
                constant = FEATURE_LABELS[i] if np.ptp(features[:, i]) == 0 else FEATURE_LABELS[j]
                raise CorrelationError(constant)
            matrix[i, j] = matrix[j, i] = r
    return matrix


def write_correlation_csv(matrix: np.ndarray, path: PathLike) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    frame = pd.DataFrame(matrix, index=list(FEATURE_LABELS), columns=list(FEATURE_LABELS))
    frame.to_csv(path, index_label="feature", lineterminator="\n", encoding="utf-8")


def outlier_warnings(dataset: Dataset, threshold: float = OUTLIER_Z) -> List[OutlierWarning]:
    """
    Report values whose per-column z-score exceeds `threshold`.
    Records are never dropped.
    """
    features = dataset.feature_matrix()
    if len(features) < 2:
        return []

    found: List[OutlierWarning] = []
    mean = features.mean(axis=0)
    std = features.std(axis=0)
    for column, label in enumerate(FEATURE_LABELS):
        if std[column] == 0:
            continue
        z = (features[:, column] - mean[column]) / std[column]
        for row in np.flatnonzero(np.abs(z) > threshold):
            found.append(
                OutlierWarning(
                    row=int(row) + 1,
                    column=label,
                    value=float(features[row, column]),
                    z_score=float(z[row]),
                )
            )

    for item in found:
        logger.warning("Possible outlier", extra=item.model_dump())
    return found


# ==================== Splitting ====================

def _part_sizes(n: int, ratios: Sequence[float]) -> Tuple[int, int, int]:
    n_test = int(round(n * ratios[2]))
    n_val = int(round(n * ratios[1]))
    return n - n_test - n_val, n_val, n_test


def minimum_split_size(ratios: Sequence[float], k: int, limit: int = 100_000) -> int:
    """Smallest record count for which every part and every fold is non-empty."""
    for n in range(3, limit):
        n_train, n_val, n_test = _part_sizes(n, ratios)
        if n_train >= 1 and n_val >= 1 and n_test >= 1 and (n - n_test) >= k:
            return n
    raise ConfigError("ratios", "no dataset size satisfies these ratios")


def split(
    dataset: Union[Dataset, int],
    seed: int,
    ratios: Sequence[float] = DEFAULT_RATIOS,
    k: int = DEFAULT_FOLDS,
) -> SplitIndices:
    """
    Deterministic train/validation/test split plus K folds over the non-test rows.

    Args:
        dataset: the dataset (or just its record count)
        seed: seed for the shuffling stream
        ratios: (train, validation, test) proportions, summing to 1
        k: number of folds

    Returns:
        SplitIndices; folds are balanced to within one record.
    """
    if len(ratios) != 3 or any(r < 0 for r in ratios):
        raise ConfigError("ratios", "expected three non-negative proportions")
    if abs(sum(ratios) - 1.0) > 1e-9:
        raise ConfigError("ratios", f"proportions must sum to 1, got {sum(ratios)}")
    if k < 2:
        raise ConfigError("k", f"need at least 2 folds, got {k}")

    n = dataset if isinstance(dataset, int) else len(dataset)
    n_train, n_val, n_test = _part_sizes(n, ratios)
    if n_train < 1 or n_val < 1 or n_test < 1 or (n - n_test) < k:
        raise SplitSizeError(n, minimum_split_size(ratios, k))

    order = make_rng(seed).permutation(n)
    test = order[:n_test]
    validation = order[n_test:n_test + n_val]
    train = order[n_test + n_val:]

    # Folds are dealt round-robin over the shuffled non-test rows.
    non_test = order[n_test:]
    fold_ids = {int(index): position % k for position, index in enumerate(non_test)}

    return SplitIndices(
        train=sorted(int(i) for i in train),
        validation=sorted(int(i) for i in validation),
        test=sorted(int(i) for i in test),
        k=k,
        fold_ids=fold_ids,
    )
