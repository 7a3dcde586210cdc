"""
Design Space Service
Grid enumeration and min-max scaling for the three design variables.
"""

import itertools
import logging
from typing import List, Sequence

import numpy as np

from app.core.exceptions import DegenerateColumnError, InputError
from app.schemas.design import DesignPoint, DesignSpace, ScalerParams

logger = logging.getLogger(__name__)

# Scaled values this close outside [0, 1] are numerical noise and get clamped.
CLAMP_TOLERANCE = 1e-9


def enumerate_grid(space: DesignSpace) -> List[DesignPoint]:
    """
    Full factorial grid in lexicographic order (t_beam outer, spacing inner).

    Args:
        space: validated design space

    Returns:
        One DesignPoint per grid node; length is the product of per-variable counts.
    """
    space.validate_ranges()
    axes = [r.values() for r in space.ranges()]
    return [DesignPoint.from_values(combo) for combo in itertools.product(*axes)]


def grid_size(space: DesignSpace) -> int:
    return int(np.prod([r.count() for r in space.ranges()]))


# ==================== Min-Max Scaling ====================

def fit_scaler(columns, margin: float = 0.0) -> ScalerParams:
    """
    Record the per-column min and max of a table.

    Args:
        columns: 2-D table, rows x columns (lists or ndarray)
        margin: when positive, the bounds are widened so the observed data
                scales into [margin, 1 - margin] instead of [0, 1]

    Returns:
        ScalerParams for every column.
    """
    if not 0.0 <= margin < 0.5:
        raise InputError(f"scaler margin must be in [0, 0.5), got {margin}")
    table = np.asarray(columns, dtype=float)
    if table.ndim == 1:
        table = table.reshape(-1, 1)
    if table.ndim != 2 or table.shape[0] < 2:
        raise InputError(f"need at least 2 rows to fit a scaler, got {table.shape[0]}")

    lo = table.min(axis=0)
    hi = table.max(axis=0)
    for column in range(table.shape[1]):
        if not hi[column] > lo[column]:
            raise DegenerateColumnError(column, float(lo[column]))
    if margin > 0.0:
        pad = (hi - lo) * margin / (1.0 - 2.0 * margin)
        lo, hi = lo - pad, hi + pad
    return ScalerParams(minimum=lo.tolist(), maximum=hi.tolist())


def scale(value: float, minimum: float, maximum: float) -> float:
    """(v - min) / (max - min)"""
    return (value - minimum) / (maximum - minimum)


def unscale(value: float, minimum: float, maximum: float) -> float:
    """Inverse of `scale`."""
    return minimum + value * (maximum - minimum)


def scale_array(values, params: ScalerParams, clamp: bool = True) -> np.ndarray:
    """
    Scale every column of `values` with `params`.

    Values that land outside [0, 1] by at most CLAMP_TOLERANCE are clamped;
    larger excursions are kept and reported.
    """
    data = np.asarray(values, dtype=float)
    lo = np.asarray(params.minimum)
    hi = np.asarray(params.maximum)
    scaled = (data - lo) / (hi - lo)
    if clamp:
        scaled = clamp_noise(scaled)
    return scaled


def unscale_array(values, params: ScalerParams) -> np.ndarray:
    data = np.asarray(values, dtype=float)
    lo = np.asarray(params.minimum)
    hi = np.asarray(params.maximum)
    return lo + data * (hi - lo)


def clamp_noise(scaled: np.ndarray) -> np.ndarray:
    """Clamp tiny excursions outside [0, 1]; warn about real ones."""
    below = (scaled < 0.0) & (scaled >= -CLAMP_TOLERANCE)
    above = (scaled > 1.0) & (scaled <= 1.0 + CLAMP_TOLERANCE)
    scaled = np.where(below, 0.0, np.where(above, 1.0, scaled))

    excursions = int(np.count_nonzero((scaled < 0.0) | (scaled > 1.0)))
    if excursions:
        logger.warning(
            "Scaled values outside [0, 1]",
            extra={"count": excursions, "min": float(scaled.min()), "max": float(scaled.max())},
        )
    return scaled


def out_of_unit_range(scaled: Sequence[float]) -> bool:
    arr = np.asarray(scaled, dtype=float)
    return bool(np.any(arr < -CLAMP_TOLERANCE) or np.any(arr > 1.0 + CLAMP_TOLERANCE))
