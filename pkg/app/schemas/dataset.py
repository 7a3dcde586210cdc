import math
from enum import Enum
from typing import Dict, List, Optional, Tuple

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, model_validator

from app.core.exceptions import DuplicateDesignError
from app.schemas.design import DesignPoint


RESPONSE_NAMES: Tuple[str, str, str, str] = ("fx", "fy", "dx", "dy")

# Exact CSV header, in this order.
CSV_COLUMNS: Tuple[str, ...] = (
    "t_beam_mm",
    "t_cross_mm",
    "spacing_mm",
    "fx_n",
    "fy_n",
    "dx_mm",
    "dy_mm",
)

# Labels used by the correlation matrix and EDA reports.
FEATURE_LABELS: Tuple[str, ...] = ("t_beam", "t_cross", "spacing", "fx", "fy", "dx", "dy")


class Provenance(str, Enum):
    ORACLE = "oracle-generated"
    FILE = "file-imported"


# ==================== Records ====================

class SimRecord(BaseModel):
    """A design paired with its responses at maximum base displacement."""

    model_config = ConfigDict(frozen=True)

    design: DesignPoint
    fx: float  # N
    fy: float  # N
    dx: float  # mm
    dy: float  # mm

    @model_validator(mode="after")
    def _check_responses(self) -> "SimRecord":
        for name in RESPONSE_NAMES:
            if not math.isfinite(getattr(self, name)):
                raise ValueError(f"{name} must be finite")
        # Contact pushes the finger away from the object along x.
        if self.fx < 0:
            raise ValueError(f"fx must be non-negative, got {self.fx}")
        if self.dx < 0:
            raise ValueError(f"dx must be non-negative, got {self.dx}")
        return self

    def responses(self) -> Tuple[float, float, float, float]:
        return (self.fx, self.fy, self.dx, self.dy)


class Dataset(BaseModel):
    """Ordered simulation records; no two records share a design."""

    model_config = ConfigDict(frozen=True)

    records: List[SimRecord] = []
    provenance: Provenance = Provenance.FILE
    seed: Optional[int] = None

    @model_validator(mode="after")
    def _no_duplicate_designs(self) -> "Dataset":
        seen: Dict[Tuple[float, float, float], int] = {}
        for row, record in enumerate(self.records):
            key = record.design.as_tuple()
            if key in seen:
                raise DuplicateDesignError(row, seen[key])
            seen[key] = row
        return self

    def __len__(self) -> int:
        return len(self.records)

    def design_matrix(self) -> np.ndarray:
        """(n, 3) array of design variables."""
        return np.array([r.design.as_tuple() for r in self.records], dtype=float).reshape(-1, 3)

    def response_matrix(self) -> np.ndarray:
        """(n, 4) array of fx, fy, dx, dy."""
        return np.array([r.responses() for r in self.records], dtype=float).reshape(-1, 4)

    def feature_matrix(self) -> np.ndarray:
        """(n, 7) array in FEATURE_LABELS order."""
        return np.hstack([self.design_matrix(), self.response_matrix()])


# ==================== Splits ====================

class SplitIndices(BaseModel):
    """Disjoint train/validation/test indices plus K-fold ids for non-test rows."""

    model_config = ConfigDict(frozen=True)

    train: List[int]
    validation: List[int]
    test: List[int]
    k: int = Field(..., ge=2)
    # fold id in [0, k) for every non-test index
    fold_ids: Dict[int, int]

    def folds(self) -> List[List[int]]:
        """Index lists for each fold, in ascending index order."""
        folds: List[List[int]] = [[] for _ in range(self.k)]
        for index, fold in sorted(self.fold_ids.items()):
            folds[fold].append(index)
        return folds

    def fold_partition(self, fold: int) -> Tuple[List[int], List[int]]:
        """(training indices, held-out indices) for one fold."""
        held_out = [i for i, f in sorted(self.fold_ids.items()) if f == fold]
        training = [i for i, f in sorted(self.fold_ids.items()) if f != fold]
        return training, held_out


class OutlierWarning(BaseModel):
    """A value whose column z-score exceeds the reporting threshold."""

    row: int
    column: str
    value: float
    z_score: float
