import math
from enum import Enum
from typing import List, Optional

from pydantic import BaseModel, ConfigDict, Field, field_validator, model_validator

from app.core.rng import RNG_ALGORITHM
from app.schemas.design import DesignPoint


# ==================== Engine Config ====================

class NsgaConfig(BaseModel):
    """NSGA-II parameters; defaults are population 500, 100 generations, pc 0.9, pm 0.1."""

    model_config = ConfigDict(frozen=True)

    population_size: int = Field(500, ge=4)
    generations: int = Field(100, ge=1)
    crossover_rate: float = Field(0.9, ge=0.0, le=1.0)
    sbx_gene_rate: float = Field(0.5, ge=0.0, le=1.0)  # per-gene share of a crossed pair
    mutation_rate: float = Field(0.1, ge=0.0, le=1.0)  # per-gene probability
    sbx_eta: float = Field(15.0, gt=0.0)
    pm_eta: float = Field(20.0, gt=0.0)
    seed: int = 0

    @field_validator("population_size")
    @classmethod
    def _even_population(cls, v: int) -> int:
        if v % 2:
            raise ValueError(f"population_size must be even, got {v}")
        return v


class GenerationStats(BaseModel):
    """Rank-0 summary for one generation (engine objective convention)."""

    gen: int
    front_size: int
    min_f1: float
    max_f1: float
    min_f2: float
    max_f2: float


# ==================== Objectives & Solutions ====================

class ObjectivePair(BaseModel):
    """Force magnitude F (N) and tip displacement magnitude D (mm)."""

    model_config = ConfigDict(frozen=True)

    f: float = Field(..., ge=0.0)
    d: float = Field(..., ge=0.0)

    @model_validator(mode="after")
    def _finite(self) -> "ObjectivePair":
        if not (math.isfinite(self.f) and math.isfinite(self.d)):
            raise ValueError("objectives must be finite")
        return self


class PointLabel(str, Enum):
    A = "A"  # highest tip displacement
    B = "B"  # highest force
    C = "C"  # balanced: normalized point nearest (1, 1)


class DesignSolution(BaseModel):
    """A decoded front member with its surrogate-predicted objectives."""

    design: DesignPoint
    objectives: ObjectivePair
    labels: List[PointLabel] = []

    @property
    def label(self) -> str:
        return "".join(label.value for label in self.labels)


class ComparisonRow(BaseModel):
    """Surrogate prediction against oracle truth for one labelled design."""

    label: PointLabel
    design: DesignPoint
    predicted: ObjectivePair
    truth: ObjectivePair
    err_d_pct: float = Field(..., ge=0.0)
    err_f_pct: float = Field(..., ge=0.0)


class Violation(BaseModel):
    """A random sample that dominates at least one front member."""

    genes: List[float]
    f: float
    d: float
    dominated_members: List[int]


class ValidationReport(BaseModel):
    n_samples: int
    n_dominating: int
    violations: List[Violation] = []
    seed: Optional[int] = None
    rng: str = RNG_ALGORITHM
