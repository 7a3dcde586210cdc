from typing import List, Optional

from pydantic import BaseModel, Field

from app.core.rng import RNG_ALGORITHM
from app.schemas.design import DesignPoint


# ==================== Design Space Schemas ====================

class VariableInfo(BaseModel):
    """One design variable: grid range plus the permitted box."""
    name: str
    min: float
    max: float
    step: float
    lower_bound: float
    upper_bound: float


class DesignSpaceResponse(BaseModel):
    variables: List[VariableInfo]
    grid_size: int


# ==================== Evaluation Schemas ====================

class DesignBatch(BaseModel):
    """Designs to evaluate, physical units (mm)."""
    designs: List[DesignPoint] = Field(..., min_length=1, max_length=10_000)


class ResponseItem(BaseModel):
    """Responses and composed objectives for one design."""
    design: DesignPoint
    fx: float
    fy: float
    dx: float
    dy: float
    f: float
    d: float


class PredictResponse(BaseModel):
    predictions: List[ResponseItem]
    hidden_sizes: List[int]
    activation: str
    model_seed: Optional[int] = None
    rng: str = RNG_ALGORITHM


class OracleResponse(BaseModel):
    results: List[ResponseItem]
