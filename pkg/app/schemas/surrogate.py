from typing import List, Literal, Tuple

from pydantic import BaseModel, ConfigDict, Field, field_validator

from app.core.rng import RNG_ALGORITHM
from app.schemas.dataset import RESPONSE_NAMES
from app.schemas.design import ScalerParams


INPUT_WIDTH = 3
OUTPUT_WIDTH = 4
OUTPUT_ACTIVATION = "sigmoid"

Activation = Literal["relu", "sigmoid", "tanh"]
ACTIVATIONS: Tuple[str, ...] = ("relu", "sigmoid", "tanh")


# ==================== Training Config ====================

class MlpConfig(BaseModel):
    """Architecture and optimizer settings for one surrogate model."""

    model_config = ConfigDict(frozen=True)

    hidden_sizes: Tuple[int, int, int] = (9, 10, 9)
    hidden_activation: Activation = "relu"
    dropout_rate: float = Field(0.0, ge=0.0, lt=1.0)
    # targets scale into [margin, 1 - margin] so the sigmoid can reach the extremes
    target_margin: float = Field(0.1, ge=0.0, lt=0.5)
    learning_rate: float = Field(0.001, gt=0.0)
    batch_size: int = Field(1, ge=1)
    epochs: int = Field(50, ge=1)
    seed: int = 0

    @field_validator("hidden_sizes")
    @classmethod
    def _positive_widths(cls, v: Tuple[int, int, int]) -> Tuple[int, int, int]:
        if any(size < 1 for size in v):
            raise ValueError(f"hidden layer widths must be positive, got {list(v)}")
        return v

    def layer_sizes(self) -> List[int]:
        return [INPUT_WIDTH, *self.hidden_sizes, OUTPUT_WIDTH]


class GridSearchSpace(BaseModel):
    """Candidate hidden widths and activations searched with K-fold validation."""

    model_config = ConfigDict(frozen=True)

    h1: List[int] = list(range(1, 11))
    h2: List[int] = list(range(1, 11))
    h3: List[int] = list(range(1, 11))
    activations: List[Activation] = list(ACTIVATIONS)

    @field_validator("h1", "h2", "h3")
    @classmethod
    def _non_empty_widths(cls, v: List[int]) -> List[int]:
        if not v:
            raise ValueError("must list at least one width")
        if any(size < 1 for size in v):
            raise ValueError("widths must be positive")
        return v

    @field_validator("activations")
    @classmethod
    def _non_empty_activations(cls, v: List[str]) -> List[str]:
        if not v:
            raise ValueError("must list at least one activation")
        return v

    def size(self) -> int:
        return len(self.h1) * len(self.h2) * len(self.h3) * len(self.activations)


# ==================== Metrics ====================

class Metrics(BaseModel):
    """MSE, MAE and R^2 per target (fx, fy, dx, dy) in normalized space, plus means."""

    targets: List[str] = list(RESPONSE_NAMES)
    mse: List[float]
    mae: List[float]
    r2: List[float]
    mse_mean: float
    mae_mean: float
    r2_mean: float


class LossCurve(BaseModel):
    """Per-epoch MSE on the training and validation rows (normalized space)."""

    train_mse: List[float] = []
    val_mse: List[float] = []


class GridSearchRow(BaseModel):
    """One scored configuration."""

    h1: int
    h2: int
    h3: int
    activation: str
    mean_val_mse: float
    rank: int = 0


# ==================== Model File ====================

class LayerFile(BaseModel):
    weights: List[List[float]]  # rows = out, cols = in
    bias: List[float]
    activation: str


class ModelFile(BaseModel):
    """On-disk JSON form of a trained surrogate."""

    config: MlpConfig
    input_scaler: ScalerParams
    target_scaler: ScalerParams
    layers: List[LayerFile]
    seed: int
    rng: str = RNG_ALGORITHM
