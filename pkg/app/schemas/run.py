import json
from pathlib import Path
from typing import Optional, Tuple

from pydantic import BaseModel, ConfigDict, Field, field_validator

from app.core.rng import Stage, stage_seed
from app.schemas.design import DesignSpace
from app.schemas.optimization import NsgaConfig
from app.schemas.surrogate import GridSearchSpace, MlpConfig


class OracleConfig(BaseModel):
    """Noise settings for the pseudo-FEM oracle."""

    model_config = ConfigDict(frozen=True)

    noise_sigma: float = Field(0.0, ge=0.0)  # relative std of multiplicative noise
    seed: int = 0


class TrainingConfig(BaseModel):
    """Surrogate training block: final config, search space and split settings."""

    model_config = ConfigDict(frozen=True)

    mlp: MlpConfig = MlpConfig()
    grid_search: GridSearchSpace = GridSearchSpace()
    ratios: Tuple[float, float, float] = (0.8, 0.1, 0.1)
    k: int = Field(5, ge=2)
    split_seed: int = 0

    @field_validator("ratios")
    @classmethod
    def _ratios_sum_to_one(cls, v: Tuple[float, float, float]) -> Tuple[float, float, float]:
        if any(r < 0 for r in v):
            raise ValueError("ratios must be non-negative")
        if abs(sum(v) - 1.0) > 1e-9:
            raise ValueError(f"ratios must sum to 1, got {sum(v)}")
        return v


class ValidationConfig(BaseModel):
    """Random-sample check that nothing dominates the front."""

    model_config = ConfigDict(frozen=True)

    n_random: int = Field(10_000, ge=1)
    seed: int = 0


class PathsConfig(BaseModel):
    model_config = ConfigDict(frozen=True)

    dataset: str = Field("artifacts/dataset.csv", min_length=1)
    model: str = Field("artifacts/model.json", min_length=1)
    front: str = Field("artifacts/front.csv", min_length=1)
    reports: str = Field("artifacts/reports", min_length=1)


class RunConfig(BaseModel):
    """Complete pipeline configuration (the JSON passed with --config)."""

    model_config = ConfigDict(frozen=True, extra="forbid")

    design_space: DesignSpace = DesignSpace()
    oracle: OracleConfig = OracleConfig()
    training: TrainingConfig = TrainingConfig()
    nsga: NsgaConfig = NsgaConfig()
    validation: ValidationConfig = ValidationConfig()
    paths: PathsConfig = PathsConfig()
    # When set, every stage seed is derived from it by a fixed offset.
    seed: Optional[int] = None

    @classmethod
    def load(cls, path: Optional[str]) -> "RunConfig":
        if path is None:
            return cls()
        text = Path(path).read_text(encoding="utf-8")
        return cls.model_validate_json(text)

    def with_seed(self, seed: Optional[int]) -> "RunConfig":
        """Copy with the global seed replaced (None keeps the current one)."""
        if seed is None:
            return self
        return self.model_copy(update={"seed": seed})

    def resolved(self) -> "RunConfig":
        """Copy with block seeds rewritten from the global seed, if one is set."""
        if self.seed is None:
            return self
        s = self.seed
        training = self.training.model_copy(
            update={
                "split_seed": stage_seed(s, Stage.SPLIT),
                "mlp": self.training.mlp.model_copy(update={"seed": stage_seed(s, Stage.TRAINING)}),
            }
        )
        return self.model_copy(
            update={
                "oracle": self.oracle.model_copy(update={"seed": stage_seed(s, Stage.ORACLE)}),
                "training": training,
                "nsga": self.nsga.model_copy(update={"seed": stage_seed(s, Stage.NSGA)}),
                "validation": self.validation.model_copy(
                    update={"seed": stage_seed(s, Stage.VALIDATION)}
                ),
            }
        )

    def dump(self) -> str:
        return json.dumps(self.model_dump(mode="json"), indent=2)
