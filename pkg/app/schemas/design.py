import math
from typing import Dict, List, Tuple

from pydantic import BaseModel, ConfigDict, Field, model_validator

from app.core.exceptions import BoundsError, DegenerateColumnError, DesignSpaceError


# Order of the design variables everywhere: grid enumeration, model inputs, CSV columns.
DESIGN_VARIABLES: Tuple[str, str, str] = ("t_beam", "t_cross", "spacing")

# Permitted box for every design, mm.
DESIGN_BOUNDS: Dict[str, Tuple[float, float]] = {
    "t_beam": (1.5, 4.0),
    "t_cross": (0.8, 1.6),
    "spacing": (10.0, 16.0),
}

BOUNDS_TOLERANCE = 1e-9
STEP_TOLERANCE = 1e-9


def check_in_bounds(variable: str, value: float) -> None:
    """Raise BoundsError unless value is finite and inside the box for `variable`."""
    lower, upper = DESIGN_BOUNDS[variable]
    if not math.isfinite(value) or value <= 0:
        raise BoundsError(variable, value, lower, upper)
    if value < lower - BOUNDS_TOLERANCE or value > upper + BOUNDS_TOLERANCE:
        raise BoundsError(variable, value, lower, upper)


# ==================== Design Point ====================

class DesignPoint(BaseModel):
    """One internal geometry of the finger, all lengths in mm."""

    model_config = ConfigDict(frozen=True)

    t_beam: float  # front and support beam thickness (equal by construction)
    t_cross: float  # crossbeam thickness
    spacing: float  # equal spacing between crossbeams

    @model_validator(mode="after")
    def _within_bounds(self) -> "DesignPoint":
        for name in DESIGN_VARIABLES:
            check_in_bounds(name, getattr(self, name))
        return self

    def as_tuple(self) -> Tuple[float, float, float]:
        return (self.t_beam, self.t_cross, self.spacing)

    @classmethod
    def from_values(cls, values) -> "DesignPoint":
        t_beam, t_cross, spacing = (float(v) for v in values)
        return cls(t_beam=t_beam, t_cross=t_cross, spacing=spacing)


# ==================== Design Space ====================

class VariableRange(BaseModel):
    """Grid for one design variable: {min, max, step} in mm."""

    model_config = ConfigDict(frozen=True)

    min: float
    max: float
    step: float = Field(..., gt=0)

    def count(self) -> int:
        if self.max == self.min:
            return 1
        return int(round((self.max - self.min) / self.step)) + 1

    def values(self) -> List[float]:
        # Rounded so that e.g. 0.8 + 3*0.2 is written as 1.4, not 1.4000000000000001.
        return [round(self.min + i * self.step, 12) for i in range(self.count())]


class DesignSpace(BaseModel):
    """Bounded three-variable design space with a full-factorial grid."""

    model_config = ConfigDict(frozen=True)

    t_beam: VariableRange = VariableRange(min=1.5, max=4.0, step=0.5)
    t_cross: VariableRange = VariableRange(min=0.8, max=1.6, step=0.2)
    spacing: VariableRange = VariableRange(min=10.0, max=16.0, step=2.0)

    @model_validator(mode="after")
    def _check_ranges(self) -> "DesignSpace":
        self.validate_ranges()
        return self

    def validate_ranges(self) -> None:
        """Raise DesignSpaceError naming the first offending variable."""
        for name in DESIGN_VARIABLES:
            rng: VariableRange = getattr(self, name)
            lower, upper = DESIGN_BOUNDS[name]
            if not all(math.isfinite(v) for v in (rng.min, rng.max, rng.step)):
                raise DesignSpaceError(name, "range values must be finite")
            if rng.step <= 0:
                raise DesignSpaceError(name, f"step must be positive, got {rng.step}")
            if rng.max < rng.min:
                raise DesignSpaceError(name, f"max {rng.max} is below min {rng.min}")
            if rng.min < lower - BOUNDS_TOLERANCE or rng.max > upper + BOUNDS_TOLERANCE:
                raise DesignSpaceError(
                    name, f"range [{rng.min}, {rng.max}] leaves the bounds [{lower}, {upper}]"
                )
            span = rng.max - rng.min
            steps = round(span / rng.step)
            if abs(steps * rng.step - span) > STEP_TOLERANCE:
                raise DesignSpaceError(
                    name, f"step {rng.step} does not evenly divide the span {span}"
                )

    def ranges(self) -> List[VariableRange]:
        return [getattr(self, name) for name in DESIGN_VARIABLES]

    def lower(self) -> List[float]:
        return [r.min for r in self.ranges()]

    def upper(self) -> List[float]:
        return [r.max for r in self.ranges()]


# ==================== Scaler ====================

class ScalerParams(BaseModel):
    """Per-column min-max bounds used to normalize and invert."""

    model_config = ConfigDict(frozen=True)

    minimum: List[float]
    maximum: List[float]

    @model_validator(mode="after")
    def _check_columns(self) -> "ScalerParams":
        if len(self.minimum) != len(self.maximum):
            raise ValueError("minimum and maximum must have the same number of columns")
        for column, (lo, hi) in enumerate(zip(self.minimum, self.maximum)):
            if not hi > lo:
                raise DegenerateColumnError(column, lo)
        return self

    @property
    def n_columns(self) -> int:
        return len(self.minimum)
