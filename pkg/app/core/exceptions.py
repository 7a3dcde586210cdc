"""
Toolkit Exceptions
Every error raised on purpose by the toolkit derives from FinRayError.
`user_error` separates bad input (exit status 2) from internal faults (exit status 1).
"""

from typing import Optional, Sequence


class FinRayError(Exception):
    """Base class for toolkit errors."""

    user_error: bool = True

    def __init__(self, message: str):
        super().__init__(message)
        self.message = message


# ==================== Design Space ====================

class DesignSpaceError(FinRayError):
    """Invalid design-space definition."""

    def __init__(self, variable: str, message: str):
        super().__init__(f"{variable}: {message}")
        self.variable = variable


class BoundsError(FinRayError):
    """Design value outside the permitted box."""

    def __init__(self, variable: str, value: float, lower: float, upper: float):
        super().__init__(
            f"{variable}={value!r} outside bounds [{lower}, {upper}]"
        )
        self.variable = variable
        self.value = value


class DegenerateColumnError(FinRayError):
    """Column with max == min cannot be min-max scaled."""

    def __init__(self, column: int, value: float):
        super().__init__(f"column {column} is constant ({value!r}); cannot fit scaler")
        self.column = column


# ==================== Dataset ====================

class DatasetFormatError(FinRayError):
    """Malformed dataset file, located by row and column where possible."""

    def __init__(self, message: str, row: Optional[int] = None, column: Optional[str] = None):
        where = []
        if row is not None:
            where.append(f"row {row}")
        if column is not None:
            where.append(f"column '{column}'")
        prefix = f"{', '.join(where)}: " if where else ""
        super().__init__(f"{prefix}{message}")
        self.row = row
        self.column = column


class DuplicateDesignError(DatasetFormatError):
    """Two records share an identical design point."""

    def __init__(self, row: int, first_row: int):
        super().__init__(f"duplicate design (first seen at row {first_row})", row=row)
        self.first_row = first_row


class CorrelationError(FinRayError):
    """Pearson correlation undefined for a constant vector."""

    def __init__(self, column: str = "vector"):
        super().__init__(f"correlation undefined: {column} is constant")
        self.column = column


class SplitSizeError(FinRayError):
    """Too few records to populate every split part."""

    def __init__(self, available: int, required: int):
        super().__init__(
            f"dataset has {available} records; at least {required} are required for this split"
        )
        self.available = available
        self.required = required


# ==================== Configuration ====================

class ConfigError(FinRayError):
    """Run configuration rejected."""

    def __init__(self, field: str, message: str):
        super().__init__(f"{field}: {message}")
        self.field = field


# ==================== Surrogate ====================

class InputError(FinRayError):
    """Model input that cannot be evaluated (non-finite or wrong width)."""


class DivergenceError(FinRayError):
    """Training produced a non-finite value."""

    user_error = False

    def __init__(self, epoch: int, batch: Optional[int] = None):
        where = f"epoch {epoch}" + (f", batch {batch}" if batch is not None else "")
        super().__init__(f"training diverged (non-finite loss) at {where}")
        self.epoch = epoch
        self.batch = batch


class MetricError(FinRayError):
    """Metric undefined for the evaluated rows."""

    def __init__(self, column: str, message: str):
        super().__init__(f"{column}: {message}")
        self.column = column


class ModelFormatError(FinRayError):
    """Model file schema or dimension mismatch."""

    def __init__(self, message: str, layer: Optional[int] = None):
        prefix = f"layer {layer}: " if layer is not None else ""
        super().__init__(f"{prefix}{message}")
        self.layer = layer


# ==================== Optimization ====================

class EvaluationError(FinRayError):
    """Objective evaluator returned non-finite values."""

    user_error = False

    def __init__(self, genes: Sequence[float]):
        super().__init__(f"evaluator returned non-finite objectives for genes {list(genes)}")
        self.genes = list(genes)


class DominanceError(FinRayError):
    """Dominance comparison on incompatible or unevaluated objective vectors."""
