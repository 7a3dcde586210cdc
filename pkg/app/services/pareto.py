"""
Pareto Pipeline
Turns a trained surrogate into the two-objective problem (maximize grasp force F
and tip displacement D), runs NSGA-II on it, decodes the front back to
geometries, labels the reference points and checks the result against random
surrogate samples and the oracle.
"""

import json
import logging
import math
from pathlib import Path
from typing import List, Optional, Sequence, Tuple, Union

import numpy as np
import pandas as pd
from pydantic import ValidationError

from app.core.exceptions import BoundsError, ConfigError, DatasetFormatError, InputError
from app.core.rng import RNG_ALGORITHM, make_rng
from app.schemas.dataset import Dataset
from app.schemas.design import DesignPoint
from app.schemas.optimization import (
    ComparisonRow,
    DesignSolution,
    NsgaConfig,
    ObjectivePair,
    PointLabel,
    ValidationReport,
    Violation,
)
from app.schemas.run import OracleConfig
from app.services import nsga2, oracle
from app.services.design_space import unscale_array
from app.services.mlp import MlpModel, forward

logger = logging.getLogger(__name__)

PathLike = Union[str, Path]

FRONT_COLUMNS = ["t_beam_mm", "t_cross_mm", "spacing_mm", "f_n", "d_mm", "label"]
COMPARISON_COLUMNS = ["label", "pred_d_mm", "pred_f_n", "truth_d_mm", "truth_f_n", "err_d_pct", "err_f_pct"]
PLOT_COLUMNS = ["source", "f_n", "d_mm"]
# random samples compared against the front per block
VALIDATION_CHUNK = 1024


# ==================== Objectives ====================

def compose_objectives(outputs: Sequence[float]) -> ObjectivePair:
    """F = sqrt(fx^2 + fy^2), D = sqrt(dx^2 + dy^2) from physical (fx, fy, dx, dy)."""
    fx, fy, dx, dy = (float(v) for v in outputs)
    return ObjectivePair(f=math.hypot(fx, fy), d=math.hypot(dx, dy))


def compose_array(outputs: np.ndarray) -> np.ndarray:
    """Vectorized compose_objectives: (n, 4) responses -> (n, 2) columns (f, d)."""
    out = np.asarray(outputs, dtype=float).reshape(-1, 4)
    return np.column_stack([np.hypot(out[:, 0], out[:, 1]), np.hypot(out[:, 2], out[:, 3])])


class SurrogateEvaluator:
    """
    Engine objective function backed by a surrogate.
    Genes are the model's normalized inputs; objectives are (-F, -D).
    """

    def __init__(self, model: MlpModel):
        self.model = model

    def physical(self, genes) -> np.ndarray:
        """(n, 2) array of (F, D) in N and mm."""
        outputs = unscale_array(forward(self.model, np.atleast_2d(genes)), self.model.target_scaler)
        return compose_array(outputs)

    def __call__(self, genes: np.ndarray) -> np.ndarray:
        return -self.physical(genes)


def make_evaluator(model: MlpModel) -> SurrogateEvaluator:
    return SurrogateEvaluator(model)


# ==================== Front Handling ====================

def decode_front(front: nsga2.ParetoFrontRaw, model: MlpModel) -> List[DesignSolution]:
    """Map engine genes/objectives back to physical designs and (F, D)."""
    designs = unscale_array(front.genes, model.input_scaler)
    return [
        DesignSolution(
            design=DesignPoint.from_values(design),
            objectives=ObjectivePair(f=float(-obj[0]), d=float(-obj[1])),
        )
        for design, obj in zip(designs, front.objectives)
    ]


def optimize(model: MlpModel, config: Optional[NsgaConfig] = None) -> Tuple[List[DesignSolution], nsga2.NsgaResult]:
    """Run NSGA-II over the surrogate and decode every non-dominated design it evaluated."""
    result = nsga2.run(make_evaluator(model), n_var=3, config=config, archive=True)
    return decode_front(result.front, model), result


def _normalized(values: np.ndarray) -> np.ndarray:
    span = values.max() - values.min()
    if span == 0:
        # degenerate axis adds no distance
        return np.ones_like(values)
    return (values - values.min()) / span


def select_points(front: Sequence[DesignSolution]) -> List[DesignSolution]:
    """
    Label A (largest D), B (largest F) and C (min-max normalized point nearest
    (1, 1)). Ties go to the first member.
    """
    if not front:
        raise InputError("cannot label an empty front")

    f = np.array([s.objectives.f for s in front])
    d = np.array([s.objectives.d for s in front])
    distance = np.hypot(1.0 - _normalized(f), 1.0 - _normalized(d))
    # argmax/argmin return the first index on ties
    picks = {
        PointLabel.A: int(np.argmax(d)),
        PointLabel.B: int(np.argmax(f)),
        PointLabel.C: int(np.argmin(distance)),
    }

    labelled = []
    for i, solution in enumerate(front):
        labels = [label for label, index in picks.items() if index == i]
        labelled.append(solution.model_copy(update={"labels": labels}))
    return labelled


def find_label(front: Sequence[DesignSolution], label: PointLabel) -> DesignSolution:
    for solution in front:
        if label in solution.labels:
            return solution
    raise InputError(f"front has no member labelled {label.value}")


# ==================== Validation ====================

def random_samples(model: MlpModel, n_random: int, seed: int) -> Tuple[np.ndarray, np.ndarray]:
    """Uniform genes in [0, 1]^3 and their surrogate (F, D)."""
    if n_random < 1:
        raise InputError(f"n_random must be at least 1, got {n_random}")
    genes = make_rng(seed).random((n_random, 3))
    return genes, make_evaluator(model).physical(genes)


def validate_front(
    front: Sequence[DesignSolution],
    model: MlpModel,
    n_random: int,
    seed: int,
    samples: Optional[Tuple[np.ndarray, np.ndarray]] = None,
) -> ValidationReport:
    """
    Count random samples that dominate (in max-F, max-D sense) any front member.

    Args:
        front: decoded front
        model: surrogate the samples are evaluated with
        n_random: number of uniform gene vectors
        seed: sampling seed
        samples: (genes, objectives) already drawn by random_samples with the
                 same n_random and seed; drawn here when omitted
    """
    genes, objectives = samples if samples is not None else random_samples(model, n_random, seed)
    if len(genes) != n_random or len(objectives) != n_random:
        raise InputError(f"expected {n_random} samples, got {len(genes)}")
    members = np.array([[s.objectives.f, s.objectives.d] for s in front])

    violations = []
    for start in range(0, n_random, VALIDATION_CHUNK):
        chunk = objectives[start:start + VALIDATION_CHUNK]
        ge = np.all(chunk[:, None, :] >= members[None, :, :], axis=2)
        gt = np.any(chunk[:, None, :] > members[None, :, :], axis=2)
        dominating = ge & gt
        for offset in np.flatnonzero(dominating.any(axis=1)):
            i = start + int(offset)
            violations.append(
                Violation(
                    genes=genes[i].tolist(),
                    f=float(objectives[i, 0]),
                    d=float(objectives[i, 1]),
                    dominated_members=np.flatnonzero(dominating[offset]).tolist(),
                )
            )

    report = ValidationReport(
        n_samples=n_random,
        n_dominating=len(violations),
        violations=violations,
        seed=seed,
        rng=RNG_ALGORITHM,
    )
    log = logger.warning if violations else logger.info
    log("Front validated against random samples", extra={"samples": n_random, "dominating": len(violations)})
    return report


# ==================== Ground Truth ====================

def percent_error(predicted: float, truth: float) -> float:
    """100 |predicted - truth| / truth"""
    if truth == 0:
        return 0.0 if predicted == 0 else math.inf
    return 100.0 * abs(predicted - truth) / abs(truth)


def compare_to_truth(
    front: Sequence[DesignSolution],
    config: Optional[OracleConfig] = None,
) -> List[ComparisonRow]:
    """Re-evaluate the A, B and C designs with the oracle, which must be noise-free."""
    config = config or OracleConfig()
    if config.noise_sigma > 0:
        raise ConfigError("oracle.noise_sigma", "ground truth needs a noise-free oracle")

    rows = []
    for label in PointLabel:
        solution = find_label(front, label)
        truth = compose_objectives(oracle.evaluate(solution.design, config))
        rows.append(
            ComparisonRow(
                label=label,
                design=solution.design,
                predicted=solution.objectives,
                truth=truth,
                err_d_pct=percent_error(solution.objectives.d, truth.d),
                err_f_pct=percent_error(solution.objectives.f, truth.f),
            )
        )
        logger.info(
            "Oracle comparison",
            extra={"label": label.value, "err_d_pct": rows[-1].err_d_pct, "err_f_pct": rows[-1].err_f_pct},
        )
    return rows


# ==================== Files ====================

def front_frame(front: Sequence[DesignSolution]) -> pd.DataFrame:
    return pd.DataFrame(
        [
            [*s.design.as_tuple(), s.objectives.f, s.objectives.d, s.label]
            for s in front
        ],
        columns=FRONT_COLUMNS,
    )


def write_front_csv(front: Sequence[DesignSolution], path: PathLike) -> None:
    front_frame(front).to_csv(path, index=False, lineterminator="\n", encoding="utf-8")


def read_front_csv(path: PathLike) -> List[DesignSolution]:
    path = Path(path)
    if not path.exists():
        raise FileNotFoundError(f"front file not found: {path}")
    try:
        frame = pd.read_csv(path, dtype=str, keep_default_na=False, encoding="utf-8")
    except pd.errors.EmptyDataError:
        raise DatasetFormatError("front file is empty; expected a header row")
    if list(frame.columns) != FRONT_COLUMNS:
        raise DatasetFormatError(f"front header must be {','.join(FRONT_COLUMNS)}")
    if frame.empty:
        raise DatasetFormatError("front file has no rows")

    front = []
    for position, raw in enumerate(frame.itertuples(index=False, name=None)):
        row = position + 1
        values = []
        for cell, column in zip(raw[:5], FRONT_COLUMNS):
            try:
                values.append(float(cell))
            except ValueError:
                raise DatasetFormatError(f"non-numeric value {cell!r}", row=row, column=column)
        try:
            front.append(
                DesignSolution(
                    design=DesignPoint.from_values(values[:3]),
                    objectives=ObjectivePair(f=values[3], d=values[4]),
                    labels=[PointLabel(ch) for ch in raw[5]],
                )
            )
        except (ValidationError, ValueError, BoundsError) as e:
            raise DatasetFormatError(f"invalid front row: {e}", row=row)
    return front


def write_comparison_csv(rows: Sequence[ComparisonRow], path: PathLike) -> None:
    frame = pd.DataFrame(
        [
            [r.label.value, r.predicted.d, r.predicted.f, r.truth.d, r.truth.f, r.err_d_pct, r.err_f_pct]
            for r in rows
        ],
        columns=COMPARISON_COLUMNS,
    )
    frame.to_csv(path, index=False, lineterminator="\n", encoding="utf-8")


def write_validation_json(report: ValidationReport, path: PathLike) -> None:
    Path(path).write_text(json.dumps(report.model_dump(mode="json"), indent=2) + "\n", encoding="utf-8")


def write_plot_points(
    front: Sequence[DesignSolution],
    dataset: Optional[Dataset],
    random_objectives: Optional[np.ndarray],
    path: PathLike,
) -> None:
    """(F, D) of the front, the dataset records and the random samples, tagged by source."""
    rows = [["front", s.objectives.f, s.objectives.d] for s in front]
    if dataset is not None:
        fd = compose_array(dataset.response_matrix())
        rows.extend(["dataset", float(f), float(d)] for f, d in fd)
    if random_objectives is not None:
        rows.extend(["random", float(f), float(d)] for f, d in random_objectives)
    pd.DataFrame(rows, columns=PLOT_COLUMNS).to_csv(path, index=False, lineterminator="\n", encoding="utf-8")
