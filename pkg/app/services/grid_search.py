"""
Architecture Grid Search
Scores every (h1, h2, h3, activation) combination by mean final-epoch
validation MSE over K folds and picks the best one.
"""

import itertools
import logging
import math
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path
from typing import List, Optional, Sequence, Tuple, Union

import numpy as np
import pandas as pd

from app.config import settings
from app.core.exceptions import DivergenceError
from app.schemas.dataset import Dataset, SplitIndices
from app.schemas.surrogate import GridSearchRow, GridSearchSpace, MlpConfig
from app.services.mlp import cross_validate_rows

logger = logging.getLogger(__name__)

GRID_COLUMNS = ["h1", "h2", "h3", "activation", "mean_val_mse", "rank"]


def candidate_configs(space: GridSearchSpace, base: MlpConfig) -> List[MlpConfig]:
    """Every combination in lexicographic (h1, h2, h3, activation) order."""
    return [
        base.model_copy(update={"hidden_sizes": (h1, h2, h3), "hidden_activation": activation})
        for h1, h2, h3, activation in itertools.product(space.h1, space.h2, space.h3, space.activations)
    ]


def score_config(
    designs: np.ndarray,
    responses: np.ndarray,
    split: SplitIndices,
    config: MlpConfig,
) -> float:
    """Mean final-epoch validation MSE across folds; inf when any fold diverges."""
    try:
        result = cross_validate_rows(designs, responses, split, config)
    except DivergenceError as e:
        logger.warning(
            "Configuration diverged",
            extra={"hidden_sizes": list(config.hidden_sizes), "activation": config.hidden_activation, "epoch": e.epoch},
        )
        return math.inf
    score = result.score
    return score if math.isfinite(score) else math.inf


def _score_job(job: Tuple[np.ndarray, np.ndarray, SplitIndices, MlpConfig]) -> float:
    return score_config(*job)


def rank_rows(configs: Sequence[MlpConfig], scores: Sequence[float]) -> List[GridSearchRow]:
    """
    Rank by (score, total hidden neurons, enumeration order); rank 1 is best.
    Rows come back in enumeration order.
    """
    order = sorted(
        range(len(configs)),
        key=lambda i: (scores[i], sum(configs[i].hidden_sizes), i),
    )
    ranks = {index: position + 1 for position, index in enumerate(order)}
    return [
        GridSearchRow(
            h1=config.hidden_sizes[0],
            h2=config.hidden_sizes[1],
            h3=config.hidden_sizes[2],
            activation=config.hidden_activation,
            mean_val_mse=scores[i],
            rank=ranks[i],
        )
        for i, config in enumerate(configs)
    ]


def grid_search(
    dataset: Dataset,
    split: SplitIndices,
    space: GridSearchSpace,
    base: Optional[MlpConfig] = None,
    max_workers: Optional[int] = None,
) -> Tuple[MlpConfig, List[GridSearchRow]]:
    """
    K-fold search over the architecture grid.

    Args:
        dataset: full dataset; folds come from `split`
        split: split whose K folds partition the non-test rows
        space: widths and activations to search
        base: optimizer settings and seed shared by every candidate
        max_workers: process pool width (defaults to MAX_WORKERS; 1 runs inline)

    Returns:
        (winning config, score table in enumeration order)
    """
    base = base or MlpConfig()
    workers = settings.MAX_WORKERS if max_workers is None else max_workers
    configs = candidate_configs(space, base)
    designs = dataset.design_matrix()
    responses = dataset.response_matrix()

    logger.info("Grid search started", extra={"configs": len(configs), "folds": split.k, "workers": workers})

    jobs = [(designs, responses, split, config) for config in configs]
    if workers > 1 and len(jobs) > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            # map yields in submission order
            scores = list(pool.map(_score_job, jobs))
    else:
        scores = []
        for i, job in enumerate(jobs, start=1):
            scores.append(_score_job(job))
            if i % 50 == 0:
                logger.info("Grid search progress", extra={"done": i, "total": len(jobs)})

    rows = rank_rows(configs, scores)
    best = configs[next(i for i, row in enumerate(rows) if row.rank == 1)]
    logger.info(
        "Grid search finished",
        extra={
            "hidden_sizes": list(best.hidden_sizes),
            "activation": best.hidden_activation,
            "score": min(scores),
        },
    )
    return best, rows


def write_grid_csv(rows: Sequence[GridSearchRow], path: Union[str, Path]) -> None:
    frame = pd.DataFrame([row.model_dump() for row in rows], columns=GRID_COLUMNS)
    frame.to_csv(path, index=False, lineterminator="\n", encoding="utf-8")
