"""
NSGA-II Engine
Generic elitist multi-objective genetic algorithm over genes in [0, 1]^n.
All objectives are minimized; callers negate anything they want maximized.

Operators follow the usual defaults: binary tournament on (rank, crowding),
bounded simulated binary crossover (eta 15, each gene crossed with probability
0.5), bounded polynomial mutation (eta 20) and mu + lambda survival truncated
by rank, then crowding distance.
"""

import logging
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, List, Optional, Sequence, Tuple, Union

import numpy as np
import pandas as pd

from app.core.exceptions import DominanceError, EvaluationError
from app.core.rng import make_rng
from app.schemas.optimization import GenerationStats, NsgaConfig

logger = logging.getLogger(__name__)

# Vectorized objective function: (n, n_var) genes -> (n, n_obj) objectives.
Evaluator = Callable[[np.ndarray], np.ndarray]

DUPLICATE_TOLERANCE = 1e-12
# parent genes closer than this are not crossed
SBX_EPSILON = 1e-14
STATS_COLUMNS = ["gen", "front_size", "min_f1", "max_f1", "min_f2", "max_f2"]


@dataclass
class ParetoFrontRaw:
    """Deduplicated non-dominated members (final population or run archive), engine convention."""

    genes: np.ndarray
    objectives: np.ndarray

    def __len__(self) -> int:
        return len(self.genes)


@dataclass
class NsgaResult:
    front: ParetoFrontRaw
    stats: List[GenerationStats]
    # rank-0 objective sets per generation, only with keep_history=True
    history: List[np.ndarray] = field(default_factory=list)


# ==================== Dominance & Sorting ====================

def dominates(a: Sequence[float], b: Sequence[float]) -> bool:
    """True iff a is no worse than b everywhere and strictly better somewhere."""
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    if a.shape != b.shape:
        raise DominanceError(f"objective vectors differ in length: {a.shape} vs {b.shape}")
    return bool(np.all(a <= b) and np.any(a < b))


def dominance_matrix(objectives: np.ndarray) -> np.ndarray:
    """D[i, j] is True when member i dominates member j."""
    obj = np.asarray(objectives, dtype=float)
    le = np.all(obj[:, None, :] <= obj[None, :, :], axis=2)
    lt = np.any(obj[:, None, :] < obj[None, :, :], axis=2)
    return le & lt


def fast_non_dominated_sort(objectives) -> Tuple[np.ndarray, List[List[int]]]:
    """
    Partition members into successive non-dominated fronts.

    Returns:
        (rank per member, fronts as ascending index lists)
    """
    obj = np.asarray(objectives, dtype=float)
    if obj.ndim != 2:
        raise DominanceError(f"objectives must be a 2-D array, got shape {obj.shape}")
    if not np.all(np.isfinite(obj)):
        bad = int(np.argmax(~np.all(np.isfinite(obj), axis=1)))
        raise DominanceError(f"member {bad} has unevaluated or non-finite objectives")

    n = len(obj)
    ranks = np.full(n, -1, dtype=int)
    fronts: List[List[int]] = []
    if n == 0:
        return ranks, fronts

    dom = dominance_matrix(obj)
    dominated_by = dom.sum(axis=0)
    remaining = np.ones(n, dtype=bool)
    rank = 0
    while remaining.any():
        current = remaining & (dominated_by == 0)
        members = np.flatnonzero(current)
        ranks[members] = rank
        fronts.append(members.tolist())
        dominated_by = dominated_by - dom[members].sum(axis=0)
        remaining &= ~current
        rank += 1
    return ranks, fronts


def crowding_distance(objectives) -> np.ndarray:
    """
    Crowding distance for the members of one front.
    Boundary members per objective get +inf; objectives with zero range add nothing.
    """
    obj = np.asarray(objectives, dtype=float)
    n = len(obj)
    if n == 0:
        raise DominanceError("crowding distance needs a non-empty front")
    distance = np.zeros(n)
    if n <= 2:
        distance[:] = np.inf
        return distance

    for m in range(obj.shape[1]):
        order = np.argsort(obj[:, m], kind="stable")
        values = obj[order, m]
        span = values[-1] - values[0]
        distance[order[0]] = np.inf
        distance[order[-1]] = np.inf
        if span > 0:
            distance[order[1:-1]] += (values[2:] - values[:-2]) / span
    return distance


def _crowding_by_front(objectives: np.ndarray, fronts: List[List[int]]) -> np.ndarray:
    crowding = np.zeros(len(objectives))
    for front in fronts:
        crowding[front] = crowding_distance(objectives[front])
    return crowding


# ==================== Operators ====================

def tournament_select(ranks: np.ndarray, crowding: np.ndarray, rng: np.random.Generator) -> int:
    """Binary tournament: lower rank, then larger crowding, then first drawn."""
    if len(ranks) < 2:
        raise ValueError("tournament selection needs at least 2 individuals")
    first, second = (int(i) for i in rng.choice(len(ranks), 2, replace=False))
    if ranks[second] < ranks[first]:
        return second
    if ranks[second] == ranks[first] and crowding[second] > crowding[first]:
        return second
    return first


def sbx_spread(u, eta: float, alpha=2.0):
    """
    Spread factor beta_q for uniform draw(s) u.

    alpha = 2 - beta^-(eta + 1) folds the distance to a bound into the
    distribution; the default 2 is the unbounded case.
    """
    u = np.asarray(u, dtype=float)
    alpha = np.asarray(alpha, dtype=float)
    exponent = 1.0 / (eta + 1.0)
    ua = u * alpha
    low = np.power(np.minimum(ua, 1.0), exponent)
    # u < 1 and alpha <= 2, so 2 - u * alpha > 0
    high = np.power(1.0 / (2.0 - np.maximum(ua, 1.0)), exponent)
    return np.where(ua <= 1.0, low, high)


def _bounded_alpha(beta: np.ndarray, eta: float) -> np.ndarray:
    return 2.0 - np.power(beta, -(eta + 1.0))


def sbx_crossover(
    p1: np.ndarray,
    p2: np.ndarray,
    rate: float,
    eta: float,
    rng: np.random.Generator,
    gene_rate: float = 0.5,
) -> Tuple[np.ndarray, np.ndarray]:
    """
    Bounded simulated binary crossover on [0, 1].

    The pair is crossed with probability `rate`; inside a crossed pair each gene
    takes part with probability `gene_rate` unless the parents agree on it.
    Each child gene is spread towards its own bound with a distribution cut at
    that bound, and the two children swap each gene with probability 0.5.
    """
    p1 = np.asarray(p1, dtype=float)
    p2 = np.asarray(p2, dtype=float)
    if rng.random() >= rate:
        return p1.copy(), p2.copy()

    shape = p1.shape
    cross = (rng.random(shape) < gene_rate) & (np.abs(p1 - p2) > SBX_EPSILON)
    u = rng.random(shape)
    swap = rng.random(shape) < 0.5

    y1 = np.minimum(p1, p2)
    y2 = np.maximum(p1, p2)
    span = np.where(cross, y2 - y1, 1.0)
    toward_lower = sbx_spread(u, eta, _bounded_alpha(1.0 + 2.0 * y1 / span, eta))
    toward_upper = sbx_spread(u, eta, _bounded_alpha(1.0 + 2.0 * (1.0 - y2) / span, eta))
    low = np.clip(0.5 * ((y1 + y2) - toward_lower * span), 0.0, 1.0)
    high = np.clip(0.5 * ((y1 + y2) + toward_upper * span), 0.0, 1.0)

    c1 = np.where(cross, np.where(swap, high, low), p1)
    c2 = np.where(cross, np.where(swap, low, high), p2)
    return c1, c2


def polynomial_perturbation(x, u, eta: float):
    """Bounded polynomial perturbation delta_q on [0, 1]; zero at u = 0.5."""
    x = np.asarray(x, dtype=float)
    u = np.asarray(u, dtype=float)
    exponent = 1.0 / (eta + 1.0)
    # 1 - distance to the lower bound, 1 - distance to the upper bound
    below = 2.0 * u + (1.0 - 2.0 * u) * np.power(1.0 - x, eta + 1.0)
    above = 2.0 * (1.0 - u) + 2.0 * (u - 0.5) * np.power(x, eta + 1.0)
    return np.where(
        u < 0.5,
        np.power(np.maximum(below, 0.0), exponent) - 1.0,
        1.0 - np.power(np.maximum(above, 0.0), exponent),
    )


def polynomial_mutation(genes: np.ndarray, rate: float, eta: float, rng: np.random.Generator) -> np.ndarray:
    """Mutate each gene with probability `rate`; result stays in [0, 1]."""
    genes = np.asarray(genes, dtype=float)
    mask = rng.random(genes.shape) < rate
    u = rng.random(genes.shape)
    delta = np.where(mask, polynomial_perturbation(genes, u, eta), 0.0)
    return np.clip(genes + delta, 0.0, 1.0)


# ==================== Generational Loop ====================

def _evaluate(evaluator: Evaluator, genes: np.ndarray) -> np.ndarray:
    objectives = np.asarray(evaluator(genes), dtype=float)
    if objectives.ndim != 2 or len(objectives) != len(genes):
        raise EvaluationError(genes[0])
    finite = np.all(np.isfinite(objectives), axis=1)
    if not finite.all():
        raise EvaluationError(genes[int(np.argmin(finite))])
    return objectives


def _offspring(
    population: np.ndarray,
    ranks: np.ndarray,
    crowding: np.ndarray,
    config: NsgaConfig,
    rng: np.random.Generator,
) -> np.ndarray:
    children = np.empty_like(population)
    for i in range(0, len(population), 2):
        a = tournament_select(ranks, crowding, rng)
        b = tournament_select(ranks, crowding, rng)
        c1, c2 = sbx_crossover(
            population[a], population[b], config.crossover_rate, config.sbx_eta, rng, config.sbx_gene_rate
        )
        children[i] = polynomial_mutation(c1, config.mutation_rate, config.pm_eta, rng)
        children[i + 1] = polynomial_mutation(c2, config.mutation_rate, config.pm_eta, rng)
    return children


def survivors(objectives: np.ndarray, size: int) -> np.ndarray:
    """Indices of the `size` best members by (rank, crowding descending)."""
    ranks, fronts = fast_non_dominated_sort(objectives)
    chosen: List[int] = []
    for front in fronts:
        if len(chosen) + len(front) <= size:
            chosen.extend(front)
            continue
        crowd = crowding_distance(objectives[front])
        order = np.argsort(-crowd, kind="stable")
        chosen.extend(np.asarray(front)[order[: size - len(chosen)]].tolist())
        break
    return np.asarray(chosen, dtype=int)


def _generation_stats(gen: int, front_objectives: np.ndarray) -> GenerationStats:
    f1 = front_objectives[:, 0]
    f2 = front_objectives[:, 1] if front_objectives.shape[1] > 1 else f1
    return GenerationStats(
        gen=gen,
        front_size=len(front_objectives),
        min_f1=float(f1.min()),
        max_f1=float(f1.max()),
        min_f2=float(f2.min()),
        max_f2=float(f2.max()),
    )


def deduplicate(genes: np.ndarray, objectives: np.ndarray) -> ParetoFrontRaw:
    """Drop members whose genes repeat an earlier member within 1e-12."""
    genes = np.asarray(genes, dtype=float)
    objectives = np.asarray(objectives, dtype=float)
    close = np.all(np.abs(genes[:, None, :] - genes[None, :, :]) <= DUPLICATE_TOLERANCE, axis=2)
    keep = ~np.tril(close, k=-1).any(axis=1)
    return ParetoFrontRaw(genes=genes[keep].copy(), objectives=objectives[keep].copy())


def _dominated_by_any(attackers: np.ndarray, targets: np.ndarray) -> np.ndarray:
    """Per target: does any attacker dominate it?"""
    le = np.all(attackers[:, None, :] <= targets[None, :, :], axis=2)
    lt = np.any(attackers[:, None, :] < targets[None, :, :], axis=2)
    return (le & lt).any(axis=0)


class ParetoArchive:
    """
    Non-dominated set of every individual offered to it, unique by genes.
    A member leaves only when a newcomer dominates it.
    """

    def __init__(self, n_var: int, n_obj: int):
        self.genes = np.empty((0, n_var))
        self.objectives = np.empty((0, n_obj))

    def __len__(self) -> int:
        return len(self.genes)

    def add(self, genes: np.ndarray, objectives: np.ndarray) -> int:
        """Offer evaluated individuals; returns how many were admitted."""
        genes = np.asarray(genes, dtype=float)
        objectives = np.asarray(objectives, dtype=float)
        if len(genes) == 0:
            return 0

        best = ~dominance_matrix(objectives).any(axis=0)
        unique = deduplicate(genes[best], objectives[best])
        genes, objectives = unique.genes, unique.objectives

        if len(self):
            admit = ~_dominated_by_any(self.objectives, objectives)
            # equal objectives are the only place a repeated gene vector can hide
            same = np.all(self.objectives[:, None, :] == objectives[None, :, :], axis=2)
            for member, newcomer in zip(*np.nonzero(same)):
                if np.all(np.abs(self.genes[member] - genes[newcomer]) <= DUPLICATE_TOLERANCE):
                    admit[newcomer] = False
            genes, objectives = genes[admit], objectives[admit]
            if len(genes) == 0:
                return 0
            stale = _dominated_by_any(objectives, self.objectives)
            genes = np.vstack([self.genes[~stale], genes])
            objectives = np.vstack([self.objectives[~stale], objectives])
            admitted = int(admit.sum())
        else:
            admitted = len(genes)

        self.genes, self.objectives = genes, objectives
        return admitted

    def front(self) -> ParetoFrontRaw:
        """Members ordered by the first objective, then the second."""
        order = np.lexsort(self.objectives.T[::-1])
        return ParetoFrontRaw(genes=self.genes[order].copy(), objectives=self.objectives[order].copy())


def run(
    evaluator: Evaluator,
    n_var: int,
    config: Optional[NsgaConfig] = None,
    keep_history: bool = False,
    archive: bool = False,
) -> NsgaResult:
    """
    Run NSGA-II.

    Args:
        evaluator: vectorized objective function over genes in [0, 1]^n_var
        n_var: number of genes
        config: engine parameters
        keep_history: keep every generation's rank-0 objective set
        archive: return the non-dominated set of every individual evaluated
                 during the run instead of the final population's rank 0

    Returns:
        NsgaResult with the deduplicated final front and per-generation stats
        (generation 0 is the initial population).
    """
    config = config or NsgaConfig()
    rng = make_rng(config.seed)
    size = config.population_size

    population = rng.random((size, n_var))
    objectives = _evaluate(evaluator, population)
    ranks, fronts = fast_non_dominated_sort(objectives)
    crowding = _crowding_by_front(objectives, fronts)

    elite = ParetoArchive(n_var, objectives.shape[1]) if archive else None
    if elite is not None:
        elite.add(population, objectives)

    stats = [_generation_stats(0, objectives[fronts[0]])]
    history = [objectives[fronts[0]].copy()] if keep_history else []
    logger.info(
        "NSGA-II started",
        extra={"population": size, "generations": config.generations, "n_var": n_var, "seed": config.seed},
    )

    for gen in range(1, config.generations + 1):
        children = _offspring(population, ranks, crowding, config, rng)
        child_objectives = _evaluate(evaluator, children)
        if elite is not None:
            elite.add(children, child_objectives)

        merged = np.vstack([population, children])
        merged_objectives = np.vstack([objectives, child_objectives])
        keep = survivors(merged_objectives, size)
        population = merged[keep]
        objectives = merged_objectives[keep]

        ranks, fronts = fast_non_dominated_sort(objectives)
        crowding = _crowding_by_front(objectives, fronts)
        stats.append(_generation_stats(gen, objectives[fronts[0]]))
        if keep_history:
            history.append(objectives[fronts[0]].copy())
        if gen % 10 == 0:
            progress = {"gen": gen, "front_size": len(fronts[0])}
            if elite is not None:
                progress["archive_size"] = len(elite)
            logger.info("NSGA-II progress", extra=progress)

    if elite is not None:
        front = elite.front()
    else:
        front = deduplicate(population[fronts[0]], objectives[fronts[0]])
    logger.info("NSGA-II finished", extra={"front_size": len(front)})
    return NsgaResult(front=front, stats=stats, history=history)


def write_generation_stats(stats: Sequence[GenerationStats], path: Union[str, Path]) -> None:
    frame = pd.DataFrame([s.model_dump() for s in stats], columns=STATS_COLUMNS)
    frame.to_csv(path, index=False, lineterminator="\n", encoding="utf-8")
