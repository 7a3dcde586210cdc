"""
ZDT Benchmark Problems
Two-objective test problems with known Pareto fronts, used to check the
NSGA-II engine. Genes live in [0, 1]^n_var; both objectives are minimized.
"""

from dataclasses import dataclass
from typing import Callable

import numpy as np

from app.services.nsga2 import fast_non_dominated_sort


def _g(x: np.ndarray) -> np.ndarray:
    n_var = x.shape[1]
    return 1.0 + 9.0 * np.sum(x[:, 1:], axis=1) / (n_var - 1)


def zdt1(x: np.ndarray) -> np.ndarray:
    """Convex front f2 = 1 - sqrt(f1)."""
    x = np.atleast_2d(x)
    f1 = x[:, 0]
    g = _g(x)
    return np.column_stack([f1, g * (1.0 - np.sqrt(f1 / g))])


def zdt2(x: np.ndarray) -> np.ndarray:
    """Concave front f2 = 1 - f1^2."""
    x = np.atleast_2d(x)
    f1 = x[:, 0]
    g = _g(x)
    return np.column_stack([f1, g * (1.0 - (f1 / g) ** 2)])


def zdt3(x: np.ndarray) -> np.ndarray:
    """Disconnected front."""
    x = np.atleast_2d(x)
    f1 = x[:, 0]
    g = _g(x)
    h = 1.0 - np.sqrt(f1 / g) - (f1 / g) * np.sin(10.0 * np.pi * f1)
    return np.column_stack([f1, g * h])


def zdt1_front(f1) -> np.ndarray:
    return 1.0 - np.sqrt(np.asarray(f1, dtype=float))


def zdt2_front(f1) -> np.ndarray:
    return 1.0 - np.asarray(f1, dtype=float) ** 2


def zdt3_front(n_points: int = 2000) -> np.ndarray:
    """Non-dominated part of f2 = 1 - sqrt(f1) - f1 sin(10 pi f1), as (k, 2) points."""
    f1 = np.linspace(0.0, 1.0, n_points)
    f2 = 1.0 - np.sqrt(f1) - f1 * np.sin(10.0 * np.pi * f1)
    points = np.column_stack([f1, f2])
    ranks, _ = fast_non_dominated_sort(points)
    return points[ranks == 0]


@dataclass(frozen=True)
class Benchmark:
    name: str
    n_var: int
    evaluate: Callable[[np.ndarray], np.ndarray]


BENCHMARKS = {
    "zdt1": Benchmark("zdt1", 30, zdt1),
    "zdt2": Benchmark("zdt2", 30, zdt2),
    "zdt3": Benchmark("zdt3", 30, zdt3),
}
