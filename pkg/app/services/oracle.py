"""
Pseudo-FEM Oracle
Deterministic analytic stand-in for the finite-element simulations.

With u, v, w the design variables mapped onto [0, 1]:
    u = (t_beam - 1.5) / 2.5, v = (t_cross - 0.8) / 0.8, w = (spacing - 10) / 6

    fx = 4 + 48u + 18u^2 + 8uv + 4v - 5uw
    fy = 0.25 fx + 2v
    dx = 33 - 12u - 4u^2 - 2v + 2w
    dy = 9 - 4u - v + w

Stiffer geometry (thicker beams) gives more force and less tip displacement.
Optional multiplicative Gaussian noise is keyed by (seed, record index), so
generation order does not change the numbers.
"""

import logging
from typing import Optional, Tuple

import numpy as np

from app.core.rng import counter_rng
from app.schemas.dataset import Dataset, Provenance, SimRecord
from app.schemas.design import DESIGN_VARIABLES, DesignPoint, DesignSpace, check_in_bounds
from app.schemas.run import OracleConfig
from app.services.design_space import enumerate_grid

logger = logging.getLogger(__name__)

Responses = Tuple[float, float, float, float]


def _unit_coordinates(design: DesignPoint) -> Tuple[float, float, float]:
    u = (design.t_beam - 1.5) / 2.5
    v = (design.t_cross - 0.8) / 0.8
    w = (design.spacing - 10.0) / 6.0
    return u, v, w


def _closed_form(u, v, w):
    fx = 4.0 + 48.0 * u + 18.0 * u * u + 8.0 * u * v + 4.0 * v - 5.0 * u * w
    fy = 0.25 * fx + 2.0 * v
    dx = 33.0 - 12.0 * u - 4.0 * u * u - 2.0 * v + 2.0 * w
    dy = 9.0 - 4.0 * u - v + w
    return fx, fy, dx, dy


def evaluate(
    design: DesignPoint,
    config: Optional[OracleConfig] = None,
    record_index: int = 0,
) -> Responses:
    """
    Responses (fx N, fy N, dx mm, dy mm) for one design.

    Args:
        design: geometry inside the permitted box
        config: noise settings; noise-free when omitted
        record_index: counter keying the noise stream for this design

    Returns:
        (fx, fy, dx, dy)
    """
    config = config or OracleConfig()
    # No silent extrapolation, even for points built with model_construct.
    for name in DESIGN_VARIABLES:
        check_in_bounds(name, getattr(design, name))

    responses = _closed_form(*_unit_coordinates(design))
    if config.noise_sigma > 0:
        eps = counter_rng(config.seed, (record_index,)).normal(0.0, config.noise_sigma, size=4)
        responses = tuple(r * (1.0 + e) for r, e in zip(responses, eps))
    return tuple(float(r) for r in responses)


def evaluate_array(designs: np.ndarray) -> np.ndarray:
    """Noise-free responses for an (n, 3) array of designs; returns (n, 4)."""
    designs = np.asarray(designs, dtype=float).reshape(-1, 3)
    u = (designs[:, 0] - 1.5) / 2.5
    v = (designs[:, 1] - 0.8) / 0.8
    w = (designs[:, 2] - 10.0) / 6.0
    return np.column_stack(_closed_form(u, v, w))


def generate_dataset(space: Optional[DesignSpace] = None, config: Optional[OracleConfig] = None) -> Dataset:
    """
    Evaluate every grid point of `space` in enumeration order.

    Returns:
        Dataset tagged oracle-generated, with the noise seed recorded.
    """
    space = space or DesignSpace()
    config = config or OracleConfig()

    records = []
    for index, design in enumerate(enumerate_grid(space)):
        fx, fy, dx, dy = evaluate(design, config, record_index=index)
        records.append(SimRecord(design=design, fx=fx, fy=fy, dx=dx, dy=dy))

    logger.info(
        "Oracle dataset generated",
        extra={"records": len(records), "noise_sigma": config.noise_sigma, "seed": config.seed},
    )
    return Dataset(records=records, provenance=Provenance.ORACLE, seed=config.seed)
