"""
Tests for the pseudo-FEM oracle.
"""

import math

import numpy as np
import pytest

from app.core.exceptions import BoundsError
from app.schemas.design import DesignPoint, DesignSpace
from app.schemas.run import OracleConfig
from app.services import oracle
from app.services.design_space import enumerate_grid
from app.services.nsga2 import fast_non_dominated_sort


@pytest.mark.parametrize(
    "design, expected",
    [
        ((1.5, 0.8, 10.0), (4.0, 1.0, 33.0, 9.0)),
        ((4.0, 1.6, 10.0), (82.0, 22.5, 15.0, 4.0)),
        ((2.75, 1.2, 13.0), (35.25, 9.8125, 26.0, 7.0)),
    ],
)
def test_closed_form_values(design, expected):
    result = oracle.evaluate(DesignPoint.from_values(design))
    assert result == pytest.approx(expected, abs=1e-12)


def test_out_of_bounds_design_rejected():
    design = DesignPoint.model_construct(t_beam=4.5, t_cross=1.0, spacing=12.0)
    with pytest.raises(BoundsError):
        oracle.evaluate(design)


def test_vectorized_matches_scalar(oracle_dataset):
    designs = oracle_dataset.design_matrix()
    assert np.allclose(oracle.evaluate_array(designs), oracle_dataset.response_matrix(), rtol=0, atol=1e-12)


def test_noise_free_dataset_is_reproducible():
    a = oracle.generate_dataset()
    b = oracle.generate_dataset()
    assert len(a) == 120
    assert a == b


def test_noisy_dataset_depends_only_on_seed():
    config = OracleConfig(noise_sigma=0.01, seed=7)
    a = oracle.generate_dataset(config=config)
    b = oracle.generate_dataset(config=config)
    c = oracle.generate_dataset(config=OracleConfig(noise_sigma=0.01, seed=8))
    assert a == b
    assert a.seed == 7
    assert np.array_equal(a.design_matrix(), c.design_matrix())
    assert not np.array_equal(a.response_matrix(), c.response_matrix())


def test_noise_is_keyed_by_record_index():
    config = OracleConfig(noise_sigma=0.05, seed=3)
    design = DesignPoint(t_beam=3.0, t_cross=1.2, spacing=14.0)
    assert oracle.evaluate(design, config, record_index=4) == oracle.evaluate(design, config, record_index=4)
    assert oracle.evaluate(design, config, record_index=4) != oracle.evaluate(design, config, record_index=5)


def test_fx_increases_and_dx_decreases_with_t_beam():
    grid = np.array([p.as_tuple() for p in enumerate_grid(DesignSpace())])
    responses = oracle.evaluate_array(grid)
    cube = responses.reshape(6, 5, 4, 4)
    assert np.all(np.diff(cube[..., 0], axis=0) > 0)
    assert np.all(np.diff(cube[..., 2], axis=0) < 0)


def test_response_envelope(oracle_dataset):
    responses = oracle_dataset.response_matrix()
    f = np.hypot(responses[:, 0], responses[:, 1])
    d = np.hypot(responses[:, 2], responses[:, 3])
    assert f.min() >= 4.1 and f.max() <= 86.0
    # widest D is at the thinnest, most widely spaced corner: hypot(35, 10)
    assert d.min() >= 15.0 and d.max() <= math.hypot(35.0, 10.0) + 1e-9


def test_grid_has_a_trade_off(oracle_dataset):
    responses = oracle_dataset.response_matrix()
    objectives = -np.column_stack(
        [np.hypot(responses[:, 0], responses[:, 1]), np.hypot(responses[:, 2], responses[:, 3])]
    )
    ranks, _ = fast_non_dominated_sort(objectives)
    assert np.count_nonzero(ranks == 0) >= 3


def test_magnitude_at_stiffest_corner():
    fx, fy, _, _ = oracle.evaluate(DesignPoint(t_beam=4.0, t_cross=1.6, spacing=10.0))
    assert math.hypot(fx, fy) == pytest.approx(85.03, abs=0.01)
