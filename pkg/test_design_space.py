"""
Tests for the design space: bounds, grid enumeration and min-max scaling.
"""

import numpy as np
import pytest
from pydantic import ValidationError

from app.core.exceptions import BoundsError, DegenerateColumnError, DesignSpaceError, InputError
from app.schemas.design import DesignPoint, DesignSpace, VariableRange
from app.services.design_space import (
    enumerate_grid,
    fit_scaler,
    grid_size,
    scale,
    scale_array,
    unscale,
)


# ==================== Design Points ====================

def test_design_point_accepts_table_bounds():
    point = DesignPoint(t_beam=4.0, t_cross=0.8, spacing=16.0)
    assert point.as_tuple() == (4.0, 0.8, 16.0)


@pytest.mark.parametrize(
    "values, variable",
    [
        ((5.0, 1.0, 12.0), "t_beam"),
        ((2.0, 0.6, 12.0), "t_cross"),
        ((2.0, 1.0, 9.0), "spacing"),
        ((2.0, 1.0, float("nan")), "spacing"),
    ],
)
def test_design_point_rejects_out_of_bounds(values, variable):
    with pytest.raises(BoundsError) as exc:
        DesignPoint.from_values(values)
    assert exc.value.variable == variable


# ==================== Grid ====================

def test_default_grid_has_120_points():
    grid = enumerate_grid(DesignSpace())
    assert len(grid) == 120 == grid_size(DesignSpace())
    assert grid[0].as_tuple() == (1.5, 0.8, 10.0)
    assert grid[1].as_tuple() == (1.5, 0.8, 12.0)
    assert grid[-1].as_tuple() == (4.0, 1.6, 16.0)


def test_grid_values_are_exact_decimals():
    assert DesignSpace().t_cross.values() == [0.8, 1.0, 1.2, 1.4, 1.6]


def test_single_value_space():
    space = DesignSpace(
        t_beam=VariableRange(min=2.0, max=2.0, step=0.5),
        t_cross=VariableRange(min=1.0, max=1.0, step=0.2),
        spacing=VariableRange(min=12.0, max=12.0, step=2.0),
    )
    grid = enumerate_grid(space)
    assert [p.as_tuple() for p in grid] == [(2.0, 1.0, 12.0)]


def test_t_beam_axis_only():
    space = DesignSpace(
        t_cross=VariableRange(min=1.0, max=1.0, step=0.2),
        spacing=VariableRange(min=12.0, max=12.0, step=2.0),
    )
    assert [p.t_beam for p in enumerate_grid(space)] == [1.5, 2.0, 2.5, 3.0, 3.5, 4.0]


def test_grid_size_matches_product_of_counts(rng):
    steps = {"t_beam": [0.25, 0.5, 1.25, 2.5], "t_cross": [0.1, 0.2, 0.4, 0.8], "spacing": [1.0, 2.0, 3.0, 6.0]}
    for _ in range(20):
        ranges = {name: float(rng.choice(options)) for name, options in steps.items()}
        space = DesignSpace(
            t_beam=VariableRange(min=1.5, max=4.0, step=ranges["t_beam"]),
            t_cross=VariableRange(min=0.8, max=1.6, step=ranges["t_cross"]),
            spacing=VariableRange(min=10.0, max=16.0, step=ranges["spacing"]),
        )
        grid = enumerate_grid(space)
        expected = 1
        for r in space.ranges():
            expected *= r.count()
        assert len(grid) == expected == grid_size(space)


def test_step_must_divide_span():
    with pytest.raises(DesignSpaceError) as exc:
        DesignSpace(t_beam=VariableRange(min=1.5, max=4.0, step=0.7))
    assert exc.value.variable == "t_beam"


def test_range_must_stay_in_bounds():
    with pytest.raises(DesignSpaceError) as exc:
        DesignSpace(spacing=VariableRange(min=8.0, max=16.0, step=2.0))
    assert exc.value.variable == "spacing"


def test_non_positive_step_rejected():
    with pytest.raises(ValidationError):
        VariableRange(min=1.5, max=4.0, step=0.0)


# ==================== Scaling ====================

def test_fit_scaler_records_min_and_max():
    params = fit_scaler([[1.5, 0.0], [4.0, 1.0], [2.5, 0.5]])
    assert params.minimum == [1.5, 0.0]
    assert params.maximum == [4.0, 1.0]


def test_fit_scaler_rejects_constant_column():
    with pytest.raises(DegenerateColumnError) as exc:
        fit_scaler([[1.0, 7.0], [2.0, 7.0]])
    assert exc.value.column == 1


def test_fit_scaler_needs_two_rows():
    with pytest.raises(InputError) as exc:
        fit_scaler([[1.5, 0.8, 10.0]])
    assert exc.value.user_error


def test_fit_scaler_margin_keeps_data_inside_the_unit_interval():
    data = [[4.0, 30.0], [82.0, 36.0], [43.0, 33.0]]
    params = fit_scaler(data, margin=0.1)
    scaled = scale_array(data, params)
    assert scaled.min(axis=0).tolist() == pytest.approx([0.1, 0.1], abs=1e-12)
    assert scaled.max(axis=0).tolist() == pytest.approx([0.9, 0.9], abs=1e-12)


def test_fit_scaler_rejects_margin_of_half():
    with pytest.raises(InputError):
        fit_scaler([[0.0], [1.0]], margin=0.5)


@pytest.mark.parametrize("value, expected", [(1.5, 0.0), (4.0, 1.0), (2.75, 0.5)])
def test_scale_examples(value, expected):
    assert scale(value, 1.5, 4.0) == pytest.approx(expected, abs=1e-15)


def test_scale_round_trip(rng):
    for lo, hi in [(1.5, 4.0), (0.8, 1.6), (10.0, 16.0)]:
        values = rng.uniform(lo, hi, size=1000)
        back = np.array([unscale(scale(v, lo, hi), lo, hi) for v in values])
        assert np.all(np.abs(back - values) / np.abs(values) < 1e-12)


def test_scale_array_clamps_only_numerical_noise():
    params = fit_scaler([[0.0], [1.0]])
    scaled = scale_array([[-1e-12], [1.0 + 1e-12], [1.5]], params)
    assert scaled[0, 0] == 0.0
    assert scaled[1, 0] == 1.0
    assert scaled[2, 0] == 1.5


def test_every_grid_point_is_valid():
    for point in enumerate_grid(DesignSpace()):
        DesignPoint.from_values(point.as_tuple())
