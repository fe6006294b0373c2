import math

import pytest

from utils.errors import ValidationError
from utils.spherical import max_threshold
from utils.tubes import (
    BoundInputs,
    TubeSpec,
    angle_of_parallelism,
    index_bound,
    is_derived_analog,
    mc_tube_volume,
    tile_count_bound,
    tube_volume,
    unit_ball_volume,
    volume_report,
)


def test_unit_ball_volumes():
    assert unit_ball_volume(1) == pytest.approx(2.0)
    assert unit_ball_volume(2) == pytest.approx(math.pi)
    assert unit_ball_volume(3) == pytest.approx(4 * math.pi / 3)


def test_tube_volume_closed_forms():
    assert tube_volume(TubeSpec(3, 1.0, 1.0)) == pytest.approx(math.pi * math.sinh(1.0) ** 2)
    assert tube_volume(TubeSpec(4, 1.0, 2.0)) == pytest.approx(4 * math.pi / 3 * math.sinh(1.0) ** 3 * 2.0)
    assert tube_volume(TubeSpec(2, 0.5, 3.0)) == pytest.approx(2 * math.sinh(0.5) * 3.0)


def test_angle_of_parallelism():
    assert angle_of_parallelism(math.asinh(1.0)) == pytest.approx(math.pi / 4)
    with pytest.raises(ValidationError):
        angle_of_parallelism(0.0)


@pytest.mark.parametrize("kwargs", [
    dict(dim=5, b=1.0, length=1.0),
    dict(dim=3, b=0.0, length=1.0),
    dict(dim=3, b=1.0, length=-1.0),
    dict(dim=3, b=float("inf"), length=1.0),
])
def test_tube_spec_validation(kwargs):
    with pytest.raises(ValidationError):
        TubeSpec(**kwargs)


def test_bound_inputs_validation():
    with pytest.raises(ValidationError):
        BoundInputs(3, 1.0, 0.0, 1.0)
    with pytest.raises(ValidationError):
        BoundInputs(3, -1.0, 1.0, 1.0)


def test_index_bound_formula_and_linearity():
    inputs = BoundInputs(3, 2.0, 4.3, 1.5)
    expected = 2 * math.pi * math.sinh(max_threshold(3) + 2.0) ** 2 * 1.5 / 4.3
    assert index_bound(inputs) == pytest.approx(expected)
    doubled = BoundInputs(3, 2.0, 4.3, 3.0)
    assert index_bound(doubled) == pytest.approx(2 * index_bound(inputs))
    assert tile_count_bound(inputs) == pytest.approx(index_bound(inputs) / 2)


def test_derived_analog_flag():
    assert is_derived_analog(2)
    assert not is_derived_analog(3)
    assert volume_report(TubeSpec(2, 1.0, 1.0), 20_000, seed=1)["derived_analog"] is True


@pytest.mark.parametrize("dim", [2, 3, 4])
def test_monte_carlo_agrees_with_closed_form(dim):
    tube = TubeSpec(dim, 1.0, 1.0)
    est, err = mc_tube_volume(tube, 400_000, seed=42)
    assert abs(est - tube_volume(tube)) < 4 * err


def test_monte_carlo_is_deterministic():
    tube = TubeSpec(3, 0.7, 0.5)
    assert mc_tube_volume(tube, 50_000, seed=9) == mc_tube_volume(tube, 50_000, seed=9)


def test_monte_carlo_requires_enough_samples():
    with pytest.raises(ValidationError):
        mc_tube_volume(TubeSpec(3, 1.0, 1.0), 100, seed=1)


@pytest.mark.slow
@pytest.mark.parametrize("dim", [3, 4])
def test_monte_carlo_acceptance_size(dim):
    report = volume_report(TubeSpec(dim, 1.0, 1.0), 10_000_000, seed=42)
    assert abs(report["z_score"]) < 3


def test_thresholds_give_exact_sinh_values():
    assert math.sinh(max_threshold(3)) == pytest.approx(math.sqrt(2), abs=1e-12)
    assert math.sinh(max_threshold(4)) == pytest.approx(math.sqrt(3), abs=1e-12)
    assert index_bound(BoundInputs(3, 0.0, 1.0, 1.0)) == pytest.approx(4 * math.pi, abs=1e-9)
    assert index_bound(BoundInputs(4, 0.0, 1.0, 1.0)) == pytest.approx(8 * math.sqrt(3) * math.pi, abs=1e-9)


@pytest.mark.slow
@pytest.mark.parametrize("dim", [2, 3, 4])
@pytest.mark.parametrize("b", [0.5, 1.0, 2.0])
def test_tube_grid_acceptance_size(dim, b):
    tube = TubeSpec(dim, b, 1.0)
    est, err = mc_tube_volume(tube, 10_000_000, seed=42)
    exact = tube_volume(tube)
    assert abs(est - exact) < 3 * err
    assert abs(est - exact) < 0.01 * exact
