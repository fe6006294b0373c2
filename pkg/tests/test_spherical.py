import math

import numpy as np
import pytest

from utils.errors import InconclusiveProbe, NumericalError, ValidationError
from utils.hyperbolic import dist_point_hyperplane, minkowski_inner
from utils.spherical import (
    angle_at_incenter_right_tetrahedron,
    codim_threshold,
    inscribed_circle_radius_right_triangle,
    inscribed_radius_lune,
    inscribed_sphere_radius_right_tetrahedron,
    max_threshold,
    sharpness_probe,
    spherical_angle,
    threshold_from_tangency,
    verify_separation_property,
)

R3 = math.log(math.sqrt(2) + math.sqrt(3))
R4 = math.log(2 + math.sqrt(3))


def test_spherical_angle_of_octant():
    # two right angles and a right side give a right opposite angle
    assert spherical_angle(math.pi / 2, math.pi / 2, math.pi / 2) == pytest.approx(math.pi / 2)
    with pytest.raises(ValidationError):
        spherical_angle(0.0, 1.0, 1.0)


def test_inscribed_radii_closed_forms():
    assert inscribed_radius_lune() == pytest.approx(math.pi / 4, abs=1e-12)
    assert inscribed_circle_radius_right_triangle() == pytest.approx(math.acos(math.sqrt(2 / 3)), abs=1e-12)
    assert inscribed_sphere_radius_right_tetrahedron() == pytest.approx(math.pi / 6, abs=1e-12)
    assert 0 < angle_at_incenter_right_tetrahedron() < math.pi / 2


def test_angle_at_incenter_closed_form():
    assert angle_at_incenter_right_tetrahedron() == pytest.approx(math.acos(1 / math.sqrt(3)), abs=1e-12)


def vertex_angle(a, b, c):
    tb = b - np.dot(a, b) * a
    tc = c - np.dot(a, c) * a
    return math.acos(np.clip(np.dot(tb, tc) / (np.linalg.norm(tb) * np.linalg.norm(tc)), -1.0, 1.0))


def test_spherical_angle_matches_random_triangles(rng):
    checked = 0
    while checked < 200:
        a, b, c = (v / np.linalg.norm(v) for v in rng.normal(size=(3, 3)))
        side = math.acos(np.clip(np.dot(b, c), -1.0, 1.0))
        angles = vertex_angle(a, b, c), vertex_angle(b, c, a), vertex_angle(c, a, b)
        if min(side, *angles) < 0.05 or max(side, *angles) > math.pi - 0.05:
            continue
        alpha, beta, gamma = angles
        assert spherical_angle(beta, gamma, side) == pytest.approx(alpha, abs=1e-9)
        checked += 1


def wall_distances(c):
    # great sphere x_i = 0 lies at spherical distance arcsin|c_i| from c
    return np.arcsin(np.abs(c))


def test_incenters_are_equidistant_from_the_walls():
    lune = np.array([1.0, 1.0, 0.0]) / math.sqrt(2)
    assert np.allclose(wall_distances(lune)[:2], inscribed_radius_lune(), atol=1e-12)
    octant = np.ones(3) / math.sqrt(3)
    assert np.allclose(wall_distances(octant), inscribed_circle_radius_right_triangle(), atol=1e-12)
    # the incircle touches x_3 = 0 at the projection of the incenter
    touch = np.array([1.0, 1.0, 0.0]) / math.sqrt(2)
    assert math.acos(np.dot(octant, touch)) == pytest.approx(inscribed_circle_radius_right_triangle(), abs=1e-12)
    orthant = np.ones(4) / 2.0
    assert np.allclose(wall_distances(orthant), inscribed_sphere_radius_right_tetrahedron(), atol=1e-12)


@pytest.mark.parametrize("r", [0.1, math.pi / 6, math.acos(math.sqrt(2 / 3)), math.pi / 4, 1.3])
def test_tangent_hyperplane_has_the_given_boundary_radius(r):
    big_r = threshold_from_tangency(r)
    u = np.array([math.sinh(big_r), math.cosh(big_r), 0.0, 0.0])
    assert dist_point_hyperplane([1.0, 0.0, 0.0, 0.0], u) == pytest.approx(big_r, abs=1e-10)
    for phi in np.linspace(0.0, 2 * math.pi, 7):
        # ideal point at angle r from the radius through the foot of the hyperplane
        ideal = np.array([1.0, math.cos(r), math.sin(r) * math.cos(phi), math.sin(r) * math.sin(phi)])
        assert minkowski_inner(ideal, u) == pytest.approx(0.0, abs=1e-10)


def test_threshold_from_tangency():
    assert threshold_from_tangency(math.acos(math.sqrt(2 / 3))) == pytest.approx(R3, abs=1e-12)
    assert threshold_from_tangency(math.pi / 6) == pytest.approx(R4, abs=1e-12)
    assert threshold_from_tangency(math.pi / 4) == pytest.approx(math.log(1 + math.sqrt(2)), abs=1e-12)


@pytest.mark.parametrize("r", [0.0, math.pi / 2, -0.1, 2.0])
def test_threshold_rejects_radius_outside_open_interval(r):
    with pytest.raises(ValidationError):
        threshold_from_tangency(r)


def test_threshold_diverges_near_zero():
    with pytest.raises(NumericalError):
        threshold_from_tangency(1e-17)
    assert threshold_from_tangency(1e-6) > threshold_from_tangency(1e-3) > R4


def test_codim_thresholds():
    assert codim_threshold(3, 3).threshold == pytest.approx(R3, abs=1e-12)
    assert codim_threshold(4, 4).threshold == pytest.approx(R4, abs=1e-12)
    sentinel = codim_threshold(3, 1)
    assert sentinel.threshold == 0.0
    assert sentinel.inscribed_radius == pytest.approx(math.pi / 2)
    assert "any R > 0" in sentinel.note
    assert max_threshold(3) == pytest.approx(R3)
    assert max_threshold(4) == pytest.approx(R4)
    with pytest.raises(ValidationError):
        codim_threshold(5, 2)
    with pytest.raises(ValidationError):
        codim_threshold(3, 4)


def test_thresholds_increase_with_codimension():
    values = [codim_threshold(4, k).threshold for k in range(1, 5)]
    assert values == sorted(values)


@pytest.mark.parametrize("dim", [3, 4])
def test_separation_beyond_threshold(dim):
    report = verify_separation_property(dim, 200_000, seed=7)
    assert report["failures"] == 0
    assert report["fraction"] == 1.0
    assert report["counterexample_direction"] is None


def test_hyperplane_target_beyond_threshold():
    report = verify_separation_property(3, 100_000, seed=3, target="hyperplane")
    assert report["failures"] == 0


def test_sharpness_probe_finds_counterexample():
    report = sharpness_probe(3, 200_000, seed=11)
    assert report["failures"] > 0
    xi = np.abs(np.array(report["counterexample_direction"]))
    # every coordinate wall meets the hyperplane
    assert np.all(xi <= 1.0 / np.cosh(report["distance"]))


def test_sharpness_probe_is_inconclusive_with_tiny_sample():
    with pytest.raises(InconclusiveProbe):
        sharpness_probe(3, 1, seed=1)


def test_separation_sampling_is_deterministic():
    a = verify_separation_property(4, 50_000, seed=5, distance=R4 - 0.2, target="hyperplane")
    b = verify_separation_property(4, 50_000, seed=5, distance=R4 - 0.2, target="hyperplane")
    assert a == b


def test_separation_rejects_unsupported_dimension():
    with pytest.raises(ValidationError):
        verify_separation_property(2, 1000, seed=1)
    with pytest.raises(ValidationError):
        verify_separation_property(3, 1000, seed=1, target="sphere")


@pytest.mark.slow
@pytest.mark.parametrize("dim", [3, 4])
def test_separation_acceptance_size(dim):
    report = verify_separation_property(dim, 10_000_000, seed=42)
    assert report["failures"] == 0
