# utils/spherical.py
"""
Separation thresholds from spherical trigonometry.

A geodesic far enough from a face of an all-right polyhedron is cut off from
the polyhedron by one of the walls through that face. How far is "far enough"
depends on the codimension k of the face: the link of the face is the all-right
simplex in S^(k-1), and the threshold comes from the radius of its inscribed
sphere via threshold_from_tangency.
"""
import logging
from dataclasses import dataclass, field
from typing import Any, Dict, Optional

import numpy as np
from scipy.optimize import brentq

from config import Config
from utils.errors import InconclusiveProbe, NumericalError, ValidationError
from utils.sampling import run_chunked

logger = logging.getLogger(__name__)

HALF_PI = np.pi / 2
SUPPORTED_DIMS = (2, 3, 4)


@dataclass(frozen=True)
class ThresholdCase:
    dim: int
    k: int
    inscribed_radius: float   # spherical radius, pi/2 for the k = 1 sentinel
    threshold: float          # hyperbolic length
    note: str = field(default="", compare=False)

    def as_dict(self) -> Dict[str, Any]:
        return {
            "dim": self.dim,
            "k": self.k,
            "inscribed_radius": self.inscribed_radius,
            "threshold": self.threshold,
            "note": self.note,
        }


def spherical_angle(beta: float, gamma: float, a: float, tol: Optional[float] = None) -> float:
    """Angle opposite side a, from the two adjacent angles beta, gamma (polar law of cosines)."""
    tol = Config.TOL if tol is None else tol
    for name, v in (("beta", beta), ("gamma", gamma), ("a", a)):
        if not 0.0 < v < np.pi:
            raise ValidationError(f"{name} = {v} must lie in (0, pi)")
    c = -np.cos(beta) * np.cos(gamma) + np.sin(beta) * np.sin(gamma) * np.cos(a)
    if abs(c) > 1.0 + tol:
        raise NumericalError(f"arccos argument {c} outside [-1, 1]")
    return float(np.arccos(np.clip(c, -1.0, 1.0)))


def _solve_side(beta: float, gamma: float, target: float) -> float:
    """Side a in (0, pi/2] with spherical_angle(beta, gamma, a) = target."""
    def f(a):
        return spherical_angle(beta, gamma, a) - target

    lo, hi = 1e-9, HALF_PI
    if f(hi) == 0.0:
        return hi
    return float(brentq(f, lo, hi, xtol=1e-15, rtol=4 * np.finfo(float).eps, maxiter=200))


def inscribed_radius_lune() -> float:
    """
    Two orthogonal walls: the link is a lune of angle pi/2 and its incircle
    touches both sides at distance pi/4 from the centre.
    """
    return _solve_side(HALF_PI, HALF_PI, np.pi / 4)


def inscribed_circle_radius_right_triangle() -> float:
    """
    Incircle of the spherical triangle with three right angles (an octant of S^2).
    Joining the incenter to a vertex and to a tangency point gives a right
    triangle with angles pi/2 at the tangency point, pi/3 at the incenter and
    pi/4 at the vertex; the incircle radius is the side opposite pi/3.
    """
    return _solve_side(HALF_PI, np.pi / 3, np.pi / 4)


def angle_at_incenter_right_tetrahedron() -> float:
    """Angle at the incenter of the auxiliary triangle in the octant of S^3."""
    return spherical_angle(np.pi / 4, HALF_PI, inscribed_circle_radius_right_triangle())


def inscribed_sphere_radius_right_tetrahedron() -> float:
    """Inscribed sphere of the all-right tetrahedron in S^3 (an orthant of S^3)."""
    return _solve_side(angle_at_incenter_right_tetrahedron(), HALF_PI, np.pi / 4)


def threshold_from_tangency(r: float) -> float:
    """
    Distance R from the centre of the ball at which a hyperplane orthogonal to a
    radius has boundary sphere of spherical radius r.
    """
    if not 0.0 < r < HALF_PI:
        raise ValidationError(f"inscribed radius {r} must lie in (0, pi/2)")
    y = 1.0 / np.cos(r) - np.tan(r)
    if 1.0 - y <= np.finfo(float).eps:
        raise NumericalError(f"threshold diverges for inscribed radius {r}")
    return float(np.log((1.0 + y) / (1.0 - y)))


_RADIUS_BY_CODIM = {
    2: inscribed_radius_lune,
    3: inscribed_circle_radius_right_triangle,
    4: inscribed_sphere_radius_right_tetrahedron,
}


def codim_threshold(dim: int, k: int) -> ThresholdCase:
    if dim not in SUPPORTED_DIMS:
        raise ValidationError(f"dimension {dim} not supported, expected one of {SUPPORTED_DIMS}")
    if not 1 <= k <= dim:
        raise ValidationError(f"codimension k = {k} out of range 1..{dim}")
    if k == 1:
        return ThresholdCase(
            dim, 1, HALF_PI, 0.0,
            note="sentinel: a single wall separates at any positive distance, any R > 0 suffices",
        )
    r = _RADIUS_BY_CODIM[k]()
    return ThresholdCase(dim, k, r, threshold_from_tangency(r))


def max_threshold(dim: int) -> float:
    if dim not in SUPPORTED_DIMS:
        raise ValidationError(f"dimension {dim} not supported, expected one of {SUPPORTED_DIMS}")
    return max(codim_threshold(dim, k).threshold for k in range(1, dim + 1))


# ----------------- Monte Carlo separation oracle -----------------

def _random_configuration(rng: np.random.Generator, size: int, dim: int):
    """
    Random orthant (sign vector sigma) and a unit direction xi in the opposite
    orthant, i.e. the outward normal cone at the vertex.
    """
    sigma = rng.choice(np.array([-1.0, 1.0]), size=(size, dim))
    xi = -sigma * np.abs(rng.standard_normal((size, dim)))
    xi /= np.linalg.norm(xi, axis=1, keepdims=True)
    return sigma, xi


def _separated_geodesics(rng: np.random.Generator, size: int, dim: int, distance: float):
    sigma, xi = _random_configuration(rng, size, dim)
    eta = rng.standard_normal((size, dim))
    eta -= np.sum(eta * xi, axis=1, keepdims=True) * xi
    eta /= np.linalg.norm(eta, axis=1, keepdims=True)
    # ideal endpoints (1, sinh d xi +- eta) / cosh d, up to scale
    foot = np.sinh(distance) * xi
    plus = sigma * (foot + eta)
    minus = sigma * (foot - eta)
    wall_separates = (plus < 0) & (minus < 0)
    return wall_separates.any(axis=1), xi


def _separated_hyperplanes(rng: np.random.Generator, size: int, dim: int, distance: float):
    # hyperplane with normal (sinh d, cosh d xi) misses the wall x_i = 0 iff |xi_i| > sech d
    _, xi = _random_configuration(rng, size, dim)
    wall_separates = np.abs(xi) > 1.0 / np.cosh(distance)
    return wall_separates.any(axis=1), xi


_TARGETS = {
    "geodesic": _separated_geodesics,
    "hyperplane": _separated_hyperplanes,
}


def _separation_counts(dim: int, n_samples: int, seed: int, distance: float, target: str):
    if target not in _TARGETS:
        raise ValidationError(f"unknown target {target!r}, expected one of {sorted(_TARGETS)}")
    sampler = _TARGETS[target]

    def _chunk(rng: np.random.Generator, size: int):
        ok, xi = sampler(rng, size, dim, distance)
        bad = np.flatnonzero(~ok)
        example = xi[bad[0]].tolist() if len(bad) else None
        return int(ok.sum()), example

    results = run_chunked(_chunk, n_samples, seed, label=f"separation dim {dim}")
    separated = sum(r[0] for r in results)
    example = next((r[1] for r in results if r[1] is not None), None)
    return separated, example


def verify_separation_property(
    dim: int,
    n_samples: int,
    seed: int,
    distance: Optional[float] = None,
    target: str = "geodesic",
) -> Dict[str, Any]:
    """
    Sample targets at the given distance from the orthant vertex (default just
    beyond max_threshold) and count how many are cut off from the orthant by
    some coordinate wall.
    """
    if dim not in (3, 4):
        raise ValidationError(f"separation sampling supports dimensions 3 and 4, got {dim}")
    if n_samples <= 0:
        raise ValidationError("n_samples must be positive")
    threshold = max_threshold(dim)
    if distance is None:
        distance = threshold + 0.01
    separated, example = _separation_counts(dim, n_samples, seed, distance, target)
    report = {
        "dim": dim,
        "target": target,
        "threshold": threshold,
        "distance": distance,
        "n_samples": n_samples,
        "seed": seed,
        "separated": separated,
        "failures": n_samples - separated,
        "fraction": separated / n_samples,
        "counterexample_direction": example,
    }
    logger.info(
        "separation dim %d at d=%.6f (%s): %d/%d separated",
        dim, distance, target, separated, n_samples,
    )
    return report


def sharpness_probe(dim: int, n_samples: int, seed: int, offset: float = 0.05) -> Dict[str, Any]:
    """
    Search below the threshold for a hyperplane orthogonal to a radius that
    meets every coordinate wall. Finding none is inconclusive, not a failure.
    """
    distance = max_threshold(dim) - offset
    report = verify_separation_property(dim, n_samples, seed, distance=distance, target="hyperplane")
    if report["failures"] == 0:
        raise InconclusiveProbe(
            f"no counterexample among {n_samples} samples at distance {distance:.6f} (seed {seed})"
        )
    return report
