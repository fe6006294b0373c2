# utils/tubes.py
"""
Tube volumes around geodesic segments, their Monte Carlo oracle in the upper
half-space, and the index bounds built from them.

The tube of radius b around the vertical segment from height 1 to e^length is,
in half-space coordinates (x, u) with rho = |(x, u)|, the set 1 <= rho <= e^length,
u / rho >= sech(b). Its volume is the unit (dim-1)-ball volume times
sinh(b)^(dim-1) times length.
"""
import logging
from dataclasses import dataclass
from typing import Any, Dict, Tuple

import numpy as np
from scipy.special import gamma

from utils.errors import ValidationError
from utils.sampling import run_chunked, weighted_mean_estimate
from utils.spherical import SUPPORTED_DIMS, max_threshold

logger = logging.getLogger(__name__)

MIN_TUBE_SAMPLES = 10_000


def _check_dim(dim: int):
    if dim not in SUPPORTED_DIMS:
        raise ValidationError(f"dimension {dim} not supported, expected one of {SUPPORTED_DIMS}")


@dataclass(frozen=True)
class TubeSpec:
    dim: int
    b: float       # tube radius
    length: float  # core segment length

    def __post_init__(self):
        _check_dim(self.dim)
        for name in ("b", "length"):
            v = getattr(self, name)
            if not (np.isfinite(v) and v > 0):
                raise ValidationError(f"tube {name} must be positive and finite, got {v}")


@dataclass(frozen=True)
class BoundInputs:
    dim: int
    d_P: float      # polyhedron diameter
    V_P: float      # polyhedron volume
    length: float   # translation length of the element

    def __post_init__(self):
        _check_dim(self.dim)
        if not (np.isfinite(self.d_P) and self.d_P >= 0):
            raise ValidationError(f"diameter must be nonnegative, got {self.d_P}")
        if not (np.isfinite(self.V_P) and self.V_P > 0):
            raise ValidationError(f"volume must be positive, got {self.V_P}")
        if not (np.isfinite(self.length) and self.length > 0):
            raise ValidationError(f"translation length must be positive, got {self.length}")


def angle_of_parallelism(b: float) -> float:
    if not b > 0:
        raise ValidationError(f"angle of parallelism needs b > 0, got {b}")
    return float(np.arctan(1.0 / np.sinh(b)))


def unit_ball_volume(m: int) -> float:
    return float(np.pi ** (m / 2) / gamma(m / 2 + 1))


def tube_volume(tube: TubeSpec) -> float:
    m = tube.dim - 1
    return unit_ball_volume(m) * np.sinh(tube.b) ** m * tube.length


def is_derived_analog(dim: int) -> bool:
    """Dimension-2 formulas are analogs of the 3 and 4 dimensional ones, not quoted results."""
    return dim == 2


def _tube_box(tube: TubeSpec) -> Tuple[float, float, float]:
    top = np.exp(tube.length)
    half_width = top * np.tanh(tube.b)
    u_min = 1.0 / np.cosh(tube.b)
    return half_width, u_min, top


def mc_tube_volume(tube: TubeSpec, n_samples: int, seed: int) -> Tuple[float, float]:
    """Uniform samples over the bounding box, weighted by the hyperbolic density u^-dim."""
    if n_samples < MIN_TUBE_SAMPLES:
        raise ValidationError(f"mc_tube_volume needs at least {MIN_TUBE_SAMPLES} samples")
    dim = tube.dim
    half_width, u_min, top = _tube_box(tube)
    box_volume = (2 * half_width) ** (dim - 1) * (top - u_min)
    cos_max = 1.0 / np.cosh(tube.b)

    def _chunk(rng: np.random.Generator, size: int):
        x = rng.uniform(-half_width, half_width, size=(size, dim - 1))
        u = rng.uniform(u_min, top, size=size)
        rho = np.sqrt(np.sum(x * x, axis=1) + u * u)
        inside = (rho >= 1.0) & (rho <= top) & (u >= cos_max * rho)
        w = np.where(inside, u ** (-dim), 0.0)
        return [w.sum(), np.sum(w * w), size]

    chunks = run_chunked(_chunk, n_samples, seed, label=f"tube volume dim {dim}")
    est, err = weighted_mean_estimate(chunks, box_volume)
    logger.info("tube volume dim %d b=%g length=%g: %.6f +- %.6f", dim, tube.b, tube.length, est, err)
    return est, err


def index_bound(inputs: BoundInputs) -> float:
    """Twice the volume of the (R + d_P)-tube over V_P, R = max_threshold(dim)."""
    tube = TubeSpec(inputs.dim, max_threshold(inputs.dim) + inputs.d_P, inputs.length)
    return 2.0 * tube_volume(tube) / inputs.V_P


def tile_count_bound(inputs: BoundInputs) -> float:
    return index_bound(inputs) / 2.0


def volume_report(tube: TubeSpec, n_samples: int, seed: int) -> Dict[str, Any]:
    exact = tube_volume(tube)
    est, err = mc_tube_volume(tube, n_samples, seed)
    return {
        "dim": tube.dim,
        "b": tube.b,
        "length": tube.length,
        "closed_form": exact,
        "estimate": est,
        "std_error": err,
        "z_score": (est - exact) / err if err > 0 else 0.0,
        "relative_error": abs(est - exact) / exact,
        "derived_analog": is_derived_analog(tube.dim),
        "n_samples": n_samples,
        "seed": seed,
    }
