# utils/hyperbolic.py
"""
Floating-point hyperbolic geometry in the hyperboloid model.

Points satisfy <x,x> = -1 with x0 > 0, hyperplanes are given by unit spacelike
normals, ideal points are lightlike vectors scaled to x0 = 1. The form is
<x,y> = -x0*y0 + sum(xi*yi). Conversions to the Poincare ball and the upper
half-space are provided by model_convert.
"""
import logging
from enum import Enum
from functools import cached_property
from typing import Iterable, Optional, Sequence, Tuple, Union

import numpy as np

from config import Config
from utils.errors import DegenerateAxisError, NotLoxodromicError, NumericalError, ValidationError

logger = logging.getLogger(__name__)

IDENTITY = "identity"
ELLIPTIC = "elliptic"
PARABOLIC = "parabolic"
LOXODROMIC = "loxodromic"

AMBIGUOUS_FLOOR = 1e-9       # spectral radius below 1 + this is treated as exactly 1
INCONSISTENT_RADIUS = 1e-3   # larger radius with a fixed point is a numerical failure
FIXED_SPACE_TOL = 1e-7       # singular values of m - I counted as zero, relative to ||m||
TIMELIKE_MARGIN = 1e-10      # |form| on the fixed space below this counts as degenerate

ArrayLike = Union[np.ndarray, Sequence[float]]


class Model(Enum):
    """Models of hyperbolic space handled by model_convert."""
    HYPERBOLOID = "hyperboloid"
    POINCARE = "poincare"
    BALL = "poincare"
    HALFSPACE = "halfspace"
    UPPER = "halfspace"

    @classmethod
    def _missing_(cls, value):
        if isinstance(value, str):
            key = value.strip().upper()
            if key in cls.__members__:
                return cls.__members__[key]
        return None


# ----------------- Minkowski form -----------------

def minkowski_matrix(dim: int) -> np.ndarray:
    """J = diag(-1, 1, ..., 1) for H^dim."""
    j = np.eye(dim + 1)
    j[0, 0] = -1.0
    return j


def minkowski_inner(x: ArrayLike, y: ArrayLike) -> Union[float, np.ndarray]:
    """-x0*y0 + sum(xi*yi); broadcasts over leading axes."""
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    if x.shape[-1] != y.shape[-1]:
        raise ValidationError(
            f"dimension mismatch: {x.shape[-1]} vs {y.shape[-1]} coordinates"
        )
    res = -x[..., 0] * y[..., 0] + np.sum(x[..., 1:] * y[..., 1:], axis=-1)
    if np.ndim(res) == 0:
        return float(res)
    return res


def normalize_point(x: ArrayLike) -> np.ndarray:
    """Rescale a timelike vector onto the upper sheet."""
    x = np.asarray(x, dtype=float)
    q = minkowski_inner(x, x)
    if np.any(np.asarray(q) >= 0):
        raise ValidationError("vector is not timelike, cannot normalize to a point")
    x = x / np.sqrt(-np.asarray(q))[..., None]
    return np.where(x[..., :1] < 0, -x, x)


def check_normal(u: ArrayLike, tol: Optional[float] = None) -> np.ndarray:
    tol = Config.TOL if tol is None else tol
    u = np.asarray(u, dtype=float)
    q = minkowski_inner(u, u)
    scale = max(1.0, float(np.max(np.abs(u))) ** 2)
    if abs(q - 1.0) > tol * scale:
        raise ValidationError(f"hyperplane normal is not unit spacelike: <u,u> = {q:.12f}")
    return u


def boost_to(point: ArrayLike) -> np.ndarray:
    """Lorentz boost carrying e0 to the given point."""
    p = np.asarray(point, dtype=float)
    ps = p[1:]
    n = len(p)
    t = np.empty((n, n))
    t[0, 0] = p[0]
    t[0, 1:] = ps
    t[1:, 0] = ps
    t[1:, 1:] = np.eye(n - 1) + np.outer(ps, ps) / (1.0 + p[0])
    return t


def point_from_direction(direction: ArrayLike, distance: float) -> np.ndarray:
    """Point at the given distance from e0 along a unit Euclidean direction."""
    d = np.asarray(direction, dtype=float)
    d = d / np.linalg.norm(d)
    return np.concatenate([[np.cosh(distance)], np.sinh(distance) * d])


# ----------------- distances -----------------

def dist_points(x: ArrayLike, y: ArrayLike, tol: Optional[float] = None) -> float:
    tol = Config.TOL if tol is None else tol
    c = -minkowski_inner(x, y)
    if np.any(np.asarray(c) < 1.0 - tol):
        raise ValidationError(f"invalid points: -<x,y> = {np.min(c):.12f} < 1")
    return np.arccosh(np.maximum(c, 1.0))


def dist_point_hyperplane(x: ArrayLike, u: ArrayLike, signed: bool = False) -> float:
    """arcsinh of <x,u>; positive values lie on the outer side of u."""
    s = np.arcsinh(minkowski_inner(x, u))
    return s if signed else np.abs(s)


def dist_hyperplanes(u: ArrayLike, v: ArrayLike) -> float:
    """Distance between the hyperplanes; 0 when they meet or are tangent."""
    c = abs(minkowski_inner(u, v))
    if c <= 1.0:
        return 0.0
    return float(np.arccosh(c))


# ----------------- Lorentz matrices -----------------

def lorentz_defect(g: np.ndarray) -> float:
    j = minkowski_matrix(g.shape[0] - 1)
    return float(np.max(np.abs(g.T @ j @ g - j)))


def lorentz_check(g: np.ndarray, tol: Optional[float] = None) -> np.ndarray:
    tol = Config.LORENTZ_TOL if tol is None else tol
    g = np.asarray(g, dtype=float)
    if g.ndim != 2 or g.shape[0] != g.shape[1]:
        raise ValidationError(f"isometry must be a square matrix, got shape {g.shape}")
    scale = max(1.0, float(np.max(np.abs(g))) ** 2)
    defect = lorentz_defect(g)
    if defect > tol * scale:
        raise NumericalError(f"matrix is not Lorentz: ||G^T J G - J|| = {defect:.3e}")
    if g[0, 0] <= 0:
        raise ValidationError("matrix does not preserve the upper sheet")
    return g


def lorentz_renormalize(g: np.ndarray) -> np.ndarray:
    """Minkowski Gram-Schmidt on the columns of g."""
    g = np.array(g, dtype=float, copy=True)
    n = g.shape[1]
    signs = np.ones(n)
    signs[0] = -1.0
    for i in range(n):
        col = g[:, i]
        for k in range(i):
            col = col - signs[k] * minkowski_inner(col, g[:, k]) * g[:, k]
        q = minkowski_inner(col, col)
        if q * signs[i] <= 0:
            raise NumericalError(f"renormalization failed at column {i}")
        g[:, i] = col / np.sqrt(abs(q))
    return g


def isometry_inverse(g: np.ndarray) -> np.ndarray:
    j = minkowski_matrix(g.shape[0] - 1)
    return j @ g.T @ j


def compose(matrices: Iterable[np.ndarray], renorm_every: Optional[int] = None) -> np.ndarray:
    """Ordered product m1 @ m2 @ ...; re-orthonormalized every renorm_every factors."""
    renorm_every = renorm_every or Config.RENORM_EVERY
    result = None
    for i, m in enumerate(matrices, start=1):
        result = np.array(m, dtype=float) if result is None else result @ m
        if i % renorm_every == 0:
            result = lorentz_renormalize(result)
            lorentz_check(result)
    if result is None:
        raise ValidationError("empty product has no dimension")
    return result


class Isometry:
    """Lorentz matrix acting on H^n, with lazily computed classification."""

    def __init__(self, matrix: ArrayLike, check: bool = True):
        m = np.array(matrix, dtype=float)
        if check:
            lorentz_check(m)
        m.setflags(write=False)
        self.matrix = m

    @classmethod
    def identity(cls, dim: int) -> "Isometry":
        return cls(np.eye(dim + 1), check=False)

    @property
    def dim(self) -> int:
        return self.matrix.shape[0] - 1

    @cached_property
    def kind(self) -> str:
        return classify(self)

    @cached_property
    def translation_length(self) -> float:
        return translation_length(self)

    def inverse(self) -> "Isometry":
        return Isometry(isometry_inverse(self.matrix), check=False)

    def __matmul__(self, other):
        if isinstance(other, Isometry):
            return Isometry(self.matrix @ other.matrix, check=False)
        return np.asarray(other, dtype=float) @ self.matrix.T if np.ndim(other) > 1 \
            else self.matrix @ np.asarray(other, dtype=float)

    def __pow__(self, n: int) -> "Isometry":
        if n < 0:
            return self.inverse() ** (-n)
        if n == 0:
            return Isometry.identity(self.dim)
        return Isometry(compose([self.matrix] * n), check=False)

    def __repr__(self) -> str:
        return f"Isometry(dim={self.dim})"


def _as_matrix(g: Union[Isometry, ArrayLike]) -> np.ndarray:
    return g.matrix if isinstance(g, Isometry) else np.asarray(g, dtype=float)


def reflect(u: ArrayLike) -> Isometry:
    """Reflection in the hyperplane u^perp: x -> x - 2<u,x>u."""
    u = check_normal(u)
    j = minkowski_matrix(len(u) - 1)
    r = np.eye(len(u)) - 2.0 * np.outer(u, j @ u)
    return Isometry(r, check=False)


# ----------------- classification -----------------

def _fixed_space_form(m: np.ndarray, tol: float = FIXED_SPACE_TOL) -> Optional[float]:
    """
    Least eigenvalue of the Minkowski form on an orthonormal basis of
    ker(m - I), or None when m fixes no vector. Negative: m fixes a point of
    H^n. Near zero: the fixed space is degenerate and holds a lightlike vector.
    """
    n = m.shape[0]
    _, s, vt = np.linalg.svd(m - np.eye(n))
    scale = max(1.0, float(np.linalg.norm(m, 2)))
    basis = vt[s <= tol * scale]
    if len(basis) == 0:
        return None
    q = basis @ minkowski_matrix(n - 1) @ basis.T
    return float(np.min(np.linalg.eigvalsh(q)))


def classify(g: Union[Isometry, ArrayLike], tol: Optional[float] = None) -> str:
    m = _as_matrix(g)
    tol = Config.IDENTITY_TOL if tol is None else tol
    if np.max(np.abs(m - np.eye(m.shape[0]))) < tol:
        return IDENTITY

    cond = np.linalg.cond(m)
    if not np.isfinite(cond) or cond > Config.COND_LIMIT:
        raise NumericalError(f"ill-conditioned isometry (condition estimate {cond:.3e})")

    rho = float(np.max(np.abs(np.linalg.eigvals(m))))
    form = _fixed_space_form(m)
    if form is not None and form < -TIMELIKE_MARGIN:
        if rho > 1.0 + INCONSISTENT_RADIUS:
            raise NumericalError(f"spectral radius {rho:.9f} but a fixed point exists")
        return ELLIPTIC
    lightlike_fixed = form is not None and abs(form) <= TIMELIKE_MARGIN
    if rho > 1.0 + Config.AMBIGUOUS_MARGIN:
        # a unipotent block splits eigenvalue 1 by ~eps^(1/3), well above the margin
        return PARABOLIC if lightlike_fixed else LOXODROMIC
    if rho > 1.0 + AMBIGUOUS_FLOOR:
        raise NumericalError(
            f"numerically ambiguous spectral radius 1 + {rho - 1.0:.3e}, refusing to classify"
        )
    if lightlike_fixed:
        return PARABOLIC
    raise NumericalError(f"spectral radius 1 without a fixed point or fixed ideal point (form {form})")


def translation_length(g: Union[Isometry, ArrayLike]) -> float:
    m = _as_matrix(g)
    kind = g.kind if isinstance(g, Isometry) else classify(m)
    if kind != LOXODROMIC:
        raise NotLoxodromicError(f"translation length needs a loxodromic isometry, got {kind}")
    rho = float(np.max(np.abs(np.linalg.eigvals(m))))
    return float(np.log(rho))


# ----------------- geodesics -----------------

class Geodesic:
    """
    Oriented complete geodesic from ideal point `start` to ideal point `end`.
    Parametrized by arclength x(t) = cosh(t) p0 + sinh(t) w, where t = 0 is
    the projection of e0.
    """

    def __init__(self, start: ArrayLike, end: ArrayLike, tol: Optional[float] = None):
        tol = Config.TOL if tol is None else tol
        a = np.asarray(start, dtype=float)
        b = np.asarray(end, dtype=float)
        if a[0] <= 0 or b[0] <= 0:
            raise ValidationError("ideal endpoints must have positive time coordinate")
        a = a / a[0]
        b = b / b[0]
        for v in (a, b):
            if abs(minkowski_inner(v, v)) > 1e3 * tol:
                raise ValidationError("geodesic endpoints must be lightlike")
        ab = minkowski_inner(a, b)
        if ab > -tol:
            raise ValidationError("geodesic endpoints coincide")
        s = np.sqrt(-2.0 * ab)
        self.start = a
        self.end = b
        self.base = (a + b) / s
        self.direction = (b - a) / s
        self.dim = len(a) - 1

    def point_at(self, t: Union[float, np.ndarray]) -> np.ndarray:
        t = np.asarray(t, dtype=float)
        return np.cosh(t)[..., None] * self.base + np.sinh(t)[..., None] * self.direction

    def tangent_at(self, t: float) -> np.ndarray:
        return np.sinh(t) * self.base + np.cosh(t) * self.direction

    def project(self, x: ArrayLike) -> Union[float, np.ndarray]:
        """Arclength parameter of the closest point on the geodesic."""
        return np.arctanh(minkowski_inner(x, self.direction) / -minkowski_inner(x, self.base))

    def frame(self, t: float = 0.0) -> np.ndarray:
        """
        Lorentz matrix F with F e0 = x(t) and F e1 = x'(t); F^-1 carries the
        geodesic to the standard one through e0 along e1.
        """
        n = self.dim + 1
        cols = [self.point_at(t), self.tangent_at(t)]
        signs = [-1.0, 1.0]
        candidates = list(np.eye(n)[1:])
        while len(cols) < n:
            best, best_q = None, 0.0
            for c in candidates:
                v = c.copy()
                for col, sg in zip(cols, signs):
                    v = v - sg * minkowski_inner(v, col) * col
                q = minkowski_inner(v, v)
                if q > best_q:
                    best, best_q = v, q
            if best is None:
                raise NumericalError("could not complete a Lorentz frame along the geodesic")
            cols.append(best / np.sqrt(best_q))
            signs.append(1.0)
        return np.column_stack(cols)

    def __repr__(self) -> str:
        return f"Geodesic(start={np.round(self.start, 6)}, end={np.round(self.end, 6)})"


def dist_point_to_geodesic(x: ArrayLike, geodesic: Geodesic) -> Union[float, np.ndarray]:
    px = minkowski_inner(x, geodesic.base)
    wx = minkowski_inner(x, geodesic.direction)
    c2 = np.maximum(np.asarray(px) ** 2 - np.asarray(wx) ** 2, 1.0)
    res = np.arccosh(np.sqrt(c2))
    return float(res) if np.ndim(res) == 0 else res


def _top_eigenvector(m: np.ndarray) -> Tuple[float, np.ndarray]:
    vals, vecs = np.linalg.eig(m)
    idx = int(np.argmax(np.abs(vals)))
    val = vals[idx]
    if abs(val.imag) > 1e-9 * abs(val):
        raise DegenerateAxisError("dominant eigenvalue is not real")
    v = np.real(vecs[:, idx])
    if abs(v[0]) < 1e-14:
        raise DegenerateAxisError("dominant eigenvector is not lightlike")
    return float(val.real), v / v[0]


def axis(g: Union[Isometry, ArrayLike]) -> Geodesic:
    """Axis oriented from the repelling to the attracting fixed point."""
    m = _as_matrix(g)
    kind = g.kind if isinstance(g, Isometry) else classify(m)
    if kind != LOXODROMIC:
        raise NotLoxodromicError(f"axis needs a loxodromic isometry, got {kind}")
    try:
        _, attracting = _top_eigenvector(m)
        _, repelling = _top_eigenvector(isometry_inverse(m))
        return Geodesic(repelling, attracting, tol=1e-6)
    except (ValidationError, np.linalg.LinAlgError) as e:
        raise DegenerateAxisError(f"axis computation failed: {e}") from e


# ----------------- models -----------------

def _ball_to_halfspace(y: np.ndarray) -> np.ndarray:
    # inversion in the sphere of radius sqrt(2) centred at -e_n; its own inverse
    e = np.zeros(y.shape[-1])
    e[-1] = 1.0
    z = y + e
    return 2.0 * z / np.sum(z * z, axis=-1, keepdims=True) - e


def _to_ball(x: np.ndarray, model: Model) -> np.ndarray:
    if model is Model.HYPERBOLOID:
        if np.any(x[..., 0] <= 0):
            raise ValidationError("hyperboloid point must have x0 > 0")
        q = minkowski_inner(x, x)
        if np.any(np.abs(np.asarray(q) + 1.0) > 1e-6 * np.max(np.abs(x)) ** 2):
            raise ValidationError("point is not on the hyperboloid")
        return x[..., 1:] / (1.0 + x[..., :1])
    if model is Model.POINCARE:
        if np.any(np.sum(x * x, axis=-1) >= 1.0):
            raise ValidationError("ball point must have |x| < 1")
        return x
    if np.any(x[..., -1] <= 0):
        raise ValidationError("half-space point must have positive last coordinate")
    return _ball_to_halfspace(x)


def _from_ball(y: np.ndarray, model: Model) -> np.ndarray:
    if model is Model.POINCARE:
        return y
    if model is Model.HALFSPACE:
        return _ball_to_halfspace(y)
    r2 = np.sum(y * y, axis=-1, keepdims=True)
    return np.concatenate([1.0 + r2, 2.0 * y], axis=-1) / (1.0 - r2)


def model_convert(x: ArrayLike, from_model, to_model) -> np.ndarray:
    src, dst = Model(from_model), Model(to_model)
    x = np.asarray(x, dtype=float)
    if src is dst:
        return x.copy()
    return _from_ball(_to_ball(x, src), dst)


def sl2_translation_length(trace: float) -> float:
    """Translation length of an element of PSL(2,R) with the given trace."""
    t = abs(float(trace))
    if t <= 2.0:
        raise NotLoxodromicError(f"|trace| = {t} <= 2 is not loxodromic")
    return float(2.0 * np.arccosh(t / 2.0))
