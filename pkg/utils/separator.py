# utils/separator.py
"""
Separating a loxodromic element from a finite-index reflection subgroup.

For a loxodromic alpha in the reflection group of P, the tiles of the convex
hull (in the tessellation) of a piece of alpha's axis form a compact convex
polyhedron C whose walls meet at right angles. The reflections in the walls of
C generate a subgroup H with fundamental domain C, so [group : H] is the number
of tiles of C. A base point x0 on the axis and alpha·x0 both lie inside C, and
they are distinct, hence alpha is not in H.
"""
import json
import logging
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Dict, List, Optional, Sequence, Tuple, Union

import numpy as np

from config import Config
from utils.errors import (
    CertificateError,
    DegenerateAxisError,
    InconclusiveCertificate,
    NotLoxodromicError,
    NumericalError,
    ValidationError,
)
from utils.hyperbolic import (
    LOXODROMIC,
    Geodesic,
    Isometry,
    axis,
    dist_point_to_geodesic,
    isometry_inverse,
    minkowski_matrix,
)
from utils.spherical import max_threshold
from utils.tiling import (
    BUILTINS,
    Polyhedron,
    SegmentRegion,
    TileSet,
    canonical_word,
    check_word,
    fold_point,
    fold_to_fundamental,
    locate_tile,
    polyhedron_from_dict,
    resolve_polyhedron,
    tiles_from_words,
    tiles_meeting_region,
    wall_key,
    word_to_isometry,
)
from utils.tubes import BoundInputs, index_bound, tile_count_bound
from utils.word_parser import format_reflection_word

logger = logging.getLogger(__name__)

Word = Tuple[int, ...]

WINDOW_EPS = 1e-7        # half-open period window is shifted back by this much
CONTAINMENT_SAMPLES = 33


@dataclass(frozen=True)
class BoundaryWall:
    tile: Word           # tile of the region carrying the wall
    face: int            # face index of that tile
    key: Word            # key of the wall's reflection
    normal: np.ndarray   # outward normal, in the local frame


@dataclass(eq=False)
class ConvexTileRegion:
    polyhedron: Polyhedron
    tiles: TileSet
    boundary_walls: List[BoundaryWall]
    axis: Geodesic
    frame: np.ndarray            # local -> global; the axis is (cosh t, sinh t, 0, ...) locally
    t_center: float              # axis parameter of the projection of P's reference point
    translation_length: float
    periods: int

    @property
    def to_local(self) -> np.ndarray:
        return isometry_inverse(self.frame)

    @property
    def half_length(self) -> float:
        return self.periods * self.translation_length / 2.0

    @property
    def segment(self) -> Tuple[np.ndarray, np.ndarray]:
        h = self.half_length
        return self.axis.point_at(self.t_center - h), self.axis.point_at(self.t_center + h)

    def boundary_normals(self) -> np.ndarray:
        return np.array([w.normal for w in self.boundary_walls]).reshape(-1, self.polyhedron.dim + 1)


def _local_axis_point(t: float, dim: int) -> np.ndarray:
    x = np.zeros(dim + 1)
    x[0], x[1] = np.cosh(t), np.sinh(t)
    return x


def _local_setup(P: Polyhedron, g: Isometry):
    if g.kind != LOXODROMIC:
        raise NotLoxodromicError(f"element is {g.kind}, not loxodromic")
    ax = axis(g)
    t_c = float(ax.project(P.center))
    frame = ax.frame(t_c)
    return ax, t_c, frame, isometry_inverse(frame)


def _tile_local_data(P: Polyhedron, tiles: TileSet, to_local: np.ndarray):
    mats = np.einsum("ij,tjk->tik", to_local, tiles.matrices())
    normals = np.einsum("tij,fj->tfi", mats, P.normals)   # (tiles, faces, dim+1)
    centers = mats @ P.center                              # (tiles, dim+1)
    return mats, normals, centers


def _wall_sides(v: np.ndarray, lo: float, hi: float, tol: float) -> np.ndarray:
    """+1/-1 when the local segment [lo, hi] lies strictly on one side of the wall, else 0."""
    f_lo = -v[:, 0] * np.cosh(lo) + v[:, 1] * np.sinh(lo)
    f_hi = -v[:, 0] * np.cosh(hi) + v[:, 1] * np.sinh(hi)
    scale = tol * np.maximum(1.0, np.max(np.abs(v), axis=1)) * np.cosh(max(abs(lo), abs(hi)))
    side = np.zeros(len(v))
    side[(f_lo > scale) & (f_hi > scale)] = 1.0
    side[(f_lo < -scale) & (f_hi < -scale)] = -1.0
    return side


def _full_axis_sides(v: np.ndarray, tol: float) -> np.ndarray:
    # ideal ends (1, +-1, 0, ...): both strictly on one side iff |v0| > |v1|
    side = np.zeros(len(v))
    margin = tol * np.maximum(1.0, np.max(np.abs(v), axis=1))
    strict = np.abs(v[:, 0]) - np.abs(v[:, 1]) > margin
    side[strict] = -np.sign(v[strict, 0])
    return side


def _prune(P: Polyhedron, tiles: TileSet, normals: np.ndarray, centers: np.ndarray, sides_fn) -> List[Word]:
    """Keep tiles on the segment's side of every wall that has the segment strictly on one side."""
    keys = tiles.keys()
    walls: Dict[Word, np.ndarray] = {}
    for t, key in enumerate(keys):
        for i in range(P.n_faces):
            wk = wall_key(key, i, P.adjacency)
            if wk not in walls:
                walls[wk] = normals[t, i]
    wall_normals = np.array(list(walls.values()))
    sides = sides_fn(wall_normals)
    constrained = sides != 0
    if not np.any(constrained):
        return keys
    j = minkowski_matrix(P.dim)
    vals = centers @ j @ wall_normals[constrained].T   # <center, wall>
    bad = np.any(vals * sides[constrained] < 0, axis=1)
    logger.debug("%d walls constrain, %d of %d candidate tiles pruned", int(constrained.sum()), int(bad.sum()), len(keys))
    return [k for k, b in zip(keys, bad) if not b]


def _boundary_walls(P: Polyhedron, tiles: TileSet, normals: np.ndarray) -> List[BoundaryWall]:
    walls: List[BoundaryWall] = []
    seen = set()
    for t, key in enumerate(tiles.keys()):
        for i in range(P.n_faces):
            if canonical_word(key + (i,), P.adjacency) in tiles:
                continue
            wk = wall_key(key, i, P.adjacency)
            if wk in seen:
                continue
            seen.add(wk)
            walls.append(BoundaryWall(tile=key, face=i, key=wk, normal=normals[t, i]))
    return walls


def convexity_violations(centers: np.ndarray, wall_normals: np.ndarray, tol: Optional[float] = None) -> List[Tuple[int, int]]:
    """(tile, wall) index pairs where a tile centre is not strictly inside a boundary wall."""
    tol = Config.TOL if tol is None else tol
    if len(wall_normals) == 0:
        return []
    j = minkowski_matrix(centers.shape[1] - 1)
    vals = centers @ j @ wall_normals.T
    return [tuple(p) for p in np.argwhere(vals >= -tol)]


def p_convexification(
    P: Polyhedron,
    g: Isometry,
    periods: int = 2,
    frontier_bound: Optional[int] = None,
) -> ConvexTileRegion:
    """
    Smallest convex union of tiles containing `periods` translation lengths of
    the axis of g, centred at the projection of P's reference point.
    """
    if periods < 2:
        raise ValidationError(f"periods must be at least 2, got {periods}")
    ax, t_c, frame, to_local = _local_setup(P, g)
    length = g.translation_length
    half = periods * length / 2.0
    radius = max_threshold(P.dim)

    start, _ = fold_to_fundamental(P, ax.point_at(t_c))
    region = SegmentRegion(P, to_local, -half, half, radius)
    candidates = tiles_meeting_region(P, region, frontier_bound, start_word=start)

    _, normals, centers = _tile_local_data(P, candidates, to_local)
    kept = _prune(P, candidates, normals, centers, lambda v: _wall_sides(v, -half, half, Config.TOL))
    tiles = candidates.subset(kept)

    _, normals, centers = _tile_local_data(P, tiles, to_local)
    walls = _boundary_walls(P, tiles, normals)
    bad = convexity_violations(centers, np.array([w.normal for w in walls]).reshape(-1, P.dim + 1))
    if bad:
        raise DegenerateAxisError(f"convexity audit failed for {len(bad)} tile/wall pairs")
    logger.info(
        "convexification: %d candidates, %d tiles, %d boundary walls (length %.6f, %d periods)",
        len(candidates), len(tiles), len(walls), length, periods,
    )
    return ConvexTileRegion(
        polyhedron=P, tiles=tiles, boundary_walls=walls, axis=ax, frame=frame,
        t_center=t_c, translation_length=length, periods=periods,
    )


def quotient_tile_count(P: Polyhedron, g: Isometry, frontier_bound: Optional[int] = None) -> int:
    """
    Tiles of the convex hull of the whole axis whose centres project into one
    period of the axis; the number of tiles of the hull in the quotient by <g>.
    """
    _, _, _, to_local = _local_setup(P, g)
    length = g.translation_length
    pad = max_threshold(P.dim) + 2.0 * P.d_P
    region = SegmentRegion(P, to_local, -pad, length + pad, max_threshold(P.dim))
    start, _ = fold_to_fundamental(P, isometry_inverse(to_local) @ _local_axis_point(0.0, P.dim))
    candidates = tiles_meeting_region(P, region, frontier_bound, start_word=start)
    _, normals, centers = _tile_local_data(P, candidates, to_local)
    kept = set(_prune(P, candidates, normals, centers, lambda v: _full_axis_sides(v, Config.TOL)))
    t = np.arctanh(centers[:, 1] / centers[:, 0])
    in_window = (t >= -WINDOW_EPS) & (t < length - WINDOW_EPS)
    k = sum(1 for key, w in zip(candidates.keys(), in_window) if w and key in kept)
    logger.debug("quotient tile count %d (length %.6f)", k, length)
    return k


# ----------------- certificates -----------------

@dataclass(eq=False)
class SeparationCertificate:
    polyhedron: Polyhedron
    alpha_word: Word
    translation_length: float
    periods: int
    k: int
    index: int
    theorem_bound: float
    tile_words: List[Word]
    boundary_walls: List[Tuple[Word, int]]
    fold_word: Word
    fold_residual: float
    region: Optional[ConvexTileRegion] = field(default=None, repr=False)


def _base_points(length: float, dim: int) -> Tuple[np.ndarray, np.ndarray]:
    s0 = -length / 2.0 + Config.BASE_OFFSET * length
    return _local_axis_point(s0, dim), _local_axis_point(s0 + length, dim)


def _strictly_inside(x: np.ndarray, wall_normals: np.ndarray, tol: float) -> bool:
    if len(wall_normals) == 0:
        return True
    j = minkowski_matrix(len(x) - 1)
    return bool(np.max(wall_normals @ j @ x) < -tol * max(1.0, x[0]))


def _h_fold(alpha_local: np.ndarray, wall_normals: np.ndarray, dim: int, length: float):
    """Fold alpha·x0 into the region with wall reflections; residual of w·alpha against identity."""
    x0, _ = _base_points(length, dim)
    word, w, _ = fold_point(alpha_local @ x0, wall_normals)
    residual = float(np.max(np.abs(w @ alpha_local - np.eye(dim + 1))))
    return word, residual


def _theorem_bound(P: Polyhedron, length: float) -> float:
    return index_bound(BoundInputs(P.dim, P.d_P, P.volume_lower, length))


def build_certificate(
    P: Polyhedron,
    alpha_word: Sequence[int],
    periods: int = 2,
    frontier_bound: Optional[int] = None,
) -> SeparationCertificate:
    word = check_word(P, alpha_word)
    g = word_to_isometry(P, word)
    if g.kind != LOXODROMIC:
        raise NotLoxodromicError(f"word {format_reflection_word(word)} is {g.kind}, not loxodromic")
    length = g.translation_length

    region = None
    for p in range(periods, max(periods, Config.MAX_PERIODS) + 1):
        candidate = p_convexification(P, g, p, frontier_bound)
        normals = candidate.boundary_normals()
        x0, ax0 = _base_points(length, P.dim)
        if _strictly_inside(x0, normals, Config.TOL) and _strictly_inside(ax0, normals, Config.TOL):
            region = candidate
            break
        logger.warning("base point on the region boundary with %d periods, extending", p)
    if region is None:
        raise DegenerateAxisError(
            f"base points not interior after {Config.MAX_PERIODS} periods for {format_reflection_word(word)}"
        )

    alpha_local = region.to_local @ g.matrix @ region.frame
    fold_word, residual = _h_fold(alpha_local, region.boundary_normals(), P.dim, length)
    if residual <= Config.IDENTITY_TOL:
        raise CertificateError(f"fold witness is the identity (residual {residual:.3e}): alpha lies in H")
    if residual <= Config.CERT_MARGIN:
        raise InconclusiveCertificate(
            f"fold residual {residual:.3e} below margin {Config.CERT_MARGIN}, refusing to certify"
        )

    cert = SeparationCertificate(
        polyhedron=P,
        alpha_word=word,
        translation_length=length,
        periods=region.periods,
        k=quotient_tile_count(P, g, frontier_bound),
        index=len(region.tiles),
        theorem_bound=_theorem_bound(P, length),
        tile_words=region.tiles.keys(),
        boundary_walls=[(w.tile, w.face) for w in region.boundary_walls],
        fold_word=fold_word,
        fold_residual=residual,
        region=region,
    )
    logger.info(
        "certificate %s on %s: length %.6f, index %d, k %d, bound %.3f, residual %.3f",
        format_reflection_word(word), P.name, length, cert.index, cert.k, cert.theorem_bound, residual,
    )
    return cert


# ----------------- verification -----------------

def _check(report: Dict[str, Any], name: str, ok: bool, detail: str = "") -> None:
    report["checks"][name] = {"ok": bool(ok), "detail": detail}
    if not ok:
        logger.warning("certificate check %s failed: %s", name, detail)


def verify_certificate(cert: SeparationCertificate) -> Dict[str, Any]:
    """
    Re-check a certificate from its words alone: nothing computed during
    construction is reused apart from the stored claims being tested.
    """
    P = cert.polyhedron
    report: Dict[str, Any] = {"polyhedron": P.name, "alpha": format_reflection_word(cert.alpha_word), "checks": {}}
    try:
        g = word_to_isometry(P, cert.alpha_word)
        loxodromic = g.kind == LOXODROMIC
    except (ValidationError, ArithmeticError) as e:
        _check(report, "loxodromic", False, str(e))
        report["ok"] = False
        return report
    _check(report, "loxodromic", loxodromic, g.kind)
    if not loxodromic:
        report["ok"] = False
        return report

    length = g.translation_length
    _check(report, "translation_length", abs(length - cert.translation_length) <= 1e-8 * max(1.0, length),
           f"{length:.12f} vs stored {cert.translation_length:.12f}")

    ax, t_c, frame, to_local = _local_setup(P, g)
    keys = [canonical_word(w, P.adjacency) for w in cert.tile_words]
    distinct = len(set(keys)) == len(keys)
    _check(report, "distinct_tiles", distinct, f"{len(keys)} words, {len(set(keys))} distinct")
    tiles = tiles_from_words(P, sorted(set(keys)))
    _check(report, "index", cert.index == len(tiles), f"index {cert.index}, tiles {len(tiles)}")

    _, normals, centers = _tile_local_data(P, tiles, to_local) if len(tiles) else (None, None, None)
    walls = _boundary_walls(P, tiles, normals) if len(tiles) else []
    stored = {wall_key(canonical_word(t, P.adjacency), f, P.adjacency) for t, f in cert.boundary_walls}
    recomputed = {w.key for w in walls}
    _check(report, "boundary_walls", stored == recomputed,
           f"{len(stored)} stored, {len(recomputed)} recomputed, {len(stored ^ recomputed)} differ")

    wall_normals = np.array([w.normal for w in walls]).reshape(-1, P.dim + 1)
    bad = convexity_violations(centers, wall_normals) if len(tiles) else [(0, 0)]
    _check(report, "convexity", not bad, f"{len(bad)} tile/wall violations")

    half = cert.periods * length / 2.0
    x0, ax0 = _base_points(length, P.dim)
    samples = [_local_axis_point(t, P.dim) for t in np.linspace(-half, half, CONTAINMENT_SAMPLES)] + [x0, ax0]
    missing = [i for i, x in enumerate(samples) if locate_tile(P, frame @ x) not in tiles]
    _check(report, "axis_containment", not missing, f"{len(missing)} of {len(samples)} axis points outside")

    radius = max_threshold(P.dim)
    far = []
    for tile in tiles:
        d_center = dist_point_to_geodesic(tile.base_point, ax)
        d_vertices = np.max(dist_point_to_geodesic(P.vertices @ tile.matrix.T, ax))
        if d_center > radius + P.circumradius + 1e-9 or d_vertices > radius + P.d_P + 1e-9:
            far.append(tile.word)
    _check(report, "near_axis", not far, f"{len(far)} tiles too far from the axis")

    bound = _theorem_bound(P, length)
    _check(report, "bound_value", abs(bound - cert.theorem_bound) <= 1e-9 * max(1.0, bound),
           f"recomputed {bound:.9f}, stored {cert.theorem_bound:.9f}")
    # the bound covers two periods; longer segments scale it linearly
    scaled = cert.theorem_bound * max(cert.periods, 2) / 2.0
    _check(report, "index_within_bound", cert.index <= math.ceil(scaled),
           f"index {cert.index} vs bound {scaled:.3f}")
    k = quotient_tile_count(P, g)
    k_bound = tile_count_bound(BoundInputs(P.dim, P.d_P, P.volume_lower, length))
    _check(report, "quotient_count", k == cert.k and k <= k_bound,
           f"k {k} (stored {cert.k}) vs bound {k_bound:.3f}")

    inside = _strictly_inside(x0, wall_normals, Config.TOL) and _strictly_inside(ax0, wall_normals, Config.TOL)
    _check(report, "base_points_interior", inside)
    alpha_local = to_local @ g.matrix @ frame
    if bad or not inside:
        # folding only terminates against the walls of a convex region
        _check(report, "fold_witness", False, "skipped: region is not convex or base points are not interior")
    else:
        try:
            _, residual = _h_fold(alpha_local, wall_normals, P.dim, length)
        except NumericalError as e:
            _check(report, "fold_witness", False, f"fold failed: {e}")
        else:
            _check(report, "fold_witness",
                   residual > Config.CERT_MARGIN and abs(residual - cert.fold_residual) <= 1e-6 * max(1.0, residual),
                   f"residual {residual:.6f}, stored {cert.fold_residual:.6f}")

    report["index"] = cert.index
    report["k"] = k
    report["bound"] = bound
    report["ok"] = all(c["ok"] for c in report["checks"].values())
    return report


# ----------------- serialization -----------------

def certificate_to_dict(cert: SeparationCertificate) -> Dict[str, Any]:
    P = cert.polyhedron
    poly = {"builtin": P.name} if P.name in BUILTINS else {"inline": P.as_dict()}
    return {
        "polyhedron": poly,
        "alpha_word": list(cert.alpha_word),
        "alpha": format_reflection_word(cert.alpha_word),
        "translation_length": cert.translation_length,
        "periods": cert.periods,
        "k": cert.k,
        "index": cert.index,
        "theorem_bound": cert.theorem_bound,
        "tile_words": [list(w) for w in cert.tile_words],
        "boundary_walls": [[list(t), f] for t, f in cert.boundary_walls],
        "fold_witness": {"word": list(cert.fold_word), "residual": cert.fold_residual},
        "d_P": P.d_P,
        "V_P": P.V_P,
        "V_P_error": P.V_P_error,
    }


def certificate_from_dict(data: Dict[str, Any]) -> SeparationCertificate:
    try:
        poly = data["polyhedron"]
        if "builtin" in poly:
            P = resolve_polyhedron(poly["builtin"])
        else:
            P = polyhedron_from_dict(poly["inline"])
        return SeparationCertificate(
            polyhedron=P,
            alpha_word=tuple(data["alpha_word"]),
            translation_length=float(data["translation_length"]),
            periods=int(data["periods"]),
            k=int(data["k"]),
            index=int(data["index"]),
            theorem_bound=float(data["theorem_bound"]),
            tile_words=[tuple(w) for w in data["tile_words"]],
            boundary_walls=[(tuple(t), int(f)) for t, f in data["boundary_walls"]],
            fold_word=tuple(data["fold_witness"]["word"]),
            fold_residual=float(data["fold_witness"]["residual"]),
        )
    except (KeyError, TypeError) as e:
        raise ValidationError(f"malformed certificate: {e}") from e


def save_certificate(cert: SeparationCertificate, path: Union[str, Path]) -> None:
    Path(path).write_text(json.dumps(certificate_to_dict(cert), indent=2), encoding="utf-8")


def load_certificate(path: Union[str, Path]) -> SeparationCertificate:
    try:
        data = json.loads(Path(path).read_text(encoding="utf-8"))
    except (OSError, json.JSONDecodeError) as e:
        raise ValidationError(f"cannot read certificate {path}: {e}") from e
    return certificate_from_dict(data)
