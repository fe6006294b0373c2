# utils/tiling.py
"""
All-right polyhedra, their reflection groups and the tessellations they generate.

Face normals point outward: the interior of a polyhedron is the side <x,u> < 0
of every face. Words are tuples of 0-based face indices, read left to right as
the product s_w1 s_w2 ... of face reflections; the tile of a word w is w·P, and
its neighbour across face i is the tile of w + (i,). Tiles are keyed by the
normal form of their word in the right-angled Coxeter group, where two faces
commute exactly when they are adjacent.
"""
import itertools
import json
import logging
import time
from collections import deque
from dataclasses import dataclass, field
from functools import lru_cache
from pathlib import Path
from typing import Any, Dict, Iterator, List, Optional, Sequence, Tuple, Union

import numpy as np
from scipy.linalg import null_space
from scipy.optimize import brentq
from scipy.spatial import cKDTree

from config import Config
from utils.errors import (
    FoldLimitError,
    FrontierExceeded,
    NumericalError,
    PolyhedronError,
    ValidationError,
    WordError,
)
from utils.hyperbolic import (
    Isometry,
    boost_to,
    check_normal,
    compose,
    dist_points,
    lorentz_renormalize,
    minkowski_inner,
    minkowski_matrix,
    model_convert,
    normalize_point,
)
from utils.progress import report_progress
from utils.sampling import run_chunked, weighted_mean_estimate
from utils.tubes import unit_ball_volume
from utils.word_parser import classify_polyhedron_source

logger = logging.getLogger(__name__)

FINGERPRINT_QUANTUM = 1e-6  # ball-model grid for tile fingerprints

Word = Tuple[int, ...]


# ----------------- polyhedra -----------------

@dataclass(frozen=True, eq=False)
class Polyhedron:
    name: str
    dim: int
    normals: np.ndarray           # (faces, dim+1), outward unit spacelike
    adjacency: np.ndarray         # (faces, faces) bool, symmetric
    vertices: np.ndarray          # (nv, dim+1) points
    vertex_faces: Tuple[Tuple[int, ...], ...]
    center: np.ndarray            # interior reference point
    d_P: float                    # diameter
    circumradius: float           # max distance from center to a vertex
    V_P: float                    # volume
    V_P_error: float = 0.0        # Monte Carlo std error, 0 for exact volumes
    non_compact: Tuple[Tuple[int, ...], ...] = ()
    reflections: np.ndarray = field(init=False, repr=False)
    dual_normals: np.ndarray = field(init=False, repr=False)  # J u_i as rows

    def __post_init__(self):
        j = minkowski_matrix(self.dim)
        n = self.dim + 1
        refl = np.stack([np.eye(n) - 2.0 * np.outer(u, j @ u) for u in self.normals])
        object.__setattr__(self, "reflections", refl)
        object.__setattr__(self, "dual_normals", self.normals @ j)

    @property
    def n_faces(self) -> int:
        return len(self.normals)

    @property
    def volume_lower(self) -> float:
        """Volume widened down by three standard errors."""
        return self.V_P - 3.0 * self.V_P_error

    def face_values(self, x: np.ndarray) -> np.ndarray:
        """<x, u_i> for every face; x may be a stack of points."""
        return np.asarray(x) @ self.dual_normals.T

    def as_dict(self) -> Dict[str, Any]:
        pairs = [[i, j] for i, j in itertools.combinations(range(self.n_faces), 2) if self.adjacency[i, j]]
        return {
            "name": self.name,
            "dim": self.dim,
            "normals": self.normals.tolist(),
            "adjacency": pairs,
        }

    def summary(self) -> Dict[str, Any]:
        return {
            "name": self.name,
            "dim": self.dim,
            "faces": self.n_faces,
            "vertices": len(self.vertices),
            "d_P": self.d_P,
            "V_P": self.V_P,
            "V_P_error": self.V_P_error,
        }


def _adjacency_from_normals(normals: np.ndarray, tol: float) -> np.ndarray:
    g = normals @ minkowski_matrix(normals.shape[1] - 1) @ normals.T
    adj = np.abs(g) < tol
    np.fill_diagonal(adj, False)
    return adj


def _adjacency_from_pairs(pairs: Sequence[Sequence[int]], m: int) -> np.ndarray:
    adj = np.zeros((m, m), dtype=bool)
    for pair in pairs:
        i, j = int(pair[0]), int(pair[1])
        if not (0 <= i < m and 0 <= j < m) or i == j:
            raise ValidationError(f"bad adjacency pair {pair} for {m} faces")
        adj[i, j] = adj[j, i] = True
    return adj


def _cliques(adj: np.ndarray, size: int) -> Iterator[Tuple[int, ...]]:
    m = len(adj)

    def grow(clique: Tuple[int, ...], start: int):
        if len(clique) == size:
            yield clique
            return
        for k in range(start, m):
            if all(adj[k, c] for c in clique):
                yield from grow(clique + (k,), k + 1)

    yield from grow((), 0)


def _find_vertices(normals: np.ndarray, adj: np.ndarray, tol: float):
    dim = normals.shape[1] - 1
    dual = normals @ minkowski_matrix(dim)
    vertices, faces, ideal = [], [], []
    for clique in _cliques(adj, dim):
        ns = null_space(dual[list(clique)])
        if ns.shape[1] != 1:
            ideal.append(clique)
            continue
        v = ns[:, 0]
        if minkowski_inner(v, v) >= -tol:
            ideal.append(clique)
            continue
        v = normalize_point(v)
        others = [k for k in range(len(normals)) if k not in clique]
        if others and np.max(dual[others] @ v) > tol:
            logger.debug("faces %s meet outside the polyhedron", clique)
            continue
        vertices.append(v)
        faces.append(clique)
    return np.array(vertices).reshape(-1, dim + 1), tuple(faces), tuple(ideal)


def polygon_area(normals: np.ndarray, adj: np.ndarray) -> float:
    """Gauss-Bonnet: (m - 2) pi minus the interior angles, cos(angle) = -<u_i, u_j>."""
    m = len(normals)
    angles = [
        np.arccos(np.clip(-minkowski_inner(normals[i], normals[j]), -1.0, 1.0))
        for i, j in itertools.combinations(range(m), 2)
        if adj[i, j]
    ]
    return float((m - 2) * np.pi - np.sum(angles))


def build_polyhedron(
    name: str,
    normals: Sequence[Sequence[float]],
    adjacency: Optional[Union[np.ndarray, Sequence[Sequence[int]]]] = None,
    center: Optional[Sequence[float]] = None,
    volume: Optional[Tuple[float, float]] = None,
    n_volume_samples: Optional[int] = None,
    seed: Optional[int] = None,
    validate: bool = True,
    tol: Optional[float] = None,
) -> Polyhedron:
    """
    Assemble a polyhedron from its face normals; vertices, diameter and volume
    are always recomputed. Volume is exact (Gauss-Bonnet) in dimension 2 and a
    Monte Carlo estimate otherwise, unless `volume` = (value, std_error) is given.
    """
    tol = Config.TOL if tol is None else tol
    normals = np.array(normals, dtype=float)
    if normals.ndim != 2 or normals.shape[1] < 3:
        raise ValidationError(f"normals must be a (faces, dim+1) array, got shape {normals.shape}")
    for u in normals:
        check_normal(u, tol=1e-6)
    m, n = normals.shape
    dim = n - 1

    if adjacency is None:
        adj = _adjacency_from_normals(normals, 1e-6)
    else:
        adj_arr = np.asarray(adjacency)
        if adj_arr.shape == (m, m) and adj_arr.dtype == bool:
            adj = adj_arr.copy()
        else:
            adj = _adjacency_from_pairs(adjacency, m)
    if not np.array_equal(adj, adj.T):
        raise ValidationError("adjacency must be symmetric")

    vertices, vertex_faces, ideal = _find_vertices(normals, adj, tol)
    if center is None:
        if len(vertices) == 0:
            raise PolyhedronError(f"{name}: no vertices, cannot place a reference point")
        center = normalize_point(vertices.mean(axis=0))
    center = np.asarray(center, dtype=float)

    if len(vertices):
        dmat = dist_points(vertices[:, None, :], vertices[None, :, :], tol=1e-6)
        d_p = float(np.max(dmat))
        circumradius = float(np.max(dist_points(center[None, :], vertices, tol=1e-6)))
    else:
        d_p = circumradius = float("inf")

    poly = Polyhedron(
        name=name, dim=dim, normals=normals, adjacency=adj, vertices=vertices,
        vertex_faces=vertex_faces, center=center, d_P=d_p, circumradius=circumradius,
        V_P=float("nan"), non_compact=ideal,
    )
    if validate:
        validate_polyhedron(poly, tol=tol)

    if volume is not None:
        vol, err = volume
    elif dim == 2:
        vol, err = polygon_area(normals, adj), 0.0
    else:
        vol, err = mc_polyhedron_volume(
            poly,
            n_volume_samples or Config.VOLUME_SAMPLES,
            Config.DEFAULT_SEED if seed is None else seed,
        )
    object.__setattr__(poly, "V_P", float(vol))
    object.__setattr__(poly, "V_P_error", float(err))
    logger.info("polyhedron %s: %d faces, %d vertices, d_P=%.6f, V_P=%.6f", name, m, len(vertices), d_p, vol)
    return poly


def validate_polyhedron(P: Polyhedron, tol: Optional[float] = None) -> Dict[str, Any]:
    tol = Config.TOL if tol is None else tol
    errors: List[str] = []
    m = P.n_faces
    gram = P.normals @ minkowski_matrix(P.dim) @ P.normals.T

    unit_dev = float(np.max(np.abs(np.diag(gram) - 1.0)))
    if unit_dev > tol:
        errors.append(f"face normals are not unit: max deviation {unit_dev:.3e}")

    if not np.array_equal(P.adjacency, P.adjacency.T) or np.any(np.diag(P.adjacency)):
        errors.append("adjacency is not a symmetric loop-free relation")

    max_adj_dev, min_nonadj = 0.0, float("inf")
    adjacent_pairs = 0
    for i, j in itertools.combinations(range(m), 2):
        g = gram[i, j]
        if P.adjacency[i, j]:
            adjacent_pairs += 1
            max_adj_dev = max(max_adj_dev, abs(g))
            if abs(g) >= tol:
                errors.append(f"faces {i + 1} and {j + 1} are adjacent but <u,v> = {g:.3e}, not a right angle")
        else:
            min_nonadj = min(min_nonadj, abs(g))
            if abs(g) < 1.0 - tol:
                errors.append(f"faces {i + 1} and {j + 1} are not adjacent but their walls cross (<u,v> = {g:.6f})")

    if P.non_compact:
        errors.append(f"non-compact: faces {[tuple(k + 1 for k in c) for c in P.non_compact]} meet at no finite vertex")
    if len(P.vertices) == 0:
        errors.append("no vertices")

    max_residual = 0.0
    for v, faces in zip(P.vertices, P.vertex_faces):
        vals = P.face_values(v)
        max_residual = max(max_residual, float(np.max(np.abs(vals[list(faces)]))))
        max_residual = max(max_residual, abs(minkowski_inner(v, v) + 1.0))
        if np.max(vals) > tol:
            errors.append(f"vertex on faces {tuple(k + 1 for k in faces)} lies outside the polyhedron")

    d_recomputed = float("nan")
    if len(P.vertices):
        dmat = dist_points(P.vertices[:, None, :], P.vertices[None, :, :], tol=1e-6)
        d_recomputed = float(np.max(dmat))
        if abs(d_recomputed - P.d_P) > tol:
            errors.append(f"diameter {P.d_P} disagrees with recomputed {d_recomputed}")

    center_vals = P.face_values(P.center)
    if np.max(center_vals) >= 0:
        errors.append("reference point is not interior")

    report = {
        "name": P.name,
        "dim": P.dim,
        "faces": m,
        "adjacent_pairs": adjacent_pairs,
        "vertices": len(P.vertices),
        "max_adjacent_deviation": max_adj_dev,
        "min_nonadjacent_abs": min_nonadj,
        "max_vertex_residual": max_residual,
        "d_P": P.d_P,
        "d_P_recomputed": d_recomputed,
        "errors": errors,
        "ok": not errors,
    }
    if errors:
        raise PolyhedronError(f"{P.name}: {errors[0]}", report)
    return report


def _regular_normals(directions: np.ndarray) -> np.ndarray:
    """
    Normals (sinh h, cosh h d) over unit directions d, with h solved so that
    the faces of the nearest directions meet at right angles.
    """
    dots = directions @ directions.T
    np.fill_diagonal(dots, -np.inf)
    c = float(np.max(dots))  # cosine between neighbouring directions

    def gram(h):
        return -np.sinh(h) ** 2 + np.cosh(h) ** 2 * c

    h = brentq(gram, 1e-6, 10.0, xtol=1e-15, rtol=4 * np.finfo(float).eps)
    return np.column_stack([np.full(len(directions), np.sinh(h)), np.cosh(h) * directions])


@lru_cache(maxsize=None)
def builtin_pentagon() -> Polyhedron:
    angles = 2 * np.pi * np.arange(5) / 5
    directions = np.column_stack([np.cos(angles), np.sin(angles)])
    normals = _regular_normals(directions)
    return build_polyhedron("pentagon", normals, center=[1.0, 0.0, 0.0])


@lru_cache(maxsize=None)
def builtin_dodecahedron() -> Polyhedron:
    phi = (1 + np.sqrt(5)) / 2
    # face directions of the dodecahedron = vertices of the icosahedron
    dirs = []
    for s1 in (1, -1):
        for s2 in (phi, -phi):
            dirs += [(0, s1, s2), (s1, s2, 0), (s2, 0, s1)]
    directions = np.array(dirs, dtype=float)
    directions /= np.linalg.norm(directions, axis=1, keepdims=True)
    normals = _regular_normals(directions)
    return build_polyhedron("dodecahedron", normals, center=[1.0, 0.0, 0.0, 0.0])


BUILTINS = {
    "pentagon": builtin_pentagon,
    "dodecahedron": builtin_dodecahedron,
}


def polyhedron_from_dict(data: Dict[str, Any], **kwargs) -> Polyhedron:
    try:
        return build_polyhedron(
            data.get("name", "polyhedron"),
            data["normals"],
            adjacency=data.get("adjacency"),
            **kwargs,
        )
    except KeyError as e:
        raise ValidationError(f"polyhedron file is missing field {e}") from e


def load_polyhedron(path: Union[str, Path], **kwargs) -> Polyhedron:
    p = Path(path)
    try:
        data = json.loads(p.read_text(encoding="utf-8"))
    except (OSError, json.JSONDecodeError) as e:
        raise ValidationError(f"cannot read polyhedron file {p}: {e}") from e
    if data.get("dim") is not None and len(data.get("normals", [[]])[0]) != data["dim"] + 1:
        raise ValidationError(f"{p}: normals do not match dim {data['dim']}")
    return polyhedron_from_dict(data, **kwargs)


def save_polyhedron(P: Polyhedron, path: Union[str, Path]) -> None:
    Path(path).write_text(json.dumps(P.as_dict(), indent=2), encoding="utf-8")


def resolve_polyhedron(source: str) -> Polyhedron:
    kind = classify_polyhedron_source(source)
    if kind == "builtin":
        return BUILTINS[source.strip().lower()]()
    if kind == "file":
        return load_polyhedron(source)
    raise ValidationError(f"unknown polyhedron {source!r}: expected {sorted(BUILTINS)} or a .json file")


# ----------------- volume -----------------

def mc_polyhedron_volume(
    P: Polyhedron,
    n_samples: int,
    seed: int,
    tiles: Optional[Sequence[np.ndarray]] = None,
) -> Tuple[float, float]:
    """
    Hyperbolic volume of P, or of the union of the tiles g·P for the given
    matrices, by uniform sampling of a Poincare ball around P's reference point
    weighted with the hyperbolic density (2 / (1 - |y|^2))^dim.
    """
    dim = P.dim
    mats = [np.eye(dim + 1)] if tiles is None else [np.asarray(g, dtype=float) for g in tiles]
    radius = 0.0
    for g in mats:
        radius = max(radius, float(np.max(dist_points(P.center[None, :], P.vertices @ g.T, tol=1e-6))))
    s = np.tanh((radius + 1e-9) / 2.0)
    boost = boost_to(P.center)
    # rows: dual normals of every tile face, pulled back to the ball frame
    duals = np.concatenate([(g @ P.normals.T).T @ minkowski_matrix(dim) for g in mats])
    duals = duals @ boost
    m = P.n_faces

    def _chunk(rng: np.random.Generator, size: int):
        d = rng.standard_normal((size, dim))
        d /= np.linalg.norm(d, axis=1, keepdims=True)
        y = d * (s * rng.uniform(size=size) ** (1.0 / dim))[:, None]
        r2 = np.sum(y * y, axis=1)
        x = np.column_stack([1.0 + r2, 2.0 * y]) / (1.0 - r2)[:, None]
        vals = (x @ duals.T).reshape(size, len(mats), m)
        inside = np.any(np.all(vals <= 0.0, axis=2), axis=1)
        w = np.where(inside, (2.0 / (1.0 - r2)) ** dim, 0.0)
        return [w.sum(), np.sum(w * w), size]

    chunks = run_chunked(_chunk, n_samples, seed, label=f"volume {P.name}")
    est, err = weighted_mean_estimate(chunks, unit_ball_volume(dim) * s ** dim)
    logger.info("volume of %s (%d tiles): %.6f +- %.6f", P.name, len(mats), est, err)
    return est, err


# ----------------- right-angled Coxeter words -----------------

def check_word(P: Polyhedron, word: Sequence[int]) -> Word:
    w = tuple(int(i) for i in word)
    for i in w:
        if not 0 <= i < P.n_faces:
            raise WordError(f"face index {i + 1} out of range 1..{P.n_faces}")
    return w


def racg_reduce(word: Sequence[int], adjacency: np.ndarray) -> Word:
    """
    Shortest word for the same element: a letter cancels against an earlier
    equal letter when every letter in between commutes with it.
    """
    out: List[int] = []
    for x in word:
        for k in range(len(out) - 1, -1, -1):
            y = out[k]
            if y == x:
                del out[k]
                break
            if not adjacency[x, y]:
                out.append(x)
                break
        else:
            out.append(x)
    return tuple(out)


def normal_form(word: Sequence[int], adjacency: np.ndarray) -> Tuple[Tuple[int, ...], ...]:
    """Foata normal form of a reduced word: sorted steps of pairwise commuting letters."""
    steps: List[List[int]] = []
    levels: List[int] = []
    for pos, x in enumerate(word):
        level = 0
        for prev in range(pos):
            y = word[prev]
            if y == x or not adjacency[x, y]:
                level = max(level, levels[prev] + 1)
        levels.append(level)
        if level == len(steps):
            steps.append([])
        steps[level].append(x)
    return tuple(tuple(sorted(s)) for s in steps)


def canonical_word(word: Sequence[int], adjacency: np.ndarray) -> Word:
    """Flattened normal form; equal exactly when the words give the same element."""
    return tuple(x for step in normal_form(racg_reduce(word, adjacency), adjacency) for x in step)


def wall_key(word: Sequence[int], face: int, adjacency: np.ndarray) -> Word:
    """Key of the wall through face `face` of tile `word` (the reflection w s_i w^-1)."""
    return canonical_word(tuple(word) + (face,) + tuple(reversed(word)), adjacency)


def word_to_isometry(P: Polyhedron, word: Sequence[int], reduce: bool = True) -> Isometry:
    w = check_word(P, word)
    if reduce:
        w = racg_reduce(w, P.adjacency)
    if not w:
        return Isometry.identity(P.dim)
    return Isometry(compose(P.reflections[list(w)]))


# ----------------- folding -----------------

def fold_point(
    x: np.ndarray,
    normals: np.ndarray,
    tol: Optional[float] = None,
    max_iter: Optional[int] = None,
) -> Tuple[Word, np.ndarray, np.ndarray]:
    """
    Reflect x across the most violated wall until it lies inside all of them.
    Returns (walls used in order, g, g·x), g the product of those reflections.
    Ties go to the lowest wall index.
    """
    tol = Config.TOL if tol is None else tol
    max_iter = Config.FOLD_MAX_ITER if max_iter is None else max_iter
    normals = np.asarray(normals, dtype=float)
    n = normals.shape[1]
    j = minkowski_matrix(n - 1)
    duals = normals @ j
    x = np.array(x, dtype=float)
    g = np.eye(n)
    word: List[int] = []
    for it in range(max_iter):
        vals = duals @ x
        i = int(np.argmax(vals))
        if vals[i] <= tol * max(1.0, x[0]):
            return tuple(word), g, x
        u = normals[i]
        x = x - 2.0 * vals[i] * u
        g = (np.eye(n) - 2.0 * np.outer(u, j @ u)) @ g
        word.append(i)
        if (it + 1) % Config.RENORM_EVERY == 0:
            try:
                x = normalize_point(x)
            except ValidationError as e:
                raise NumericalError(f"fold drifted off the hyperboloid after {it + 1} reflections") from e
            g = lorentz_renormalize(g)
    raise FoldLimitError(f"fold did not terminate within {max_iter} reflections")


def fold_to_fundamental(P: Polyhedron, x: np.ndarray) -> Tuple[Word, Isometry]:
    """
    Fold x into P. The word lists the faces reflected in, in order, so x lies
    in the tile of that word and g·x lies in P.
    """
    word, g, _ = fold_point(x, P.normals)
    return word, Isometry(g, check=False)


def locate_tile(P: Polyhedron, x: np.ndarray) -> Word:
    """Key of a tile whose closure contains x."""
    word, _ = fold_to_fundamental(P, x)
    return canonical_word(word, P.adjacency)


# ----------------- tiles -----------------

@dataclass(frozen=True, eq=False)
class Tile:
    word: Word
    matrix: np.ndarray
    base_point: np.ndarray
    fingerprint: Tuple[int, ...]

    @property
    def key(self) -> Word:
        return self.word


def make_tile(P: Polyhedron, word: Word, matrix: np.ndarray) -> Tile:
    base = matrix @ P.center
    ball = model_convert(base, "hyperboloid", "poincare")
    fp = tuple(np.round(ball / FINGERPRINT_QUANTUM).astype(np.int64).tolist())
    return Tile(word=word, matrix=matrix, base_point=base, fingerprint=fp)


class TileSet:
    """Tiles keyed by normal-form word, in insertion (BFS) order."""

    def __init__(self, polyhedron: Polyhedron, tiles: Optional[Sequence[Tile]] = None):
        self.polyhedron = polyhedron
        self.tiles: Dict[Word, Tile] = {}
        for t in tiles or ():
            self.add(t)

    def add(self, tile: Tile) -> None:
        if tile.word in self.tiles:
            raise ValidationError(f"duplicate tile {tile.word}")
        self.tiles[tile.word] = tile

    def __len__(self) -> int:
        return len(self.tiles)

    def __iter__(self) -> Iterator[Tile]:
        return iter(self.tiles.values())

    def __contains__(self, key) -> bool:
        return tuple(key) in self.tiles

    def __getitem__(self, key) -> Tile:
        return self.tiles[tuple(key)]

    def keys(self) -> List[Word]:
        return list(self.tiles)

    def subset(self, keys) -> "TileSet":
        keep = set(keys)
        return TileSet(self.polyhedron, [t for k, t in self.tiles.items() if k in keep])

    def matrices(self) -> np.ndarray:
        return np.stack([t.matrix for t in self.tiles.values()])

    def base_points(self) -> np.ndarray:
        return np.stack([t.base_point for t in self.tiles.values()])


def tiles_from_words(P: Polyhedron, words: Sequence[Sequence[int]]) -> TileSet:
    ts = TileSet(P)
    for w in words:
        key = canonical_word(check_word(P, w), P.adjacency)
        ts.add(make_tile(P, key, word_to_isometry(P, key).matrix))
    return ts


def audit_base_points(tiles: TileSet, radius: Optional[float] = None) -> List[Tuple[Word, Word]]:
    """Pairs of distinct tiles whose base points coincide within `radius`."""
    radius = Config.DEDUP_AUDIT if radius is None else radius
    if len(tiles) < 2:
        return []
    pts = tiles.base_points()
    keys = tiles.keys()
    tree = cKDTree(pts)
    # Euclidean distance on the sheet is at most ~x0 times the hyperbolic one locally
    r = 2.0 * radius * float(np.max(pts[:, 0]))
    hits = []
    for a, b in sorted(tree.query_pairs(r)):
        if dist_points(pts[a], pts[b], tol=1e-6) < radius:
            hits.append((keys[a], keys[b]))
    return hits


# ----------------- regions -----------------

class BallRegion:
    """Closed ball; meets() is conservative (never rejects a tile that meets it)."""

    def __init__(self, P: Polyhedron, center: np.ndarray, radius: float):
        if radius < 0:
            raise ValidationError(f"region radius must be nonnegative, got {radius}")
        self.P = P
        self.center = np.asarray(center, dtype=float)
        self.radius = float(radius)

    def meets(self, g: np.ndarray) -> bool:
        local = _inverse_apply(g, self.center)
        if np.max(self.P.face_values(local)) > np.sinh(self.radius):
            return False
        return dist_points(self.P.center, local, tol=1e-6) <= self.radius + self.P.circumradius + Config.TOL


class SegmentRegion:
    """
    Closed R-neighbourhood of the segment t in [t1, t2] of the standard axis
    (cosh t, sinh t, 0, ...), after the change of frame `to_local`.
    """

    def __init__(self, P: Polyhedron, to_local: np.ndarray, t1: float, t2: float, radius: float):
        if t2 < t1:
            raise ValidationError("segment parameters out of order")
        self.P = P
        self.to_local = np.asarray(to_local, dtype=float)
        self.t1, self.t2 = float(t1), float(t2)
        self.radius = float(radius)

    def _face_minimum(self, v: np.ndarray) -> np.ndarray:
        # f(t) = <X(t), v> = -v0 cosh t + v1 sinh t, minimized over [t1, t2]
        a, b = -v[:, 0], v[:, 1]
        ts = [np.full(len(v), self.t1), np.full(len(v), self.t2)]
        with np.errstate(divide="ignore", invalid="ignore"):
            crit = np.where(np.abs(b) < np.abs(a), np.arctanh(np.clip(-b / a, -1 + 1e-16, 1 - 1e-16)), self.t1)
        ts.append(np.clip(crit, self.t1, self.t2))
        vals = [a * np.cosh(t) + b * np.sinh(t) for t in ts]
        return np.min(vals, axis=0)

    def distance_to_segment(self, p_local: np.ndarray) -> float:
        t = float(np.clip(np.arctanh(p_local[1] / p_local[0]), self.t1, self.t2))
        c = p_local[0] * np.cosh(t) - p_local[1] * np.sinh(t)
        return float(np.arccosh(max(c, 1.0)))

    def meets(self, g: np.ndarray) -> bool:
        m = self.to_local @ g
        v = (m @ self.P.normals.T).T
        if np.max(self._face_minimum(v)) > np.sinh(self.radius):
            return False
        c = m @ self.P.center
        return self.distance_to_segment(c) <= self.radius + self.P.circumradius + Config.TOL


def _inverse_apply(g: np.ndarray, x: np.ndarray) -> np.ndarray:
    j = minkowski_matrix(g.shape[0] - 1)
    return j @ g.T @ j @ x


def tiles_meeting_region(
    P: Polyhedron,
    region,
    frontier_bound: Optional[int] = None,
    start_word: Sequence[int] = (),
) -> TileSet:
    """
    Breadth-first search over face adjacency from the start tile, keeping tiles
    the region predicate accepts and expanding only kept tiles.
    """
    frontier_bound = frontier_bound or Config.FRONTIER_BOUND
    adj = P.adjacency
    start_key = canonical_word(check_word(P, start_word), adj)
    start_matrix = word_to_isometry(P, start_key).matrix if start_key else np.eye(P.dim + 1)
    kept = TileSet(P)
    if not region.meets(start_matrix):
        logger.warning("start tile %s does not meet the region", start_key)
        return kept

    seen = {start_key}
    queue = deque([make_tile(P, start_key, start_matrix)])
    started = time.time()
    while queue:
        tile = queue.popleft()
        kept.add(tile)
        if len(kept) > frontier_bound:
            raise FrontierExceeded(f"more than {frontier_bound} tiles meet the region", partial=kept)
        report_progress(f"tiles {P.name}", len(kept), 0, started)
        for i in range(P.n_faces):
            key = canonical_word(tile.word + (i,), adj)
            if key in seen:
                continue
            seen.add(key)
            g = tile.matrix @ P.reflections[i]
            if len(key) % Config.RENORM_EVERY == 0:
                g = lorentz_renormalize(g)
            if region.meets(g):
                queue.append(make_tile(P, key, g))

    hits = audit_base_points(kept)
    if hits:
        raise NumericalError(f"distinct tiles share a base point: {hits[:3]}")
    logger.debug("%d tiles meet the region (%d examined)", len(kept), len(seen))
    return kept
