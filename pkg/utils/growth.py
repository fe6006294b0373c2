# utils/growth.py
"""
Divisibility functions and residual finiteness growth experiments.

D(g) is the least index of a subgroup missing g. For a free group it is the
least n such that some action on n points moves point 0 under g; the search
below builds such actions one generator edge at a time while tracing g.
"""
import logging
import math
import time
from dataclasses import dataclass
from functools import lru_cache
from typing import Any, Dict, List, Optional, Sequence, Tuple

import numpy as np

from config import Config
from utils.errors import ValidationError, WordError
from utils.hyperbolic import LOXODROMIC, dist_points, sl2_translation_length
from utils.progress import report_progress
from utils.separator import build_certificate
from utils.tiling import Polyhedron, check_word, racg_reduce, word_to_isometry
from utils.tubes import BoundInputs, index_bound
from utils.word_parser import (
    cyclic_reduce,
    enumerate_reduced_words,
    format_free_word,
    format_reflection_word,
    free_reduce,
    invert_free_word,
    is_reduced,
)

logger = logging.getLogger(__name__)

Word = Tuple[int, ...]

MAX_BRUTEFORCE_INDEX = 8
SOURCES = ("bruteforce", "certificate", "formula")
NORMS = ("word", "geodesic")
CSV_COLUMNS = ["n", "word_length", "cyc_length", "geodesic_length", "D_or_bound", "source", "word"]

# parabolic generators in SL(2, Z); a b^n has trace 2 + 4n
EXAMPLE_A = np.array([[1, 2], [0, 1]], dtype=np.int64)
EXAMPLE_B = np.array([[1, 0], [2, 1]], dtype=np.int64)


@dataclass(frozen=True)
class GrowthSample:
    word: str
    word_length: int
    cyc_length: int
    geodesic_length: float = float("nan")
    D_value: Optional[int] = None     # None: not found within the search limit
    exact: bool = True                # False: D_value is an upper bound
    source: str = "bruteforce"
    outside: bool = False             # element outside the subgroup measured, D = 1 by convention

    def __post_init__(self):
        if self.source not in SOURCES:
            raise ValidationError(f"unknown sample source {self.source!r}")
        if self.cyc_length > self.word_length:
            raise ValidationError(
                f"cyclically reduced length {self.cyc_length} exceeds word length {self.word_length} for {self.word}"
            )
        if self.D_value is not None:
            floor = 1 if (self.outside or self.word_length == 0 or not self.exact) else 2
            if self.D_value < floor:
                raise ValidationError(f"D value {self.D_value} below {floor} for {self.word}")

    def norm(self, kind: str) -> float:
        return float(self.word_length) if kind == "word" else self.geodesic_length

    def as_row(self, n: int) -> Dict[str, Any]:
        if self.D_value is None:
            d = "not-found"
        else:
            d = str(self.D_value) if self.exact else f"<={self.D_value}"
        return {
            "n": n,
            "word_length": self.word_length,
            "cyc_length": self.cyc_length,
            "geodesic_length": self.geodesic_length,
            "D_or_bound": d,
            "source": self.source,
            "word": self.word,
        }


@dataclass(frozen=True)
class GrowthCurve:
    points: Tuple[Tuple[int, int], ...]
    norm: str = "word"
    upper_bound: bool = False

    def __post_init__(self):
        if self.norm not in NORMS:
            raise ValidationError(f"unknown norm {self.norm!r}, expected one of {NORMS}")
        values = [v for _, v in self.points]
        if any(b < a for a, b in zip(values, values[1:])):
            raise ValidationError("growth curve must be nondecreasing")

    def as_dict(self) -> Dict[int, int]:
        return dict(self.points)

    def value_at(self, n: int) -> Optional[int]:
        return self.as_dict().get(n)

    def rows(self) -> List[Dict[str, Any]]:
        kind = "upper_bound" if self.upper_bound else "exact"
        return [{"n": n, "value": v, "norm": self.norm, "kind": kind} for n, v in self.points]


# ----------------- divisibility -----------------

def _check_free_word(word: Sequence[int], generators: Optional[int]) -> Tuple[Word, int]:
    w = tuple(int(x) for x in word)
    if not w:
        raise WordError("divisibility is undefined for the trivial word")
    if not is_reduced(w):
        raise WordError(f"word {w} is not freely reduced")
    rank = max(abs(x) for x in w)
    if generators is not None:
        if rank > generators:
            raise WordError(f"word uses generator {rank} but the group has {generators}")
        rank = generators
    return w, rank


def _moves_base_point(word: Word, rank: int, n: int) -> bool:
    """
    Is there an action on n points in which `word` moves point 0? Points are
    introduced in order of first visit, so every action is tried once up to
    relabelling and the points in use form one orbit.
    """
    fwd = [[-1] * n for _ in range(rank + 1)]
    bwd = [[-1] * n for _ in range(rank + 1)]
    last = len(word)

    def step(pos: int, point: int, used: int) -> bool:
        if pos == last:
            return point != 0
        x = word[pos]
        out, back = (fwd[x], bwd[x]) if x > 0 else (bwd[-x], fwd[-x])
        q = out[point]
        if q >= 0:
            return step(pos + 1, q, used)
        targets = [t for t in range(used) if back[t] < 0]
        if used < n:
            targets.append(used)
        for t in targets:
            out[point], back[t] = t, point
            if step(pos + 1, t, max(used, t + 1)):
                return True
            out[point], back[t] = -1, -1
        return False

    return step(0, 0, 1)


def _conjugacy_key(word: Word) -> Word:
    """Least rotation of the cyclic reduction of word or its inverse."""
    w = cyclic_reduce(word)
    candidates = []
    for v in (w, invert_free_word(w)):
        candidates.extend(v[i:] + v[:i] for i in range(len(v)))
    return min(candidates)


@lru_cache(maxsize=None)
def _divisibility_cached(key: Word, rank: int, max_index: int) -> Optional[int]:
    for n in range(2, max_index + 1):
        if _moves_base_point(key, rank, n):
            return n
    return None


def divisibility_bruteforce(
    word: Sequence[int],
    generators: Optional[int] = None,
    max_index: int = MAX_BRUTEFORCE_INDEX,
) -> Optional[int]:
    """
    Least index of a subgroup of the free group missing `word`, or None if no
    subgroup of index <= max_index does. D is conjugation invariant, so the
    search runs on a cyclically reduced representative.
    """
    w, rank = _check_free_word(word, generators)
    if max_index > MAX_BRUTEFORCE_INDEX:
        raise ValidationError(f"max_index {max_index} beyond the brute force limit {MAX_BRUTEFORCE_INDEX}")
    return _divisibility_cached(_conjugacy_key(w), rank, max_index)


def divisibility_upper_cyclic(word: Sequence[int]) -> int:
    """Cyclic quotient bound for a^n: the least m >= 2 not dividing n."""
    w = free_reduce(word)
    if not w or len({x for x in w}) != 1:
        raise WordError(f"expected a nontrivial power of one generator, got {format_free_word(w)}")
    n = len(w)
    m = 2
    while n % m == 0:
        m += 1
    return m


# ----------------- growth curves -----------------

def growth_curve(
    samples: Sequence[GrowthSample],
    norm: str = "word",
    allow_bounds: bool = False,
    n_max: Optional[int] = None,
) -> GrowthCurve:
    """
    Running maximum of D over the ball {norm <= n} at integer n. Thresholds
    below the smallest sampled norm have an empty ball and are omitted.
    """
    if not samples:
        raise ValidationError("growth curve needs at least one sample")
    if norm not in NORMS:
        raise ValidationError(f"unknown norm {norm!r}, expected one of {NORMS}")
    missing = [s.word for s in samples if s.D_value is None]
    if missing:
        raise ValidationError(f"samples without a D value: {missing[:5]}")
    bounded = any(not s.exact for s in samples)
    if bounded and not allow_bounds:
        raise ValidationError("samples include upper bounds; pass allow_bounds to build an upper-bound curve")

    pairs = sorted((s.norm(norm), s.D_value) for s in samples)
    if any(not math.isfinite(x) for x, _ in pairs):
        raise ValidationError(f"samples lack a finite {norm} norm")
    first = math.ceil(pairs[0][0] - Config.ALG_TOL)
    last = n_max if n_max is not None else math.ceil(pairs[-1][0] - Config.ALG_TOL)
    points = []
    best = 0
    i = 0
    for n in range(first, last + 1):
        while i < len(pairs) and pairs[i][0] <= n + Config.ALG_TOL:
            best = max(best, pairs[i][1])
            i += 1
        points.append((n, best))
    return GrowthCurve(points=tuple(points), norm=norm, upper_bound=bounded)


# ----------------- the index-2 cover of the rank-2 free group -----------------
# K is the kernel of F(a, b) -> Z/2 sending a to 1 and b to 0, free on
# x = b, y = a b a^-1, z = a^2 (transversal {1, a}).

_REWRITE = {
    # (coset, letter) -> (new coset, kernel letters)
    (0, 1): (1, ()), (1, 1): (0, (3,)),
    (0, -1): (1, (-3,)), (1, -1): (0, ()),
    (0, 2): (0, (1,)), (1, 2): (1, (2,)),
    (0, -2): (0, (-1,)), (1, -2): (1, (-2,)),
}


def in_kernel(word: Sequence[int]) -> bool:
    return sum(1 for x in word if abs(x) == 1) % 2 == 0


def kernel_rewrite(word: Sequence[int]) -> Word:
    """Rewrite a word of F(a, b) lying in K in the free basis x, y, z of K."""
    coset = 0
    out: List[int] = []
    for x in word:
        if abs(x) > 2 or x == 0:
            raise WordError(f"letter {x} is not a generator of F(a, b)")
        coset, letters = _REWRITE[(coset, x)]
        out.extend(letters)
    if coset != 0:
        raise ValidationError(f"{format_free_word(word)} is not in the kernel")
    return free_reduce(out)


def divisibility_in_kernel(word: Sequence[int], max_index: int = MAX_BRUTEFORCE_INDEX) -> Optional[int]:
    """D_K of a nontrivial element of F(a, b); 1 when it lies outside K."""
    w, _ = _check_free_word(word, 2)
    if not in_kernel(w):
        return 1
    return divisibility_bruteforce(kernel_rewrite(w), generators=3, max_index=max_index)


def cover_transfer_check(C: int, curve_M: GrowthCurve, curve_Mprime: GrowthCurve) -> Dict[str, Any]:
    """Check curve_M(n) <= C * curve_Mprime(n) wherever both curves are defined."""
    if C < 1:
        raise ValidationError(f"cover degree must be positive, got {C}")
    if curve_M.norm != curve_Mprime.norm:
        raise ValidationError(f"curves use different norms: {curve_M.norm} vs {curve_Mprime.norm}")
    up, down = curve_M.as_dict(), curve_Mprime.as_dict()
    rows = []
    for n in sorted(set(up) & set(down)):
        margin = C * down[n] - up[n]
        rows.append({"n": n, "D_M": up[n], "D_cover": down[n], "margin": margin, "holds": margin >= 0})
    holds = all(r["holds"] for r in rows)
    if not holds:
        logger.warning("cover transfer inequality fails at n = %s", [r["n"] for r in rows if not r["holds"]])
    return {
        "C": C,
        "norm": curve_M.norm,
        "rows": rows,
        "holds": holds,
        "min_margin": min((r["margin"] for r in rows), default=None),
        "message": "inequality holds at all n" if holds else "inequality violated",
    }


def cover_transfer_experiment(max_len: int = 6, max_index: int = MAX_BRUTEFORCE_INDEX) -> Dict[str, Any]:
    """Brute-force both curves of the index-2 cover over all words of length <= max_len."""
    started = time.time()
    base, cover = [], []
    words = list(enumerate_reduced_words(2, max_len))
    for i, w in enumerate(words, start=1):
        text = format_free_word(w)
        cyc = len(cyclic_reduce(w))
        base.append(GrowthSample(text, len(w), cyc, D_value=divisibility_bruteforce(w, 2, max_index)))
        outside = not in_kernel(w)
        cover.append(GrowthSample(text, len(w), cyc, D_value=divisibility_in_kernel(w, max_index), outside=outside))
        report_progress("cover transfer", i, len(words), started)
    report = cover_transfer_check(2, growth_curve(base), growth_curve(cover))
    report["words"] = len(words)
    logger.info("cover transfer over %d words up to length %d: %s", len(words), max_len, report["message"])
    return report


def bruteforce_table(max_len: int, max_index: int = 6, rank: int = 2) -> List[GrowthSample]:
    """Exact D for every reduced word of F_rank up to length max_len."""
    started = time.time()
    words = list(enumerate_reduced_words(rank, max_len))
    table = []
    for i, w in enumerate(words, start=1):
        d = divisibility_bruteforce(w, rank, max_index)
        table.append(GrowthSample(format_free_word(w), len(w), len(cyclic_reduce(w)), D_value=d))
        report_progress("brute force", i, len(words), started)
    return table


# ----------------- geodesic length comparisons -----------------

def example_6_2_row(n: int) -> Dict[str, Any]:
    """a b^n in SL(2, Z): exact integer trace 2 + 4n and translation length 2 arccosh(1 + 2n)."""
    if n < 1:
        raise ValidationError(f"n must be positive, got {n}")
    m = EXAMPLE_A @ np.linalg.matrix_power(EXAMPLE_B, n)
    trace = int(m[0, 0] + m[1, 1])
    length = sl2_translation_length(trace)
    word_length = n + 1
    return {
        "n": n,
        "word_length": word_length,
        "trace": trace,
        "geodesic_length": length,
        "ratio": length / math.log(word_length),
    }


def example_6_2_table(n_max: int) -> List[Dict[str, Any]]:
    if n_max < 1:
        raise ValidationError(f"n_max must be positive, got {n_max}")
    return [example_6_2_row(n) for n in range(1, n_max + 1)]


def _random_racg_word(P: Polyhedron, rng: np.random.Generator, max_len: int) -> Word:
    length = int(rng.integers(2, max_len + 1))
    word = [int(rng.integers(P.n_faces))]
    while len(word) < length:
        i = int(rng.integers(P.n_faces))
        if i != word[-1]:
            word.append(i)
    return racg_reduce(word, P.adjacency)


def svarc_milnor_probe(P: Polyhedron, n_words: int, max_len: int, seed: int) -> Dict[str, Any]:
    """
    Compare word length with orbit displacement d(x0, g x0) on random
    loxodromic elements, x0 the reference point of P. Fits the smallest a, b
    with |g|/a - b <= d(x0, g x0) <= a |g| + b on the sample.
    """
    if P.non_compact:
        raise ValidationError(f"{P.name} is not compact")
    if max_len < 2:
        raise ValidationError("max_len must be at least 2")
    rng = np.random.default_rng(seed)
    x0 = P.center
    displacement = max(dist_points(x0, P.reflections[i] @ x0) for i in range(P.n_faces))
    samples = []
    attempts = 0
    while len(samples) < n_words and attempts < 50 * n_words:
        attempts += 1
        word = _random_racg_word(P, rng, max_len)
        if len(word) < 2:
            continue
        g = word_to_isometry(P, word, reduce=False)
        if g.kind != LOXODROMIC:
            continue
        d = dist_points(x0, g @ x0, tol=1e-6)
        samples.append({
            "word": format_reflection_word(word),
            "word_length": len(word),
            "displacement": d,
            "translation_length": g.translation_length,
        })
    if not samples:
        raise ValidationError(f"no loxodromic words found in {attempts} attempts")

    violations = [s["word"] for s in samples if s["translation_length"] > s["displacement"] + 1e-9]
    a = max(s["displacement"] / s["word_length"] for s in samples)
    b = max(max(s["word_length"] / a - s["displacement"] for s in samples), 0.0)
    logger.info("orbit comparison on %s: %d words, a = %.4f, b = %.4f", P.name, len(samples), a, b)
    return {
        "polyhedron": P.name,
        "seed": seed,
        "n_words": len(samples),
        "attempts": attempts,
        "max_generator_displacement": displacement,
        "a": a,
        "b": b,
        "translation_violations": violations,
        "ok": not violations and a <= displacement + 1e-9,
        "samples": samples,
    }


def racg_cyclic_length(word: Sequence[int], adjacency: np.ndarray) -> int:
    """Length after conjugating away letters while that shortens the word."""
    w = racg_reduce(word, adjacency)
    shrinking = True
    while shrinking and w:
        shrinking = False
        for s in set(w):
            v = racg_reduce((s,) + w + (s,), adjacency)
            if len(v) < len(w):
                w, shrinking = v, True
                break
    return len(w)


def certificate_curve(P: Polyhedron, word: Sequence[int], n_max: int) -> List[GrowthSample]:
    """Certificate indices for the powers g, g^2, ..., g^n_max: upper bounds for D."""
    w = check_word(P, word)
    samples = []
    for n in range(1, n_max + 1):
        power = racg_reduce(w * n, P.adjacency)
        cert = build_certificate(P, power)
        bound = index_bound(BoundInputs(P.dim, P.d_P, P.volume_lower, cert.translation_length))
        logger.debug("power %d: index %d, bound %.3f", n, cert.index, bound)
        samples.append(GrowthSample(
            word=format_reflection_word(power),
            word_length=len(power),
            cyc_length=racg_cyclic_length(power, P.adjacency),
            geodesic_length=cert.translation_length,
            D_value=cert.index,
            exact=False,
            source="certificate",
        ))
    return samples
