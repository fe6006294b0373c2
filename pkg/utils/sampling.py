# utils/sampling.py
import logging
import time
from concurrent.futures import ThreadPoolExecutor
from typing import Callable, List, Optional, TypeVar

import numpy as np

from config import Config
from utils.errors import ValidationError
from utils.progress import report_progress

logger = logging.getLogger(__name__)

T = TypeVar("T")


def chunk_sizes(n_samples: int, chunk: int) -> List[int]:
    if n_samples <= 0:
        raise ValidationError(f"n_samples must be positive, got {n_samples}")
    if chunk <= 0:
        raise ValidationError(f"chunk must be positive, got {chunk}")
    full, rest = divmod(n_samples, chunk)
    sizes = [chunk] * full
    if rest:
        sizes.append(rest)
    return sizes


def run_chunked(
    fn: Callable[[np.random.Generator, int], T],
    n_samples: int,
    seed: int,
    chunk: Optional[int] = None,
    workers: Optional[int] = None,
    label: str = "sampling",
) -> List[T]:
    """
    Run fn(rng, size) over fixed-size chunks, one SeedSequence child per chunk.
    Results come back in chunk order, so they depend on (seed, chunk) only.
    """
    chunk = chunk or Config.MC_CHUNK
    workers = workers or Config.WORKERS
    sizes = chunk_sizes(n_samples, chunk)
    children = np.random.SeedSequence(seed).spawn(len(sizes))
    start = time.time()

    def _one(i: int) -> T:
        return fn(np.random.default_rng(children[i]), sizes[i])

    if workers == 1 or len(sizes) == 1:
        results = []
        for i in range(len(sizes)):
            results.append(_one(i))
            report_progress(label, i + 1, len(sizes), start)
        return results

    with ThreadPoolExecutor(max_workers=workers) as pool:
        futures = [pool.submit(_one, i) for i in range(len(sizes))]
        results = []
        for i, fut in enumerate(futures):
            results.append(fut.result())
            report_progress(label, i + 1, len(sizes), start)
    logger.debug("%s: %d chunks on %d workers", label, len(sizes), workers)
    return results


def weighted_mean_estimate(chunks: List[np.ndarray], scale: float):
    """Combine per-chunk (sum, sum_sq, count) rows into (estimate, std_error)."""
    arr = np.asarray(chunks, dtype=float).reshape(-1, 3)
    total, total_sq, count = arr.sum(axis=0)
    mean = total / count
    var = max(total_sq / count - mean * mean, 0.0)
    return float(scale * mean), float(scale * np.sqrt(var / count))
