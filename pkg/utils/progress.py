# utils/progress.py
import logging
import time
from typing import Dict

from config import Config

logger = logging.getLogger(__name__)

_last_update: Dict[str, float] = {}  # task key -> timestamp


def human_count(n: int) -> str:
    if n < 1000:
        return str(int(n))
    power = 1000
    k = 0
    labels = ["", "K", "M", "G", "T"]
    size = float(n)
    while size >= power and k < len(labels) - 1:
        size /= power
        k += 1
    return f"{size:.2f}{labels[k]}"


def human_time(seconds: float) -> str:
    seconds = int(seconds)
    if seconds < 0:
        seconds = 0
    m, s = divmod(seconds, 60)
    h, m = divmod(m, 60)
    if h:
        return f"{h}h {m}m {s}s"
    if m:
        return f"{m}m {s}s"
    return f"{s}s"


def report_progress(key: str, done: int, total: int, start_time: float) -> bool:
    """
    Throttled progress line for long loops.
    start_time = time.time() at task start. total <= 0 means unknown total.
    Returns True when a line was logged.
    """
    now = time.time()
    finished = total > 0 and done >= total
    last = _last_update.get(key, 0.0)
    if now - last < Config.PROGRESS_UPDATE_INTERVAL and not finished:
        return False

    _last_update[key] = now

    elapsed = max(now - start_time, 1e-3)
    rate = done / elapsed
    if total > 0:
        percent = done * 100 / total
        eta = (total - done) / rate if rate > 0 else 0
        logger.info(
            "%s: %.1f%% (%s of %s), %s/s, eta %s",
            key, percent, human_count(done), human_count(total),
            human_count(int(rate)), human_time(eta),
        )
    else:
        logger.info("%s: %s done, %s/s", key, human_count(done), human_count(int(rate)))

    if finished:
        _last_update.pop(key, None)
    return True
