"""Worker-pool helpers; the AKNS_THREADS environment variable caps parallelism."""

import logging
import os
from concurrent.futures import ThreadPoolExecutor
from typing import Callable, Iterable, List, Optional, TypeVar

from src.utils.errors import ConfigError

logger = logging.getLogger(__name__)

THREADS_ENV = "AKNS_THREADS"

T = TypeVar("T")
R = TypeVar("R")


def worker_count(requested: Optional[int] = None) -> int:
    """
    Number of worker threads to use.

    Args:
        requested: Explicit request (None means one per CPU)

    Returns:
        Worker count, capped by AKNS_THREADS when set

    Raises:
        ConfigError: If AKNS_THREADS is not a positive integer
    """
    available = requested or os.cpu_count() or 1
    raw = os.environ.get(THREADS_ENV)
    if raw is None or raw.strip() == "":
        return max(1, available)
    try:
        cap = int(raw)
    except ValueError:
        raise ConfigError(THREADS_ENV, f"expected a positive integer, got '{raw}'")
    if cap < 1:
        raise ConfigError(THREADS_ENV, f"expected a positive integer, got {cap}")
    return max(1, min(available, cap))


def parallel_map(func: Callable[[T], R], items: Iterable[T], workers: Optional[int] = None) -> List[R]:
    """
    Apply ``func`` to every item, preserving order.

    Runs inline when only one worker is available. numpy releases the GIL in
    its LAPACK calls, so threads give real speed-up for per-row solves.
    """
    items = list(items)
    count = min(worker_count(workers), max(1, len(items)))
    if count == 1:
        return [func(item) for item in items]

    logger.debug(f"Mapping {len(items)} items over {count} threads")
    with ThreadPoolExecutor(max_workers=count) as pool:
        return list(pool.map(func, items))
