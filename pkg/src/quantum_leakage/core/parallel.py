"""Ordered fan-out of independent tasks."""
from __future__ import annotations

import logging
from concurrent import futures
from typing import Callable, Iterable, List, Optional, TypeVar

from ..config import get_runtime_config

logger = logging.getLogger(__name__)

T = TypeVar("T")
R = TypeVar("R")


def run_tasks(fn: Callable[[T], R], tasks: Iterable[T], workers: Optional[int] = None) -> List[R]:
    """Map ``fn`` over ``tasks`` keeping input order.

    Runs in-process when ``workers`` <= 1, otherwise in a process pool; ``fn``
    and the tasks must then be picklable (module-level functions, plain data).
    """
    tasks = list(tasks)
    workers = get_runtime_config().workers if workers is None else workers
    if workers <= 1 or len(tasks) <= 1:
        return [fn(t) for t in tasks]
    n = min(workers, len(tasks))
    logger.debug("running %d tasks on %d worker processes", len(tasks), n)
    with futures.ProcessPoolExecutor(max_workers=n) as executor:
        return list(executor.map(fn, tasks))
