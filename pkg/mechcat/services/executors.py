"""
Concrete Executor implementations: in-process and multiprocessing pool.
"""

import logging
from multiprocessing import Pool
from typing import Callable, Iterable, TypeVar

from mechcat.interfaces.executor import Executor

logger = logging.getLogger(__name__)

T = TypeVar("T")
R = TypeVar("R")


class SerialExecutor:
    """Runs every item in the calling process."""

    jobs = 1

    def map(self, func: Callable[[T], R], items: Iterable[T]) -> list[R]:
        return [func(item) for item in items]


class PoolExecutor:
    """
    Runs items on a multiprocessing pool of `jobs` workers.

    Pool.map preserves input order, which keeps results schedule-independent.
    """

    def __init__(self, jobs: int) -> None:
        if jobs < 2:
            raise ValueError("PoolExecutor needs at least 2 jobs; use SerialExecutor")
        self.jobs = jobs

    def map(self, func: Callable[[T], R], items: Iterable[T]) -> list[R]:
        items = list(items)
        logger.debug("Dispatching %d items to %d workers", len(items), self.jobs)
        with Pool(processes=self.jobs) as pool:
            return pool.map(func, items)


def make_executor(jobs: int) -> Executor:
    """SerialExecutor for jobs ≤ 1, else PoolExecutor."""
    return SerialExecutor() if jobs <= 1 else PoolExecutor(jobs)
