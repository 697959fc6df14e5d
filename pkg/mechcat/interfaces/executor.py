"""
This module defines the abstract interface (Protocol) for executing
independent work items.

Sweeps and Wigner grids are embarrassingly parallel. Services receive an
Executor by constructor injection, so the same code runs serially in tests
and on a process pool from the CLI.
"""

from typing import Callable, Iterable, Protocol, TypeVar

T = TypeVar("T")
R = TypeVar("R")


class Executor(Protocol):
    """
    Order-preserving map over independent work items.

    Implementations must return results in input order, whatever the
    completion order, so assembled outputs are identical across schedules.
    """

    jobs: int

    def map(self, func: Callable[[T], R], items: Iterable[T]) -> list[R]:
        """
        Apply `func` to every item.

        Args:
            func: A picklable, side-effect-free callable.
            items: Work items.

        Returns:
            list: Results in the order of `items`.
        """
        ...
