"""
One-dimensional maximisation: coarse scan, then golden-section refinement.

Used for the drive-ratio optimisation and the cat-amplitude search. The
scan makes the result deterministic on curves with a single peak; ties go
to the smallest argument.
"""

import logging
import math
from typing import Callable

import numpy as np
from scipy.optimize import minimize_scalar

logger = logging.getLogger(__name__)

N_SCAN = 64


def _finite(value: float) -> float:
    return value if math.isfinite(value) else -math.inf


def maximize_scalar(
    func: Callable[[float], float],
    lo: float,
    hi: float,
    xtol: float = 1e-4,
    n_scan: int = N_SCAN,
) -> tuple[float, float]:
    """
    Maximise `func` on [lo, hi].

    Non-finite values mark infeasible points and are never selected.

    Returns:
        (argmax, max)

    Raises:
        ValueError: If no scanned point is feasible.
    """
    xs = np.linspace(lo, hi, n_scan)
    values = np.array([_finite(func(float(x))) for x in xs])
    if not np.isfinite(values).any():
        raise ValueError(f"no feasible point in [{lo}, {hi}]")
    i = int(np.argmax(values))
    best_x, best_f = float(xs[i]), float(values[i])

    if 0 < i < n_scan - 1 and values[i - 1] < values[i] > values[i + 1]:
        scale = max(abs(best_x), xtol)
        result = minimize_scalar(
            lambda x: -_finite(func(float(x))),
            bracket=(xs[i - 1], xs[i], xs[i + 1]),
            method="golden",
            tol=xtol / scale,
        )
        if -result.fun > best_f and xs[i - 1] <= result.x <= xs[i + 1]:
            best_x, best_f = float(result.x), float(-result.fun)
    logger.debug("maximize_scalar on [%g, %g]: x*=%.8g f*=%.8g", lo, hi, best_x, best_f)
    return best_x, best_f
