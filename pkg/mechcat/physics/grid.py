"""
Phase-space sampling grids shared by the Gaussian and Fock Wigner paths.

Both paths sample on the same GridSpec so fields can be compared point by
point and written in one CSV layout.
"""

import logging
from dataclasses import dataclass, field

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, model_validator
from scipy.integrate import trapezoid

logger = logging.getLogger(__name__)

CONVENTION = "vacuum peak = 1/pi"
NORMALIZATION_TOL = 1e-3


class GridSpec(BaseModel):
    """Rectangular window in quadrature units, x along X and y along Y."""

    model_config = ConfigDict(extra="forbid", frozen=True)

    x_min: float = Field(default=-5.0)
    x_max: float = Field(default=5.0)
    y_min: float = Field(default=-5.0)
    y_max: float = Field(default=5.0)
    nx: int = Field(default=201, ge=1)
    ny: int = Field(default=201, ge=1)

    @model_validator(mode="after")
    def _ordered(self) -> "GridSpec":
        if self.x_max < self.x_min or self.y_max < self.y_min:
            raise ValueError("grid window bounds are reversed")
        return self

    @classmethod
    def point(cls, x: float = 0.0, y: float = 0.0) -> "GridSpec":
        return cls(x_min=x, x_max=x, y_min=y, y_max=y, nx=1, ny=1)

    @property
    def window(self) -> tuple[float, float, float, float]:
        return (self.x_min, self.x_max, self.y_min, self.y_max)

    def axes(self) -> tuple[np.ndarray, np.ndarray]:
        return (
            np.linspace(self.x_min, self.x_max, self.nx),
            np.linspace(self.y_min, self.y_max, self.ny),
        )

    def mesh(self) -> tuple[np.ndarray, np.ndarray]:
        """Coordinate arrays of shape (ny, nx)."""
        x, y = self.axes()
        return np.meshgrid(x, y, indexing="xy")


@dataclass(frozen=True)
class WignerGrid:
    """A sampled Wigner field; values[j, i] is W at (x_i, y_j)."""

    spec: GridSpec
    values: np.ndarray
    convention: str = CONVENTION
    meta: dict = field(default_factory=dict)

    def __post_init__(self) -> None:
        if self.values.shape != (self.spec.ny, self.spec.nx):
            raise ValueError(
                f"values shape {self.values.shape} does not match grid ({self.spec.ny}, {self.spec.nx})"
            )

    def _integrate(self, field_values: np.ndarray) -> float:
        x, y = self.spec.axes()
        if self.spec.nx < 2 or self.spec.ny < 2:
            return float("nan")
        return float(trapezoid(trapezoid(field_values, x, axis=1), y))

    @property
    def integral(self) -> float:
        return self._integrate(self.values)

    @property
    def abs_integral(self) -> float:
        return self._integrate(np.abs(self.values))

    @property
    def min_value(self) -> float:
        return float(self.values.min())

    def check_normalization(self, tol: float = NORMALIZATION_TOL) -> bool:
        """Warn (never raise) when the window misses probability weight."""
        total = self.integral
        ok = bool(np.isfinite(total) and abs(total - 1.0) <= tol)
        if not ok:
            logger.warning(
                "Wigner integral %.6g outside 1 +/- %g; window %s may be too small",
                total,
                tol,
                self.spec.window,
            )
        return ok

    def rows(self) -> dict[str, np.ndarray]:
        """Flattened (x, y, W) columns, x varying fastest."""
        X, Y = self.spec.mesh()
        return {"x": X.ravel(), "y": Y.ravel(), "W": self.values.ravel()}
