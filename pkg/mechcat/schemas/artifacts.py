"""
This module defines the JSON data contracts of the files a run writes.

These schemas act as the contracts between pipeline stages: a state
written by `subtract` is read back by `wigner` and `fidelity`, and a
covariance file written by `squeeze` is read back by `subtract`.
"""

from typing import Literal, Optional

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, model_validator

from mechcat.physics.fock import DensityMatrix, StateVector


class _Strict(BaseModel):
    model_config = ConfigDict(extra="forbid")


# == Fock-basis state container ==


class StateFile(_Strict):
    """
    Density matrix or state vector in a truncated Fock basis.

    `re`/`im` hold the flattened entries in row-major order; `dims` lists
    the per-mode dimensions (mechanics first).
    """

    n_trunc: int = Field(..., ge=1)
    dims: list[int] = Field(default_factory=list)
    layout: Literal["row-major"] = "row-major"
    kind: Literal["density", "vector"] = "density"
    re: list[float]
    im: list[float]
    leakage: float = Field(default=0.0, ge=0)
    k: Optional[int] = Field(default=None, ge=0, description="Detected photon count")
    probability: Optional[float] = Field(default=None, ge=0, le=1)
    theta: Optional[float] = Field(default=None, ge=0)

    @model_validator(mode="after")
    def _sizes(self) -> "StateFile":
        if not self.dims:
            self.dims = [self.n_trunc + 1]
        if self.dims[0] != self.n_trunc + 1:
            raise ValueError("dims[0] must equal n_trunc + 1")
        size = int(np.prod(self.dims))
        expected = size * size if self.kind == "density" else size
        if len(self.re) != expected or len(self.im) != expected:
            raise ValueError(f"expected {expected} entries in re and im for dims {self.dims}")
        return self

    @classmethod
    def from_density(cls, rho: DensityMatrix, **meta) -> "StateFile":
        flat = np.ascontiguousarray(rho.entries).ravel()
        return cls(
            n_trunc=rho.dims[0] - 1,
            dims=list(rho.dims),
            kind="density",
            re=flat.real.tolist(),
            im=flat.imag.tolist(),
            leakage=rho.leakage,
            **meta,
        )

    @classmethod
    def from_vector(cls, psi: StateVector, **meta) -> "StateFile":
        return cls(
            n_trunc=psi.dims[0] - 1,
            dims=list(psi.dims),
            kind="vector",
            re=psi.amplitudes.real.tolist(),
            im=psi.amplitudes.imag.tolist(),
            leakage=psi.leakage,
            **meta,
        )

    def to_density(self) -> DensityMatrix:
        values = np.asarray(self.re) + 1j * np.asarray(self.im)
        dims = tuple(self.dims)
        if self.kind == "vector":
            return StateVector(values, self.leakage, dims).projector()
        size = int(np.prod(dims))
        return DensityMatrix(values.reshape(size, size), self.leakage, dims)


# == Covariance matrices ==


class SqueezedThermalModel(_Strict):
    r: float
    phi: float
    n_bar: float


class CovarianceFile(_Strict):
    """Steady-state covariance (full 4×4 optional) and its mechanical block."""

    mechanical_block: list[list[float]]
    full: Optional[list[list[float]]] = None
    squeezing_db: Optional[float] = None
    squeezed_thermal: Optional[SqueezedThermalModel] = None
    comment: Optional[str] = None

    @model_validator(mode="after")
    def _shapes(self) -> "CovarianceFile":
        if np.shape(self.mechanical_block) != (2, 2):
            raise ValueError("mechanical_block must be 2x2")
        if self.full is not None and np.shape(self.full) != (4, 4):
            raise ValueError("full must be 4x4")
        return self

    def block(self) -> np.ndarray:
        return np.asarray(self.mechanical_block, dtype=float)


# == Wigner grids and reports ==


class WignerSidecar(_Strict):
    window: list[float]
    nx: int
    ny: int
    convention: str
    integral: float
    min_value: float
    negativity_volume: Optional[float] = None
    det_V_b: Optional[float] = None
    source: Literal["gaussian", "fock"]


class FidelityReport(_Strict):
    parity: Literal["even", "odd"]
    alpha: float = Field(..., description="Best cat amplitude |alpha|")
    angle: float = Field(..., description="Cat axis angle (rad)")
    fidelity: float
    state_parity: float
    wigner_origin: float
    negativity_volume: Optional[float] = None
    min_value: Optional[float] = None
    k: Optional[int] = None
    probability: Optional[float] = None
    parity_mismatch: bool = False
