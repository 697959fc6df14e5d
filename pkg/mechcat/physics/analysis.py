"""
Characterization of single-mode states: Fock-basis Wigner functions,
parity, Wigner negativity and fidelity with Schrödinger cat states.

Conventions: α = (x + iy)/√2, ∬W dx dy = 1 and the vacuum peaks at 1/π,
so the Fock path shares grids with the Gaussian path.

Design Decisions (First Principles):
1. Wigner matrix elements come from normalized Laguerre functions built by
   upward recurrence in n; factorial prefactors never appear explicitly.
2. Coherent-state amplitudes are evaluated in log space.
3. Cat amplitudes are searched along one axis, by default the real one,
   and only up to the largest amplitude the truncation can hold.
"""

import logging
import math
from dataclasses import dataclass
from typing import Literal, Optional

import numpy as np
from scipy.optimize import brentq
from scipy.special import gammaln

from mechcat.core.exceptions import TruncationLeakageError
from mechcat.interfaces.executor import Executor
from mechcat.physics.fock import DensityMatrix, StateVector
from mechcat.physics.grid import GridSpec, WignerGrid
from mechcat.physics.optimize import maximize_scalar

logger = logging.getLogger(__name__)

CAT_LEAKAGE_BUDGET = 1e-8
NEGLIGIBLE_POPULATION = 1e-30
ROW_CHUNK = 16

Parity = Literal["even", "odd"]


# ---------------------------------------------------------------------------
# Wigner function
# ---------------------------------------------------------------------------
def _effective_dimension(entries: np.ndarray) -> int:
    """Smallest dimension holding every non-negligible population."""
    populated = np.nonzero(np.abs(np.diag(entries)) > NEGLIGIBLE_POPULATION)[0]
    return int(populated[-1]) + 1 if populated.size else 1


def wigner_values(entries: np.ndarray, X: np.ndarray, Y: np.ndarray) -> np.ndarray:
    """
    W at the points (X, Y) for the density matrix `entries` (trace 1).

    W = (1/π) Re Σ_{d≥0} (2 − δ_d0) e^{−idϑ} Σ_n (−1)ⁿ ρ_{n+d,n} ℓ_n^{(d)}(R)
    with R = 2(x² + y²), ϑ = atan2(y, x) and ℓ the normalized Laguerre
    functions e^{−R/2} R^{d/2} √(n!/(n+d)!) L_n^{(d)}(R).
    """
    dim = _effective_dimension(entries)
    R = 2.0 * (X**2 + Y**2)
    phase = np.exp(-1j * np.arctan2(Y, X))
    log_R = np.log(np.where(R > 0, R, 1.0))
    total = np.zeros(R.shape, dtype=complex)
    rotation = np.ones(R.shape, dtype=complex)

    for d in range(dim):
        coeffs = np.diagonal(entries, offset=-d)[: dim - d]
        if d > 0:
            rotation = rotation * phase
        if not np.any(coeffs):
            continue
        if d == 0:
            ell = np.exp(-0.5 * R)
        else:
            ell = np.where(R > 0, np.exp(-0.5 * R + 0.5 * d * log_R - 0.5 * gammaln(d + 1)), 0.0)
        ell_prev = np.zeros_like(ell)
        acc = coeffs[0] * ell
        for n in range(len(coeffs) - 1):
            ell_next = ((2 * n + 1 + d - R) * ell - math.sqrt(n * (n + d)) * ell_prev) / math.sqrt(
                (n + 1) * (n + d + 1)
            )
            ell_prev, ell = ell, ell_next
            acc = acc + (-1) ** (n + 1) * coeffs[n + 1] * ell
        total += (1.0 if d == 0 else 2.0) * rotation * acc
    return total.real / math.pi


def _wigner_rows(args: tuple[np.ndarray, np.ndarray, np.ndarray]) -> np.ndarray:
    entries, x, y = args
    X, Y = np.meshgrid(x, y, indexing="xy")
    return wigner_values(entries, X, Y)


def wigner_fock(
    rho: DensityMatrix, grid: GridSpec, executor: Optional[Executor] = None
) -> WignerGrid:
    """
    Sample the Wigner function of a single-mode density matrix on `grid`.

    Rows of the grid may be evaluated in parallel through `executor`; the
    field is assembled in row order so the result does not depend on the
    schedule.
    """
    if len(rho.dims) != 1:
        raise ValueError("wigner_fock expects a single-mode state")
    entries = rho.entries / rho.trace
    x, y = grid.axes()
    if executor is None:
        values = _wigner_rows((entries, x, y))
    else:
        chunks = [(entries, x, y[i : i + ROW_CHUNK]) for i in range(0, len(y), ROW_CHUNK)]
        values = np.vstack(executor.map(_wigner_rows, chunks))
    wigner = WignerGrid(spec=grid, values=values)
    if grid.nx > 1 and grid.ny > 1:
        wigner.check_normalization()
    return wigner


def wigner_origin(rho: DensityMatrix) -> float:
    """W(0, 0)."""
    return float(wigner_fock(rho, GridSpec.point()).values[0, 0])


# ---------------------------------------------------------------------------
# Scalar characteristics
# ---------------------------------------------------------------------------
def parity(rho: DensityMatrix) -> float:
    """⟨(−1)^{b†b}⟩."""
    populations = rho.diagonal() / rho.trace
    signs = np.where(np.arange(len(populations)) % 2 == 0, 1.0, -1.0)
    return float(np.dot(signs, populations))


def mean_occupation(rho: DensityMatrix) -> float:
    populations = rho.diagonal() / rho.trace
    return float(np.dot(np.arange(len(populations)), populations))


def purity(rho: DensityMatrix) -> float:
    return rho.purity


def negativity_volume(wigner: WignerGrid) -> float:
    """∬|W| − ∬W over the grid; zero for non-negative fields."""
    if not wigner.check_normalization():
        logger.warning("Negativity volume computed on a grid that fails normalization")
    return max(0.0, wigner.abs_integral - wigner.integral)


# ---------------------------------------------------------------------------
# Cat states
# ---------------------------------------------------------------------------
@dataclass(frozen=True)
class CatParams:
    """Target cat (|α⟩ + s|−α⟩)/√N, s = +1 (even) or −1 (odd)."""

    alpha: complex
    parity: Parity = "even"

    def __post_init__(self) -> None:
        if self.parity not in ("even", "odd"):
            raise ValueError(f"parity must be 'even' or 'odd', got {self.parity!r}")
        if self.parity == "odd" and self.alpha == 0:
            raise ValueError("odd cat is undefined at alpha = 0")

    @property
    def sign(self) -> int:
        return 1 if self.parity == "even" else -1

    @property
    def normalization(self) -> float:
        """N = 2(1 + s·e^{−2|α|²})."""
        x = -2.0 * abs(self.alpha) ** 2
        return 2.0 * (2.0 + np.expm1(x)) if self.sign > 0 else -2.0 * float(np.expm1(x))


@dataclass(frozen=True)
class CatFit:
    """Best cat match: |α*| along `angle`, its fidelity and parity."""

    amplitude: float
    fidelity: float
    parity: Parity
    angle: float = 0.0

    @property
    def alpha(self) -> complex:
        return self.amplitude * complex(math.cos(self.angle), math.sin(self.angle))


def coherent_amplitudes(alpha: complex, n_trunc: int) -> np.ndarray:
    """e^{−|α|²/2} αⁿ/√n! for n = 0…n_trunc."""
    n = np.arange(n_trunc + 1)
    out = np.zeros(n_trunc + 1, dtype=complex)
    if alpha == 0:
        out[0] = 1.0
        return out
    log_mod = -0.5 * abs(alpha) ** 2 + n * math.log(abs(alpha)) - 0.5 * gammaln(n + 1)
    return np.exp(log_mod) * np.exp(1j * n * np.angle(alpha))


def _cat_amplitudes(params: CatParams, n_trunc: int) -> tuple[np.ndarray, float]:
    c = coherent_amplitudes(params.alpha, n_trunc)
    signs = 1.0 + params.sign * np.where(np.arange(n_trunc + 1) % 2 == 0, 1.0, -1.0)
    amplitudes = c * signs / math.sqrt(params.normalization)
    return amplitudes, max(0.0, 1.0 - float(np.vdot(amplitudes, amplitudes).real))


def max_cat_amplitude(parity: Parity, n_trunc: int, alpha_max: float) -> float:
    """Largest |α| ≤ alpha_max whose cat fits |0⟩…|n_trunc⟩ within the leakage budget."""
    lo = 0.0 if parity == "even" else 1e-6

    def excess(a: float) -> float:
        return _cat_amplitudes(CatParams(a, parity), n_trunc)[1] - CAT_LEAKAGE_BUDGET

    if excess(alpha_max) <= 0:
        return alpha_max
    # step inside the root so the cap itself passes cat_state's check
    return brentq(excess, lo, alpha_max, xtol=1e-10) * (1.0 - 1e-6)


def cat_state(params: CatParams, n_trunc: int) -> StateVector:
    """
    Cat state on |0⟩…|n_trunc⟩.

    Raises:
        TruncationLeakageError: If more than 1e-8 of the norm falls outside.
    """
    amplitudes, leakage = _cat_amplitudes(params, n_trunc)
    if leakage > CAT_LEAKAGE_BUDGET:
        raise TruncationLeakageError(
            f"cat state |alpha|={abs(params.alpha):.4g}: leakage {leakage:.3e} at n_trunc={n_trunc}",
            leakage,
        )
    return StateVector(amplitudes, leakage)


def state_fidelity(rho: DensityMatrix, target: StateVector) -> float:
    """⟨ψ|ρ|ψ⟩ for a pure target on the same truncation."""
    if rho.dims != target.dims:
        raise ValueError(f"dimension mismatch: state {rho.dims} vs target {target.dims}")
    psi = target.amplitudes
    value = np.vdot(psi, rho.entries @ psi).real / rho.trace
    return float(min(1.0, max(0.0, value)))


def cat_fidelity(rho: DensityMatrix, params: CatParams) -> float:
    """F = ⟨cat|ρ|cat⟩."""
    return state_fidelity(rho, cat_state(params, rho.n_trunc))


def best_cat_fidelity(
    rho: DensityMatrix,
    parity: Parity,
    alpha_max: float = 4.0,
    angle: float = 0.0,
    optimize_angle: bool = False,
    xtol: float = 1e-4,
) -> CatFit:
    """
    Maximise cat_fidelity over |α| ∈ [0, alpha_max] along `angle`.

    The search stops at the largest amplitude whose cat still fits the
    state's truncation (max_cat_amplitude).

    With optimize_angle the axis angle is searched over [−π/2, π/2] as well.
    Ties go to the smaller amplitude.
    """
    lo = 0.0 if parity == "even" else 1e-6
    hi = max_cat_amplitude(parity, rho.n_trunc, alpha_max)
    if hi < alpha_max:
        logger.info("Cat search capped at |alpha|=%.4f by n_trunc=%d", hi, rho.n_trunc)

    def along(theta: float) -> tuple[float, float]:
        direction = complex(math.cos(theta), math.sin(theta))
        return maximize_scalar(
            lambda a: cat_fidelity(rho, CatParams(a * direction, parity)), lo, hi, xtol=xtol
        )

    if optimize_angle:
        best_angle, _ = maximize_scalar(lambda t: along(t)[1], -math.pi / 2, math.pi / 2, xtol=xtol)
        angle = best_angle
    amplitude, fidelity = along(angle)
    logger.info(
        "Best %s cat: |alpha|=%.6f angle=%.6f F=%.8f", parity, amplitude, angle, fidelity
    )
    return CatFit(amplitude=amplitude, fidelity=fidelity, parity=parity, angle=angle)
