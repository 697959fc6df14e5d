"""
Truncated Fock-basis states and operators for the mechanical mode.

Bridges step 1 and step 2: a 2×2 covariance block is turned into
squeezed-thermal parameters (r, φ, n̄) and then into a density matrix, and
any zero-mean single-mode density matrix can be turned back into its
covariance block.

Design Decisions (First Principles):
1. Every constructor records its truncation leakage and refuses to go on
   when the leakage exceeds the budget, unless explicitly overridden.
2. Operators are exponentiated in a space enlarged by a guard band that is
   discarded afterwards.
3. Closed-form amplitudes are evaluated in log space.
"""

import logging
import math
from dataclasses import dataclass, field

import numpy as np
from scipy import linalg
from scipy.special import gammaln

from mechcat.core.exceptions import NonPhysicalStateError, TruncationLeakageError

logger = logging.getLogger(__name__)

LEAKAGE_BUDGET = 1e-6
GUARD_BAND = 10
DEFAULT_N_TRUNC = 150
DISPLACEMENT_TOL = 1e-8


# ---------------------------------------------------------------------------
# Value types
# ---------------------------------------------------------------------------
@dataclass(frozen=True)
class StateVector:
    """Pure state over |0⟩…|n_trunc⟩ (or a product basis when dims has two entries)."""

    amplitudes: np.ndarray
    leakage: float = 0.0
    dims: tuple[int, ...] = ()

    def __post_init__(self) -> None:
        if not self.dims:
            object.__setattr__(self, "dims", (len(self.amplitudes),))

    @property
    def n_trunc(self) -> int:
        return self.dims[0] - 1

    @property
    def norm(self) -> float:
        return float(np.linalg.norm(self.amplitudes))

    def normalized(self) -> "StateVector":
        return StateVector(self.amplitudes / self.norm, self.leakage, self.dims)

    def projector(self) -> "DensityMatrix":
        psi = self.amplitudes
        return DensityMatrix(np.outer(psi, psi.conj()), self.leakage, self.dims)


@dataclass(frozen=True)
class DensityMatrix:
    """
    Density matrix over a truncated Fock basis.

    For two modes the basis is the product mechanical ⊗ cavity, with the
    cavity index running fastest.
    """

    entries: np.ndarray
    leakage: float = 0.0
    dims: tuple[int, ...] = ()

    def __post_init__(self) -> None:
        if not self.dims:
            object.__setattr__(self, "dims", (self.entries.shape[0],))
        if self.entries.shape != (int(np.prod(self.dims)),) * 2:
            raise ValueError(f"entries shape {self.entries.shape} does not match dims {self.dims}")

    @property
    def n_trunc(self) -> int:
        return self.dims[0] - 1

    @property
    def trace(self) -> float:
        return float(np.trace(self.entries).real)

    @property
    def purity(self) -> float:
        rho = self.entries / self.trace
        return float(np.einsum("ij,ji->", rho, rho).real)

    def hermiticity_error(self) -> float:
        return float(np.max(np.abs(self.entries - self.entries.conj().T)))

    def min_eigenvalue(self) -> float:
        return float(np.linalg.eigvalsh(0.5 * (self.entries + self.entries.conj().T))[0])

    def normalized(self) -> "DensityMatrix":
        return DensityMatrix(self.entries / self.trace, self.leakage, self.dims)

    def diagonal(self) -> np.ndarray:
        return np.diag(self.entries).real.copy()


@dataclass(frozen=True)
class SqueezedThermalParams:
    """
    Squeezed thermal state S(ξ)ρ_th(n̄)S†(ξ) in covariance-matrix terms.

    phi is the angle read off the covariance block by
    atan2(−2V₁₂, V₂₂ − V₁₁); the squeezing operator that builds the state
    carries the phase phi + π.
    """

    r: float
    phi: float
    n_bar: float
    meta: dict = field(default_factory=dict, compare=False)

    def __post_init__(self) -> None:
        if self.r < 0 or self.n_bar < 0:
            raise ValueError("r and n_bar must be non-negative")

    @property
    def operator_phase(self) -> float:
        return _wrap_phase(self.phi + math.pi)

    def largest_variance(self) -> float:
        """Largest eigenvalue of 2V for this state."""
        return (2.0 * self.n_bar + 1.0) * math.exp(2.0 * self.r)


def _wrap_phase(phase: float) -> float:
    """Map to (−π, π]."""
    wrapped = math.remainder(phase, 2.0 * math.pi)
    return math.pi if wrapped == -math.pi else wrapped


def _check_leakage(leakage: float, what: str, max_leakage: float, allow_leakage: bool) -> None:
    logger.debug("%s truncation leakage %.3e", what, leakage)
    if leakage > max_leakage:
        message = f"{what}: truncation leakage {leakage:.3e} exceeds budget {max_leakage:.1e}"
        if not allow_leakage:
            raise TruncationLeakageError(message, leakage)
        logger.warning("%s (override active)", message)


def required_truncation(largest_variance: float, budget: float = LEAKAGE_BUDGET) -> int:
    """
    Fock cutoff at which a Gaussian state whose largest 2V eigenvalue is
    `largest_variance` has a tail below `budget`.
    """
    v = max(largest_variance, 1.0 + 1e-12)
    ratio = (v - 1.0) / (v + 1.0)
    if ratio <= 0:
        return 1
    return max(1, int(math.ceil(math.log(budget) / math.log(ratio))))


# ---------------------------------------------------------------------------
# Operators
# ---------------------------------------------------------------------------
def annihilation(n_trunc: int) -> np.ndarray:
    """Ladder operator b on |0⟩…|n_trunc⟩, b|n⟩ = √n|n−1⟩."""
    if n_trunc < 1:
        raise ValueError("n_trunc must be at least 1")
    return np.diag(np.sqrt(np.arange(1, n_trunc + 1, dtype=float)), k=1)


def number_operator(n_trunc: int) -> np.ndarray:
    return np.diag(np.arange(n_trunc + 1, dtype=float))


def _squeeze_generator(r: float, phi: float, dim: int) -> np.ndarray:
    b = annihilation(dim - 1).astype(complex)
    xi = r * np.exp(1j * phi)
    bd = b.conj().T
    return 0.5 * (xi * bd @ bd - np.conj(xi) * b @ b)


def squeeze_operator(
    r: float,
    phi: float,
    n_trunc: int,
    guard: int = GUARD_BAND,
    max_leakage: float = LEAKAGE_BUDGET,
    allow_leakage: bool = False,
) -> np.ndarray:
    """
    S(ξ) = exp(½(ξb†² − ξ*b²)), ξ = r·e^{iφ}, on |0⟩…|n_trunc⟩.

    Exponentiated with `guard` extra levels which are then discarded.

    Raises:
        TruncationLeakageError: If S(ξ)|0⟩ loses more than `max_leakage`.
    """
    _check_leakage(
        squeezed_vacuum_leakage(r, n_trunc), "squeeze operator", max_leakage, allow_leakage
    )
    dim = n_trunc + 1
    if r == 0:
        return np.eye(dim, dtype=complex)
    full = linalg.expm(_squeeze_generator(r, phi, dim + guard))
    return full[:dim, :dim]


# ---------------------------------------------------------------------------
# Squeezed vacuum
# ---------------------------------------------------------------------------
def squeezed_vacuum_log_weights(r: float, n_trunc: int) -> tuple[np.ndarray, np.ndarray]:
    """Even levels 2n ≤ n_trunc and log|amplitude| on them (r > 0)."""
    n = np.arange(n_trunc // 2 + 1)
    log_amp = (
        -0.5 * math.log(math.cosh(r))
        + n * math.log(math.tanh(r))
        + 0.5 * gammaln(2 * n + 1)
        - n * math.log(2.0)
        - gammaln(n + 1)
    )
    return 2 * n, log_amp


def squeezed_vacuum_leakage(r: float, n_trunc: int) -> float:
    """Weight of S(ξ)|0⟩ beyond level n_trunc."""
    if r == 0:
        return 0.0
    _, log_amp = squeezed_vacuum_log_weights(r, n_trunc)
    return max(0.0, float(-np.expm1(np.logaddexp.reduce(2.0 * log_amp))))


def squeezed_vacuum(r: float, phi: float, n_trunc: int) -> StateVector:
    """
    S(ξ)|0⟩ from its closed form: amplitude sech^{1/2}r·(e^{iφ}tanh r)^n·√(2n)!/(2ⁿn!) on |2n⟩.
    """
    if r < 0:
        raise ValueError("r must be non-negative")
    amplitudes = np.zeros(n_trunc + 1, dtype=complex)
    if r == 0:
        amplitudes[0] = 1.0
        return StateVector(amplitudes, 0.0)
    levels, log_amp = squeezed_vacuum_log_weights(r, n_trunc)
    amplitudes[levels] = np.exp(log_amp) * np.exp(1j * phi * np.arange(len(levels)))
    leakage = squeezed_vacuum_leakage(r, n_trunc)
    logger.debug("Squeezed vacuum r=%.4g: leakage %.3e", r, leakage)
    return StateVector(amplitudes, leakage)


def expansion_coefficients(phi: float, n_max: int) -> np.ndarray:
    """C_n = (e^{iφ}/2)ⁿ·√(2n)!/n! for n = 0…n_max, by recurrence."""
    c = np.empty(n_max + 1, dtype=complex)
    c[0] = 1.0
    step = 0.5 * np.exp(1j * phi)
    for n in range(1, n_max + 1):
        c[n] = c[n - 1] * step * math.sqrt((2 * n) * (2 * n - 1)) / n
    return c


def squeezed_vacuum_from_coefficients(r: float, phi: float, n_trunc: int) -> StateVector:
    """Same state as squeezed_vacuum, written as (1 − tanh²r)^{1/4}·C_n·tanhⁿr on |2n⟩."""
    amplitudes = np.zeros(n_trunc + 1, dtype=complex)
    n_max = n_trunc // 2
    t = math.tanh(r)
    amplitudes[0 : 2 * n_max + 1 : 2] = (
        (1.0 - t * t) ** 0.25 * expansion_coefficients(phi, n_max) * t ** np.arange(n_max + 1)
    )
    return StateVector(amplitudes, squeezed_vacuum_leakage(r, n_trunc))


# ---------------------------------------------------------------------------
# Mixed states
# ---------------------------------------------------------------------------
def thermal_weights(n_bar: float, n_trunc: int) -> tuple[np.ndarray, float]:
    """Geometric weights n̄ⁿ/(1+n̄)ⁿ⁺¹, renormalized, and the discarded tail."""
    if n_bar < 0:
        raise ValueError("n_bar must be non-negative")
    n = np.arange(n_trunc + 1)
    q = n_bar / (1.0 + n_bar)
    weights = np.power(q, n) / (1.0 + n_bar)
    leakage = float(q ** (n_trunc + 1))
    return weights / weights.sum(), leakage


def thermal_state(
    n_bar: float,
    n_trunc: int,
    max_leakage: float = LEAKAGE_BUDGET,
    allow_leakage: bool = False,
) -> DensityMatrix:
    """
    Thermal state with mean occupation n_bar, renormalized on the truncated basis.

    Raises:
        TruncationLeakageError: If the discarded tail exceeds `max_leakage`.
    """
    weights, leakage = thermal_weights(n_bar, n_trunc)
    _check_leakage(leakage, f"thermal state n_bar={n_bar:g}", max_leakage, allow_leakage)
    return DensityMatrix(np.diag(weights).astype(complex), leakage)


def squeezed_thermal(
    params: SqueezedThermalParams,
    n_trunc: int = DEFAULT_N_TRUNC,
    guard: int = GUARD_BAND,
    max_leakage: float = LEAKAGE_BUDGET,
    allow_leakage: bool = False,
) -> DensityMatrix:
    """
    ρ = S(ξ)ρ_th(n̄)S†(ξ) with ξ = r·e^{i(φ+π)}.

    The conjugation runs in the guard-enlarged space; the weight falling
    outside |0⟩…|n_trunc⟩ is the recorded leakage and the kept block is
    renormalized.

    Raises:
        TruncationLeakageError: If the leakage exceeds `max_leakage`.
    """
    dim = n_trunc + 1
    big = dim + guard
    weights, _ = thermal_weights(params.n_bar, big - 1)
    if params.r == 0:
        rho_big = np.diag(weights).astype(complex)
    else:
        S = linalg.expm(_squeeze_generator(params.r, params.operator_phase, big))
        rho_big = (S * weights) @ S.conj().T
    rho = rho_big[:dim, :dim]
    kept = float(np.trace(rho).real)
    leakage = max(0.0, 1.0 - kept)
    _check_leakage(leakage, "squeezed thermal state", max_leakage, allow_leakage)
    rho = 0.5 * (rho + rho.conj().T) / kept
    logger.info(
        "Squeezed thermal state r=%.6g phi=%.6g n_bar=%.6g: leakage %.3e, renormalized by %.12g",
        params.r,
        params.phi,
        params.n_bar,
        leakage,
        1.0 / kept,
    )
    return DensityMatrix(rho, leakage)


# ---------------------------------------------------------------------------
# Covariance bridge
# ---------------------------------------------------------------------------
def cm_to_squeezed_thermal(V_b: np.ndarray, tol: float = 1e-9) -> SqueezedThermalParams:
    """
    Extract (r, φ, n̄) from a 2×2 covariance block (vacuum variance ½).

    With Ṽ = 2V_b: r = ½·arcosh(Tr Ṽ/(2√det Ṽ)), n̄ = (√det Ṽ − 1)/2 and
    φ = atan2(−2V₁₂, V₂₂ − V₁₁).

    Raises:
        NonPhysicalStateError: If n̄ would be negative beyond `tol`.
    """
    V_b = np.asarray(V_b, dtype=float)
    if V_b.shape != (2, 2):
        raise ValueError(f"expected a 2x2 covariance block, got {V_b.shape}")
    v = 2.0 * V_b
    det = float(np.linalg.det(v))
    if det <= 0:
        raise NonPhysicalStateError(f"covariance block has non-positive determinant {det:.3g}")
    root = math.sqrt(det)
    n_bar = 0.5 * (root - 1.0)
    if n_bar < -tol:
        raise NonPhysicalStateError(f"covariance block violates uncertainty: n_bar={n_bar:.3g}")
    n_bar = max(n_bar, 0.0)
    r = 0.5 * math.acosh(max(1.0, float(np.trace(v)) / (2.0 * root)))
    phi = math.atan2(-2.0 * V_b[0, 1], V_b[1, 1] - V_b[0, 0]) if r > 1e-12 else 0.0
    return SqueezedThermalParams(r=r, phi=_wrap_phase(phi), n_bar=n_bar)


def cm_from_density(rho: DensityMatrix) -> np.ndarray:
    """
    Covariance block of a zero-mean single-mode state.

    V₁₁ = n + ½ + Re⟨b²⟩, V₂₂ = n + ½ − Re⟨b²⟩, V₁₂ = Im⟨b²⟩.

    Raises:
        NonPhysicalStateError: If |⟨b⟩| ≥ 1e-8 (displaced state).
    """
    if len(rho.dims) != 1:
        raise ValueError("cm_from_density expects a single-mode state")
    entries = rho.entries / rho.trace
    b = annihilation(rho.n_trunc)
    mean_b = complex(np.trace(entries @ b))
    if abs(mean_b) >= DISPLACEMENT_TOL:
        raise NonPhysicalStateError(f"displaced state: |<b>| = {abs(mean_b):.3g}")
    n = float(np.real(np.trace(entries @ number_operator(rho.n_trunc))))
    b2 = complex(np.trace(entries @ b @ b))
    return np.array(
        [[n + 0.5 + b2.real, b2.imag], [b2.imag, n + 0.5 - b2.real]]
    )
