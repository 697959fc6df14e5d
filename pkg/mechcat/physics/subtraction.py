"""
Step 2: phonon subtraction by a weak red-detuned pulse and photon counting.

The pulse acts as a beamsplitter of angle θ between the mechanical mode b
and the output cavity mode C. Its propagator is applied in the
disentangled form

    U = e^{i tanθ C†b} · cosθ^{−(C†C − b†b)} · e^{i tanθ Cb†},

and detecting k photons in C conditions the mechanics on
(tan²θ)^k/k! · b^k cosθ^{b†b} ρ cosθ^{b†b} b†^k.

Design Decisions (First Principles):
1. Joint states live on mechanical ⊗ cavity with the cavity index fastest.
2. The outer factors are finite sums of Kronecker products, since C†b is
   nilpotent on a truncated cavity; the middle factor is built from its
   exponent, never by powering a scalar.
3. The cavity starts in vacuum, so the only truncation is the cavity cut;
   its weight is the recorded leakage.
4. Detection efficiency η rescales p_k by η^k and leaves states unchanged.
"""

import logging
import math
from dataclasses import dataclass

import numpy as np
from scipy import linalg

from mechcat.core.exceptions import ConfigError, NonPhysicalStateError
from mechcat.physics.fock import (
    LEAKAGE_BUDGET,
    DensityMatrix,
    StateVector,
    _check_leakage,
    annihilation,
    squeezed_vacuum,
)

logger = logging.getLogger(__name__)

DEFAULT_N_TRUNC_C = 6
CAVITY_GUARD = 2
MECHANICAL_GUARD = 10
SERIES_ORDER = 2


@dataclass(frozen=True)
class JointState:
    """Mechanics ⊗ cavity state after the pulse."""

    rho: DensityMatrix
    n_trunc_b: int
    n_trunc_c: int
    theta: float

    @property
    def leakage(self) -> float:
        return self.rho.leakage

    def cavity_block(self, m: int, n: int) -> np.ndarray:
        """Mechanical operator ⟨m|ρ|n⟩_c."""
        db, dc = self.n_trunc_b + 1, self.n_trunc_c + 1
        return self.rho.entries.reshape(db, dc, db, dc)[:, m, :, n]


@dataclass(frozen=True)
class ConditionedState:
    """Mechanical state heralded by `n_detected` photons."""

    rho_b: DensityMatrix
    n_detected: int
    probability: float
    theta: float
    raw_probability: float = 0.0
    eta: float = 1.0


@dataclass(frozen=True)
class PureEvolution:
    """Full evolved pure state and its three-term expansion."""

    full: StateVector
    expansion: StateVector
    xi_prime: StateVector
    r_prime: float

    def overlap(self) -> float:
        """|⟨full|expansion⟩|² with both normalized."""
        a = self.full.amplitudes / self.full.norm
        e = self.expansion.amplitudes / self.expansion.norm
        return float(abs(np.vdot(a, e)) ** 2)


# ---------------------------------------------------------------------------
# Propagator
# ---------------------------------------------------------------------------
def _check_theta(theta: float) -> None:
    if not 0 <= theta < math.pi / 2:
        raise ConfigError(f"theta must lie in [0, pi/2), got {theta}")


def _ladder_series(coeff: complex, left: np.ndarray, right: np.ndarray, order: int) -> np.ndarray:
    """Σ_k coeff^k/k! · left^k ⊗ right^k for k ≤ order."""
    dim = left.shape[0] * right.shape[0]
    total = np.zeros((dim, dim), dtype=complex)
    left_k = np.eye(left.shape[0])
    right_k = np.eye(right.shape[0])
    for k in range(order + 1):
        total += coeff**k / math.factorial(k) * np.kron(left_k, right_k)
        left_k = left_k @ left
        right_k = right_k @ right
    return total


def interior_indices(dims_outer: tuple[int, int], dims_inner: tuple[int, int]) -> np.ndarray:
    """Flat indices of the inner product basis inside an enlarged one."""
    nb, nc = np.meshgrid(np.arange(dims_inner[0]), np.arange(dims_inner[1]), indexing="ij")
    return (nb * dims_outer[1] + nc).ravel()


def excitation_mask(n_trunc_b: int, n_trunc_c: int, n_max: int) -> np.ndarray:
    """Product-basis states with n_b + n_c ≤ n_max."""
    nb, nc = np.meshgrid(np.arange(n_trunc_b + 1), np.arange(n_trunc_c + 1), indexing="ij")
    return ((nb + nc) <= n_max).ravel()


def propagator_factored(
    theta: float,
    n_trunc_b: int,
    n_trunc_c: int,
    guard_b: int = MECHANICAL_GUARD,
    guard_c: int = CAVITY_GUARD,
) -> np.ndarray:
    """
    Disentangled pulse propagator on the mechanical ⊗ cavity basis.

    Built in a guard-enlarged space and cut back to |0…n_trunc_b⟩ ⊗ |0…n_trunc_c⟩.
    It is exact on every subspace of fixed total excitation number that the
    cut keeps whole, and on any input with the cavity in vacuum up to the
    cavity cut.
    """
    _check_theta(theta)
    dims = (n_trunc_b + 1, n_trunc_c + 1)
    big = (dims[0] + guard_b, dims[1] + guard_c)
    if theta == 0:
        return np.eye(dims[0] * dims[1], dtype=complex)
    b = annihilation(big[0] - 1)
    c = annihilation(big[1] - 1)
    tan_theta = math.tan(theta)
    order = min(big) - 1

    raise_cavity = _ladder_series(1j * tan_theta, b, c.T, order)  # e^{i tanθ C†b}
    lower_cavity = _ladder_series(1j * tan_theta, b.T, c, order)  # e^{i tanθ Cb†}
    n_b, n_c = np.meshgrid(np.arange(big[0]), np.arange(big[1]), indexing="ij")
    exponent = -(n_c - n_b).ravel() * math.log(math.cos(theta))
    middle = np.exp(exponent)

    U = (raise_cavity * middle) @ lower_cavity
    keep = interior_indices(big, dims)
    return U[np.ix_(keep, keep)]


def beamsplitter_oracle(theta: float, n_trunc_b: int, n_trunc_c: int) -> np.ndarray:
    """exp(iθ(C†b + Cb†)) by dense matrix exponential, for cross-checking."""
    b = annihilation(n_trunc_b)
    c = annihilation(n_trunc_c)
    generator = np.kron(b, c.T) + np.kron(b.T, c)
    return linalg.expm(1j * theta * generator)


# ---------------------------------------------------------------------------
# Evolution
# ---------------------------------------------------------------------------
def damping_diagonal(theta: float, n_trunc_b: int) -> np.ndarray:
    """Diagonal of cosθ^{b†b}."""
    return np.exp(np.arange(n_trunc_b + 1) * math.log(math.cos(theta)))


def estimate_squeezing(state: StateVector) -> tuple[float, float]:
    """(r, φ) of a squeezed vacuum from its first two even amplitudes."""
    a0, a2 = state.amplitudes[0], state.amplitudes[2]
    ratio = math.sqrt(2.0) * a2 / a0
    return math.atanh(min(abs(ratio), 1.0 - 1e-16)), float(np.angle(ratio)) if abs(ratio) > 0 else 0.0


def evolve_pure(
    xi_state: StateVector, theta: float, n_trunc_c: int = DEFAULT_N_TRUNC_C
) -> PureEvolution:
    """
    Pulse acting on |0⟩_c ⊗ |ξ⟩_b.

    Returns the full U|0⟩|ξ⟩ and the expansion
    |0⟩|ξ′⟩ + i tanθ|1⟩ b|ξ′⟩ − (tan²θ/√2)|2⟩ b²|ξ′⟩, where |ξ′⟩ is the
    squeezed vacuum with tanh r′ = tanh r·cos²θ.
    """
    _check_theta(theta)
    psi = xi_state.amplitudes
    if np.max(np.abs(psi[1::2]), initial=0.0) > 0:
        raise ValueError("evolve_pure expects a squeezed vacuum (odd amplitudes zero)")
    n_trunc_b = xi_state.n_trunc
    dims = (n_trunc_b + 1, n_trunc_c + 1)

    U = propagator_factored(theta, n_trunc_b, n_trunc_c)
    vacuum_c = np.zeros(dims[1])
    vacuum_c[0] = 1.0
    out = U @ np.kron(psi, vacuum_c)
    leak = max(0.0, xi_state.norm**2 - float(np.vdot(out, out).real))
    full = StateVector(out, xi_state.leakage + leak, dims)

    r, phi = estimate_squeezing(xi_state)
    r_prime = math.atanh(math.tanh(r) * math.cos(theta) ** 2)
    xi_prime = squeezed_vacuum(r_prime, phi, n_trunc_b)
    b = annihilation(n_trunc_b)
    tan_theta = math.tan(theta)
    terms = [
        xi_prime.amplitudes,
        1j * tan_theta * (b @ xi_prime.amplitudes),
        -(tan_theta**2 / math.sqrt(2.0)) * (b @ b @ xi_prime.amplitudes),
    ]
    expansion = np.zeros(dims[0] * dims[1], dtype=complex)
    for k, term in enumerate(terms[: dims[1]]):
        cavity = np.zeros(dims[1])
        cavity[k] = 1.0
        expansion += np.kron(term, cavity)
    return PureEvolution(
        full=full,
        expansion=StateVector(expansion, xi_prime.leakage, dims),
        xi_prime=xi_prime,
        r_prime=r_prime,
    )


def evolve_mixed(
    rho_in: DensityMatrix,
    theta: float,
    n_trunc_c: int = DEFAULT_N_TRUNC_C,
    max_leakage: float = LEAKAGE_BUDGET,
    allow_leakage: bool = False,
) -> JointState:
    """
    U(ρ_in ⊗ |0⟩⟨0|_c)U† on the mechanical ⊗ cavity basis.

    Raises:
        TruncationLeakageError: If the weight cut off by the cavity
            truncation exceeds `max_leakage`.
    """
    _check_theta(theta)
    if len(rho_in.dims) != 1:
        raise ValueError("evolve_mixed expects a single-mode mechanical state")
    n_trunc_b = rho_in.n_trunc
    U = propagator_factored(theta, n_trunc_b, n_trunc_c)
    cavity_vacuum_columns = U[:, :: n_trunc_c + 1]
    rho = cavity_vacuum_columns @ rho_in.entries @ cavity_vacuum_columns.conj().T
    rho = 0.5 * (rho + rho.conj().T)
    cut = max(0.0, rho_in.trace - float(np.trace(rho).real))
    _check_leakage(cut, "joint state (cavity cut)", max_leakage, allow_leakage)
    logger.debug("Joint state theta=%.6g: cavity-cut leakage %.3e", theta, cut)
    return JointState(
        rho=DensityMatrix(rho, rho_in.leakage + cut, (n_trunc_b + 1, n_trunc_c + 1)),
        n_trunc_b=n_trunc_b,
        n_trunc_c=n_trunc_c,
        theta=theta,
    )


def _heralded_operator(rho_in: np.ndarray, theta: float, m: int, n: int) -> np.ndarray:
    """b^m K ρ K b†^n with K = cosθ^{b†b}."""
    dim = rho_in.shape[0]
    b = annihilation(dim - 1)
    K = damping_diagonal(theta, dim - 1)
    damped = K[:, None] * rho_in * K[None, :]
    return np.linalg.matrix_power(b, m) @ damped @ np.linalg.matrix_power(b.T, n)


def joint_state_series(
    rho_in: DensityMatrix, theta: float, n_max: int = SERIES_ORDER
) -> JointState:
    """
    Double series Σ_{m,n ≤ n_max} (i tanθ)^m(−i tanθ)^n/√(m!n!) |m⟩⟨n|_c ⊗ b^m K ρ K b†^n.

    Equals the cavity blocks m, n ≤ n_max of evolve_mixed exactly.
    """
    _check_theta(theta)
    tan_theta = math.tan(theta)
    db, dc = rho_in.n_trunc + 1, n_max + 1
    joint = np.zeros((db, dc, db, dc), dtype=complex)
    for m in range(dc):
        for n in range(dc):
            coeff = (1j * tan_theta) ** m * (-1j * tan_theta) ** n / math.sqrt(
                math.factorial(m) * math.factorial(n)
            )
            joint[:, m, :, n] = coeff * _heralded_operator(rho_in.entries, theta, m, n)
    rho = joint.reshape(db * dc, db * dc)
    return JointState(
        rho=DensityMatrix(rho, rho_in.leakage, (db, dc)),
        n_trunc_b=rho_in.n_trunc,
        n_trunc_c=n_max,
        theta=theta,
    )


# ---------------------------------------------------------------------------
# Conditioning
# ---------------------------------------------------------------------------
def _conditioned(
    block: np.ndarray, k: int, theta: float, leakage: float, eta: float, dims: tuple[int, ...]
) -> ConditionedState:
    raw = float(np.trace(block).real)
    if raw <= 0:
        raise NonPhysicalStateError(f"detection of {k} photon(s) has zero probability")
    rho_b = 0.5 * (block + block.conj().T) / raw
    probability = raw * eta**k
    return ConditionedState(
        rho_b=DensityMatrix(rho_b, leakage, dims),
        n_detected=k,
        probability=probability,
        theta=theta,
        raw_probability=raw,
        eta=eta,
    )


def condition_on_photons(joint: JointState, k: int, eta: float = 1.0) -> ConditionedState:
    """
    Project the cavity onto |k⟩ and renormalize the mechanics.

    Raises:
        ConfigError: If k is outside 0…n_trunc_c.
    """
    if not 0 <= k <= joint.n_trunc_c:
        raise ConfigError(f"photon count k={k} outside 0..{joint.n_trunc_c}")
    state = _conditioned(
        joint.cavity_block(k, k), k, joint.theta, joint.leakage, eta, (joint.n_trunc_b + 1,)
    )
    logger.info(
        "Conditioned on k=%d photons: p=%.6e (tan^2 ratio %.6g)",
        k,
        state.probability,
        state.raw_probability / math.tan(joint.theta) ** (2 * k) if joint.theta > 0 and k else 1.0,
    )
    return state


def conditioned_series(
    rho_in: DensityMatrix, theta: float, k: int, eta: float = 1.0
) -> ConditionedState:
    """Heralded state (tan²θ)^k/k! · b^k K ρ K b†^k written out directly."""
    _check_theta(theta)
    block = (
        math.tan(theta) ** (2 * k)
        / math.factorial(k)
        * _heralded_operator(rho_in.entries, theta, k, k)
    )
    return _conditioned(block, k, theta, rho_in.leakage, eta, rho_in.dims)


def photon_distribution(joint: JointState) -> tuple[np.ndarray, float]:
    """All p_k, k = 0…n_trunc_c, and the missing weight 1 − Σp_k."""
    probabilities = np.array(
        [float(np.trace(joint.cavity_block(k, k)).real) for k in range(joint.n_trunc_c + 1)]
    )
    return probabilities, max(0.0, 1.0 - float(probabilities.sum()))


def subtract_phonons(
    rho_in: DensityMatrix,
    theta: float,
    k: int,
    n_trunc_c: int = DEFAULT_N_TRUNC_C,
    eta: float = 1.0,
    allow_leakage: bool = False,
) -> ConditionedState:
    """evolve_mixed followed by condition_on_photons."""
    if not 0 <= k <= n_trunc_c:
        raise ConfigError(f"photon count k={k} outside 0..{n_trunc_c}")
    joint = evolve_mixed(rho_in, theta, n_trunc_c, allow_leakage=allow_leakage)
    return condition_on_photons(joint, k, eta)
