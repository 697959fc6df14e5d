"""
Step 1: linearized Gaussian dynamics of the magnon-phonon pair.

Quadrature ordering is (δX_m, δY_m, δX_b, δY_b) with X = (O + O†)/√2,
Y = i(O† − O)/√2, so the vacuum has variance 1/2 per quadrature.

Design Decisions (First Principles):
1. The steady state solves AV + VAᵀ = −D by Kronecker linearization;
   the 16-dimensional system is exact and small.
2. Decoupled modes short-circuit to the exact thermal covariance.
3. Every solve is checked against its own residual before it is returned.
4. The drift matrix decouples into the (X_m, Y_b) and (Y_m, X_b) pairs,
   which gives a closed-form steady state used as a cross-check.
"""

import logging
import math

import numpy as np
from scipy import linalg

from mechcat.core.exceptions import NonPhysicalStateError, SolverFailureError, UnstableSystemError
from mechcat.physics.grid import GridSpec, WignerGrid
from mechcat.physics.optimize import maximize_scalar
from mechcat.physics.params import resolve_couplings, thermal_occupation
from mechcat.schemas.params import DriveParams, SystemParams

logger = logging.getLogger(__name__)

V_VAC = 0.5
STABILITY_EPS = 1e-12
RESIDUAL_TOL = 1e-10
DEFAULT_RATIO_WINDOW = (1e-3, 0.999)


# ---------------------------------------------------------------------------
# Drift and diffusion
# ---------------------------------------------------------------------------
def drift_matrix(G_plus: float, G_minus: float, params: SystemParams) -> np.ndarray:
    """
    Drift matrix of the rotating-wave fluctuation equations for real G±.

    The interaction (G₋ + G₊)X_mX_b + (G₋ − G₊)Y_mY_b couples X_m to Y_b
    and Y_m to X_b only.
    """
    a, d = params.kappa_m / 2.0, params.kappa_b / 2.0
    A = np.diag([-a, -a, -d, -d]).astype(float)
    A[0, 3] = G_minus - G_plus
    A[2, 1] = G_minus - G_plus
    A[1, 2] = -(G_plus + G_minus)
    A[3, 0] = -(G_plus + G_minus)
    return A


def build_drift(drive: DriveParams, params: SystemParams) -> np.ndarray:
    """Drift matrix for a drive block (G± given or derived from Ω±)."""
    return drift_matrix(*resolve_couplings(drive, params), params)


def bath_occupations(params: SystemParams) -> tuple[float, float]:
    """(N_m, N_b) at the bath temperature."""
    return (
        thermal_occupation(params.omega_m, params.T),
        thermal_occupation(params.omega_b, params.T),
    )


def build_diffusion(params: SystemParams) -> np.ndarray:
    """D = diag(κ_m(N_m + ½), κ_m(N_m + ½), κ_b(N_b + ½), κ_b(N_b + ½))."""
    n_m, n_b = bath_occupations(params)
    dm = params.kappa_m * (n_m + 0.5)
    db = params.kappa_b * (n_b + 0.5)
    return np.diag([dm, dm, db, db])


def stability_margin(A: np.ndarray) -> float:
    """Largest real part among the eigenvalues of A."""
    return float(np.max(np.linalg.eigvals(A).real))


def stable(A: np.ndarray) -> bool:
    """True iff every eigenvalue of A has real part below −1e-12·‖A‖_max."""
    eps = STABILITY_EPS * float(np.max(np.abs(A)))
    return stability_margin(A) < -eps


# ---------------------------------------------------------------------------
# Lyapunov steady state
# ---------------------------------------------------------------------------
def solve_lyapunov(A: np.ndarray, D: np.ndarray) -> np.ndarray:
    """
    Solve AV + VAᵀ = −D for the steady-state covariance.

    Args:
        A: Stable drift matrix (n×n).
        D: Diffusion matrix (n×n).

    Returns:
        Symmetric covariance matrix V.

    Raises:
        UnstableSystemError: If A is not stable.
        SolverFailureError: If the residual exceeds 1e-10·‖D‖_max.
    """
    A = np.asarray(A, dtype=float)
    D = np.asarray(D, dtype=float)
    n = A.shape[0]
    if A.shape != (n, n) or D.shape != (n, n):
        raise ValueError("drift and diffusion must be square and of equal size")
    if not stable(A):
        eigenvalues = np.linalg.eigvals(A)
        worst = eigenvalues[np.argmax(eigenvalues.real)]
        raise UnstableSystemError(
            f"unstable drift matrix: eigenvalue {worst:.6g} has non-negative real part",
            eigenvalue=complex(worst),
        )

    off_a = A - np.diag(np.diag(A))
    off_d = D - np.diag(np.diag(D))
    if not off_a.any() and not off_d.any():
        V = np.diag(-np.diag(D) / (2.0 * np.diag(A)))
        logger.debug("Decoupled modes: exact diagonal steady state")
        return V

    eye = np.eye(n)
    lhs = np.kron(A, eye) + np.kron(eye, A)
    V = linalg.solve(lhs, -D.reshape(-1)).reshape(n, n)
    V = 0.5 * (V + V.T)

    residual = float(np.max(np.abs(A @ V + V @ A.T + D)))
    scale = float(np.max(np.abs(D)))
    logger.debug("Lyapunov residual %.3e (scale %.3e)", residual, scale)
    if residual > RESIDUAL_TOL * scale:
        raise SolverFailureError(
            f"Lyapunov residual {residual:.3e} exceeds {RESIDUAL_TOL:g} x {scale:.3e}"
        )
    return V


def steady_state(G_plus: float, G_minus: float, params: SystemParams) -> np.ndarray:
    """Full 4×4 steady-state covariance for the given couplings."""
    return solve_lyapunov(drift_matrix(G_plus, G_minus, params), build_diffusion(params))


def steady_state_blocks(G_plus: float, G_minus: float, params: SystemParams) -> np.ndarray:
    """
    Closed-form steady state assembled from the two decoupled 2×2 blocks.

    Valid only inside the stable region; callers check stability first.
    """
    n_m, n_b = bath_occupations(params)
    s_m, s_b = n_m + 0.5, n_b + 0.5
    a, d = params.kappa_m / 2.0, params.kappa_b / 2.0
    p, q = G_minus - G_plus, G_minus + G_plus
    denom = (a + d) + p * q / d + p * q / a

    V = np.zeros((4, 4))
    # (X_m, Y_b) block
    c1 = (p * s_b - q * s_m) / denom
    V[0, 0] = s_m + p / a * c1
    V[3, 3] = s_b - q / d * c1
    V[0, 3] = V[3, 0] = c1
    # (Y_m, X_b) block
    c2 = (p * s_m - q * s_b) / denom
    V[1, 1] = s_m - q / a * c2
    V[2, 2] = s_b + p / d * c2
    V[1, 2] = V[2, 1] = c2
    return V


def mechanical_block(V: np.ndarray) -> np.ndarray:
    """Lower-right 2×2 block (X_b, Y_b) of a 4×4 covariance matrix."""
    V = np.asarray(V)
    if V.shape != (4, 4):
        raise ValueError(f"expected a 4x4 covariance matrix, got {V.shape}")
    return V[2:4, 2:4].copy()


# ---------------------------------------------------------------------------
# Squeezing and physicality
# ---------------------------------------------------------------------------
def squeezing_db(V_b: np.ndarray) -> float:
    """
    Squeezing S = −10·log10(V_min/V_vac) in dB; negative means no squeezing.

    Raises:
        NonPhysicalStateError: If V_b is not positive definite.
    """
    v_min = float(np.linalg.eigvalsh(np.asarray(V_b, dtype=float))[0])
    if v_min <= 0:
        raise NonPhysicalStateError(f"covariance block not positive definite (min eigenvalue {v_min:.3g})")
    return -10.0 * math.log10(v_min / V_VAC)


def symplectic_form(n_modes: int) -> np.ndarray:
    return np.kron(np.eye(n_modes), np.array([[0.0, 1.0], [-1.0, 0.0]]))


def is_physical(V: np.ndarray, tol: float = 1e-9) -> bool:
    """Uncertainty principle V + (i/2)Σ ≥ 0, within `tol`."""
    V = np.asarray(V, dtype=float)
    sigma = symplectic_form(V.shape[0] // 2)
    return bool(np.linalg.eigvalsh(V + 0.5j * sigma)[0] >= -tol)


def major_axis_angle(V_b: np.ndarray) -> float:
    """Angle of the anti-squeezed (largest-variance) axis, in (−π/2, π/2]."""
    w, vecs = np.linalg.eigh(np.asarray(V_b, dtype=float))
    vx, vy = vecs[:, -1]
    angle = math.atan2(vy, vx)
    if angle <= -math.pi / 2:
        angle += math.pi
    elif angle > math.pi / 2:
        angle -= math.pi
    return angle


def gaussian_wigner(V_b: np.ndarray, grid: GridSpec) -> WignerGrid:
    """
    Zero-mean Gaussian Wigner function exp(−uᵀV⁻¹u/2)/(2π√det V).

    Raises:
        NonPhysicalStateError: If V_b is singular or not positive definite.
    """
    V_b = np.asarray(V_b, dtype=float)
    det = float(np.linalg.det(V_b))
    if det <= 0 or np.linalg.eigvalsh(V_b)[0] <= 0:
        raise NonPhysicalStateError(f"covariance block is singular or indefinite (det {det:.3g})")
    inv = np.linalg.inv(V_b)
    X, Y = grid.mesh()
    quad = inv[0, 0] * X**2 + 2.0 * inv[0, 1] * X * Y + inv[1, 1] * Y**2
    values = np.exp(-0.5 * quad) / (2.0 * math.pi * math.sqrt(det))
    return WignerGrid(spec=grid, values=values, meta={"det_V_b": det})


# ---------------------------------------------------------------------------
# Drive-ratio optimisation
# ---------------------------------------------------------------------------
def squeezing_at_ratio(params: SystemParams, G_minus: float, ratio: float) -> float:
    """S in dB at G₊ = ratio·G₋, or NaN where the system is unstable."""
    G_plus = ratio * G_minus
    A = drift_matrix(G_plus, G_minus, params)
    if not stable(A):
        return math.nan
    V = solve_lyapunov(A, build_diffusion(params))
    return squeezing_db(mechanical_block(V))


def optimize_ratio(
    params: SystemParams,
    G_minus: float,
    window: tuple[float, float] = DEFAULT_RATIO_WINDOW,
    xtol: float = 1e-4,
) -> tuple[float, float]:
    """
    Maximise the squeezing over G₊/G₋ inside `window`.

    Returns:
        (ratio*, S*) with S* in dB.

    Raises:
        UnstableSystemError: If no point of the window is stable.
    """
    if G_minus <= 0:
        raise ValueError("G_minus must be positive")
    try:
        ratio, s_db = maximize_scalar(
            lambda x: squeezing_at_ratio(params, G_minus, x), window[0], window[1], xtol=xtol
        )
    except ValueError as exc:
        raise UnstableSystemError(f"no stable drive ratio in {window}") from exc
    logger.info(
        "Optimal ratio at T=%.4g K, G-/2pi=%.6g Hz: %.6f (S=%.4f dB)",
        params.T,
        G_minus / (2 * math.pi),
        ratio,
        s_db,
    )
    return ratio, s_db
