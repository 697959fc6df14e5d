"""
Closed-form derived quantities of the physical parameters.

Thermal occupations, classical drive amplitudes, enhanced couplings, the
pulse power chain and the regime checks that flag where the linearized,
rotating-wave and weak-pulse approximations stop holding.

Design Decisions (First Principles):
1. Pure functions over immutable parameter blocks.
2. The weak-pulse hard limit is an error; every other regime check warns.
3. A pinned pulse angle always wins over the power chain, and both are kept.
"""

import logging
import math

import numpy as np

from mechcat.core.constants import C_LIGHT, HBAR, K_B
from mechcat.core.exceptions import ConfigError, ValidityError
from mechcat.schemas.params import DriveParams, PulseParams, SystemParams

logger = logging.getLogger(__name__)

SIDEBAND_FACTOR = 10.0
LIMIT_RTOL = 1e-9
TAN2_WARN = 0.05
TAN2_HARD = 0.2


def thermal_occupation(omega: float, T: float) -> float:
    """
    Bose-Einstein occupation 1/(exp(ħω/k_B T) − 1).

    Args:
        omega: Angular frequency (rad/s), > 0.
        T: Temperature (K), ≥ 0. T = 0 returns exactly 0.

    Returns:
        Mean occupation number.
    """
    if omega <= 0 or T < 0:
        raise ValueError("thermal_occupation needs omega > 0 and T >= 0")
    if T == 0:
        return 0.0
    x = HBAR * omega / (K_B * T)
    with np.errstate(over="ignore"):
        return float(1.0 / np.expm1(x))


def classical_amplitudes(
    Omega_plus: complex, Omega_minus: complex, omega_b: float, kappa_m: float
) -> tuple[complex, complex]:
    """Steady-state magnon amplitudes m± = Ω± / (±ω_b + iκ_m/2)."""
    m_plus = complex(Omega_plus) / (omega_b + 0.5j * kappa_m)
    m_minus = complex(Omega_minus) / (-omega_b + 0.5j * kappa_m)
    return m_plus, m_minus


def couplings_from_rabi(
    Omega_plus: float, Omega_minus: float, system: SystemParams
) -> tuple[float, float]:
    """Enhanced couplings G± = G0·|m±|, with drive phases chosen to make them real."""
    m_plus, m_minus = classical_amplitudes(
        Omega_plus, Omega_minus, system.omega_b, system.kappa_m
    )
    return system.G0 * abs(m_plus), system.G0 * abs(m_minus)


def resolve_couplings(drive: DriveParams, system: SystemParams) -> tuple[float, float]:
    """Return (G_plus, G_minus) in rad/s, deriving them from Ω± when needed."""
    if drive.G_plus is not None and drive.G_minus is not None:
        return drive.G_plus, drive.G_minus
    g_plus, g_minus = couplings_from_rabi(drive.Omega_plus, drive.Omega_minus, system)
    logger.info(
        "Couplings from Rabi frequencies: G+/2pi=%.6g Hz, G-/2pi=%.6g Hz",
        g_plus / (2 * math.pi),
        g_minus / (2 * math.pi),
    )
    return g_plus, g_minus


# ---------------------------------------------------------------------------
# Pulse power chain
# ---------------------------------------------------------------------------
def laser_frequency(system: SystemParams, pulse: PulseParams) -> float:
    """ω₀ = ω_c − ω_b when the cavity frequency is known, else 2πc/λ₀."""
    if system.omega_c is not None:
        return system.omega_c - system.omega_b
    return 2.0 * math.pi * C_LIGHT / pulse.lambda_0


def pulse_interaction(
    system: SystemParams, pulse: PulseParams
) -> tuple[float, float, float, float]:
    """
    Evaluate the pulse power chain.

    E = √(κ_c P0/(ħω₀)), G_c = g0·E/ω_b, G = 2G_c²/κ_c and
    θ = arccos(e^(−Gt)), the last computed as arctan √(e^(2Gt) − 1).

    Returns:
        (E, G_c, G, theta)

    Raises:
        ConfigError: If P0 or t is negative.
    """
    if pulse.P0 < 0 or pulse.t < 0:
        raise ConfigError("pulse power and duration must be non-negative")
    omega_0 = laser_frequency(system, pulse)
    if omega_0 <= 0:
        raise ConfigError("laser frequency is not positive; check omega_c and omega_b")
    E = math.sqrt(system.kappa_c * pulse.P0 / (HBAR * omega_0))
    G_c = system.g0 * E / system.omega_b
    G = 2.0 * G_c**2 / system.kappa_c
    theta = math.atan(math.sqrt(math.expm1(2.0 * G * pulse.t)))
    return E, G_c, G, theta


def resolve_pulse(system: SystemParams, pulse: PulseParams) -> PulseParams:
    """
    Record the power-chain quantities on a copy of `pulse`.

    A pinned theta is kept; the chain's own angle is stored as theta_chain
    and any disagreement is logged.
    """
    E, G_c, G, theta_chain = pulse_interaction(system, pulse)
    logger.info(
        "Pulse chain: E=%.6g s^-1/2, G_c/2pi=%.6g Hz, G/2pi=%.6g Hz, tan(theta)=%.6g",
        E,
        G_c / (2 * math.pi),
        G / (2 * math.pi),
        math.tan(theta_chain),
    )
    theta = theta_chain
    if pulse.theta is not None:
        theta = pulse.theta
        if not math.isclose(theta, theta_chain, rel_tol=1e-6, abs_tol=1e-12):
            logger.warning(
                "Pinned tan(theta)=%.6g differs from power chain tan(theta)=%.6g; using pinned value",
                math.tan(theta),
                math.tan(theta_chain),
            )
    return pulse.model_copy(update={"E": E, "G_c": G_c, "G": G, "theta": theta, "theta_chain": theta_chain})


# ---------------------------------------------------------------------------
# Regime checks
# ---------------------------------------------------------------------------
def require_weak_pulse(theta: float) -> None:
    """
    Raise when tan²θ exceeds the hard weak-pulse limit.

    Raises:
        ValidityError: If tan²θ > 0.2.
    """
    tan2 = math.tan(theta) ** 2
    if tan2 > TAN2_HARD:
        raise ValidityError(
            f"weak-pulse approximation violated: tan^2(theta)={tan2:.4g} > {TAN2_HARD}"
        )


def validate_regime(
    system: SystemParams,
    couplings: tuple[float, float] | None = None,
    theta: float | None = None,
) -> list[str]:
    """
    Check the approximations the model relies on and log each violation.

    Args:
        system: Physical constants.
        couplings: Optional (G_plus, G_minus) in rad/s.
        theta: Optional pulse angle.

    Returns:
        Human-readable warnings (empty when every check passes).
    """
    warnings: list[str] = []
    limit = system.omega_b / SIDEBAND_FACTOR * (1.0 + LIMIT_RTOL)
    if max(system.kappa_m, system.kappa_c) > limit:
        warnings.append(
            "sideband-resolved regime not satisfied: omega_b < 10*max(kappa_m, kappa_c)"
        )
    rates = {"kappa_b": system.kappa_b, "kappa_m": system.kappa_m}
    if couplings is not None:
        g_plus, g_minus = couplings
        rates.update({"G_plus": g_plus, "G_minus": g_minus})
        if g_plus >= g_minus and g_minus > 0:
            warnings.append(
                "G_minus <= G_plus: anti-Stokes drive should dominate for stable squeezing"
            )
    for name, value in rates.items():
        if value > limit:
            warnings.append(f"rotating-wave approximation questionable: {name} > omega_b/10")
    if theta is not None and math.tan(theta) ** 2 > TAN2_WARN:
        warnings.append(
            f"weak-pulse approximation marginal: tan^2(theta)={math.tan(theta) ** 2:.4g} > {TAN2_WARN}"
        )
    for message in warnings:
        logger.warning(message)
    return warnings
