"""Unit tests for parameter schemas, derived quantities and regime checks"""
import logging
import math

import numpy as np
import pytest
from pydantic import ValidationError
from scipy import constants

from mechcat.core.exceptions import ConfigError, ValidityError
from mechcat.physics import params
from mechcat.schemas.params import TWO_PI, DriveParams, PulseParams, SystemParams


class TestThermalOccupation:
    """Bose-Einstein occupation of the baths"""

    def test_zero_temperature(self):
        """T = 0 gives exactly zero occupation"""
        assert params.thermal_occupation(TWO_PI * 30e6, 0.0) == 0.0

    def test_mechanical_mode_at_10mK(self):
        """A 30 MHz mode at 10 mK holds about 6.45 phonons"""
        n_b = params.thermal_occupation(TWO_PI * 30e6, 0.01)
        assert n_b == pytest.approx(6.45, rel=1e-2)

    def test_magnon_mode_is_frozen(self):
        """A 10 GHz mode at 10 mK is effectively empty"""
        assert params.thermal_occupation(TWO_PI * 10e9, 0.01) < 1e-20

    def test_high_temperature_limit(self):
        """k_B T >> ħω reproduces the classical k_B T/ħω − 1/2"""
        omega, T = TWO_PI * 1e6, 10.0
        x = constants.hbar * omega / (constants.k * T)
        assert params.thermal_occupation(omega, T) == pytest.approx(1 / x - 0.5, rel=1e-6)

    def test_monotonic(self, rng):
        """Occupation falls with frequency and rises with temperature"""
        for _ in range(50):
            w1, w2 = np.sort(rng.uniform(TWO_PI * 1e6, TWO_PI * 1e9, 2))
            T1, T2 = np.sort(rng.uniform(1e-3, 1.0, 2))
            assert params.thermal_occupation(w1, T1) > params.thermal_occupation(w2, T1)
            assert params.thermal_occupation(w1, T1) < params.thermal_occupation(w1, T2)

    @pytest.mark.parametrize("omega,T", [(0.0, 0.01), (-1.0, 0.01), (1.0, -0.01)])
    def test_invalid_inputs(self, omega, T):
        """Non-positive frequency or negative temperature is rejected"""
        with pytest.raises(ValueError):
            params.thermal_occupation(omega, T)


class TestCouplings:
    """Classical drive amplitudes and enhanced couplings"""

    def test_zero_drive(self, system):
        """No drive gives no magnon amplitude"""
        assert params.classical_amplitudes(0.0, 0.0, system.omega_b, system.kappa_m) == (0, 0)

    def test_amplitude_modulus(self, system):
        """|m±| = Ω±/√(ω_b² + κ_m²/4)"""
        omega = TWO_PI * 1e9
        m_plus, m_minus = params.classical_amplitudes(omega, omega, system.omega_b, system.kappa_m)
        expected = omega / math.hypot(system.omega_b, system.kappa_m / 2)
        assert abs(m_plus) == pytest.approx(expected, rel=1e-12)
        assert abs(m_minus) == pytest.approx(expected, rel=1e-12)

    def test_lossless_limit(self, system):
        """Without magnon damping m± = ±Ω±/ω_b"""
        m_plus, m_minus = params.classical_amplitudes(3.0, 5.0, system.omega_b, 1e-12)
        assert m_plus == pytest.approx(3.0 / system.omega_b, rel=1e-12)
        assert m_minus == pytest.approx(-5.0 / system.omega_b, rel=1e-12)

    def test_couplings_scale_linearly(self, system):
        """G± is linear in the Rabi frequencies"""
        g1 = params.couplings_from_rabi(1e9, 2e9, system)
        g2 = params.couplings_from_rabi(2e9, 4e9, system)
        assert np.allclose(np.array(g2), 2 * np.array(g1), rtol=1e-12, atol=0)

    def test_resolve_prefers_given_couplings(self, system):
        """Explicit G± are used as they are"""
        drive = DriveParams(G_plus=1.0, G_minus=2.0, Omega_plus=5.0, Omega_minus=5.0)
        assert params.resolve_couplings(drive, system) == (1.0, 2.0)

    def test_resolve_from_rabi(self, system):
        """Without G±, the couplings come from the Rabi frequencies"""
        drive = DriveParams(Omega_plus=1e9, Omega_minus=2e9)
        assert params.resolve_couplings(drive, system) == params.couplings_from_rabi(1e9, 2e9, system)


class TestParameterSchemas:
    """Validation of the parameter blocks"""

    def test_hz_keys_are_converted(self):
        """<name>_over_2pi values are multiplied by 2π"""
        system = SystemParams(omega_b_over_2pi=30e6)
        assert system.omega_b == pytest.approx(TWO_PI * 30e6, rel=1e-15)

    def test_both_spellings_rejected(self):
        """A field given in rad/s and in Hz is ambiguous"""
        with pytest.raises(ValidationError, match="both"):
            SystemParams(omega_b=1.0, omega_b_over_2pi=1.0)

    def test_unknown_key_rejected(self):
        with pytest.raises(ValidationError):
            SystemParams(omega_x=1.0)

    def test_negative_rate_rejected(self):
        with pytest.raises(ValidationError):
            SystemParams(kappa_b=-1.0)

    def test_drive_needs_couplings(self):
        """Either the G pair or the Ω pair must be given"""
        with pytest.raises(ValidationError, match="required"):
            DriveParams(P_plus=1e-3, P_minus=1e-3)

    def test_drive_needs_both_couplings(self):
        with pytest.raises(ValidationError, match="together"):
            DriveParams(G_plus=1.0, Omega_plus=1.0, Omega_minus=1.0)

    def test_complex_coupling_rejected(self):
        """Couplings are real numbers"""
        with pytest.raises(ValidationError):
            DriveParams(G_plus="1+2j", G_minus=1.0)

    def test_tan_theta(self):
        """tan_theta pins theta = arctan(tan_theta)"""
        pulse = PulseParams(tan_theta=0.11)
        assert math.tan(pulse.theta) == pytest.approx(0.11, rel=1e-14)

    def test_theta_and_tan_theta_rejected(self):
        with pytest.raises(ValidationError, match="both"):
            PulseParams(theta=0.1, tan_theta=0.1)

    @pytest.mark.parametrize("eta", [0.0, 1.5])
    def test_eta_range(self, eta):
        with pytest.raises(ValidationError):
            PulseParams(eta=eta)


class TestPulseChain:
    """Pulse power chain E → G_c → G → θ"""

    def test_reference_values(self, system):
        """The chain matches a direct evaluation for the reference pulse"""
        pulse = PulseParams()
        E, G_c, G, theta = params.pulse_interaction(system, pulse)

        omega_0 = 2 * math.pi * constants.c / 1550e-9
        E_ref = math.sqrt(system.kappa_c * 50e-12 / (constants.hbar * omega_0))
        G_c_ref = system.g0 * E_ref / system.omega_b
        G_ref = 2 * G_c_ref**2 / system.kappa_c

        assert E == pytest.approx(E_ref, rel=1e-12)
        assert G_c == pytest.approx(G_c_ref, rel=1e-12)
        assert G == pytest.approx(G_ref, rel=1e-12)
        assert math.cos(theta) == pytest.approx(math.exp(-G_ref * 30e-9), rel=1e-12)

    def test_reference_chain_is_weak(self, system):
        """As written, the reference chain gives an angle far below tanθ = 0.11"""
        _, _, _, theta = params.pulse_interaction(system, PulseParams())
        assert 0 < math.tan(theta) < 0.11

    def test_zero_power(self, system):
        """P0 = 0 gives no interaction at all"""
        assert params.pulse_interaction(system, PulseParams(P0=0.0)) == (0.0, 0.0, 0.0, 0.0)

    def test_round_trip(self, system):
        """cos θ = exp(−G t) for a range of pulses"""
        for P0 in (1e-12, 1e-9, 1e-6):
            for t in (1e-9, 30e-9, 1e-6):
                _, _, G, theta = params.pulse_interaction(system, PulseParams(P0=P0, t=t))
                assert math.cos(theta) == pytest.approx(math.exp(-G * t), rel=1e-10)

    def test_monotonic(self, system):
        """θ grows with power, duration and coupling"""
        base = params.pulse_interaction(system, PulseParams())[3]
        assert params.pulse_interaction(system, PulseParams(P0=100e-12))[3] > base
        assert params.pulse_interaction(system, PulseParams(t=60e-9))[3] > base
        stronger = system.model_copy(update={"g0": 2 * system.g0})
        assert params.pulse_interaction(stronger, PulseParams())[3] > base

    def test_negative_power_rejected(self, system):
        """Negative power bypassing validation still fails in the chain"""
        pulse = PulseParams.model_construct(lambda_0=1550e-9, P0=-1.0, t=1e-9, theta=None)
        with pytest.raises(ConfigError):
            params.pulse_interaction(system, pulse)

    def test_cavity_frequency_sets_laser(self):
        """With ω_c known the laser sits one mechanical frequency below it"""
        system = SystemParams(omega_c=TWO_PI * 193e12)
        assert params.laser_frequency(system, PulseParams()) == pytest.approx(
            TWO_PI * 193e12 - system.omega_b, rel=1e-15
        )

    def test_pinned_theta_wins(self, system, caplog):
        """A pinned angle is kept; the chain result is recorded beside it"""
        with caplog.at_level(logging.WARNING, logger="mechcat.physics.params"):
            pulse = params.resolve_pulse(system, PulseParams(tan_theta=0.11))
        assert math.tan(pulse.theta) == pytest.approx(0.11, rel=1e-14)
        assert pulse.theta_chain < pulse.theta
        assert pulse.G > 0
        assert "differs from power chain" in caplog.text

    def test_chain_theta_without_pin(self, system):
        pulse = params.resolve_pulse(system, PulseParams())
        assert pulse.theta == pulse.theta_chain


class TestRegime:
    """Approximation checks"""

    def test_reference_device_is_clean(self, system, G_minus, theta):
        """The reference parameters pass every check"""
        assert params.validate_regime(system, (0.885 * G_minus, G_minus), theta) == []

    def test_stokes_dominant_warns(self, system, G_minus):
        warnings = params.validate_regime(system, (1.2 * G_minus, G_minus))
        assert any("G_minus <= G_plus" in w for w in warnings)

    def test_sideband_warning(self):
        system = SystemParams(kappa_c=TWO_PI * 10e6)
        warnings = params.validate_regime(system)
        assert any("sideband" in w for w in warnings)

    def test_rwa_warning(self, system):
        warnings = params.validate_regime(system, (0.0, TWO_PI * 5e6))
        assert any("G_minus > omega_b/10" in w for w in warnings)

    def test_marginal_pulse_warns(self, system):
        warnings = params.validate_regime(system, theta=math.atan(math.sqrt(0.1)))
        assert any("weak-pulse" in w for w in warnings)

    def test_strong_pulse_is_an_error(self):
        """tan²θ above 0.2 is a hard validity failure"""
        with pytest.raises(ValidityError) as excinfo:
            params.require_weak_pulse(math.atan(0.5))
        assert excinfo.value.exit_code == 3

    def test_weak_pulse_passes(self, theta):
        params.require_weak_pulse(theta)
