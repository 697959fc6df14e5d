"""Unit tests for the steady-state Gaussian dynamics"""
import math

import numpy as np
import pytest
from scipy.integrate import solve_ivp

from conftest import steady_state_oracle
from mechcat.core.exceptions import NonPhysicalStateError, UnstableSystemError
from mechcat.physics import gaussian
from mechcat.physics.grid import GridSpec
from mechcat.schemas.params import TWO_PI, DriveParams, SystemParams


def random_system(rng):
    """Stable system in dimensionless rates, so dynamics integrate quickly."""
    g_minus = rng.uniform(0.1, 1.0)
    system = SystemParams(
        omega_m=TWO_PI * 1e9,
        omega_b=TWO_PI * 1e6,
        kappa_m=rng.uniform(0.5, 2.0),
        kappa_b=rng.uniform(0.01, 0.5),
        T=rng.uniform(0.0, 2e-3),
    )
    return system, rng.uniform(0.0, 0.95) * g_minus, g_minus


def lyapunov_rhs(A, D):
    def rhs(_, y):
        V = y.reshape(4, 4)
        return (A @ V + V @ A.T + D).ravel()

    return rhs


class TestDriftDiffusion:
    """Drift and diffusion matrices"""

    def test_zero_drive_is_diagonal(self, system):
        A = gaussian.drift_matrix(0.0, 0.0, system)
        expected = np.diag([-system.kappa_m / 2] * 2 + [-system.kappa_b / 2] * 2)
        assert np.array_equal(A, expected)

    def test_layout(self, system, G_minus):
        """Couplings sit on the (X_m, Y_b) and (Y_m, X_b) pairs only"""
        G_plus = 0.885 * G_minus
        A = gaussian.drift_matrix(G_plus, G_minus, system)
        assert A[0, 3] == A[2, 1] == G_minus - G_plus
        assert A[1, 2] == A[3, 0] == -(G_plus + G_minus)
        for i, j in [(0, 1), (0, 2), (1, 3), (2, 3), (1, 0), (2, 0), (3, 1), (3, 2)]:
            assert A[i, j] == 0

    def test_swapping_couplings(self, system, G_minus):
        """Exchanging G+ and G- flips the sign of the difference terms only"""
        A = gaussian.drift_matrix(0.3 * G_minus, G_minus, system)
        B = gaussian.drift_matrix(G_minus, 0.3 * G_minus, system)
        assert B[0, 3] == -A[0, 3] and B[2, 1] == -A[2, 1]
        assert B[1, 2] == A[1, 2] and B[3, 0] == A[3, 0]

    def test_build_drift_from_block(self, system, G_minus):
        drive = DriveParams(G_plus=0.5 * G_minus, G_minus=G_minus)
        assert np.array_equal(
            gaussian.build_drift(drive, system), gaussian.drift_matrix(0.5 * G_minus, G_minus, system)
        )

    def test_diffusion_at_zero_temperature(self, system):
        D = gaussian.build_diffusion(system.model_copy(update={"T": 0.0}))
        expected = np.diag([system.kappa_m / 2] * 2 + [system.kappa_b / 2] * 2)
        assert np.allclose(D, expected, rtol=1e-15, atol=0)

    def test_diffusion_reference(self, system):
        """D_b = κ_b(N_b + 1/2) with N_b ≈ 6.45"""
        D = gaussian.build_diffusion(system)
        assert D[2, 2] == pytest.approx(system.kappa_b * 6.95, rel=1e-2)
        assert D[0, 0] == pytest.approx(system.kappa_m / 2, rel=1e-12)


class TestStability:
    """Routh-Hurwitz condition on the drift matrix"""

    def test_zero_drive_stable(self, system):
        assert gaussian.stable(gaussian.drift_matrix(0.0, 0.0, system))

    def test_reference_drive_stable(self, system, G_minus):
        assert gaussian.stable(gaussian.drift_matrix(0.885 * G_minus, G_minus, system))

    def test_equal_couplings_stable(self, system, G_minus):
        """G+ = G- leaves only the bare damping rates as eigenvalues"""
        A = gaussian.drift_matrix(G_minus, G_minus, system)
        assert gaussian.stable(A)
        assert gaussian.stability_margin(A) == pytest.approx(-system.kappa_b / 2, rel=1e-9)

    def test_stokes_dominant_unstable(self, system, G_minus):
        assert not gaussian.stable(gaussian.drift_matrix(1.2 * G_minus, G_minus, system))

    def test_stability_boundary(self, system, G_minus):
        """G+² < G-² + κ_m κ_b/4 is the exact boundary"""
        edge = math.sqrt(G_minus**2 + system.kappa_m * system.kappa_b / 4)
        assert gaussian.stable(gaussian.drift_matrix(edge * (1 - 1e-6), G_minus, system))
        assert not gaussian.stable(gaussian.drift_matrix(edge * (1 + 1e-6), G_minus, system))


class TestLyapunov:
    """Steady-state covariance"""

    def test_identity_case(self):
        """A = −I/2, D = I gives V = I"""
        assert np.allclose(gaussian.solve_lyapunov(-0.5 * np.eye(4), np.eye(4)), np.eye(4), atol=1e-14)

    def test_unstable_raises(self, system, G_minus):
        A = gaussian.drift_matrix(1.2 * G_minus, G_minus, system)
        with pytest.raises(UnstableSystemError) as excinfo:
            gaussian.solve_lyapunov(A, gaussian.build_diffusion(system))
        assert excinfo.value.exit_code == 2
        assert excinfo.value.eigenvalue.real >= 0

    def test_random_residuals(self, rng):
        """The residual stays below 1e-10·‖D‖ on random stable problems"""
        for _ in range(100):
            M = rng.normal(size=(4, 4))
            A = M - (np.max(np.linalg.eigvals(M).real) + rng.uniform(0.1, 2.0)) * np.eye(4)
            D = np.diag(rng.uniform(0.1, 5.0, 4))
            V = gaussian.solve_lyapunov(A, D)
            assert np.max(np.abs(A @ V + V @ A.T + D)) <= 1e-10 * np.max(D)
            assert np.allclose(V, V.T, atol=0, rtol=0)

    def test_closed_form_reference(self, system, G_minus):
        """Kronecker solve agrees with the hand-solved 2x2 blocks"""
        G_plus = 0.885 * G_minus
        V = gaussian.steady_state(G_plus, G_minus, system)
        n_m, n_b = gaussian.bath_occupations(system)
        v_xb, v_yb = steady_state_oracle(G_plus, G_minus, system, n_m, n_b)
        V_b = gaussian.mechanical_block(V)
        assert V_b[0, 0] == pytest.approx(v_xb, rel=1e-9)
        assert V_b[1, 1] == pytest.approx(v_yb, rel=1e-9)
        assert abs(V_b[0, 1]) < 1e-9
        assert np.allclose(V, gaussian.steady_state_blocks(G_plus, G_minus, system), rtol=1e-9, atol=1e-12)

    def test_reference_block(self, system, G_minus):
        """Reference drive: X_b squeezed to ~0.11, Y_b stretched to ~8.2"""
        V_b = gaussian.mechanical_block(gaussian.steady_state(0.885 * G_minus, G_minus, system))
        assert V_b[0, 0] == pytest.approx(0.1103, abs=5e-3)
        assert V_b[1, 1] == pytest.approx(8.18, rel=2e-2)

    def test_matches_time_evolution_reference(self, system, G_minus):
        """Integrating dV/dt = AV + VAᵀ + D from the vacuum reaches the same V"""
        A = gaussian.drift_matrix(0.885 * G_minus, G_minus, system)
        D = gaussian.build_diffusion(system)
        slow = -gaussian.stability_margin(A)
        sol = solve_ivp(
            lyapunov_rhs(A, D), (0.0, 40.0 / slow), 0.5 * np.eye(4).ravel(),
            method="Radau", rtol=1e-10, atol=1e-12,
        )
        assert sol.success
        V_t = sol.y[:, -1].reshape(4, 4)
        assert np.allclose(V_t, gaussian.solve_lyapunov(A, D), rtol=0, atol=1e-6)

    def test_matches_time_evolution_random(self, rng):
        """Time evolution converges to the Lyapunov solution for random systems"""
        for _ in range(20):
            system, G_plus, G_minus = random_system(rng)
            A = gaussian.drift_matrix(G_plus, G_minus, system)
            D = gaussian.build_diffusion(system)
            slow = -gaussian.stability_margin(A)
            sol = solve_ivp(
                lyapunov_rhs(A, D), (0.0, 40.0 / slow), 0.5 * np.eye(4).ravel(),
                method="Radau", rtol=1e-10, atol=1e-12,
            )
            V = gaussian.solve_lyapunov(A, D)
            assert np.allclose(sol.y[:, -1].reshape(4, 4), V, rtol=1e-8, atol=1e-6)

    def test_physical_random(self, rng):
        """Every stable steady state obeys the uncertainty relation"""
        for _ in range(50):
            system, G_plus, G_minus = random_system(rng)
            V = gaussian.steady_state(G_plus, G_minus, system)
            assert gaussian.is_physical(V)
            assert np.linalg.det(2 * gaussian.mechanical_block(V)) >= 1 - 1e-9

    def test_beam_splitter_only(self, system, G_minus):
        """G+ = 0 cools without squeezing: a diagonal block above vacuum"""
        V_b = gaussian.mechanical_block(gaussian.steady_state(0.0, G_minus, system))
        assert abs(V_b[0, 1]) < 1e-9
        assert V_b[0, 0] == pytest.approx(V_b[1, 1], rel=1e-9)
        assert V_b[0, 0] >= 0.5 - 1e-9

    def test_zero_drive_thermal(self, system):
        """Decoupled modes relax to their thermal variances exactly"""
        V = gaussian.steady_state(0.0, 0.0, system)
        n_m, n_b = gaussian.bath_occupations(system)
        assert np.allclose(np.diag(V), [n_m + 0.5] * 2 + [n_b + 0.5] * 2, rtol=1e-14, atol=0)

    def test_mechanical_block_shape(self):
        with pytest.raises(ValueError):
            gaussian.mechanical_block(np.eye(2))


class TestSqueezing:
    """Squeezing in dB and the Gaussian Wigner function"""

    def test_vacuum(self):
        assert gaussian.squeezing_db(0.5 * np.eye(2)) == pytest.approx(0.0, abs=1e-12)

    def test_pure_squeezed(self):
        """r = 1.25 gives 20 r/ln 10 ≈ 10.857 dB"""
        V_b = np.diag([math.exp(-2.5) / 2, math.exp(2.5) / 2])
        assert gaussian.squeezing_db(V_b) == pytest.approx(25 / math.log(10), rel=1e-9)

    def test_worked_block(self, worked_block):
        """The worked covariance block is squeezed by about 10.8 dB"""
        mean = np.trace(worked_block) / 2
        half = math.hypot((worked_block[1, 1] - worked_block[0, 0]) / 2, worked_block[0, 1])
        expected = -10 * math.log10((mean - half) / 0.5)
        s_db = gaussian.squeezing_db(worked_block)
        assert s_db == pytest.approx(expected, rel=1e-12)
        assert s_db == pytest.approx(10.8, abs=0.2)

    def test_rotation_invariant(self, worked_block, rng):
        s_db = gaussian.squeezing_db(worked_block)
        for angle in rng.uniform(-math.pi, math.pi, 10):
            R = np.array([[math.cos(angle), -math.sin(angle)], [math.sin(angle), math.cos(angle)]])
            assert gaussian.squeezing_db(R @ worked_block @ R.T) == pytest.approx(s_db, rel=1e-10)

    def test_thermal_is_negative(self):
        assert gaussian.squeezing_db(2.0 * np.eye(2)) < 0

    def test_not_positive_definite(self):
        with pytest.raises(NonPhysicalStateError):
            gaussian.squeezing_db(np.diag([-0.1, 1.0]))

    def test_major_axis(self):
        assert gaussian.major_axis_angle(np.diag([0.1, 8.0])) == pytest.approx(math.pi / 2)
        assert gaussian.major_axis_angle(np.diag([8.0, 0.1])) == pytest.approx(0.0, abs=1e-15)

    def test_wigner_vacuum_peak(self):
        W = gaussian.gaussian_wigner(0.5 * np.eye(2), GridSpec.point())
        assert W.values[0, 0] == pytest.approx(1 / math.pi, rel=1e-14)

    def test_wigner_normalized(self, worked_block):
        grid = GridSpec(x_min=-15, x_max=15, y_min=-15, y_max=15, nx=301, ny=301)
        W = gaussian.gaussian_wigner(worked_block, grid)
        assert W.integral == pytest.approx(1.0, abs=1e-4)
        assert W.min_value >= 0
        assert W.meta["det_V_b"] == pytest.approx(np.linalg.det(worked_block), rel=1e-12)

    def test_wigner_narrower_than_vacuum(self, worked_block):
        """Along the squeezed axis the ellipse falls off faster than the vacuum"""
        w, vecs = np.linalg.eigh(worked_block)
        u = math.sqrt(0.5) * vecs[:, 0]
        W = gaussian.gaussian_wigner(worked_block, GridSpec.point(*u))
        W0 = gaussian.gaussian_wigner(worked_block, GridSpec.point())
        assert W.values[0, 0] / W0.values[0, 0] < math.exp(-0.5)

    def test_wigner_singular(self):
        with pytest.raises(NonPhysicalStateError):
            gaussian.gaussian_wigner(np.diag([1.0, 0.0]), GridSpec.point())


class TestRatioOptimisation:
    """Optimal G+/G- and its trends"""

    def test_unstable_ratio_is_nan(self, system, G_minus):
        assert math.isnan(gaussian.squeezing_at_ratio(system, G_minus, 1.2))

    def test_reference_optimum(self, system, G_minus):
        """The optimum sits near 0.83 and beats every ratio on a fine grid"""
        ratio, s_db = gaussian.optimize_ratio(system, G_minus)
        assert 0.79 <= ratio <= 0.87
        n_m, n_b = gaussian.bath_occupations(system)
        v_xb, _ = steady_state_oracle(ratio * G_minus, G_minus, system, n_m, n_b)
        assert s_db == pytest.approx(-10 * math.log10(v_xb / 0.5), rel=1e-9)
        for x in np.linspace(0.5, 0.99, 99):
            assert gaussian.squeezing_at_ratio(system, G_minus, x) <= s_db + 1e-5

    def test_temperature_trend(self, system, G_minus):
        """Warmer baths need a smaller ratio and squeeze less"""
        results = [
            gaussian.optimize_ratio(system.model_copy(update={"T": T}), G_minus)
            for T in (0.01, 0.02, 0.05, 0.1)
        ]
        ratios, s_dbs = zip(*results)
        assert all(a > b for a, b in zip(ratios, ratios[1:]))
        assert all(a > b for a, b in zip(s_dbs, s_dbs[1:]))

    def test_coupling_trend(self, system):
        """Stronger anti-Stokes coupling squeezes more"""
        s_dbs = [gaussian.optimize_ratio(system, TWO_PI * g)[1] for g in (0.05e6, 0.1e6, 0.15e6)]
        assert all(a < b for a, b in zip(s_dbs, s_dbs[1:]))

    def test_no_stable_window(self, system, G_minus):
        with pytest.raises(UnstableSystemError):
            gaussian.optimize_ratio(system, G_minus, window=(1.1, 1.5))
