"""
This module contains the orchestration logic of the two-step protocol.

It follows dependency injection principles: the artifact store and the
executor are passed in, so the service is exercised in tests with a
temporary directory and a serial executor, and from the CLI with a pool.

Stages: squeeze → (squeezed-thermal state) → subtract → wigner → fidelity.
Each public command records one RunManifest; a failing stage leaves its
partial artifacts in place with a FAILED marker and re-raises.
"""

import contextlib
import datetime
import logging
import math
import time
from pathlib import Path
from typing import Iterator, Optional

import numpy as np

from mechcat import __version__
from mechcat.core.constants import constants_table
from mechcat.core.exceptions import ConfigError, MechcatError
from mechcat.interfaces.executor import Executor
from mechcat.physics import analysis, fock, gaussian, params, subtraction
from mechcat.physics.fock import DensityMatrix
from mechcat.physics.grid import WignerGrid
from mechcat.schemas.artifacts import (
    CovarianceFile,
    FidelityReport,
    SqueezedThermalModel,
    StateFile,
    WignerSidecar,
)
from mechcat.schemas.config import RunConfig
from mechcat.schemas.manifest import RunManifest
from mechcat.schemas.params import TWO_PI, PulseParams
from mechcat.storage.artifacts import ArtifactStore, matrix_to_list

logger = logging.getLogger(__name__)


class ProtocolService:
    """
    Service class encapsulating the squeeze / subtract / analyse workflow.

    Responsibilities:
    - Resolve derived quantities and regime warnings for a config.
    - Run each stage and persist its artifacts through the store.
    - Keep one manifest per command, including failures.
    """

    def __init__(self, store: ArtifactStore, executor: Executor) -> None:
        """
        Initialize ProtocolService with its collaborators.

        Args:
            store (ArtifactStore): Output directory for this run.
            executor (Executor): Parallel map used for Wigner grids.
        """
        self.store = store
        self.executor = executor
        self._stage = "setup"

    # ----------------------------------------------------------------------
    # Manifest plumbing
    # ----------------------------------------------------------------------
    def new_manifest(self, command: str, config: RunConfig) -> RunManifest:
        return RunManifest(
            command=command,
            tool_version=__version__,
            constants=constants_table(),
            resolved_config=config.model_dump(mode="json"),
        )

    @contextlib.contextmanager
    def stage(self, manifest: RunManifest, name: str) -> Iterator[None]:
        """Time a stage and remember it for failure reporting."""
        self._stage = name
        start = time.perf_counter()
        try:
            yield
        finally:
            manifest.timings[name] = time.perf_counter() - start

    @contextlib.contextmanager
    def run(self, manifest: RunManifest) -> Iterator[RunManifest]:
        """Open the store, then always write the manifest, marking failures."""
        self._stage = "setup"
        self.store.open()
        try:
            yield manifest
        except Exception as exc:
            manifest.status = "failed"
            manifest.error = f"{type(exc).__name__}: {exc}"
            self.store.mark_failed(self._stage, exc)
            raise
        finally:
            manifest.finished_at = datetime.datetime.now(tz=datetime.timezone.utc)
            self.store.write_manifest(manifest)

    # ----------------------------------------------------------------------
    # Derived quantities
    # ----------------------------------------------------------------------
    def derive(self, config: RunConfig, manifest: RunManifest) -> tuple[tuple[float, float], PulseParams]:
        """
        Resolve couplings and the pulse chain; record them and any warnings.

        Returns:
            ((G_plus, G_minus), resolved PulseParams)
        """
        with self.stage(manifest, "derive"):
            system = config.system
            couplings = params.resolve_couplings(config.drive, system)
            pulse = params.resolve_pulse(system, config.pulse)
            n_m, n_b = gaussian.bath_occupations(system)
            manifest.derived.update(
                {
                    "N_m": n_m,
                    "N_b": n_b,
                    "G_plus_over_2pi": couplings[0] / TWO_PI,
                    "G_minus_over_2pi": couplings[1] / TWO_PI,
                    "ratio": couplings[0] / couplings[1] if couplings[1] > 0 else None,
                    "E": pulse.E,
                    "G_c_over_2pi": pulse.G_c / TWO_PI,
                    "G_over_2pi": pulse.G / TWO_PI,
                    "theta": pulse.theta,
                    "tan_theta": math.tan(pulse.theta),
                    "theta_chain": pulse.theta_chain,
                    "tan_theta_chain": math.tan(pulse.theta_chain),
                    "theta_pinned": config.pulse.theta is not None,
                    "eta": pulse.eta,
                }
            )
            manifest.warnings.extend(params.validate_regime(system, couplings, pulse.theta))
        return couplings, pulse

    # ----------------------------------------------------------------------
    # Step 1: squeezing
    # ----------------------------------------------------------------------
    def _steady_state(
        self, config: RunConfig, couplings: tuple[float, float], manifest: RunManifest
    ) -> np.ndarray:
        A = gaussian.drift_matrix(couplings[0], couplings[1], config.system)
        manifest.derived["stability_margin"] = gaussian.stability_margin(A)
        V = gaussian.solve_lyapunov(A, gaussian.build_diffusion(config.system))
        closed = gaussian.steady_state_blocks(couplings[0], couplings[1], config.system)
        manifest.derived["closed_form_max_diff"] = float(np.max(np.abs(V - closed)))
        if not gaussian.is_physical(V):
            manifest.warnings.append("steady-state covariance violates the uncertainty relation")
        return V

    def _squeeze(
        self, config: RunConfig, couplings: tuple[float, float], manifest: RunManifest
    ) -> np.ndarray:
        with self.stage(manifest, "squeeze"):
            V = self._steady_state(config, couplings, manifest)
            V_b = gaussian.mechanical_block(V)
            s_db = gaussian.squeezing_db(V_b)
            st = fock.cm_to_squeezed_thermal(V_b)
            logger.info("Steady-state squeezing %.4f dB (r=%.4f, phi=%.4f, n_bar=%.4g)", s_db, st.r, st.phi, st.n_bar)
            self.store.write_json(
                "cm.json",
                CovarianceFile(
                    mechanical_block=matrix_to_list(V_b),
                    full=matrix_to_list(V),
                    squeezing_db=s_db,
                    squeezed_thermal=SqueezedThermalModel(r=st.r, phi=st.phi, n_bar=st.n_bar),
                ),
            )
            manifest.results["squeeze"] = {
                "S_db": s_db,
                "V_b": matrix_to_list(V_b),
                "r": st.r,
                "phi": st.phi,
                "n_bar": st.n_bar,
            }
        if config.output.wigner:
            with self.stage(manifest, "wigner_gaussian"):
                grid = gaussian.gaussian_wigner(V_b, config.numerics.grid)
                grid.check_normalization()
                self._write_wigner("wigner_gaussian", grid, "gaussian", negativity=None)
        return V_b

    def squeeze(self, config: RunConfig, dry_run: bool = False) -> RunManifest:
        """Steady-state covariance, squeezing and Gaussian Wigner grid."""
        manifest = self.new_manifest("squeeze", config)
        with self.run(manifest):
            couplings, _ = self.derive(config, manifest)
            if dry_run:
                manifest.status = "dry-run"
                return manifest
            self._squeeze(config, couplings, manifest)
        return manifest

    # ----------------------------------------------------------------------
    # Step 2: subtraction
    # ----------------------------------------------------------------------
    def _state_from_block(
        self, config: RunConfig, V_b: np.ndarray, manifest: RunManifest
    ) -> DensityMatrix:
        st = fock.cm_to_squeezed_thermal(V_b)
        numerics = config.numerics
        needed = fock.required_truncation(st.largest_variance(), numerics.max_leakage)
        if needed > numerics.n_trunc_b:
            logger.warning(
                "n_trunc_b=%d may be too small for r=%.4g, n_bar=%.4g (estimate %d)",
                numerics.n_trunc_b,
                st.r,
                st.n_bar,
                needed,
            )
        rho = fock.squeezed_thermal(
            st,
            numerics.n_trunc_b,
            max_leakage=numerics.max_leakage,
            allow_leakage=numerics.allow_leakage,
        )
        manifest.derived["input_state"] = {
            "r": st.r,
            "phi": st.phi,
            "n_bar": st.n_bar,
            "leakage": rho.leakage,
            "purity": rho.purity,
            "mean_occupation": analysis.mean_occupation(rho),
        }
        return rho

    def load_input(
        self,
        config: RunConfig,
        couplings: tuple[float, float],
        manifest: RunManifest,
        input_path: Optional[Path | str] = None,
    ) -> tuple[DensityMatrix, Optional[np.ndarray]]:
        """
        Mechanical input state: from a covariance file, a state file, or the
        steady state of the config when no file is given.
        """
        with self.stage(manifest, "input"):
            if input_path is None:
                V_b = gaussian.mechanical_block(self._steady_state(config, couplings, manifest))
            elif ArtifactStore.detect_kind(input_path) == "covariance":
                V_b = ArtifactStore.read_covariance(input_path).block()
            else:
                rho = ArtifactStore.read_state(input_path).to_density()
                if len(rho.dims) != 1:
                    raise ConfigError(f"{input_path}: expected a single-mode state")
                return rho.normalized(), None
            rho = self._state_from_block(config, V_b, manifest)
            self.store.write_json("state_input.json", StateFile.from_density(rho))
            return rho, V_b

    def _write_conditioned(self, state: subtraction.ConditionedState, manifest: RunManifest) -> None:
        k = state.n_detected
        tan2 = math.tan(state.theta) ** 2
        self.store.write_json(
            f"state_k{k}.json",
            StateFile.from_density(
                state.rho_b, k=k, probability=min(1.0, state.probability), theta=state.theta
            ),
        )
        manifest.results[f"k{k}"] = {
            "probability": state.probability,
            "raw_probability": state.raw_probability,
            "probability_over_tan2k": state.raw_probability / tan2**k if k and tan2 > 0 else None,
            "parity": analysis.parity(state.rho_b),
            "mean_occupation": analysis.mean_occupation(state.rho_b),
            "purity": state.rho_b.purity,
            "leakage": state.rho_b.leakage,
        }

    def _evolve(
        self, config: RunConfig, rho_in: DensityMatrix, pulse: PulseParams, manifest: RunManifest
    ) -> subtraction.JointState:
        params.require_weak_pulse(pulse.theta)
        with self.stage(manifest, "evolve"):
            joint = subtraction.evolve_mixed(
                rho_in,
                pulse.theta,
                config.numerics.n_trunc_c,
                max_leakage=config.numerics.max_leakage,
                allow_leakage=config.numerics.allow_leakage,
            )
            probabilities, missing = subtraction.photon_distribution(joint)
            manifest.results["photon_distribution"] = probabilities.tolist()
            manifest.derived["joint_leakage"] = joint.leakage
            manifest.derived["photon_distribution_deficit"] = missing
        return joint

    def subtract(
        self,
        config: RunConfig,
        k: int,
        input_path: Optional[Path | str] = None,
        dry_run: bool = False,
    ) -> RunManifest:
        """Condition the mechanical state on k detected photons."""
        manifest = self.new_manifest("subtract", config)
        with self.run(manifest):
            if not 0 <= k <= config.numerics.n_trunc_c:
                raise ConfigError(f"k={k} outside 0..n_trunc_c={config.numerics.n_trunc_c}")
            couplings, pulse = self.derive(config, manifest)
            params.require_weak_pulse(pulse.theta)
            if dry_run:
                manifest.status = "dry-run"
                return manifest
            rho_in, _ = self.load_input(config, couplings, manifest, input_path)
            joint = self._evolve(config, rho_in, pulse, manifest)
            with self.stage(manifest, f"condition_k{k}"):
                self._write_conditioned(subtraction.condition_on_photons(joint, k, pulse.eta), manifest)
        return manifest

    # ----------------------------------------------------------------------
    # Analysis
    # ----------------------------------------------------------------------
    def _write_wigner(
        self, stem: str, grid: WignerGrid, source: str, negativity: Optional[float]
    ) -> WignerSidecar:
        self.store.write_csv(f"{stem}.csv", grid.rows())
        sidecar = WignerSidecar(
            window=list(grid.spec.window),
            nx=grid.spec.nx,
            ny=grid.spec.ny,
            convention=grid.convention,
            integral=grid.integral,
            min_value=grid.min_value,
            negativity_volume=negativity,
            det_V_b=grid.meta.get("det_V_b"),
            source=source,
        )
        self.store.write_json(f"{stem}.json", sidecar)
        return sidecar

    def _wigner(self, config: RunConfig, rho: DensityMatrix, stem: str) -> WignerSidecar:
        grid = analysis.wigner_fock(rho, config.numerics.grid, self.executor)
        return self._write_wigner(stem, grid, "fock", analysis.negativity_volume(grid))

    def _fidelity(
        self,
        config: RunConfig,
        rho: DensityMatrix,
        parity: Optional[str],
        angle: Optional[float],
        strict: bool,
        name: str,
        negativity: Optional[WignerSidecar] = None,
        k: Optional[int] = None,
        probability: Optional[float] = None,
    ) -> FidelityReport:
        state_parity = analysis.parity(rho)
        natural = "even" if state_parity >= 0 else "odd"
        parity = parity or natural
        mismatch = parity != natural
        if mismatch:
            message = f"requested {parity} cat for a state with parity {state_parity:.4g}"
            if strict:
                raise ConfigError(message)
            logger.warning(message)
        if angle is None:
            angle = self._state_axis(rho)
        fit = analysis.best_cat_fidelity(
            rho,
            parity,
            alpha_max=config.numerics.alpha_max,
            angle=angle,
            optimize_angle=config.numerics.optimize_cat_angle,
        )
        report = FidelityReport(
            parity=parity,
            alpha=fit.amplitude,
            angle=fit.angle,
            fidelity=fit.fidelity,
            state_parity=state_parity,
            wigner_origin=analysis.wigner_origin(rho),
            negativity_volume=negativity.negativity_volume if negativity else None,
            min_value=negativity.min_value if negativity else None,
            k=k,
            probability=probability,
            parity_mismatch=mismatch,
        )
        self.store.write_json(name, report)
        return report

    @staticmethod
    def _state_axis(rho: DensityMatrix) -> float:
        """Anti-squeezed axis of a zero-mean state; 0 when the state is displaced."""
        try:
            return gaussian.major_axis_angle(fock.cm_from_density(rho))
        except MechcatError:
            return 0.0

    def wigner(self, config: RunConfig, state_path: Path | str) -> RunManifest:
        """Fock-basis Wigner grid of a state file."""
        manifest = self.new_manifest("wigner", config)
        with self.run(manifest):
            rho = ArtifactStore.read_state(state_path).to_density()
            if len(rho.dims) != 1:
                raise ConfigError(f"{state_path}: expected a single-mode state")
            with self.stage(manifest, "wigner"):
                sidecar = self._wigner(config, rho, "wigner")
            manifest.results["wigner"] = sidecar.model_dump()
        return manifest

    def fidelity(
        self,
        config: RunConfig,
        state_path: Path | str,
        parity: Optional[str] = None,
        angle: Optional[float] = None,
        strict: bool = False,
    ) -> RunManifest:
        """Best cat fidelity of a state file."""
        manifest = self.new_manifest("fidelity", config)
        with self.run(manifest):
            state_file = ArtifactStore.read_state(state_path)
            rho = state_file.to_density()
            if len(rho.dims) != 1:
                raise ConfigError(f"{state_path}: expected a single-mode state")
            with self.stage(manifest, "fidelity"):
                report = self._fidelity(
                    config,
                    rho,
                    parity,
                    angle,
                    strict,
                    "report.json",
                    k=state_file.k,
                    probability=state_file.probability,
                )
            manifest.results["fidelity"] = report.model_dump()
        return manifest

    # ----------------------------------------------------------------------
    # Full pipeline
    # ----------------------------------------------------------------------
    def pipeline(self, config: RunConfig, dry_run: bool = False, strict: bool = False) -> RunManifest:
        """squeeze → subtract(k) → wigner → fidelity, under one manifest."""
        manifest = self.new_manifest("pipeline", config)
        with self.run(manifest):
            couplings, pulse = self.derive(config, manifest)
            params.require_weak_pulse(pulse.theta)
            if dry_run:
                manifest.status = "dry-run"
                return manifest
            V_b = self._squeeze(config, couplings, manifest)
            with self.stage(manifest, "input"):
                rho_in = self._state_from_block(config, V_b, manifest)
                self.store.write_json("state_input.json", StateFile.from_density(rho_in))
            axis = gaussian.major_axis_angle(V_b)
            joint = self._evolve(config, rho_in, pulse, manifest)
            for k in config.numerics.k_values:
                with self.stage(manifest, f"condition_k{k}"):
                    state = subtraction.condition_on_photons(joint, k, pulse.eta)
                    self._write_conditioned(state, manifest)
                sidecar = None
                if config.output.wigner:
                    with self.stage(manifest, f"wigner_k{k}"):
                        sidecar = self._wigner(config, state.rho_b, f"wigner_k{k}")
                        manifest.results[f"k{k}"]["negativity_volume"] = sidecar.negativity_volume
                        manifest.results[f"k{k}"]["min_value"] = sidecar.min_value
                with self.stage(manifest, f"fidelity_k{k}"):
                    report = self._fidelity(
                        config,
                        state.rho_b,
                        "even" if k % 2 == 0 else "odd",
                        axis,
                        strict,
                        f"report_k{k}.json",
                        negativity=sidecar,
                        k=k,
                        probability=state.probability,
                    )
                    manifest.results[f"k{k}"]["fidelity"] = report.fidelity
                    manifest.results[f"k{k}"]["alpha"] = report.alpha
        return manifest
