"""Unit tests for executors, the protocol service and the sweep service"""
import math

import pytest

from mechcat.core.exceptions import ConfigError, TruncationLeakageError
from mechcat.schemas.config import SweepSpec, load_config
from mechcat.services.executors import PoolExecutor, SerialExecutor, make_executor
from mechcat.services.protocol_service import ProtocolService
from mechcat.services.sweep_service import SweepPoint, SweepService, evaluate_point
from mechcat.storage.artifacts import ArtifactStore

SMALL_GRID = ["numerics.grid.nx=41", "numerics.grid.ny=41"]


def make_service(root, executor=None):
    return ProtocolService(store=ArtifactStore(root), executor=executor or SerialExecutor())


class TestExecutors:
    """Order-preserving maps"""

    def test_serial(self):
        assert SerialExecutor().map(math.sqrt, [4.0, 1.0, 9.0]) == [2.0, 1.0, 3.0]

    def test_pool_keeps_order(self):
        items = [float(i) for i in range(50)]
        assert PoolExecutor(2).map(math.sqrt, items) == [math.sqrt(x) for x in items]

    def test_pool_needs_two_jobs(self):
        with pytest.raises(ValueError):
            PoolExecutor(1)

    def test_factory(self):
        assert isinstance(make_executor(1), SerialExecutor)
        pool = make_executor(3)
        assert isinstance(pool, PoolExecutor) and pool.jobs == 3


class TestProtocolService:
    """Stage orchestration and artifacts"""

    def test_squeeze_records_cross_check(self, tmp_path):
        manifest = make_service(tmp_path).squeeze(load_config(overrides=SMALL_GRID))
        assert manifest.status == "ok"
        assert manifest.derived["closed_form_max_diff"] < 1e-8
        assert manifest.derived["stability_margin"] < 0
        assert set(manifest.artifacts) == {"cm.json", "wigner_gaussian.csv", "wigner_gaussian.json"}

    def test_dry_run_skips_stages(self, tmp_path):
        manifest = make_service(tmp_path).squeeze(load_config(), dry_run=True)
        assert manifest.status == "dry-run"
        assert "squeeze" not in manifest.results
        assert not (tmp_path / "cm.json").exists()

    def test_failure_keeps_partial_artifacts(self, tmp_path):
        config = load_config(overrides=[*SMALL_GRID, "numerics.n_trunc_b=30"])
        with pytest.raises(TruncationLeakageError):
            make_service(tmp_path).pipeline(config)
        assert (tmp_path / "FAILED").read_text().splitlines()[0] == "stage: input"
        assert (tmp_path / "cm.json").exists()
        assert (tmp_path / "manifest.json").exists()

    def test_count_out_of_range_is_recorded(self, tmp_path):
        config = load_config(overrides=["numerics.n_trunc_c=2"])
        with pytest.raises(ConfigError, match="k=3"):
            make_service(tmp_path).subtract(config, 3)
        assert (tmp_path / "FAILED").read_text().splitlines()[0] == "stage: setup"
        assert (tmp_path / "manifest.json").exists()

    def test_success_clears_stale_marker(self, tmp_path):
        (tmp_path / "FAILED").write_text("stage: squeeze\nerror: old\n")
        make_service(tmp_path).squeeze(load_config(overrides=SMALL_GRID))
        assert not (tmp_path / "FAILED").exists()

    def test_state_and_covariance_inputs_agree(self, tmp_path):
        """Subtracting from cm.json or from the state it produced gives one result"""
        config = load_config(overrides=SMALL_GRID)
        make_service(tmp_path / "squeeze").squeeze(config)
        from_cm = make_service(tmp_path / "a").subtract(config, 1, tmp_path / "squeeze" / "cm.json")
        from_state = make_service(tmp_path / "b").subtract(config, 1, tmp_path / "a" / "state_input.json")
        assert from_state.results["k1"]["probability"] == pytest.approx(
            from_cm.results["k1"]["probability"], rel=1e-10
        )

    def test_default_input_is_steady_state(self, tmp_path):
        config = load_config(overrides=SMALL_GRID)
        manifest = make_service(tmp_path).subtract(config, 0)
        assert manifest.derived["input_state"]["n_bar"] == pytest.approx(0.449, abs=0.01)
        assert manifest.results["k0"]["probability"] > 0.9


class TestSweepService:
    """Parameter sweeps"""

    def test_unstable_points_flagged(self, system):
        g_minus = 2 * math.pi * 1e5
        row = evaluate_point(SweepPoint(system, g_minus, 1.2, False, (1e-3, 0.999), 1e-4))
        assert row["stable"] is False and math.isnan(row["S_db"])

    def test_optimized_point(self, system):
        g_minus = 2 * math.pi * 1e5
        row = evaluate_point(SweepPoint(system, g_minus, 0.0, True, (1e-3, 0.999), 1e-4))
        assert 0.79 <= row["ratio"] <= 0.87
        assert row["stable"] is True

    def test_schedule_independent(self, tmp_path):
        """The CSV is byte-identical for serial and pool execution"""
        config = load_config()
        spec = SweepSpec(axis="G_minus", start=5e4, stop=2e5, points=6, optimize=True)
        for name, executor in (("serial", SerialExecutor()), ("pool", PoolExecutor(2))):
            service = SweepService(protocol=make_service(tmp_path / name, executor), executor=executor)
            service.sweep(config, spec)
        serial = (tmp_path / "serial" / "sweep.csv").read_bytes()
        assert serial == (tmp_path / "pool" / "sweep.csv").read_bytes()

    def test_g_minus_axis_in_hz(self, tmp_path):
        spec = SweepSpec(axis="G_minus", start=5e4, stop=1e5, points=2)
        points = SweepService(make_service(tmp_path), SerialExecutor()).build_points(load_config(), spec)
        assert points[1].G_minus == pytest.approx(2 * math.pi * 1e5, rel=1e-15)
        assert points[0].ratio == pytest.approx(0.885, rel=1e-12)
