"""
This module runs parameter sweeps of the steady-state squeezing.

Each point is independent; points are dispatched through the injected
Executor and assembled in input order, so sweep.csv is identical for any
number of jobs.
"""

import logging
import math
from dataclasses import dataclass

import numpy as np

from mechcat.core.exceptions import ConfigError, UnstableSystemError
from mechcat.interfaces.executor import Executor
from mechcat.physics import gaussian, params
from mechcat.schemas.config import RunConfig, SweepSpec
from mechcat.schemas.manifest import RunManifest
from mechcat.schemas.params import TWO_PI, SystemParams
from mechcat.services.protocol_service import ProtocolService

logger = logging.getLogger(__name__)

COLUMNS = ("T", "G_minus_over_2pi", "ratio", "S_db", "stable")


@dataclass(frozen=True)
class SweepPoint:
    """Inputs of one sweep row; `ratio` is ignored when `optimize` is set."""

    system: SystemParams
    G_minus: float
    ratio: float
    optimize: bool
    window: tuple[float, float]
    xtol: float


def evaluate_point(point: SweepPoint) -> dict:
    """Squeezing at one point; unstable points are flagged, never raised."""
    ratio = point.ratio
    if point.optimize:
        try:
            ratio, s_db = gaussian.optimize_ratio(point.system, point.G_minus, point.window, point.xtol)
        except UnstableSystemError:
            s_db = math.nan
    else:
        s_db = gaussian.squeezing_at_ratio(point.system, point.G_minus, ratio)
    return {
        "T": point.system.T,
        "G_minus_over_2pi": point.G_minus / TWO_PI,
        "ratio": ratio,
        "S_db": s_db,
        "stable": bool(math.isfinite(s_db)),
    }


class SweepService:
    """
    Service class for ratio, temperature and coupling sweeps.

    Reuses ProtocolService for the manifest and store lifecycle.
    """

    def __init__(self, protocol: ProtocolService, executor: Executor) -> None:
        self.protocol = protocol
        self.executor = executor

    def build_points(self, config: RunConfig, spec: SweepSpec) -> list[SweepPoint]:
        couplings = params.resolve_couplings(config.drive, config.system)
        if couplings[1] <= 0 and spec.axis != "G_minus":
            raise ConfigError("sweeps need G_minus > 0")
        base_ratio = couplings[0] / couplings[1] if couplings[1] > 0 else 0.0
        numerics = config.numerics
        points = []
        for value in spec.values():
            system, g_minus, ratio = config.system, couplings[1], base_ratio
            if spec.axis == "ratio":
                ratio = float(value)
            elif spec.axis == "T":
                if value < 0:
                    raise ConfigError("temperature sweep values must be non-negative")
                system = system.model_copy(update={"T": float(value)})
            else:
                if value <= 0:
                    raise ConfigError("G_minus sweep values must be positive")
                g_minus = TWO_PI * float(value)
            points.append(
                SweepPoint(system, g_minus, ratio, spec.optimize, numerics.ratio_window, numerics.ratio_xtol)
            )
        return points

    def sweep(self, config: RunConfig, spec: SweepSpec, dry_run: bool = False) -> RunManifest:
        """Evaluate every point and write sweep.csv."""
        protocol = self.protocol
        manifest = protocol.new_manifest("sweep", config)
        manifest.derived["sweep"] = spec.model_dump()
        with protocol.run(manifest):
            protocol.derive(config, manifest)
            points = self.build_points(config, spec)
            if dry_run:
                manifest.status = "dry-run"
                return manifest
            with protocol.stage(manifest, "sweep"):
                logger.info("Sweeping %s over %d points (%d jobs)", spec.axis, len(points), self.executor.jobs)
                rows = self.executor.map(evaluate_point, points)
                columns = {name: [row[name] for row in rows] for name in COLUMNS}
                protocol.store.write_csv("sweep.csv", columns)
            unstable = [i for i, row in enumerate(rows) if not row["stable"]]
            if unstable:
                manifest.warnings.append(f"unstable sweep points at rows {unstable}")
            best = int(np.nanargmax(columns["S_db"])) if len(unstable) < len(rows) else None
            manifest.results["sweep"] = {
                "points": len(rows),
                "unstable_rows": unstable,
                "best_row": best,
                "best": rows[best] if best is not None else None,
            }
        return manifest
