"""
This module owns the output directory of a run.

It writes every artifact (JSON contracts, CSV tables, the manifest), hashes
data files for the determinism check and keeps the FAILED marker that flags
a partially completed pipeline.

Design Decisions (First Principles):
1. Explicit lifecycle: open() prepares the directory before any write.
2. Floats are written with 17 significant digits so files round-trip exactly.
3. Data files never contain timestamps; only the manifest does.
"""

import hashlib
import json
import logging
from pathlib import Path
from typing import Any

import numpy as np
import pandas as pd
from pydantic import BaseModel, ValidationError

from mechcat.core.exceptions import ConfigError
from mechcat.schemas.artifacts import CovarianceFile, StateFile
from mechcat.schemas.config import format_validation_error, read_json
from mechcat.schemas.manifest import RunManifest

logger = logging.getLogger(__name__)

FLOAT_FORMAT = "%.17g"
FAILED_MARKER = "FAILED"
MANIFEST_NAME = "manifest.json"


class ArtifactStore:
    """
    File-backed store for one run directory.

    Attributes:
        root: Output directory.
        written: Data files written so far, in write order.
    """

    def __init__(self, root: Path | str) -> None:
        self.root = Path(root)
        self.written: list[str] = []

    # ----------------------------------------------------------------------
    # Lifecycle
    # ----------------------------------------------------------------------
    def open(self) -> "ArtifactStore":
        """Create the directory and clear a stale FAILED marker."""
        self.root.mkdir(parents=True, exist_ok=True)
        marker = self.root / FAILED_MARKER
        if marker.exists():
            marker.unlink()
        self.written = []
        logger.info("Writing artifacts to %s", self.root)
        return self

    def path(self, name: str) -> Path:
        return self.root / name

    def mark_failed(self, stage: str, error: BaseException) -> Path:
        marker = self.path(FAILED_MARKER)
        marker.write_text(f"stage: {stage}\nerror: {type(error).__name__}: {error}\n")
        logger.error("Stage '%s' failed; partial artifacts kept in %s", stage, self.root)
        return marker

    # ----------------------------------------------------------------------
    # Writers
    # ----------------------------------------------------------------------
    def _record(self, name: str) -> Path:
        if name not in self.written:
            self.written.append(name)
        return self.path(name)

    def write_json(self, name: str, payload: BaseModel | dict[str, Any]) -> Path:
        if isinstance(payload, BaseModel):
            text = payload.model_dump_json(indent=2, exclude_none=True)
        else:
            text = json.dumps(payload, indent=2)
        target = self._record(name)
        target.write_text(text + "\n")
        logger.debug("Wrote %s", target)
        return target

    def write_csv(self, name: str, columns: dict[str, Any]) -> Path:
        target = self._record(name)
        pd.DataFrame(columns).to_csv(
            target, index=False, float_format=FLOAT_FORMAT, na_rep="nan", lineterminator="\n"
        )
        logger.debug("Wrote %s", target)
        return target

    def write_manifest(self, manifest: RunManifest) -> Path:
        manifest.artifacts = self.file_hashes()
        target = self.path(MANIFEST_NAME)
        target.write_text(manifest.model_dump_json(indent=2) + "\n")
        logger.info("Manifest written to %s", target)
        return target

    # ----------------------------------------------------------------------
    # Readers
    # ----------------------------------------------------------------------
    @staticmethod
    def _validate(model: type[BaseModel], path: Path) -> BaseModel:
        data = read_json(path)
        try:
            return model.model_validate(data)
        except ValidationError as exc:
            raise ConfigError(f"{path}: {format_validation_error(exc)}") from exc

    @classmethod
    def read_state(cls, path: Path | str) -> StateFile:
        return cls._validate(StateFile, Path(path))

    @classmethod
    def read_covariance(cls, path: Path | str) -> CovarianceFile:
        return cls._validate(CovarianceFile, Path(path))

    @staticmethod
    def detect_kind(path: Path | str) -> str:
        """'state' or 'covariance' from the keys of a JSON input file."""
        data = read_json(Path(path))
        if isinstance(data, dict) and "mechanical_block" in data:
            return "covariance"
        if isinstance(data, dict) and "re" in data:
            return "state"
        raise ConfigError(f"{path}: neither a state file nor a covariance file")

    # ----------------------------------------------------------------------
    # Hashing
    # ----------------------------------------------------------------------
    def file_hashes(self) -> dict[str, str]:
        hashes = {}
        for name in self.written:
            digest = hashlib.sha256(self.path(name).read_bytes()).hexdigest()
            hashes[name] = digest
        return hashes


def matrix_to_list(matrix: np.ndarray) -> list[list[float]]:
    return np.asarray(matrix, dtype=float).tolist()
