"""
This module wires the service graph for the command line.

Key Design Principles:
----------------------
1. **Constructor injection**
   Services receive their store and executor; nothing reaches for globals.

2. **Cached executors**
   A pool is expensive to describe and cheap to reuse, so executor
   providers are cached per job count with `@lru_cache`.
"""

from functools import lru_cache
from pathlib import Path
from typing import Optional

from mechcat.core.config import get_settings
from mechcat.interfaces.executor import Executor
from mechcat.schemas.config import RunConfig
from mechcat.services.executors import make_executor
from mechcat.services.protocol_service import ProtocolService
from mechcat.services.sweep_service import SweepService
from mechcat.storage.artifacts import ArtifactStore


# ----------------------------------------------------------------------
# Executor Provider
# ----------------------------------------------------------------------
@lru_cache
def get_executor(jobs: int = 1) -> Executor:
    """Serial executor for one job, a process pool otherwise."""
    return make_executor(jobs)


# ----------------------------------------------------------------------
# Store Provider
# ----------------------------------------------------------------------
def resolve_output_dir(cli_out: Optional[str], config: RunConfig) -> Path:
    """--out, then the config's output.directory, then MECHCAT_OUTPUT_DIR."""
    return Path(cli_out or config.output.directory or get_settings().OUTPUT_DIR)


def get_store(output_dir: Path) -> ArtifactStore:
    return ArtifactStore(output_dir)


# ----------------------------------------------------------------------
# Service Providers
# ----------------------------------------------------------------------
def get_protocol_service(output_dir: Path, jobs: int = 1) -> ProtocolService:
    return ProtocolService(store=get_store(output_dir), executor=get_executor(jobs))


def get_sweep_service(output_dir: Path, jobs: int = 1) -> SweepService:
    return SweepService(
        protocol=get_protocol_service(output_dir, jobs), executor=get_executor(jobs)
    )
