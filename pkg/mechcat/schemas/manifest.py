"""
This module defines the run manifest written next to every run's artifacts.

The manifest is the only artifact that carries timestamps; data files stay
byte-identical across reruns of the same resolved config.
"""

import datetime
from typing import Any, Literal, Optional

from pydantic import BaseModel, Field


class RunManifest(BaseModel):
    """
    Record of one CLI invocation.

    Attributes:
        resolved_config: The config after overrides; loading it back
            reproduces the run.
        derived: Derived physical quantities (N_m, N_b, G±, θ, leakages, S...).
        timings: Wall-clock seconds per stage.
        artifacts: SHA-256 of every data file written.
    """

    command: str
    status: Literal["ok", "failed", "dry-run"] = "ok"
    tool_version: str
    constants: dict[str, Any]
    resolved_config: dict[str, Any]
    derived: dict[str, Any] = Field(default_factory=dict)
    results: dict[str, Any] = Field(default_factory=dict)
    warnings: list[str] = Field(default_factory=list)
    timings: dict[str, float] = Field(default_factory=dict)
    artifacts: dict[str, str] = Field(default_factory=dict)
    error: Optional[str] = None
    started_at: datetime.datetime = Field(
        default_factory=lambda: datetime.datetime.now(tz=datetime.timezone.utc)
    )
    finished_at: Optional[datetime.datetime] = None
