"""
This module defines the versioned run configuration and its loader.

A run config is a JSON tree with a `schema_version` and the blocks
system / drive / pulse / numerics / output. `--set key.path=value`
overrides are applied to the raw tree before validation, and a run
manifest is accepted in place of a config (its `resolved_config` is used).

Design Decisions (First Principles):
1. Strict parsing everywhere; errors name the dotted path of the bad key.
2. The loader is the only place that turns pydantic errors into ConfigError.
3. Without a config file the shipped reference configuration is used.
"""

import json
import logging
import math
from pathlib import Path
from typing import Any, Literal, Optional

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, ValidationError, model_validator

from mechcat.core.exceptions import ConfigError
from mechcat.physics.grid import GridSpec
from mechcat.schemas.params import OVER_2PI, TWO_PI, DriveParams, PulseParams, SystemParams

logger = logging.getLogger(__name__)

SCHEMA_VERSION = 1
SUPPORTED_SCHEMA_VERSIONS = {1}
DEFAULT_CONFIG_PATH = Path(__file__).resolve().parents[2] / "configs" / "reference.json"


def _reference_drive() -> DriveParams:
    g_minus = TWO_PI * 0.1e6
    return DriveParams(G_minus=g_minus, G_plus=0.885 * g_minus, P_minus=0.36e-3, P_plus=0.28e-3)


class _Strict(BaseModel):
    model_config = ConfigDict(extra="forbid", frozen=True)


class NumericsConfig(_Strict):
    """Truncations, tolerances and search windows."""

    n_trunc_b: int = Field(default=150, ge=2, description="Mechanical Fock cutoff")
    n_trunc_c: int = Field(default=6, ge=1, description="Cavity Fock cutoff")
    max_leakage: float = Field(default=1e-6, gt=0, description="Truncation leakage budget")
    allow_leakage: bool = Field(default=False, description="Continue when over budget")
    grid: GridSpec = Field(
        default_factory=lambda: GridSpec(x_min=-10, x_max=10, y_min=-10, y_max=10),
        description="Wigner sampling window",
    )
    ratio_window: tuple[float, float] = Field(default=(1e-3, 0.999))
    ratio_xtol: float = Field(default=1e-4, gt=0)
    alpha_max: float = Field(default=4.0, gt=0, description="Upper cat amplitude searched")
    optimize_cat_angle: bool = Field(default=False)
    k_values: list[int] = Field(default_factory=lambda: [1, 2], description="Photon counts of the pipeline")

    @model_validator(mode="after")
    def _window(self) -> "NumericsConfig":
        lo, hi = self.ratio_window
        if not 0 <= lo < hi:
            raise ValueError("ratio_window must satisfy 0 <= lo < hi")
        if any(k < 0 or k > self.n_trunc_c for k in self.k_values):
            raise ValueError(f"k_values must lie in 0..n_trunc_c={self.n_trunc_c}")
        return self


class OutputConfig(_Strict):
    directory: Optional[str] = Field(default=None, description="Artifact directory")
    wigner: bool = Field(default=True, description="Write Wigner grids")


class RunConfig(_Strict):
    """Everything a run depends on."""

    schema_version: int
    comment: Optional[str] = None
    system: SystemParams = Field(default_factory=SystemParams)
    drive: DriveParams = Field(default_factory=_reference_drive)
    pulse: PulseParams = Field(default_factory=lambda: PulseParams(theta=math.atan(0.11)))
    numerics: NumericsConfig = Field(default_factory=NumericsConfig)
    output: OutputConfig = Field(default_factory=OutputConfig)

    @model_validator(mode="after")
    def _version(self) -> "RunConfig":
        if self.schema_version not in SUPPORTED_SCHEMA_VERSIONS:
            raise ValueError(
                f"unsupported schema_version {self.schema_version}; supported {sorted(SUPPORTED_SCHEMA_VERSIONS)}"
            )
        return self


class SweepSpec(_Strict):
    """
    One sweep axis. `ratio` is G₊/G₋, `T` is in K and `G_minus` in Hz (G₋/2π).
    """

    axis: Literal["ratio", "T", "G_minus"]
    start: float
    stop: float
    points: int = Field(ge=2)
    optimize: bool = False

    def values(self) -> np.ndarray:
        return np.linspace(self.start, self.stop, self.points)


# ---------------------------------------------------------------------------
# Loading
# ---------------------------------------------------------------------------
def format_validation_error(exc: ValidationError) -> str:
    """One line per error, each prefixed with the dotted key path."""
    parts = []
    for error in exc.errors():
        path = ".".join(str(p) for p in error["loc"]) or "<root>"
        parts.append(f"{path}: {error['msg']}")
    return "; ".join(parts)


def _parse_value(raw: str) -> Any:
    try:
        return json.loads(raw)
    except json.JSONDecodeError:
        return raw


def apply_overrides(tree: dict, overrides: list[str]) -> dict:
    """
    Apply `key.path=value` overrides to a raw config tree.

    Setting `name` drops a sibling `name_over_2pi` and vice versa.
    """
    tree = json.loads(json.dumps(tree))
    for item in overrides:
        if "=" not in item:
            raise ConfigError(f"override '{item}' is not of the form key.path=value")
        key, raw = item.split("=", 1)
        path = [p for p in key.strip().split(".") if p]
        if not path:
            raise ConfigError(f"override '{item}' has an empty key")
        node = tree
        for part in path[:-1]:
            child = node.setdefault(part, {})
            if not isinstance(child, dict):
                raise ConfigError(f"override '{item}': '{part}' is not a section")
            node = child
        leaf = path[-1]
        sibling = leaf[: -len(OVER_2PI)] if leaf.endswith(OVER_2PI) else leaf + OVER_2PI
        node.pop(sibling, None)
        node[leaf] = _parse_value(raw)
    return tree


def read_json(path: Path) -> Any:
    try:
        return json.loads(Path(path).read_text())
    except FileNotFoundError as exc:
        raise ConfigError(f"file not found: {path}") from exc
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path}: invalid JSON ({exc})") from exc


def parse_config(tree: dict) -> RunConfig:
    if not isinstance(tree, dict):
        raise ConfigError("config root must be an object")
    if "schema_version" not in tree:
        raise ConfigError("schema_version: field required")
    try:
        return RunConfig.model_validate(tree)
    except ValidationError as exc:
        raise ConfigError(format_validation_error(exc)) from exc


def load_config(path: Optional[str | Path] = None, overrides: Optional[list[str]] = None) -> RunConfig:
    """
    Load, override and validate a run config.

    Args:
        path: Config or manifest JSON; the shipped defaults when None.
        overrides: `key.path=value` strings, applied in order.

    Raises:
        ConfigError: On unreadable files, bad overrides or invalid content.
    """
    if path is None:
        if DEFAULT_CONFIG_PATH.exists():
            tree = read_json(DEFAULT_CONFIG_PATH)
        else:
            tree = {"schema_version": SCHEMA_VERSION}
    else:
        tree = read_json(Path(path))
    if isinstance(tree, dict) and "resolved_config" in tree:
        logger.info("Loading resolved config from manifest %s", path)
        tree = tree["resolved_config"]
    if overrides:
        tree = apply_overrides(tree, overrides)
    return parse_config(tree)
