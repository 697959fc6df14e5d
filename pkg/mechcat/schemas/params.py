"""
This module defines the physical parameter blocks of a run.

These pydantic models are the data contracts between the config file and
the physics layer. All frequencies and rates are stored in rad/s; the
config may instead carry Hz values under `<name>_over_2pi` keys, which are
converted before validation.

Design Decisions (First Principles):
1. Strict parsing: unknown keys are rejected at every level.
2. One unit convention inside the code (rad/s); Hz only at the file edge.
3. Immutable blocks; derived pulse quantities are recorded on a copy.
"""

import math
from typing import Any, Optional

from pydantic import BaseModel, ConfigDict, Field, model_validator

TWO_PI = 2.0 * math.pi
OVER_2PI = "_over_2pi"


def convert_over_2pi(data: Any) -> Any:
    """
    Replace every `<name>_over_2pi` key (Hz) by `<name>` (rad/s).

    Raises:
        ValueError: If both spellings of the same field are present.
    """
    if not isinstance(data, dict):
        return data
    converted = {}
    for key, value in data.items():
        if key.endswith(OVER_2PI):
            name = key[: -len(OVER_2PI)]
            if name in data:
                raise ValueError(f"both '{name}' and '{key}' given")
            converted[name] = None if value is None else TWO_PI * float(value)
        else:
            converted[key] = value
    return converted


class _ParamBlock(BaseModel):
    model_config = ConfigDict(extra="forbid", frozen=True)

    @model_validator(mode="before")
    @classmethod
    def _hz_keys(cls, data: Any) -> Any:
        return convert_over_2pi(data)


class SystemParams(_ParamBlock):
    """
    Physical constants of the magnon-phonon-photon system.

    Defaults are the experimentally feasible values of the reference
    device: a YIG bridge with a 30 MHz flexural mode in a 1550 nm cavity.
    """

    omega_m: float = Field(default=TWO_PI * 10e9, gt=0, description="Magnon frequency (rad/s)")
    omega_b: float = Field(default=TWO_PI * 30e6, gt=0, description="Mechanical frequency (rad/s)")
    omega_c: Optional[float] = Field(
        default=None, gt=0, description="Cavity frequency (rad/s); derived from lambda_0 when absent"
    )
    kappa_m: float = Field(default=TWO_PI * 1e6, gt=0, description="Magnon decay rate (rad/s)")
    kappa_b: float = Field(default=TWO_PI * 100.0, gt=0, description="Mechanical decay rate (rad/s)")
    kappa_c: float = Field(default=TWO_PI * 3e6, gt=0, description="Cavity decay rate (rad/s)")
    G0: float = Field(default=TWO_PI * 10.0, gt=0, description="Bare magnomechanical coupling (rad/s)")
    g0: float = Field(default=TWO_PI * 2e3, gt=0, description="Bare optomechanical coupling (rad/s)")
    T: float = Field(default=0.01, ge=0, description="Bath temperature (K)")


class DriveParams(_ParamBlock):
    """
    Two-tone microwave drive of the magnon mode.

    G± are the operational inputs. When they are absent, the Rabi
    frequencies Omega± must be given and G± = G0·|m±| is derived. Drive
    powers are metadata only.
    """

    G_plus: Optional[float] = Field(default=None, ge=0, description="Stokes coupling (rad/s)")
    G_minus: Optional[float] = Field(default=None, ge=0, description="Anti-Stokes coupling (rad/s)")
    Omega_plus: Optional[float] = Field(default=None, ge=0, description="Stokes-tone Rabi frequency (rad/s)")
    Omega_minus: Optional[float] = Field(default=None, ge=0, description="Anti-Stokes-tone Rabi frequency (rad/s)")
    P_plus: Optional[float] = Field(default=None, ge=0, description="Stokes-tone power (W), metadata")
    P_minus: Optional[float] = Field(default=None, ge=0, description="Anti-Stokes-tone power (W), metadata")

    @model_validator(mode="after")
    def _couplings_resolvable(self) -> "DriveParams":
        has_g = self.G_plus is not None and self.G_minus is not None
        has_omega = self.Omega_plus is not None and self.Omega_minus is not None
        if (self.G_plus is None) != (self.G_minus is None):
            raise ValueError("G_plus and G_minus must be given together")
        if not has_g and not has_omega:
            raise ValueError("either G_plus/G_minus or Omega_plus/Omega_minus is required")
        return self


class PulseParams(_ParamBlock):
    """
    Red-detuned optical pulse used for phonon subtraction.

    `theta` may be pinned directly (or through `tan_theta`); otherwise it is
    derived from the power chain. E, G_c, G and theta_chain are filled in by
    mechcat.physics.params.resolve_pulse and are not meant to be set by hand.
    """

    lambda_0: float = Field(default=1550e-9, gt=0, description="Optical wavelength (m)")
    P0: float = Field(default=50e-12, ge=0, description="Pulse power (W)")
    t: float = Field(default=30e-9, ge=0, description="Pulse duration (s)")
    theta: Optional[float] = Field(
        default=None, ge=0, lt=math.pi / 2, description="Interaction angle (rad), pinned"
    )
    eta: float = Field(default=1.0, gt=0, le=1, description="Photon detection efficiency")

    # Derived by the power chain
    E: Optional[float] = Field(default=None, description="Drive amplitude (1/sqrt(s))")
    G_c: Optional[float] = Field(default=None, description="Effective optomechanical coupling (rad/s)")
    G: Optional[float] = Field(default=None, description="Pulse interaction rate (1/s)")
    theta_chain: Optional[float] = Field(
        default=None, description="Angle the power chain gives, kept even when theta is pinned"
    )

    @model_validator(mode="before")
    @classmethod
    def _tan_theta(cls, data: Any) -> Any:
        if isinstance(data, dict) and "tan_theta" in data:
            data = dict(data)
            tan_theta = data.pop("tan_theta")
            if data.get("theta") is not None:
                raise ValueError("both 'theta' and 'tan_theta' given")
            data["theta"] = None if tan_theta is None else math.atan(float(tan_theta))
        return data
