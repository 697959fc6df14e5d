"""
Physical constants used by every derived quantity.

Values come from scipy.constants (CODATA 2018 in the pinned scipy range) and
are frozen at import so a run manifest can record exactly what was used.
"""

from scipy import constants as _codata

HBAR: float = _codata.hbar
K_B: float = _codata.k
C_LIGHT: float = _codata.c

CONSTANTS_VERSION = "CODATA-2018"


def constants_table() -> dict:
    """Return the constants as a plain mapping for run metadata."""
    return {
        "version": CONSTANTS_VERSION,
        "hbar": HBAR,
        "k_B": K_B,
        "c": C_LIGHT,
    }
