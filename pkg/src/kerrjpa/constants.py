"""Physical constants and unit helpers.

Values are CODATA 2018 as shipped with :mod:`scipy.constants`.
"""

from dataclasses import dataclass

import numpy as np
import scipy.constants as cst


@dataclass(frozen=True)
class PhysConstants:
    hbar: float = cst.hbar
    k_B: float = cst.k
    # reduced flux quantum hbar / 2e
    phi0: float = cst.hbar / (2 * cst.e)

    def __post_init__(self):
        for name in ("hbar", "k_B", "phi0"):
            if not getattr(self, name) > 0:
                raise ValueError(f"{name} must be strictly positive")


CONST = PhysConstants()
HBAR = CONST.hbar
K_B = CONST.k_B
PHI0 = CONST.phi0

TWO_PI = 2 * np.pi
SQRT3 = np.sqrt(3.0)


def to_db(x):
    """Linear power ratio -> dB."""
    return 10 * np.log10(x)


def from_db(x_db):
    """dB -> linear power ratio."""
    return 10 ** (np.asarray(x_db, dtype=float) / 10)


def watts_to_dbm(p_w):
    return 10 * np.log10(p_w) + 30


def dbm_to_watts(p_dbm):
    return 10 ** ((p_dbm - 30) / 10)
