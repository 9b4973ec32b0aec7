"""Physical constants and principal-quantum-number scaling laws for Yb.

Everything is stored in SI units. Atomic-unit dispersion coefficients are
converted once, when a :class:`RydbergConfig` is built.

Notes
-----
The Rydberg loss rate is the extrapolated spontaneous-emission rate only.
Reaching it near ``n_tilde ~ 100`` presumes a cooled black-body environment,
and photoionization in the trapping light is assumed negligible; neither
enters the model.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field, fields, replace

import scipy.constants as sc

N_TILDE_MIN = 50
N_TILDE_MAX = 150

# E_h a_0^6 and E_h a_0^3 in SI
AU_C6 = 9.573e-80
AU_C3 = 6.460e-49


@dataclass(frozen=True)
class PhysicalConstants:
    hbar: float = sc.hbar
    atomic_unit_C6: float = AU_C6
    atomic_unit_C3: float = AU_C3
    speed_of_light: float = sc.c

    def __post_init__(self):
        for f in fields(self):
            if not getattr(self, f.name) > 0:
                raise ValueError(f"{f.name} must be positive")


CONSTANTS = PhysicalConstants()


def rydberg_gamma(n_tilde: float) -> float:
    """Rydberg loss rate in 1/s, ``8.403e8 / (n_tilde - 4.279)**3``."""
    n_tilde = float(n_tilde)
    if n_tilde < 5:
        raise ValueError(f"n_tilde must be >= 5, got {n_tilde}")
    return 8.403e8 / (n_tilde - 4.279) ** 3


def c11_coefficient_au(n_tilde: float) -> float:
    # float first: numpy integers overflow at n_tilde**11
    n_tilde = float(n_tilde)
    if n_tilde < 4:
        raise ValueError(f"C11 prefactor is not positive for n_tilde={n_tilde}")
    return (-0.116 + 0.0339 * n_tilde) * n_tilde**11


def c11_coefficient(n_tilde: float, constants: PhysicalConstants = CONSTANTS) -> float:
    """Van der Waals coefficient between two r1 atoms, in J m^6."""
    return c11_coefficient_au(n_tilde) * constants.atomic_unit_C6


def c12_coefficient_au(n_tilde: float) -> float:
    n_tilde = float(n_tilde)
    if n_tilde < 1:
        raise ValueError(f"n_tilde must be >= 1, got {n_tilde}")
    return (0.149 + 0.00077 * n_tilde) * n_tilde**4


def c12_coefficient(n_tilde: float, constants: PhysicalConstants = CONSTANTS) -> float:
    """Dipole-dipole coefficient between an r1 and an r2 atom, in J m^3."""
    return c12_coefficient_au(n_tilde) * constants.atomic_unit_C3


@dataclass(frozen=True)
class RydbergConfig:
    """Rydberg level pair at principal quantum number ``n_tilde``.

    ``n_tilde`` may be real-valued; the command line only passes integers.
    Magnitudes of the interaction coefficients are used throughout.
    """

    n_tilde: float
    gamma: float = field(init=False)
    c11_6: float = field(init=False)
    c12_3: float = field(init=False)
    constants: PhysicalConstants = field(default=CONSTANTS, repr=False)

    def __post_init__(self):
        if not N_TILDE_MIN <= self.n_tilde <= N_TILDE_MAX:
            raise ValueError(
                f"n_tilde={self.n_tilde} outside [{N_TILDE_MIN}, {N_TILDE_MAX}]"
            )
        object.__setattr__(self, "gamma", rydberg_gamma(self.n_tilde))
        object.__setattr__(self, "c11_6", c11_coefficient(self.n_tilde, self.constants))
        object.__setattr__(self, "c12_3", c12_coefficient(self.n_tilde, self.constants))


@dataclass(frozen=True)
class LowerLevelRates:
    """Rates and lengths of the non-Rydberg part of the setup (SI units)."""

    gamma_s: float = 0.069
    gamma_e: float = 1.8e8
    gamma_dark: float = 10.0
    link_length_L: float = 1e4
    lattice_a: float = 275.75e-9
    k_e: float = 2 * math.pi / 1.4e-6
    finesse_f: float = 100.0

    def __post_init__(self):
        for f in fields(self):
            if not getattr(self, f.name) > 0:
                raise ValueError(f"{f.name} must be positive, got {getattr(self, f.name)}")
        if self.link_length_L > 1e4:
            warnings.warn(
                f"link_length_L={self.link_length_L:g} m exceeds the 10 km design range",
                stacklevel=2,
            )

    def replace(self, **changes) -> "LowerLevelRates":
        return replace(self, **changes)


def dimensionless_deltas(
    cfg: RydbergConfig, a: float, hbar: float | None = None
) -> tuple[float, float]:
    """Interaction strengths at one lattice spacing in units of the loss rate.

    Returns
    -------
    delta11, delta12 : float
        ``C11 / (hbar a^6 gamma)`` and ``C12 / (hbar a^3 gamma)``.
    """
    if a <= 0:
        raise ValueError("lattice constant must be positive")
    hbar = cfg.constants.hbar if hbar is None else hbar
    delta11 = cfg.c11_6 / (hbar * a**6 * cfg.gamma)
    delta12 = cfg.c12_3 / (hbar * a**3 * cfg.gamma)
    return delta11, delta12
