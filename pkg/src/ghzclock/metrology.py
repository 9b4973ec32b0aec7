"""Parity readout statistics, Fisher information and clock stability of a GHZ network."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np
from scipy import integrate

MAX_ENUM_ATOMS = 20
# crossover between the low- and high-contrast approximations of the mean Fisher information
APPROX_CROSSOVER = 0.7


@dataclass(frozen=True)
class GhzMeasurementModel:
    """Imperfect ``N``-atom GHZ state: a pure GHZ part with weight ``c`` plus a dephased mixture."""

    N: int
    contrast_c: float
    fidelity_F: float = field(init=False)

    def __post_init__(self):
        if self.N < 1:
            raise ValueError("N must be >= 1")
        if not 0.0 <= self.contrast_c <= 1.0:
            raise ValueError(f"contrast must lie in [0, 1], got {self.contrast_c}")
        object.__setattr__(self, "fidelity_F", (1.0 + self.contrast_c) / 2.0)

    @classmethod
    def from_fidelity(cls, N: int, fidelity: float) -> "GhzMeasurementModel":
        return cls(N, 2.0 * fidelity - 1.0)

    @classmethod
    def from_error(cls, N: int, E: float) -> "GhzMeasurementModel":
        """Contrast ``exp(-E N)`` for a per-atom error ``E``."""
        return cls(N, math.exp(-E * N))


def fidelity_from_error(E: float, N: float) -> float:
    return (1.0 + math.exp(-E * N)) / 2.0


def parity_probability(p: int, phi: float, model: GhzMeasurementModel) -> float:
    if p not in (0, 1):
        raise ValueError("parity must be 0 or 1")
    sign = 1 - 2 * p
    return (1.0 + model.contrast_c * sign * math.cos(model.N * phi)) / 2.0


def bitstring_probability(q: Sequence[int], phi: float, model: GhzMeasurementModel) -> float:
    """Probability of one full single-atom readout record ``q`` (length ``N``)."""
    N = model.N
    if len(q) != N:
        raise ValueError(f"record length {len(q)} does not match N={N}")
    if N > MAX_ENUM_ATOMS:
        raise ValueError(f"N={N} exceeds the enumeration guard ({MAX_ENUM_ATOMS})")
    c = model.contrast_c
    sign = -1 if sum(q) % 2 else 1
    # the GHZ part spreads (1 +/- cos) evenly over the 2^(N-1) strings of each parity
    return (c * (1.0 + sign * math.cos(N * phi)) + (1.0 - c)) / 2**N


def fisher_information(phi: float, model: GhzMeasurementModel) -> float:
    """Fisher information about ``phi`` carried by one parity outcome."""
    N, c = model.N, model.contrast_c
    if c == 0.0:
        return 0.0
    s2 = math.sin(N * phi) ** 2
    # multiplied through by c^2, with 1 - c^2 cos^2 as (1 - c^2) + c^2 sin^2:
    # no overflow at small c and an exact c = 1 limit
    c2 = c * c
    den = (1.0 - c2) + c2 * s2
    if den == 0.0:
        return float(N * N)
    return N * N * c2 * s2 / den


def average_fisher(model: GhzMeasurementModel) -> float:
    """Phase-averaged Fisher information, by quadrature over one fringe period."""
    N, c = model.N, model.contrast_c
    if c == 0.0:
        return 0.0
    if c == 1.0:
        return float(N * N)
    half = math.pi / N
    val, err = integrate.quad(
        lambda phi: fisher_information(phi, model), -half, half,
        points=[0.0], epsabs=1e-13, epsrel=1e-12, limit=400,
    )
    if err > 1e-8 * N * N:
        raise RuntimeError(f"Fisher quadrature reached only {err:.2e}")
    return val / (2.0 * half)


def average_fisher_approx(model: GhzMeasurementModel) -> float:
    """Two-branch approximation: ``N^2 c^2 / 2`` at low contrast, ``N^2 (1 - sqrt(2(1-c)))`` at high."""
    N, c = model.N, model.contrast_c
    if c <= APPROX_CROSSOVER:
        return N * N * c * c / 2.0
    return N * N * (1.0 - math.sqrt(2.0 * (1.0 - c)))


def phase_uncertainty(model: GhzMeasurementModel, repetitions: int = 1) -> float:
    """Cramér–Rao phase error, taken with equality: ``(nu * mean Fisher)^(-1/2)``."""
    return (repetitions * average_fisher(model)) ** -0.5


def allan_deviation_entangled(
    N: float, model: GhzMeasurementModel, omega0: float, tau: float
) -> float:
    if N < 2:
        raise ValueError("N must be >= 2")
    if tau <= 0 or omega0 <= 0:
        raise ValueError("omega0 and tau must be positive")
    c = model.contrast_c
    if c == 0.0:
        return math.inf
    return (8.0 / math.pi) * math.sqrt(math.log(N)) / N / (c * omega0 * tau)


def allan_deviation_unentangled(N: float, omega0: float, tau: float) -> float:
    if N < 1:
        raise ValueError("N must be >= 1")
    return 1.0 / (omega0 * tau * math.sqrt(N))


def coherence_ok(N: float, tau: float, gamma_at: float) -> bool:
    """Whether ``tau`` is within the collectively reduced atomic coherence time."""
    return tau < 1.0 / (gamma_at * N)


def gain(N: float | np.ndarray, E: float) -> float | np.ndarray:
    """Stability gain of the entangled network over independent atoms, ``e^{-EN} (pi/8) sqrt(N/ln N)``."""
    N_arr = np.asarray(N, dtype=float)
    if np.any(N_arr <= 1):
        raise ValueError("N must exceed 1")
    if E < 0:
        raise ValueError("E must be non-negative")
    # prefactor folded into the exponent so large E*N never passes through a subnormal
    out = np.exp(-E * N_arr + np.log(math.pi / 8.0) + 0.5 * np.log(N_arr / np.log(N_arr)))
    return float(out) if out.ndim == 0 else out


@dataclass(frozen=True)
class StabilityReport:
    """Allan deviations at equal ``(N, omega0, tau)``.

    ``sigma_ent`` is the perfect-contrast value; the contrast penalty enters
    only through ``gain_G = sigma_nonent / (sigma_ent / c)``.
    """

    sigma_ent: float
    sigma_nonent: float
    gain_G: float
    omega0: float
    tau_avg: float
    contrast_c: float = 1.0


def stability_report(model: GhzMeasurementModel, omega0: float = 1.0, tau: float = 1.0) -> StabilityReport:
    perfect = GhzMeasurementModel(model.N, 1.0)
    sig_ent = allan_deviation_entangled(model.N, perfect, omega0, tau)
    sig_non = allan_deviation_unentangled(model.N, omega0, tau)
    c = model.contrast_c
    # c * sig_non / sig_ent rather than sig_non / (sig_ent / c): c may underflow to 0
    return StabilityReport(sig_ent, sig_non, c * sig_non / sig_ent, omega0, tau, c)
