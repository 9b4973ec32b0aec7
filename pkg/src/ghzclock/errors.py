"""Per-atom error budget of the entangling protocol.

Terms ``e1..e3`` come from growing the GHZ state inside one blockaded
ensemble and are divided by the ensemble size ``n``. Terms ``e4..e7`` come
from one photonic link between clocks and are divided by the number of atoms
in a clock (``atoms_per_clock``, i.e. ``M * n``).
"""

from __future__ import annotations

import math
import warnings
from dataclasses import asdict, dataclass, field
from typing import NamedTuple

from .geometry import check_dim, radius_for
from .params import LowerLevelRates, RydbergConfig, dimensionless_deltas

VARIANTS = ("photonic", "messenger")
TERM_NAMES = ("e1", "e2", "e3", "e4", "e5", "e6", "e7")
TERM_LABELS = {
    "e1": "imperfect blockade",
    "e2": "Rydberg decay",
    "e3": "self-blockade",
    "e4": "r2 decay (non-local)",
    "e5": "photon detection",
    "e6": "memory error",
    "e7": "photon collection",
}

# pair-average prefactors: I/(4 pi^3), 9 I/(64 pi^2), J/(4 pi^6), J (3/4pi)^4 / 4
BLOCKADE_COEF = {"2d": (0.02818, 4), "3d": (0.06079, 3)}
SELF_BLOCKADE_COEF = {"2d": (0.01594, 7), "3d": (0.05544, 5)}
# tau = coef * n**power * hbar a^3 / C12 saturates the smooth-pulse bound
TAU_COEF = {"2d": (2.0, 1.5), "3d": (2.7, 1.0)}
DEFAULT_ATOMS_PER_CLOCK = 2500


@dataclass(frozen=True)
class ErrorInputs:
    n: int
    omega: float
    dim: str
    rydberg: RydbergConfig
    rates: LowerLevelRates = field(default_factory=LowerLevelRates)
    atoms_per_clock: float = DEFAULT_ATOMS_PER_CLOCK
    variant: str = "photonic"

    def __post_init__(self):
        object.__setattr__(self, "dim", check_dim(self.dim))
        if self.variant not in VARIANTS:
            raise ValueError(f"variant must be one of {VARIANTS}, got {self.variant!r}")
        if self.n < 1 or self.n != int(self.n):
            raise ValueError(f"n must be an integer >= 1, got {self.n}")
        # plain int: numpy integers overflow at n**7
        object.__setattr__(self, "n", int(self.n))
        if not self.omega > 0:
            raise ValueError("omega must be positive")
        if self.atoms_per_clock < self.n:
            raise ValueError(
                f"atoms_per_clock={self.atoms_per_clock} is smaller than n={self.n}"
            )

    @property
    def deltas(self) -> tuple[float, float]:
        return dimensionless_deltas(self.rydberg, self.rates.lattice_a)


def e1_imperfect_blockade(inp: ErrorInputs) -> float:
    _, d12 = inp.deltas
    coef, power = BLOCKADE_COEF[inp.dim]
    return (inp.omega / d12) ** 2 * coef * inp.n**power


def e2_rydberg_decay(inp: ErrorInputs) -> float:
    return 6.0 * math.pi / (math.sqrt(inp.n) * inp.omega)


def e3_self_blockade(inp: ErrorInputs) -> float:
    d11, _ = inp.deltas
    coef, power = SELF_BLOCKADE_COEF[inp.dim]
    return (inp.omega / d11) ** 2 * coef * inp.n**power


def pulse_width_tau(inp: ErrorInputs) -> float:
    """Width (s) of the smooth r1 excitation pulse during photon generation."""
    coef, power = TAU_COEF[inp.dim]
    hbar = inp.rydberg.constants.hbar
    return coef * inp.n**power * hbar * inp.rates.lattice_a**3 / inp.rydberg.c12_3


def p_double(inp: ErrorInputs, tau: float | None = None) -> float:
    """Leak probability of the r1 excitation past a single r2 blocker.

    Uses the weakest shift in the cloud, between atoms a diameter apart.
    """
    tau = pulse_width_tau(inp) if tau is None else tau
    hbar = inp.rydberg.constants.hbar
    diameter = 2.0 * radius_for(inp.n, inp.rates.lattice_a, inp.dim)
    shift = inp.rydberg.c12_3 / (hbar * diameter**3)
    return math.pi**2 / 4.0 * math.exp(-((shift * tau) ** 2) / 2.0)


def e4_r2_decay_nonlocal(inp: ErrorInputs) -> float:
    return 4.0 * inp.rydberg.gamma * pulse_width_tau(inp) / inp.atoms_per_clock


def e5_dark_counts(inp: ErrorInputs) -> float:
    r = inp.rates
    return r.gamma_dark * 20.0 / (inp.n * r.gamma_e) / inp.atoms_per_clock


def e6_memory_loss(inp: ErrorInputs) -> float:
    r = inp.rates
    c = inp.rydberg.constants.speed_of_light
    return 4.0 * (2.0 * r.link_length_L / c) * r.gamma_s / inp.atoms_per_clock


def e7_photon_collection(inp: ErrorInputs) -> float:
    r = inp.rates
    ka2 = (r.k_e * r.lattice_a) ** 2
    if inp.dim == "2d":
        eps = ka2 / (3.0 * math.pi * r.finesse_f)
    else:
        eps = ka2 / (3.0 * inp.n ** (1 / 3) * r.finesse_f) * (3.0 / (4.0 * math.pi)) ** (2 / 3)
    return eps / inp.atoms_per_clock


@dataclass(frozen=True)
class ErrorBudget:
    e1: float
    e2: float
    e3: float
    e4: float
    e5: float
    e6: float
    e7: float
    eps_local: float
    eps_nonlocal: float
    E: float
    tau_pulse: float
    p_double: float
    variant: str = "photonic"

    @property
    def terms(self) -> dict[str, float]:
        return {k: getattr(self, k) for k in TERM_NAMES}

    def shares(self) -> dict[str, float]:
        """Percentage of ``E`` carried by each term (zero for terms left out of ``E``)."""
        counted = TERM_NAMES if self.variant == "photonic" else TERM_NAMES[:3]
        return {k: (100.0 * v / self.E if k in counted else 0.0) for k, v in self.terms.items()}

    def to_dict(self) -> dict:
        return asdict(self)


def total_error_per_atom(inp: ErrorInputs) -> ErrorBudget:
    terms = (
        e1_imperfect_blockade(inp),
        e2_rydberg_decay(inp),
        e3_self_blockade(inp),
        e4_r2_decay_nonlocal(inp),
        e5_dark_counts(inp),
        e6_memory_loss(inp),
        e7_photon_collection(inp),
    )
    local = sum(terms[:3])
    if inp.variant == "photonic":
        nonlocal_ = sum(terms[3:])
        E = sum(terms)
    else:
        # the messenger atom replaces photonic links: no link errors at all
        nonlocal_ = 0.0
        E = local
    return ErrorBudget(
        *terms,
        eps_local=local * inp.n,
        eps_nonlocal=nonlocal_ * inp.atoms_per_clock,
        E=E,
        tau_pulse=pulse_width_tau(inp),
        p_double=p_double(inp),
        variant=inp.variant,
    )


class ClockErrorSplit(NamedTuple):
    eps_tot: float
    per_atom_estimate: float
    rel_diff: float


def clock_error_split(budget: ErrorBudget, K: int, M: int, n: int) -> ClockErrorSplit:
    """Total contrast loss ``(K-1) eps_nonlocal + K M eps_local`` of a ``K``-clock network.

    Also returns ``N * E`` (which treats ``K - 1`` as ``K``) and their relative
    difference; a warning is issued when that difference exceeds ``1/K``.
    """
    if K < 1 or M < 1:
        raise ValueError("K and M must be >= 1")
    eps_tot = (K - 1) * budget.eps_nonlocal + K * M * budget.eps_local
    estimate = K * M * n * budget.E
    rel = abs(eps_tot - estimate) / eps_tot if eps_tot > 0 else 0.0
    if rel > 1.0 / K:
        warnings.warn(
            f"N*E differs from the exact split by {rel:.1%} (> 1/K)", stacklevel=2
        )
    return ClockErrorSplit(eps_tot, estimate, rel)
