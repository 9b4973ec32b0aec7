"""Two-stage network design: minimise the per-atom error, then maximise the gain.

Minimising ``E`` over ``(n, omega)`` first and then maximising the gain over
the total atom number ``N`` gives the same optimum as the joint problem,
because both the best gain and the best ``N`` fall monotonically with ``E``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Iterable, Union

import numpy as np
from scipy import optimize as sopt

from .errors import DEFAULT_ATOMS_PER_CLOCK, ErrorBudget, ErrorInputs, total_error_per_atom
from .geometry import check_dim
from .metrology import fidelity_from_error, gain
from .params import N_TILDE_MAX, N_TILDE_MIN, LowerLevelRates, RydbergConfig

N_SEARCH_MIN = 2
N_SEARCH_MAX = 5000
LOG_OMEGA_BOUNDS = (2.0, 8.0)
DEFAULT_OMEGA = 1e5
_COARSE_POINTS = 64


class OptimizationError(RuntimeError):
    pass


@dataclass(frozen=True)
class OptimizationResult:
    n_opt: int
    omega_opt: float
    E_min: float
    n_tilde: float
    dim: str
    budget_at_opt: ErrorBudget
    variant: str = "photonic"
    omega_free: bool = False
    certificate: dict = field(default_factory=dict, compare=False)


@dataclass(frozen=True)
class ScanFailure:
    n_tilde: float
    dim: str
    reason: str


@dataclass(frozen=True)
class NetworkPlan:
    N_max: int
    K_opt: int
    M: int
    G_max: float
    fidelity_F: float
    contrast_c: float
    E_min: float
    N_analytic: float
    G_closed_form: float


class _Objective:
    """``E(n, omega)`` at fixed Rydberg level, geometry and variant."""

    def __init__(self, rydberg, dim, variant, rates, atoms_per_clock):
        self.rydberg = rydberg
        self.dim = dim
        self.variant = variant
        self.rates = rates
        self.atoms_per_clock = atoms_per_clock

    def inputs(self, n: int, omega: float) -> ErrorInputs:
        return ErrorInputs(
            n=int(n), omega=float(omega), dim=self.dim, rydberg=self.rydberg,
            rates=self.rates, atoms_per_clock=self.atoms_per_clock, variant=self.variant,
        )

    def E(self, n: int, omega: float) -> float:
        return total_error_per_atom(self.inputs(n, omega)).E

    def best_omega(self, n: int) -> tuple[float, float]:
        res = sopt.minimize_scalar(
            lambda lw: self.E(n, 10.0**lw),
            bounds=LOG_OMEGA_BOUNDS, method="bounded", options={"xatol": 1e-9},
        )
        return 10.0 ** float(res.x), float(res.fun)


def _argmin_first(values: Iterable[float]) -> int:
    """Index of the minimum, ties resolved toward the first (smallest n)."""
    best_i, best = 0, math.inf
    for i, v in enumerate(values):
        if v < best:
            best_i, best = i, v
    return best_i


def minimize_E(
    n_tilde: float,
    dim: str,
    omega: Union[float, str] = DEFAULT_OMEGA,
    variant: str = "photonic",
    rates: LowerLevelRates | None = None,
    atoms_per_clock: float = DEFAULT_ATOMS_PER_CLOCK,
) -> OptimizationResult:
    """Integer ensemble size (and optionally Rabi frequency) minimising ``E``.

    Parameters
    ----------
    omega : float or ``"free"``
        Rabi frequency in units of the Rydberg loss rate. ``"free"`` optimises
        it for every candidate ``n`` as well.

    Raises
    ------
    OptimizationError
        If the minimum sits on the edge of the search range, i.e. ``E`` is
        monotone there.
    """
    dim = check_dim(dim)
    rates = rates or LowerLevelRates()
    obj = _Objective(RydbergConfig(n_tilde), dim, variant, rates, atoms_per_clock)
    free = omega == "free"
    if not free:
        omega = float(omega)
        if omega <= 0:
            raise ValueError("omega must be positive")

    def at(n):
        return obj.best_omega(n) if free else (omega, obj.E(n, omega))

    n_hi = int(min(N_SEARCH_MAX, atoms_per_clock))
    if n_hi <= N_SEARCH_MIN + 1:
        raise OptimizationError(f"search range [{N_SEARCH_MIN}, {n_hi}] is empty")
    grid = np.unique(np.round(np.geomspace(N_SEARCH_MIN, n_hi, _COARSE_POINTS)).astype(int))
    coarse = [at(n)[1] for n in grid]
    i = _argmin_first(coarse)
    if i == 0 or i == len(grid) - 1:
        raise OptimizationError(
            f"E is monotone over n in [{N_SEARCH_MIN}, {n_hi}] at n_tilde={n_tilde}, dim={dim}"
        )
    candidates = np.arange(grid[i - 1], grid[i + 1] + 1)
    fine = [at(n) for n in candidates]
    j = _argmin_first(v for _, v in fine)
    n_opt = int(candidates[j])
    omega_opt = fine[j][0]
    budget = total_error_per_atom(obj.inputs(n_opt, omega_opt))

    cert = {
        "E_n_minus_1": obj.E(n_opt - 1, omega_opt) if n_opt > N_SEARCH_MIN else math.inf,
        "E_n_plus_1": obj.E(n_opt + 1, omega_opt) if n_opt < n_hi else math.inf,
    }
    if free:
        cert["E_omega_low"] = obj.E(n_opt, omega_opt * (1 - 1e-3))
        cert["E_omega_high"] = obj.E(n_opt, omega_opt * (1 + 1e-3))
    return OptimizationResult(
        n_opt=n_opt, omega_opt=omega_opt, E_min=budget.E, n_tilde=n_tilde, dim=dim,
        budget_at_opt=budget, variant=variant, omega_free=free, certificate=cert,
    )


def scan_ntilde(
    n_tildes: Iterable[float],
    dim: str,
    omega: Union[float, str] = DEFAULT_OMEGA,
    variant: str = "photonic",
    rates: LowerLevelRates | None = None,
    atoms_per_clock: float = DEFAULT_ATOMS_PER_CLOCK,
) -> list[Union[OptimizationResult, ScanFailure]]:
    """One :func:`minimize_E` per principal quantum number, in ascending order.

    A failing point is recorded as :class:`ScanFailure` and the scan goes on.
    """
    out = []
    for nt in sorted(n_tildes):
        if not N_TILDE_MIN <= nt <= N_TILDE_MAX:
            raise ValueError(f"n_tilde={nt} outside [{N_TILDE_MIN}, {N_TILDE_MAX}]")
        try:
            out.append(minimize_E(nt, dim, omega, variant, rates, atoms_per_clock))
        except (OptimizationError, ValueError) as exc:
            out.append(ScanFailure(nt, check_dim(dim), str(exc)))
    return out


def _gain_argmax(E: float, lo: int, hi: int) -> int:
    # integer ternary search on the unimodal gain curve
    while hi - lo > 2:
        m1 = lo + (hi - lo) // 3
        m2 = hi - (hi - lo) // 3
        if gain(m1, E) < gain(m2, E):
            lo = m1 + 1
        else:
            hi = m2
    return max(range(lo, hi + 1), key=lambda N: gain(N, E))


def maximize_gain(
    E_min: float, atoms_per_clock: float = DEFAULT_ATOMS_PER_CLOCK, n_opt: int = 1
) -> NetworkPlan:
    """Total entangled atom number with the largest gain at per-atom error ``E_min``."""
    if not E_min > 0:
        raise ValueError("E_min must be positive")
    N_hi = max(3, int(10.0 / E_min))
    guess = _gain_argmax(E_min, 2, N_hi)
    # exhaustive check in a +-5% bracket around the unimodal estimate
    lo = max(2, int(guess * 0.95))
    hi = min(N_hi, int(math.ceil(guess * 1.05)) + 1)
    Ns = np.arange(lo, hi + 1)
    G = gain(Ns, E_min)
    k = int(np.argmax(G))
    N_max, G_max = int(Ns[k]), float(G[k])
    F = fidelity_from_error(E_min, N_max)
    return NetworkPlan(
        N_max=N_max,
        K_opt=int(round(N_max / atoms_per_clock)),
        M=int(round(atoms_per_clock / n_opt)),
        G_max=G_max,
        fidelity_F=F,
        contrast_c=2.0 * F - 1.0,
        E_min=E_min,
        N_analytic=1.0 / (2.0 * E_min),
        G_closed_form=gain_closed_form(E_min),
    )


def gain_closed_form(E: float) -> float:
    """Large-``N`` closed form ``(pi/8) [E ln(1/2E)]^(-1/2)``; an overestimate, kept for comparison."""
    return math.pi / 8.0 * (E * math.log(1.0 / (2.0 * E))) ** -0.5


def plan_network(
    n_tilde: float,
    dim: str,
    omega: Union[float, str] = DEFAULT_OMEGA,
    variant: str = "photonic",
    rates: LowerLevelRates | None = None,
    atoms_per_clock: float = DEFAULT_ATOMS_PER_CLOCK,
) -> tuple[OptimizationResult, NetworkPlan]:
    opt = minimize_E(n_tilde, dim, omega, variant, rates, atoms_per_clock)
    return opt, maximize_gain(opt.E_min, atoms_per_clock, opt.n_opt)
