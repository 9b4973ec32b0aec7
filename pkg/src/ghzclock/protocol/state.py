"""Sparse amplitude state over collective occupation labels.

Every register is a set of ``n`` identical atoms kept in the fully symmetric
subspace, so a register is described by how many atoms sit in each level.
Ground-state occupation is implicit: ``n_g = n - (n_f + n_s + n_e + n_r1 + n_r2)``.
A lone atom (the messenger) is simply a register with ``n = 1``.

A basis label is ``(register_occupations, photon_occupations)`` where the
first entry holds one 5-tuple per register and the second one count per
photonic time-bin mode.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Iterator

import numpy as np

LEVELS = ("g", "f", "s", "e", "r1", "r2")
# position of each non-ground level inside a register tuple
SLOT = {"f": 0, "s": 1, "e": 2, "r1": 3, "r2": 4}
RYDBERG = ("r1", "r2")
PRUNE = 1e-14
NORM_TOL = 1e-12
MAX_ATOMS_PER_REGISTER = 12

Occ = tuple[int, int, int, int, int]
Label = tuple[tuple[Occ, ...], tuple[int, ...]]


class ProtocolError(RuntimeError):
    """A precondition of the protocol is violated by the current state."""


@dataclass(frozen=True)
class CollectiveState:
    """Immutable sparse state. Operations return new instances."""

    names: tuple[str, ...]
    sizes: tuple[int, ...]
    modes: tuple[str, ...] = ()
    amps: dict = field(default_factory=dict, compare=False)

    def __post_init__(self):
        if len(self.names) != len(self.sizes):
            raise ValueError("names and sizes differ in length")
        if len(set(self.names)) != len(self.names) or len(set(self.modes)) != len(self.modes):
            raise ValueError("register and mode names must be unique")
        for s in self.sizes:
            if not 1 <= s <= MAX_ATOMS_PER_REGISTER:
                raise ValueError(f"register size {s} outside [1, {MAX_ATOMS_PER_REGISTER}]")

    # -- construction -------------------------------------------------------
    @classmethod
    def ground(cls, registers: dict[str, int]) -> "CollectiveState":
        names = tuple(registers)
        sizes = tuple(int(v) for v in registers.values())
        label = (tuple((0, 0, 0, 0, 0) for _ in names), ())
        return cls(names, sizes, (), {label: 1.0 + 0j})

    def with_amps(self, amps: dict, *, names=None, sizes=None, modes=None) -> "CollectiveState":
        pruned = {k: v for k, v in amps.items() if abs(v) > PRUNE}
        return CollectiveState(
            self.names if names is None else names,
            self.sizes if sizes is None else sizes,
            self.modes if modes is None else modes,
            pruned,
        )

    # -- queries ------------------------------------------------------------
    def index(self, name: str) -> int:
        try:
            return self.names.index(name)
        except ValueError:
            raise KeyError(f"no register named {name!r}") from None

    def mode_index(self, mode: str) -> int:
        try:
            return self.modes.index(mode)
        except ValueError:
            raise KeyError(f"no photon mode named {mode!r}") from None

    def n_ground(self, occ: Occ, reg: int) -> int:
        return self.sizes[reg] - sum(occ)

    def count(self, label: Label, reg: int, level: str) -> int:
        occ = label[0][reg]
        return self.n_ground(occ, reg) if level == "g" else occ[SLOT[level]]

    def norm(self) -> float:
        return math.sqrt(sum(abs(a) ** 2 for a in self.amps.values()))

    def check_norm(self) -> None:
        if abs(self.norm() ** 2 - 1.0) > NORM_TOL:
            raise ProtocolError(f"norm drifted to {self.norm():.15f}")

    def items(self) -> Iterator[tuple[Label, complex]]:
        return iter(self.amps.items())

    def __len__(self) -> int:
        return len(self.amps)

    # -- structure edits ----------------------------------------------------
    def add_modes(self, *modes: str) -> "CollectiveState":
        for m in modes:
            if m in self.modes:
                raise ProtocolError(f"photon mode {m!r} already in use")
        k = len(modes)
        amps = {(regs, phot + (0,) * k): a for (regs, phot), a in self.amps.items()}
        return self.with_amps(amps, modes=self.modes + tuple(modes))

    def add_register(self, name: str, size: int) -> "CollectiveState":
        if name in self.names:
            raise ProtocolError(f"register {name!r} already exists")
        amps = {(regs + ((0, 0, 0, 0, 0),), phot): a for (regs, phot), a in self.amps.items()}
        return self.with_amps(amps, names=self.names + (name,), sizes=self.sizes + (size,))

    def drop_register(self, name: str) -> "CollectiveState":
        """Remove a register that is in a definite (product) occupation."""
        i = self.index(name)
        seen = {regs[i] for regs, _ in self.amps}
        if len(seen) != 1:
            raise ProtocolError(f"register {name!r} is still entangled; measure it first")
        amps = {(regs[:i] + regs[i + 1 :], phot): a for (regs, phot), a in self.amps.items()}
        return self.with_amps(
            amps,
            names=self.names[:i] + self.names[i + 1 :],
            sizes=self.sizes[:i] + self.sizes[i + 1 :],
        )

    def drop_modes(self, *modes: str) -> "CollectiveState":
        """Remove photon modes that are empty in every branch."""
        idx = sorted(self.mode_index(m) for m in modes)
        for (_, phot) in self.amps:
            if any(phot[j] for j in idx):
                raise ProtocolError("cannot drop an occupied photon mode")
        keep = [j for j in range(len(self.modes)) if j not in idx]
        amps = {(regs, tuple(phot[j] for j in keep)): a for (regs, phot), a in self.amps.items()}
        return self.with_amps(amps, modes=tuple(self.modes[j] for j in keep))

    # -- conversion ---------------------------------------------------------
    def overlap(self, other: "CollectiveState") -> complex:
        if (self.names, self.sizes, self.modes) != (other.names, other.sizes, other.modes):
            raise ValueError("states live on different registers or modes")
        return sum(np.conj(a) * other.amps.get(k, 0.0) for k, a in self.amps.items())

    def fidelity(self, other: "CollectiveState") -> float:
        """``|<self|other>|^2``, blind to global phase."""
        return float(abs(self.overlap(other)) ** 2)

    def describe(self, tol: float = 1e-12) -> list[dict]:
        """Readable amplitude listing, used for JSON traces."""
        rows = []
        for (regs, phot), a in sorted(self.amps.items()):
            if abs(a) <= tol:
                continue
            regs_txt = {
                name: {lvl: occ[SLOT[lvl]] for lvl in SLOT if occ[SLOT[lvl]]}
                for name, occ in zip(self.names, regs)
            }
            rows.append({
                "registers": regs_txt,
                "photons": {m: c for m, c in zip(self.modes, phot) if c},
                "re": float(a.real),
                "im": float(a.imag),
            })
        return rows


def product_state(
    names: tuple[str, ...], sizes: tuple[int, ...], branches: dict[tuple[Occ, ...], complex],
    modes: tuple[str, ...] = (),
) -> CollectiveState:
    """Normalised state from explicit register-occupation branches (no photons)."""
    amps = {(regs, (0,) * len(modes)): complex(a) for regs, a in branches.items()}
    nrm = math.sqrt(sum(abs(a) ** 2 for a in amps.values()))
    return CollectiveState(names, sizes, modes, {k: v / nrm for k, v in amps.items()})


def occ(f: int = 0, s: int = 0, e: int = 0, r1: int = 0, r2: int = 0) -> Occ:
    return (f, s, e, r1, r2)
