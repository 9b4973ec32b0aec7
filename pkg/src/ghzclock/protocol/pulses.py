"""Ideal collective operations on a :class:`CollectiveState`.

Rotation convention: ``[phi]_{a,b}`` with axis ``alpha`` is
``exp(-i phi/2 (e^{i alpha} b^dag a + h.c.))`` acting in the symmetric
subspace, so a single atom obeys ``[pi]_{a,b} |a> = -i |b>``.
"""

from __future__ import annotations

import math
from collections import defaultdict
from dataclasses import dataclass
from functools import lru_cache
from typing import Optional

import numpy as np
from scipy.linalg import expm

from .state import LEVELS, RYDBERG, SLOT, CollectiveState, ProtocolError

# pairs a rotation may address (unordered)
ALLOWED_PAIRS = frozenset(
    frozenset(p)
    for p in (("g", "f"), ("g", "s"), ("g", "r1"), ("f", "r1"), ("f", "s"), ("s", "r2"), ("e", "r1"))
)
PULSE_KINDS = (
    "rabi_pulse", "photon_emit", "bell_measure", "parity_measure", "s_measure", "flip", "phase_shift",
)
UNITARY_KINDS = ("rabi_pulse", "photon_emit", "flip", "phase_shift")


@dataclass(frozen=True)
class PulseOp:
    """One protocol instruction.

    ``blockade_with`` lists registers whose Rydberg excitations block this
    pulse in addition to the target's own. ``reservoir`` marks g-pulses that
    address the ground reservoir with coupling ``sqrt(n)`` regardless of how
    many atoms already sit in the spin-wave modes.
    """

    kind: str
    target: str
    levels: tuple[str, ...] = ()
    phase: float = 0.0
    axis: float = 0.0
    blockade_with: tuple[str, ...] = ()
    reservoir: bool = False
    mode: Optional[str] = None

    def __post_init__(self):
        if self.kind not in PULSE_KINDS:
            raise ValueError(f"unknown pulse kind {self.kind!r}")
        for lvl in self.levels:
            if lvl not in LEVELS:
                raise ValueError(f"unknown level {lvl!r}")
        if not (math.isfinite(self.phase) and math.isfinite(self.axis)):
            raise ValueError("pulse phase must be finite")
        if self.kind == "rabi_pulse":
            if len(self.levels) != 2 or frozenset(self.levels) not in ALLOWED_PAIRS:
                raise ValueError(f"undefined level pair {self.levels}")


def apply_pulse(state: CollectiveState, op: PulseOp) -> CollectiveState:
    """Apply a unitary instruction. Measurement kinds have their own functions."""
    if op.kind == "rabi_pulse":
        a, b = op.levels
        return rabi_pulse(state, op.target, a, b, op.phase, op.axis, op.blockade_with, op.reservoir)
    if op.kind == "photon_emit":
        return photon_emit(state, op.target, op.mode)
    if op.kind == "flip":
        return flip(state, op.target, op.levels[0])
    if op.kind == "phase_shift":
        return phase_shift(state, op.target, op.levels[0], op.phase)
    raise ValueError(f"{op.kind!r} is a measurement; use the measure_* functions")


@lru_cache(maxsize=4096)
def rotation_matrix(couplings: tuple[float, ...], phi: float, axis: float) -> np.ndarray:
    """Unitary of ``[phi]`` on one ladder of states joined by the given couplings."""
    d = len(couplings) + 1
    h = np.zeros((d, d), dtype=complex)
    w = 0.5 * phi * np.exp(1j * axis)
    for k, c in enumerate(couplings):
        h[k + 1, k] = w * c
        h[k, k + 1] = np.conj(w) * c
    u = expm(-1j * h)
    u.setflags(write=False)
    return u


def _rydberg_total(regs, group) -> int:
    return sum(regs[j][SLOT["r1"]] + regs[j][SLOT["r2"]] for j in group)


def rabi_pulse(
    state: CollectiveState,
    target: str,
    a: str,
    b: str,
    phi: float,
    axis: float = 0.0,
    blockade_with: tuple[str, ...] = (),
    reservoir: bool = False,
) -> CollectiveState:
    """Collective two-level rotation ``[phi]_{a,b}`` on one register.

    Branches in which the rotation would put a second Rydberg excitation
    into the target (or any ``blockade_with`` register) are truncated, which
    is the ideal blockade.
    """
    if a == b or frozenset((a, b)) not in ALLOWED_PAIRS:
        raise ValueError(f"undefined level pair ({a}, {b})")
    if reservoir and not ("g" in (a, b) and (a in RYDBERG or b in RYDBERG)):
        raise ValueError("reservoir coupling applies to g <-> Rydberg pulses only")
    i = state.index(target)
    size = state.sizes[i]
    group = (i,) + tuple(state.index(n) for n in blockade_with)
    rydberg_pulse = a in RYDBERG or b in RYDBERG
    sa = SLOT.get(a)
    sb = SLOT[b] if b != "g" else None

    chains: dict = defaultdict(dict)
    for (regs, phot), amp in state.items():
        o = list(regs[i])
        na = state.n_ground(regs[i], i) if a == "g" else o[sa]
        nb = state.n_ground(regs[i], i) if b == "g" else o[sb]
        if sa is not None:
            o[sa] = 0
        if sb is not None:
            o[sb] = 0
        base = (regs[:i] + (tuple(o),) + regs[i + 1 :], phot, na + nb)
        chains[base][nb] = chains[base].get(nb, 0) + amp

    out: dict = defaultdict(complex)
    for (regs0, phot, T), vec in chains.items():

        def label(k):
            o = list(regs0[i])
            if sa is not None:
                o[sa] = T - k
            if sb is not None:
                o[sb] = k
            return regs0[:i] + (tuple(o),) + regs0[i + 1 :]

        ks = list(range(T + 1))
        if rydberg_pulse:
            ks = [k for k in ks if _rydberg_total(label(k), group) <= 1]
            for k in vec:
                if k not in ks:
                    raise ProtocolError("source branch already violates the blockade")
        # keep the connected run of allowed k containing the populated ones
        lo, hi = min(vec), max(vec)
        while lo - 1 in ks:
            lo -= 1
        while hi + 1 in ks:
            hi += 1
        if any(k not in ks for k in range(lo, hi + 1)):
            raise ProtocolError("populated branches are split by the blockade")
        if hi == lo:
            if reservoir and T == 0 and _rydberg_total(label(lo), group) == 0:
                raise ProtocolError(
                    f"collective phase undefined: no ground atom left in {target!r}"
                )
            out[(label(lo), phot)] += vec[lo]
            continue
        couplings = []
        for k in range(lo, hi):
            if reservoir:
                couplings.append(math.sqrt(size))
            else:
                couplings.append(math.sqrt((T - k) * (k + 1)))
        u = rotation_matrix(tuple(couplings), float(phi), float(axis))
        v = np.array([vec.get(k, 0.0) for k in range(lo, hi + 1)], dtype=complex)
        for j, amp in enumerate(u @ v):
            out[(label(lo + j), phot)] += amp
    return state.with_amps(dict(out))


def flip(state: CollectiveState, target: str, level: str) -> CollectiveState:
    """Logical bit flip of a single-excitation spin-wave qubit (``n_level`` 0 <-> 1)."""
    if level not in ("f", "s"):
        raise ValueError("flip acts on the f or s spin wave")
    i = state.index(target)
    slot = SLOT[level]
    out = {}
    for (regs, phot), amp in state.items():
        o = list(regs[i])
        if o[slot] > 1:
            raise ProtocolError(f"{level} holds {o[slot]} excitations; not a qubit")
        if o[slot] == 0 and state.n_ground(regs[i], i) == 0:
            raise ProtocolError("no ground atom available to flip into " + level)
        o[slot] = 1 - o[slot]
        out[(regs[:i] + (tuple(o),) + regs[i + 1 :], phot)] = amp
    return state.with_amps(out)


def phase_shift(state: CollectiveState, target: str, level: str, theta: float) -> CollectiveState:
    """Multiply every branch by ``exp(i theta n_level)``."""
    i = state.index(target)
    out = {}
    for label, amp in state.items():
        out[label] = amp * np.exp(1j * theta * state.count(label, i, level))
    return state.with_amps(out)


def photon_emit(state: CollectiveState, target: str, mode: str) -> CollectiveState:
    """Decay ``e -> g`` into time-bin ``mode``; a no-op on branches without ``e``."""
    if mode not in state.modes:
        state = state.add_modes(mode)
    i = state.index(target)
    m = state.mode_index(mode)
    se = SLOT["e"]
    out = {}
    for (regs, phot), amp in state.items():
        ne = regs[i][se]
        if ne > 1:
            raise ProtocolError("more than one atom in e; emission would not be single-photon")
        if ne:
            o = list(regs[i])
            o[se] = 0
            regs = regs[:i] + (tuple(o),) + regs[i + 1 :]
            phot = phot[:m] + (phot[m] + 1,) + phot[m + 1 :]
        out[(regs, phot)] = amp
    return state.with_amps(out)


# a^dag -> (c^dag + d^dag)/sqrt2, b^dag -> (c^dag - d^dag)/sqrt2, for at most one photon per input
_BS = {
    (0, 0): {(0, 0): 1.0},
    (1, 0): {(1, 0): 1 / math.sqrt(2), (0, 1): 1 / math.sqrt(2)},
    (0, 1): {(1, 0): 1 / math.sqrt(2), (0, 1): -1 / math.sqrt(2)},
    (1, 1): {(2, 0): 1 / math.sqrt(2), (0, 2): -1 / math.sqrt(2)},
}


def beam_splitter(
    state: CollectiveState, in_a: str, in_b: str, out_c: str, out_d: str
) -> CollectiveState:
    """50/50 beam splitter; output modes replace the input modes in place."""
    ia, ib = state.mode_index(in_a), state.mode_index(in_b)
    modes = list(state.modes)
    modes[ia], modes[ib] = out_c, out_d
    out: dict = defaultdict(complex)
    for (regs, phot), amp in state.items():
        key = (phot[ia], phot[ib])
        if key not in _BS:
            raise ProtocolError("beam splitter modelled for at most one photon per input")
        for (c, d), coef in _BS[key].items():
            p = list(phot)
            p[ia], p[ib] = c, d
            out[(regs, tuple(p))] += coef * amp
    return state.with_amps(dict(out), modes=tuple(modes))


def _split(state: CollectiveState, key_fn) -> list[tuple[object, float, CollectiveState]]:
    groups: dict = defaultdict(dict)
    for label, amp in state.items():
        groups[key_fn(label)][label] = amp
    branches = []
    for key in sorted(groups):
        amps = groups[key]
        p = sum(abs(v) ** 2 for v in amps.values())
        nrm = math.sqrt(p)
        branches.append((key, p, state.with_amps({k: v / nrm for k, v in amps.items()})))
    return branches


def measure_modes(state: CollectiveState, modes: tuple[str, ...]):
    """Photon counting on ``modes``: every pattern with its probability and post-state.

    Measured modes are removed from the post-measurement states.
    """
    idx = [state.mode_index(m) for m in modes]
    out = []
    for pattern, p, post in _split(state, lambda lab: tuple(lab[1][j] for j in idx)):
        amps = {
            (regs, tuple(c for j, c in enumerate(phot) if j not in idx)): a
            for (regs, phot), a in post.items()
        }
        kept = tuple(m for j, m in enumerate(state.modes) if j not in idx)
        out.append((pattern, p, post.with_amps(amps, modes=kept)))
    return out


def measure_level(state: CollectiveState, target: str, level: str):
    """Projective measurement of the occupation of ``level`` in one register."""
    i = state.index(target)
    return _split(state, lambda lab: state.count(lab, i, level))
