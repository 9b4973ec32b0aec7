"""Pulse gadgets for the five protocol steps and the messenger-atom variant.

A spin-wave qubit lives in one register: ``n_f`` (or ``n_s``) equal to 0 or 1
is logical 0 or 1. Every gadget ends with explicit phase fixes so that its
output matches the textbook target state exactly, not just up to local
phases. Gadgets that need measurement come in two forms: ``*_branches``
returns every outcome with its probability, and the ``run_*`` form draws one
outcome from a seeded generator.

Reservoir idealization: g <-> r1 pulses in steps 1 to 4 use coupling
``sqrt(n)`` even when a spin-wave mode already holds an atom, i.e. the spin
waves are treated as independent of the ground reservoir.
"""

from __future__ import annotations

import math
from typing import Optional

import numpy as np

from .pulses import (
    PulseOp, apply_pulse, beam_splitter, flip, measure_level, measure_modes, phase_shift,
    photon_emit, rabi_pulse,
)
from .state import SLOT, CollectiveState, ProtocolError

PI = math.pi
BINS = ("t1", "t2", "t3", "t4")
# which time bins carry which spin wave: t1/t3 report s = 0/1, t2/t4 report f = 0/1
BIN_QUBIT = {"t1": ("s", 0), "t3": ("s", 1), "t2": ("f", 0), "t4": ("f", 1)}


def _rabi(reg, a, b, phi, **kw) -> PulseOp:
    return PulseOp("rabi_pulse", reg, (a, b), phi, **kw)


def run_ops(state: CollectiveState, ops) -> CollectiveState:
    for op in ops:
        state = apply_pulse(state, op)
    return state


def _size(state, reg) -> int:
    return state.sizes[state.index(reg)]


def _occupations(state, reg):
    i = state.index(reg)
    return [regs[i] for regs, _ in state.amps]


def mode_name(reg: str, tbin: str) -> str:
    return f"{reg}.{tbin}"


# -- step 1 -----------------------------------------------------------------
def step1_ops(reg: str, n: int, modes: tuple[str, ...] = ("f", "s")) -> list[PulseOp]:
    half = PI / (2.0 * math.sqrt(n))
    ops = [_rabi(reg, "g", "r1", half, reservoir=True), _rabi(reg, "f", "r1", PI)]
    if "s" in modes:
        ops.append(_rabi(reg, "f", "s", PI))
    if modes == ("f", "s"):
        ops += [_rabi(reg, "g", "r1", half, reservoir=True), _rabi(reg, "f", "r1", PI)]
    # undo -1 on f and +i on s left by the rotations
    if "f" in modes:
        ops.append(PulseOp("phase_shift", reg, ("f",), PI))
    if "s" in modes:
        ops.append(PulseOp("phase_shift", reg, ("s",), -PI / 2))
    return ops


def run_step1_init(
    state: CollectiveState, reg: str, modes: tuple[str, ...] = ("f", "s")
) -> CollectiveState:
    """Put ``reg`` into ``(|0_f> + |1_f>)(|0_s> + |1_s>)/2`` (or just one factor).

    Parameters
    ----------
    modes : ``("f", "s")``, ``("f",)`` or ``("s",)``
        Which spin-wave qubits to create. The single-``s`` gadget passes
        through ``f``, so it needs ``f`` empty.
    """
    modes = tuple(modes)
    if modes not in (("f", "s"), ("f",), ("s",)):
        raise ValueError(f"modes must be ('f','s'), ('f',) or ('s',), got {modes}")
    n = _size(state, reg)
    occs = _occupations(state, reg)
    if modes == ("f", "s"):
        if n < 2:
            raise ProtocolError("both spin waves need n >= 2 atoms in one register")
        if any(any(o) for o in occs):
            raise ProtocolError(f"register {reg!r} is not in the all-ground state")
    else:
        busy = ("f", "s", "e", "r1", "r2") if modes == ("s",) else ("f", "e", "r1", "r2")
        if any(o[SLOT[lvl]] for o in occs for lvl in busy):
            raise ProtocolError(f"register {reg!r} is not ready for a fresh {modes[0]} qubit")
    return run_ops(state, step1_ops(reg, n, modes))


# -- step 2 -----------------------------------------------------------------
def _emit_if_s_empty(reg: str, n: int, mode: str) -> list[PulseOp]:
    # s -> r2 shelving blocks the r1 path, so a photon leaves only when s is empty
    return [
        _rabi(reg, "s", "r2", PI),
        _rabi(reg, "g", "r1", PI / math.sqrt(n), reservoir=True),
        _rabi(reg, "e", "r1", PI),
        _rabi(reg, "s", "r2", PI),
        PulseOp("photon_emit", reg, mode=mode),
    ]


def emission_ops(reg: str, n: int, tbin: str) -> list[PulseOp]:
    """Gadget emitting into ``tbin`` exactly when the bin's spin-wave condition holds."""
    core = _emit_if_s_empty(reg, n, mode_name(reg, tbin))
    swap = [_rabi(reg, "f", "s", PI)]
    xs = [PulseOp("flip", reg, ("s",))]
    if tbin == "t1":
        return core
    if tbin == "t3":
        return xs + core + xs
    if tbin == "t2":
        return swap + core + swap
    if tbin == "t4":
        return swap + xs + core + xs + swap
    raise ValueError(f"unknown time bin {tbin!r}")


def run_step2_photon_emission(
    state: CollectiveState, reg: str, bins: tuple[str, ...] = BINS
) -> CollectiveState:
    """Emit the time-bin photons that report the register's spin waves.

    With all four bins the output is
    ``(|0_f>|t2> + |1_f>|t4>)(|0_s>|t1> + |1_s>|t3>)/2``; every emitted pair
    of bins carries net phase +1, so no fix is needed.
    """
    n = _size(state, reg)
    for tbin in bins:
        qubit, _ = BIN_QUBIT[tbin]
        if any(o[SLOT[qubit]] > 1 for o in _occupations(state, reg)):
            raise ProtocolError(f"{qubit} spin wave of {reg!r} is not a qubit")
        state = run_ops(state, emission_ops(reg, n, tbin))
    return state


# -- step 3 -----------------------------------------------------------------
def link_modes(tag: str) -> tuple[str, str, str, str]:
    return (f"{tag}.early.c", f"{tag}.early.d", f"{tag}.late.c", f"{tag}.late.d")


def bell_merge_branches(
    state: CollectiveState, reg_a: str, reg_b: str, tag: Optional[str] = None,
    bins_a: tuple[str, str] = ("t1", "t3"),
):
    """Interfere the s-photons of ``reg_a`` with the f-photons of ``reg_b``.

    Early bins ``(a.t1, b.t2)`` and late bins ``(a.t3, b.t4)`` meet on 50/50
    beam splitters with detectors ``c`` and ``d``. A herald is one click
    early and one click late; equal detectors give the + Bell state, unequal
    ones the - state, which is then fixed with a phase on ``b``'s ``f``.
    ``bins_a=("t2", "t4")`` uses the f-photons of ``reg_a`` instead, which
    heralds ``a.f != b.f``.

    Returns
    -------
    list of (pattern, probability, heralded, sign, state)
        ``pattern`` is the click count on ``(early.c, early.d, late.c, late.d)``.
        Heralded states are sign-corrected to ``(|0_s 1_f> + |1_s 0_f>)/sqrt2``.
    """
    tag = tag or f"{reg_a}|{reg_b}"
    early_a, late_a = (mode_name(reg_a, t) for t in bins_a)
    early_b, late_b = mode_name(reg_b, "t2"), mode_name(reg_b, "t4")
    for m in (early_a, late_a, early_b, late_b):
        if m not in state.modes:
            raise ProtocolError(f"photon mode {m!r} missing or already consumed")
    ec, ed, lc, ld = link_modes(tag)
    state = beam_splitter(state, early_a, early_b, ec, ed)
    state = beam_splitter(state, late_a, late_b, lc, ld)
    out = []
    for pattern, p, post in measure_modes(state, (ec, ed, lc, ld)):
        heralded = pattern[0] + pattern[1] == 1 and pattern[2] + pattern[3] == 1
        sign = 0
        if heralded:
            sign = 1 if pattern[0] == pattern[2] else -1
            if sign < 0:
                post = phase_shift(post, reg_b, "f", PI)
        out.append((pattern, p, heralded, sign, post))
    return out


def _sample(branches, rng: np.random.Generator, prob_index: int = 1):
    probs = np.array([b[prob_index] for b in branches])
    return branches[int(rng.choice(len(branches), p=probs / probs.sum()))]


def run_step3_bell_merge(state, reg_a: str, reg_b: str, outcome_seed):
    """One heralding attempt with a seeded outcome draw.

    Returns
    -------
    (state, heralded, outcome)
        ``outcome`` holds the click pattern and the Bell sign (0 on failure).
    """
    rng = np.random.default_rng(outcome_seed) if not isinstance(outcome_seed, np.random.Generator) else outcome_seed
    pattern, p, heralded, sign, post = _sample(bell_merge_branches(state, reg_a, reg_b), rng)
    return post, heralded, {"pattern": pattern, "probability": p, "sign": sign}


def reset_link(state: CollectiveState, reg_a: str, reg_b: str) -> CollectiveState:
    """Return a failed link's qubits to logical 0 (they are in a known product state)."""
    for reg, lvl in ((reg_a, "s"), (reg_b, "f")):
        (value, _, _), *rest = measure_level(state, reg, lvl)
        if rest:
            raise ProtocolError(f"{reg}.{lvl} is not in a definite state after the failed herald")
        if value:
            state = flip(state, reg, lvl)
    return state


# -- step 4 -----------------------------------------------------------------
def cnot_ops(reg: str, n: int) -> list[PulseOp]:
    """Flip ``s`` when ``f`` is empty (the f/s swap turns the s-controlled core around)."""
    swap = _rabi(reg, "f", "s", PI)
    core = [
        _rabi(reg, "s", "r2", PI),
        _rabi(reg, "f", "r1", PI),
        _rabi(reg, "g", "r1", PI / math.sqrt(n), reservoir=True),
        _rabi(reg, "f", "r1", PI),
        _rabi(reg, "s", "r2", PI),
    ]
    return [swap] + core + [swap]


def cnot_connect_branches(state: CollectiveState, reg: str):
    """Fuse the two links held by ``reg``: CNOT, then read ``s``.

    After the gadget the ``f = 0`` branch carries phase ``i`` and the
    ``f = 1`` branch ``(-1)^m``; both are equalised here and ``s`` is
    returned to 0. The surviving relation is ``f_next = f_reg XOR m``.

    Returns
    -------
    list of (m, probability, state)
    """
    occs = _occupations(state, reg)
    if not any(o[SLOT["s"]] for o in occs) or not any(o[SLOT["f"]] for o in occs):
        raise ProtocolError(f"register {reg!r} does not hold both link qubits")
    state = run_ops(state, cnot_ops(reg, _size(state, reg)))
    out = []
    for m, p, post in measure_level(state, reg, "s"):
        post = phase_shift(post, reg, "f", PI / 2 + m * PI)
        if m:
            post = flip(post, reg, "s")
        out.append((m, p, post))
    return out


def run_step4_cnot_connect(state: CollectiveState, reg: str, rng=None):
    """Sampled form of :func:`cnot_connect_branches`; returns ``(state, m)``."""
    rng = rng if isinstance(rng, np.random.Generator) else np.random.default_rng(rng)
    m, _, post = _sample(cnot_connect_branches(state, reg), rng)
    return post, m


def swap_s_into_f(state: CollectiveState, reg: str) -> CollectiveState:
    """Move an s qubit into the (empty) f mode: ``[pi]_{f,s}`` then undo its ``-i``."""
    if any(o[SLOT["f"]] for o in _occupations(state, reg)):
        raise ProtocolError(f"f mode of {reg!r} is occupied")
    state = rabi_pulse(state, reg, "f", "s", PI)
    return phase_shift(state, reg, "f", PI / 2)


# -- step 5 -----------------------------------------------------------------
def step5_ops(reg: str, n: int) -> list[PulseOp]:
    swap = _rabi(reg, "f", "s", PI)
    ops = [swap, _rabi(reg, "s", "r2", PI)]
    for j in range(1, n + 1):
        ops.append(_rabi(reg, "g", "r1", PI / math.sqrt(n - j + 1)))
        ops.append(_rabi(reg, "f", "r1", PI / math.sqrt(j)))
    ops.append(_rabi(reg, "s", "r2", PI))
    # cleanup: the shelved atom returns to g
    ops += [swap, _rabi(reg, "f", "r1", PI), swap, _rabi(reg, "g", "r1", PI / math.sqrt(n))]
    return ops


def run_step5_local_growth(state: CollectiveState, reg: str) -> CollectiveState:
    """Map ``|0_f> -> |f>^n`` and ``|1_f> -> -|g>^n`` within one register."""
    for o in _occupations(state, reg):
        if o[SLOT["f"]] > 1 or any(o[1:]):
            raise ProtocolError(f"register {reg!r} must hold only an f qubit before growth")
    return run_ops(state, step5_ops(reg, _size(state, reg)))


# -- messenger atom ---------------------------------------------------------
def _ry_half(msg: str) -> PulseOp:
    # |s> -> (|s> + |r2>)/sqrt2, |r2> -> (|r2> - |s>)/sqrt2
    return _rabi(msg, "s", "r2", PI / 2, axis=PI / 2)


def add_messenger(state: CollectiveState, msg: str, superposed: bool = True) -> CollectiveState:
    """Attach a single atom in ``|s>``, optionally rotated to ``(|s> + |r2>)/sqrt2``."""
    state = flip(state.add_register(msg, 1), msg, "s")
    return apply_pulse(state, _ry_half(msg)) if superposed else state


def messenger_visit(state: CollectiveState, msg: str, reg: str) -> CollectiveState:
    """Conditional excitation of ``reg``: ``|0> -> -|1_f>`` unless the messenger sits in ``r2``."""
    if any(any(o) for o in _occupations(state, reg)):
        raise ProtocolError(f"register {reg!r} must start in the all-ground state")
    n = _size(state, reg)
    state = rabi_pulse(state, reg, "g", "r1", PI / math.sqrt(n), blockade_with=(msg,))
    return rabi_pulse(state, reg, "f", "r1", PI)


def seed_messenger(state: CollectiveState, msg: str, seed: str) -> CollectiveState:
    """Copy the f qubit of ``seed`` onto a fresh messenger: ``r2`` if ``f = 0``, ``s`` if ``f = 1``."""
    state = add_messenger(state, msg, superposed=False)
    state = rabi_pulse(state, seed, "f", "r1", PI)
    state = rabi_pulse(state, msg, "s", "r2", PI, blockade_with=(seed,))
    return rabi_pulse(state, seed, "f", "r1", PI)


def messenger_readout_branches(
    state: CollectiveState, msg: str, fix_reg: str, visits: int, seeded: bool = False
):
    """Read the messenger in the +/- basis, fix the sign on ``fix_reg`` and drop it.

    Before readout the state is ``(-1)^visits |1..1>|s> + |0..0>|r2>`` (plain)
    or ``(-1)^visits |1..1>|s> - i |0..0>|r2>`` (seeded; ``visits`` then
    counts the seed). The phase that restores ``|0..0> + |1..1>`` follows
    from those amplitudes and the readout rotation.

    Returns
    -------
    list of (sign, probability, state)
        ``sign`` is +1 when the messenger is found in ``r2`` after the rotation.
    """
    state = apply_pulse(state, _ry_half(msg))
    out = []
    for r2, p, post in measure_level(state, msg, "r2"):
        theta = visits * PI + (0.0 if r2 else PI)
        if seeded:
            theta -= PI / 2
        post = phase_shift(post, fix_reg, "f", theta).drop_register(msg)
        out.append((1 if r2 else -1, p, post))
    return out


def run_messenger_variant(
    state: CollectiveState, registers: tuple[str, ...], msg: str = "msg", rng=None
):
    """Entangle ``registers`` (all ground) through one travelling messenger atom.

    Returns ``(state, sign)`` with the state corrected to
    ``(|1_f>^M + |0>^M)/sqrt2``.
    """
    rng = rng if isinstance(rng, np.random.Generator) else np.random.default_rng(rng)
    state = add_messenger(state, msg)
    for reg in registers:
        state = messenger_visit(state, msg, reg)
    sign, _, post = _sample(
        messenger_readout_branches(state, msg, registers[0], len(registers)), rng
    )
    return post, sign
