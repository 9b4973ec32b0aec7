"""End-to-end network protocol: from all-ground ensembles to one N-atom GHZ state.

Photonic variant
    1. right to left, each link ``k`` prepares an ``s`` qubit on clock ``k``
       and an ``f`` qubit on clock ``k+1`` (steps 1 and 2) and heralds a Bell
       pair (step 3), retrying after a failed herald;
    2. middle clocks fuse their two links (step 4), clock 0 moves ``s`` into
       ``f``, and a Pauli frame flip aligns every ``f`` with clock 0;
       one-atom ensembles cannot hold both link qubits, so there the chain
       grows left to right and each middle clock emits the next link's
       photons from the ``f`` qubit it already holds;
    3. inside each clock a seeded messenger copies the seed qubit onto the
       other ensembles;
    4. every ensemble grows its qubit into ``|f>^n`` or ``|g>^n`` (step 5).

Messenger variant
    One messenger in ``(|s> + |r2>)/sqrt2`` visits all ensembles, is read
    out in the +/- basis, and step 5 grows every ensemble.

Register ``c{k}e{m}`` is ensemble ``m`` of clock ``k``; ensemble 0 is the seed.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from ..metrology import GhzMeasurementModel, parity_probability
from .pulses import rotation_matrix, flip, phase_shift
from .state import CollectiveState, ProtocolError
from .steps import (
    add_messenger, bell_merge_branches, cnot_connect_branches, messenger_readout_branches,
    messenger_visit, reset_link, run_step1_init, run_step2_photon_emission,
    run_step5_local_growth, seed_messenger, swap_s_into_f,
)

MAX_HERALD_ATTEMPTS = 10_000
MODES = ("exhaustive", "sample")


def register_name(clock: int, ensemble: int) -> str:
    return f"c{clock}e{ensemble}"


@dataclass
class Branch:
    probability: float
    state: CollectiveState
    record: dict = field(default_factory=dict)
    trace: list = field(default_factory=list)


@dataclass(frozen=True)
class NetworkLayout:
    K: int
    M: int
    n: int
    variant: str = "photonic"

    def __post_init__(self):
        if self.K < 1 or self.M < 1 or self.n < 1:
            raise ValueError("K, M and n must be >= 1")
        if self.variant not in ("photonic", "messenger"):
            raise ValueError(f"unknown variant {self.variant!r}")

    @property
    def registers(self) -> tuple[str, ...]:
        return tuple(register_name(k, m) for k in range(self.K) for m in range(self.M))

    @property
    def N(self) -> int:
        return self.K * self.M * self.n

    def ground_state(self) -> CollectiveState:
        return CollectiveState.ground({r: self.n for r in self.registers})


def ghz_target(layout: NetworkLayout) -> CollectiveState:
    """``(|f>^N + |g>^N)/sqrt2`` on the layout's registers."""
    full = tuple((layout.n, 0, 0, 0, 0) for _ in layout.registers)
    empty = tuple((0, 0, 0, 0, 0) for _ in layout.registers)
    r = 1 / math.sqrt(2)
    sizes = tuple(layout.n for _ in layout.registers)
    return CollectiveState(layout.registers, sizes, (), {(full, ()): r + 0j, (empty, ()): r + 0j})


def parity_curve(state: CollectiveState, phis) -> np.ndarray:
    """Probability of even total ``n_f`` after phase ``phi`` per atom and a ``pi/2`` readout.

    The readout is a y-rotation ``g -> (g - f)/sqrt2`` on every register, so
    the GHZ state gives ``(1 + cos(N phi))/2``. The state must hold atoms in
    ``g`` and ``f`` only; it is expanded into a dense tensor over ``n_f``.
    """
    if state.modes:
        raise ProtocolError("parity readout expects all photons to be measured")
    dims = tuple(n + 1 for n in state.sizes)
    psi = np.zeros(dims, dtype=complex)
    for (regs, _), a in state.items():
        if any(any(o[1:]) for o in regs):
            raise ProtocolError("parity readout expects atoms in g and f only")
        psi[tuple(o[0] for o in regs)] = a
    rot = {n: rotation_matrix(tuple(math.sqrt((n - k) * (k + 1)) for k in range(n)),
                             -math.pi / 2, math.pi / 2) for n in set(state.sizes)}
    total = np.zeros(dims, dtype=int)
    for ax, d in enumerate(dims):
        shape = [1] * len(dims)
        shape[ax] = d
        total = total + np.arange(d).reshape(shape)
    even = (total % 2) == 0
    out = []
    for phi in phis:
        t = psi
        for ax, n in enumerate(state.sizes):
            u = rot[n] @ np.diag(np.exp(1j * phi * np.arange(n + 1)))
            t = np.moveaxis(np.tensordot(u, t, axes=([1], [ax])), 0, ax)
        out.append(float(np.sum(np.abs(t[even]) ** 2)))
    return np.array(out)


def parity_deviation(state: CollectiveState, N: int, points: int = 32) -> float:
    """Largest gap between the simulated parity and the ideal-contrast model on a phase grid."""
    phis = np.linspace(0.0, 2.0 * math.pi, points, endpoint=False)
    model = GhzMeasurementModel(N, 1.0)
    sim = parity_curve(state, phis)
    ref = np.array([parity_probability(0, phi, model) for phi in phis])
    return float(np.max(np.abs(sim - ref)))


class _Runner:
    """Carries branches through the protocol in exhaustive or sampled fashion."""

    def __init__(self, mode: str, seed, trace: bool):
        if mode not in MODES:
            raise ValueError(f"mode must be one of {MODES}")
        self.mode = mode
        self.rng = np.random.default_rng(seed)
        self.trace = trace

    def map(self, branches, fn, label):
        out = []
        for b in branches:
            s = fn(b.state)
            tr = b.trace + [(label, s.describe())] if self.trace else b.trace
            out.append(Branch(b.probability, s, b.record, tr))
        return out

    def split(self, branches, fn, label, key):
        """``fn(state)`` returns ``[(outcome, probability, state)]``."""
        out = []
        for b in branches:
            options = fn(b.state)
            if self.mode == "sample":
                probs = np.array([o[1] for o in options])
                options = [options[int(self.rng.choice(len(options), p=probs / probs.sum()))]]
                options = [(options[0][0], 1.0, options[0][2])]
            for outcome, p, s in options:
                rec = dict(b.record)
                rec[key] = outcome
                tr = b.trace + [(label, s.describe())] if self.trace else b.trace
                out.append(Branch(b.probability * p, s, rec, tr))
        return out


class _ChainBroken(Exception):
    """A failed herald on a fused link measured the chain built so far."""


def _link(runner: _Runner, branches, a: str, b: str, k: int, fused: bool = False):
    """Herald a Bell pair between ``a.s`` and ``b.f``.

    With ``fused`` the existing ``a.f`` qubit emits instead and the herald
    leaves ``a.f != b.f``. Exhaustive mode keeps the four heralded patterns,
    each conditioned on success. Sample mode repeats failed attempts after
    resetting the qubits; a failed fused link raises :class:`_ChainBroken`.
    """
    bins_a = ("t2", "t4") if fused else ("t1", "t3")

    def prepare(s):
        if not fused:
            s = run_step1_init(s, a, ("s",))
        s = run_step1_init(s, b, ("f",))
        s = run_step2_photon_emission(s, a, bins_a)
        return run_step2_photon_emission(s, b, ("t2", "t4"))

    branches = runner.map(branches, prepare, f"link{k}:emit")
    out = []
    for br in branches:
        if runner.mode == "exhaustive":
            options = bell_merge_branches(br.state, a, b, tag=f"L{k}", bins_a=bins_a)
            herald = sum(p for _, p, h, _, _ in options if h)
            for pattern, p, h, sign, s in options:
                if not h:
                    continue
                rec = dict(br.record)
                rec[f"link{k}"] = {"pattern": pattern, "sign": sign}
                rec[f"link{k}_herald_probability"] = herald
                tr = br.trace + [(f"link{k}:herald", s.describe())] if runner.trace else br.trace
                out.append(Branch(br.probability * p / herald, s, rec, tr))
            continue
        state = br.state
        for attempt in range(1, MAX_HERALD_ATTEMPTS + 1):
            options = bell_merge_branches(state, a, b, tag=f"L{k}", bins_a=bins_a)
            probs = np.array([o[1] for o in options])
            pattern, _, h, sign, s = options[int(runner.rng.choice(len(options), p=probs / probs.sum()))]
            if h:
                break
            if fused:
                raise _ChainBroken
            state = prepare(reset_link(s, a, b))
        else:
            raise ProtocolError(f"link {k} did not herald in {MAX_HERALD_ATTEMPTS} attempts")
        rec = dict(br.record)
        rec[f"link{k}"] = {"pattern": pattern, "sign": sign, "attempts": attempt}
        tr = br.trace + [(f"link{k}:herald", s.describe())] if runner.trace else br.trace
        out.append(Branch(br.probability, s, rec, tr))
    return out


def _frame_fix(layout: NetworkLayout):
    """Flip ``f`` on clock ``j`` when ``1 XOR m_1 XOR ... XOR m_{j-1}`` is set."""
    def fix(branch: Branch) -> Branch:
        s, acc = branch.state, 1
        for j in range(1, layout.K):
            if acc:
                s = flip(s, register_name(j, 0), "f")
            acc ^= branch.record.get(f"m{j}", 0)
        return Branch(branch.probability, s, branch.record, branch.trace)
    return fix


def _spread_and_grow(runner: _Runner, branches, layout: NetworkLayout, seeded: bool):
    K, M = layout.K, layout.M
    if seeded and M > 1:
        for k in range(K):
            seed, msg = register_name(k, 0), f"msg{k}"
            others = [register_name(k, m) for m in range(1, M)]

            def visit(s, seed=seed, msg=msg, others=others):
                s = seed_messenger(s, msg, seed)
                for reg in others:
                    s = messenger_visit(s, msg, reg)
                return s

            branches = runner.map(branches, visit, f"clock{k}:messenger")
            branches = runner.split(
                branches,
                lambda s, seed=seed, msg=msg: messenger_readout_branches(s, msg, seed, M, seeded=True),
                f"clock{k}:readout", f"messenger{k}",
            )
    # step 5 sends |1_f> to -|g>^n on every ensemble; pre-compensate once
    sign_fix = math.pi * (len(layout.registers) % 2)

    def grow(s):
        if sign_fix:
            s = phase_shift(s, layout.registers[0], "f", sign_fix)
        for reg in layout.registers:
            s = run_step5_local_growth(s, reg)
        return s

    return runner.map(branches, grow, "step5")


def _fused_chain(runner: _Runner, layout: NetworkLayout):
    """Left-to-right chain for one-atom ensembles: ``c0.s != c1.f != c2.f ...``."""
    K = layout.K
    for restart in range(MAX_HERALD_ATTEMPTS):
        try:
            branches = [Branch(1.0, layout.ground_state())]
            for k in range(K - 1):
                branches = _link(
                    runner, branches, register_name(k, 0), register_name(k + 1, 0), k, fused=k > 0
                )
            break
        except _ChainBroken:
            # every qubit of the failed chain was measured; start again from the ground state
            continue
    else:
        raise ProtocolError(f"fused chain did not herald in {MAX_HERALD_ATTEMPTS} attempts")
    if runner.mode == "sample":
        for b in branches:
            b.record["chain_restarts"] = restart
    branches = runner.map(branches, lambda s: swap_s_into_f(s, register_name(0, 0)), "clock0:swap")

    def align(s):
        for j in range(1, K, 2):
            s = flip(s, register_name(j, 0), "f")
        return s

    return runner.map(branches, align, "frame")


def _photonic(runner: _Runner, layout: NetworkLayout):
    K = layout.K
    if K >= 3 and layout.n == 1:
        branches = _fused_chain(runner, layout)
        return _spread_and_grow(runner, branches, layout, seeded=True)
    branches = [Branch(1.0, layout.ground_state())]
    if K == 1:
        branches = runner.map(branches, lambda s: run_step1_init(s, register_name(0, 0), ("f",)), "step1")
    for k in range(K - 2, -1, -1):
        branches = _link(runner, branches, register_name(k, 0), register_name(k + 1, 0), k)
    for k in range(1, K - 1):
        reg = register_name(k, 0)
        branches = runner.split(
            branches, lambda s, reg=reg: cnot_connect_branches(s, reg), f"clock{k}:fuse", f"m{k}"
        )
    if K > 1:
        branches = runner.map(branches, lambda s: swap_s_into_f(s, register_name(0, 0)), "clock0:swap")
        fix = _frame_fix(layout)
        branches = [fix(b) for b in branches]
    return _spread_and_grow(runner, branches, layout, seeded=True)


def _messenger(runner: _Runner, layout: NetworkLayout):
    regs = layout.registers

    def visit_all(s):
        s = add_messenger(s, "msg")
        for reg in regs:
            s = messenger_visit(s, "msg", reg)
        return s

    branches = runner.map([Branch(1.0, layout.ground_state())], visit_all, "messenger")
    branches = runner.split(
        branches, lambda s: messenger_readout_branches(s, "msg", regs[0], len(regs)),
        "readout", "messenger",
    )
    return _spread_and_grow(runner, branches, layout, seeded=False)


@dataclass
class BranchResult:
    probability: float
    record: dict
    fidelity: float
    parity_deviation: float
    state: CollectiveState
    trace: list


def run_protocol(
    K: int, M: int, n: int, variant: str = "photonic", mode: str = "exhaustive",
    seed=None, trace: bool = False, parity_points: int = 32,
) -> list[BranchResult]:
    """Run the full protocol and score every final branch against the GHZ target.

    Returns one result per measurement branch (exhaustive) or a single one
    (sample). Each carries the GHZ fidelity and the parity-model deviation.
    """
    layout = NetworkLayout(K, M, n, variant)
    runner = _Runner(mode, seed, trace)
    branches = _photonic(runner, layout) if variant == "photonic" else _messenger(runner, layout)
    target = ghz_target(layout)
    results = []
    for b in branches:
        b.state.check_norm()
        results.append(BranchResult(
            probability=b.probability,
            record=b.record,
            fidelity=target.fidelity(b.state),
            parity_deviation=parity_deviation(b.state, layout.N, parity_points) if parity_points else 0.0,
            state=b.state,
            trace=b.trace,
        ))
    return results
