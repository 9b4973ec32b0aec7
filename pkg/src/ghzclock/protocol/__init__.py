"""Exact small-scale simulation of the network entangling protocol."""

from .pipeline import NetworkLayout, ghz_target, parity_curve, run_protocol
from .pulses import PulseOp, apply_pulse
from .state import CollectiveState, ProtocolError
from .steps import (
    run_messenger_variant, run_step1_init, run_step2_photon_emission, run_step3_bell_merge,
    run_step4_cnot_connect, run_step5_local_growth,
)

__all__ = [
    "CollectiveState",
    "NetworkLayout",
    "ProtocolError",
    "PulseOp",
    "apply_pulse",
    "ghz_target",
    "parity_curve",
    "run_messenger_variant",
    "run_protocol",
    "run_step1_init",
    "run_step2_photon_emission",
    "run_step3_bell_merge",
    "run_step4_cnot_connect",
    "run_step5_local_growth",
]
