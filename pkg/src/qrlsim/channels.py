"""Stochastic error channels for pure-state trajectories.

Gate errors are uniform non-identity Pauli strings; readout errors are
classical bit flips that leave the collapsed state alone.  Dephasing during
idle windows is an optional Z flip per qubit.
"""
from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .errors import StateError
from .qstate import PAULIS, MeasurementOutcome, Statevector, apply_single


def _check_p(name: str, p: float, hi: float = 0.5) -> None:
    if not 0.0 <= p <= hi:
        raise StateError(f"{name}={p} outside [0, {hi}]")


@dataclass(frozen=True)
class NoiseModel:
    """Per-operation error probabilities.

    Defaults: two-qubit gate error 0.01, single-qubit gate error 0.001
    (99.9% fidelity) and 1% misread per measured qubit.  ``t_coh`` in ns
    turns on idle dephasing; ``None`` leaves it off.
    """

    p_cnot: float = 0.01
    p_single: float = 0.001
    p_readout: float = 0.01
    t_coh: float | None = None

    def __post_init__(self):
        _check_p("p_cnot", self.p_cnot)
        _check_p("p_single", self.p_single)
        _check_p("p_readout", self.p_readout)
        if self.t_coh is not None and self.t_coh <= 0:
            raise StateError("t_coh must be positive")

    @classmethod
    def ideal(cls) -> "NoiseModel":
        return cls(0.0, 0.0, 0.0, None)

    def scaled(self, factor: float) -> "NoiseModel":
        return NoiseModel(self.p_cnot * factor, self.p_single * factor, self.p_readout * factor, self.t_coh)

    @property
    def is_ideal(self) -> bool:
        return self.p_cnot == 0 and self.p_single == 0 and self.p_readout == 0 and self.t_coh is None

    def dephasing_probability(self, dt: float) -> float:
        """Z-flip probability for an idle window of ``dt`` ns."""
        if self.t_coh is None or dt <= 0:
            return 0.0
        return 0.5 * (1.0 - math.exp(-dt / self.t_coh))


@dataclass(frozen=True)
class HardwareBudget:
    """Timing constants in nanoseconds.

    ``t_single`` has no measured counterpart and defaults to 20 ns.  With
    ``sequential_cnots`` off, CNOTs of one block run in parallel.
    """

    t_cnot: float = 50.0
    t_feedback: float = 110.0
    t_single: float = 20.0
    t_coh: float = 10_000.0
    sequential_cnots: bool = True

    def __post_init__(self):
        for name in ("t_cnot", "t_feedback", "t_single", "t_coh"):
            if not getattr(self, name) > 0:
                raise StateError(f"{name} must be positive")


def _pauli_strings(k: int) -> list[str]:
    return ["".join(p) for p in itertools.product("IXYZ", repeat=k) if set(p) != {"I"}]


PAULI_STRINGS = {k: _pauli_strings(k) for k in (1, 2)}


def apply_pauli_string(state: Statevector, qubits: Sequence[int], paulis: str) -> Statevector:
    for q, p in zip(qubits, paulis):
        if p != "I":
            state = apply_single(state, q, PAULIS[p])
    return state


def apply_gate_noise(state: Statevector, qubits: Sequence[int], p: float, rng: np.random.Generator) -> Statevector:
    """With probability ``p`` apply a uniformly random non-identity Pauli on ``qubits``.

    Unlike :class:`NoiseModel`, any ``p`` in [0, 1] is accepted here so the
    channel can be driven to certainty in tests.
    """
    _check_p("p", p, hi=1.0)
    if p == 0:
        return state
    if rng.random() >= p:
        return state
    strings = PAULI_STRINGS.get(len(qubits)) or _pauli_strings(len(qubits))
    return apply_pauli_string(state, qubits, strings[rng.integers(len(strings))])


def flip_readout(outcome: MeasurementOutcome, p_readout: float, rng: np.random.Generator) -> MeasurementOutcome:
    """Flip each reported bit independently with probability ``p_readout``.

    The returned outcome keeps the true branch probability; only the
    classical record is corrupted.
    """
    _check_p("p_readout", p_readout, hi=1.0)
    if p_readout == 0:
        return outcome
    flips = rng.random(len(outcome.bits)) < p_readout
    bits = "".join(str(int(b) ^ int(f)) for b, f in zip(outcome.bits, flips))
    return MeasurementOutcome(outcome.qubits, bits, outcome.probability)


def dephase(state: Statevector, qubits: Sequence[int], p: float, rng: np.random.Generator) -> Statevector:
    """Independent Z flip with probability ``p`` on each of ``qubits``."""
    if p == 0:
        return state
    for q in qubits:
        if rng.random() < p:
            state = apply_single(state, q, PAULIS["Z"])
    return state


@dataclass
class NoiseContext:
    """Noise model bound to its own random stream (separate from sampling)."""

    model: NoiseModel
    rng: np.random.Generator
    hardware: HardwareBudget = field(default_factory=HardwareBudget)
