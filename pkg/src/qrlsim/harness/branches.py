"""Exhaustive measurement-branch enumeration (the exact oracle for sampling)."""
from __future__ import annotations

import math
from dataclasses import dataclass, field

from ..errors import ImpossibleBranchError, NotProductStateError
from ..metrics import learning_fidelity, positive_correlation
from ..protocol import (
    Cnot,
    Feedback,
    Measure,
    MeasurementRecord,
    ProtocolSpec,
    Variant,
    apply_feedback,
    initial_joint,
    measure_step,
)
from ..qstate import Statevector, apply_cnot, bitstrings


@dataclass(frozen=True)
class BranchLeaf:
    """One complete outcome path.  States and rewards are ``None`` when unreachable."""

    bits: tuple[str, ...]
    probability: float
    pre_feedback: Statevector | None = None
    post_feedback: Statevector | None = None
    learning_fidelity: float | None = None
    positive_correlation: float | None = None
    reward: float | None = None

    @property
    def reachable(self) -> bool:
        return self.pre_feedback is not None

    def branch_bits(self) -> str:
        return "|".join(self.bits)


@dataclass
class BranchTree:
    variant: Variant
    labels: tuple[str, ...]
    leaves: list[BranchLeaf] = field(default_factory=list)

    def reachable(self) -> list[BranchLeaf]:
        return [leaf for leaf in self.leaves if leaf.reachable]

    @property
    def total_probability(self) -> float:
        return math.fsum(leaf.probability for leaf in self.leaves)

    def expected_reward(self) -> float:
        return math.fsum(leaf.probability * leaf.reward for leaf in self.reachable())

    def distribution(self) -> dict[str, float]:
        return {leaf.branch_bits(): leaf.probability for leaf in self.leaves}

    def __getitem__(self, bits) -> BranchLeaf:
        if isinstance(bits, str):
            bits = tuple(bits.split("|"))
        for leaf in self.leaves:
            if leaf.bits == tuple(bits):
                return leaf
        raise KeyError(bits)


def _dead_leaves(spec: ProtocolSpec, prefix: tuple[str, ...]) -> list[BranchLeaf]:
    rest = spec.measurements[len(prefix):]
    paths = [prefix]
    for m in rest:
        paths = [p + (b,) for p in paths for b in bitstrings(len(m.register))]
    return [BranchLeaf(p, 0.0) for p in paths]


def _score(spec: ProtocolSpec, pre: Statevector, post: Statevector, bits, prob) -> BranchLeaf:
    roles = spec.roles
    try:
        lf = learning_fidelity(post, roles)
    except NotProductStateError:
        lf = None
    corr = positive_correlation(post, roles).probability_agree
    reward = corr if spec.variant.entangled else lf
    return BranchLeaf(tuple(bits), prob, pre, post, lf, corr, reward)


def enumerate_branches(spec: ProtocolSpec, agent: Statevector, environment: Statevector) -> BranchTree:
    """Expand every measurement outcome depth-first with forced projections.

    Outcomes of numerically zero probability appear as unreachable leaves
    with probability 0.
    """
    tree = BranchTree(spec.variant, tuple(m.label for m in spec.measurements))
    steps = spec.steps

    def walk(i: int, state: Statevector, bits: tuple[str, ...], outcomes: list, prob: float, pre):
        while i < len(steps):
            step = steps[i]
            if isinstance(step, Cnot):
                state = apply_cnot(state, spec.qubit(step.control), spec.qubit(step.target))
            elif isinstance(step, Measure):
                for b in bitstrings(len(step.register)):
                    try:
                        outcome, post = measure_step(spec, state, step, None, b)
                    except ImpossibleBranchError:
                        tree.leaves.extend(_dead_leaves(spec, bits + (b,)))
                        continue
                    walk(i + 1, post, bits + (b,), outcomes + [(step.label, outcome)], prob * outcome.probability, pre)
                return
            elif isinstance(step, Feedback):
                pre = state
                state = apply_feedback(spec, state, MeasurementRecord(tuple(outcomes)))
            i += 1
        tree.leaves.append(_score(spec, pre if pre is not None else state, state, bits, prob))

    walk(0, initial_joint(spec, agent, environment), (), [], 1.0, None)
    return tree

