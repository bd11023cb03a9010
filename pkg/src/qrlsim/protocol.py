"""Learning-cycle protocols: circuit descriptions, feedback rule, execution.

Every variant uses the joint layout ``S (agent) | E (environment) | R
(register)`` with one qubit per role for the ``sq-*`` variants and two for
the ``mq-*`` variants.  A cycle copies environment information into the
register with E->R CNOTs, reads it, copies agent information with S->R
CNOTs, reads again, then flips agent and register qubits according to the
last readout.
"""
from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field
from typing import Sequence, Union

import numpy as np

from .channels import HardwareBudget, NoiseContext, NoiseModel, apply_gate_noise, dephase, flip_readout
from .errors import ImpossibleBranchError, NotProductStateError, ProtocolOrderError, StateError
from .metrics import Roles, learning_fidelity, positive_correlation
from .qstate import (
    MeasurementOutcome,
    Statevector,
    X,
    apply_cnot,
    apply_single,
    apply_x_mask,
    basis_state,
    from_amplitudes,
    measure,
    overlap_fidelity,
    random_state,
    subsystem_state,
    tensor,
)


_WIDTH = {"sq": 1, "mq": 2}
_ROLES = {1: Roles.layout(1), 2: Roles.layout(2)}


class Variant(str, enum.Enum):
    SQ_TRIVIAL = "sq-trivial"
    SQ_PLUS = "sq-plus"
    SQ_GENERAL = "sq-general"
    MQ_TOTAL = "mq-total"
    MQ_PARTIAL = "mq-partial"
    MQ_NOMEAS = "mq-nomeas"

    @classmethod
    def parse(cls, tag: "str | Variant") -> "Variant":
        if isinstance(tag, Variant):
            return tag
        try:
            return cls(tag.strip().lower())
        except ValueError:
            valid = ", ".join(v.value for v in cls)
            raise StateError(f"unknown variant {tag!r} (expected one of {valid})") from None

    @property
    def width(self) -> int:
        """Qubits per role."""
        return _WIDTH[self.value[:2]]

    @property
    def roles(self) -> Roles:
        return _ROLES[self.width]

    @property
    def entangled(self) -> bool:
        return self in (Variant.MQ_PARTIAL, Variant.MQ_NOMEAS)

    @property
    def reward_kind(self) -> str:
        return "positive_correlation" if self.entangled else "learning_fidelity"


@dataclass(frozen=True)
class Cnot:
    control: tuple[str, int]
    target: tuple[str, int]


@dataclass(frozen=True)
class Measure:
    register: tuple[int, ...]
    label: str


@dataclass(frozen=True)
class Feedback:
    rule: str = "x-mask"


Step = Union[Cnot, Measure, Feedback]


@dataclass(frozen=True)
class ProtocolSpec:
    """Ordered step list for one variant.

    ``measurement_basis`` optionally gives one 2x2 unitary per register
    qubit; measurements are then made in the rotated basis.
    """

    variant: Variant
    steps: tuple[Step, ...]
    measurement_basis: tuple | None = None

    def __post_init__(self):
        k = self.variant.width
        seen_measure = False
        labels = set()
        for step in self.steps:
            if isinstance(step, Cnot):
                (c_role, c_k), (t_role, t_k) = step.control, step.target
                if c_role not in ("E", "S") or t_role != "R" or c_k != t_k or not 0 <= c_k < k:
                    raise ProtocolOrderError(f"illegal CNOT {step}")
            elif isinstance(step, Measure):
                if not step.register or any(not 0 <= q < k for q in step.register):
                    raise ProtocolOrderError(f"measure step {step} must target register qubits")
                if step.label in labels:
                    raise ProtocolOrderError(f"duplicate measurement label {step.label}")
                labels.add(step.label)
                seen_measure = True
            elif isinstance(step, Feedback):
                if not seen_measure:
                    raise ProtocolOrderError("feedback before any measurement")
            else:
                raise ProtocolOrderError(f"unknown step {step!r}")
        if self.measurement_basis is not None and len(self.measurement_basis) != k:
            raise StateError(f"need {k} measurement-basis unitaries")

    @property
    def roles(self) -> Roles:
        return self.variant.roles

    @property
    def n_qubits(self) -> int:
        return 3 * self.variant.width

    @property
    def measurements(self) -> list[Measure]:
        return [s for s in self.steps if isinstance(s, Measure)]

    @property
    def cnots(self) -> list[Cnot]:
        return [s for s in self.steps if isinstance(s, Cnot)]

    def qubit(self, ref: tuple[str, int]) -> int:
        role, k = ref
        return {"S": self.roles.agent, "E": self.roles.environment, "R": self.roles.register}[role][k]

    def cnot_blocks(self) -> list[list[Cnot]]:
        """Maximal runs of consecutive CNOTs (parallelizable groups)."""
        blocks, cur = [], []
        for s in self.steps:
            if isinstance(s, Cnot):
                cur.append(s)
            elif cur:
                blocks.append(cur)
                cur = []
        if cur:
            blocks.append(cur)
        return blocks


def _cnots(src: str, k: int) -> list[Cnot]:
    return [Cnot((src, i), ("R", i)) for i in range(k)]


def build_protocol(variant: "str | Variant", measurement_basis=None) -> ProtocolSpec:
    variant = Variant.parse(variant)
    k = variant.width
    both = tuple(range(k))
    if variant is Variant.MQ_PARTIAL:
        steps = [*_cnots("E", k), Measure((0,), "M_1"), *_cnots("S", k), Measure(both, "M_S"), Feedback()]
    elif variant is Variant.MQ_NOMEAS:
        steps = [*_cnots("E", k), *_cnots("S", k), Measure(both, "M"), Feedback()]
    else:
        steps = [*_cnots("E", k), Measure(both, "M_E"), *_cnots("S", k), Measure(both, "M_S"), Feedback()]
    basis = None if measurement_basis is None else tuple(np.asarray(u, dtype=complex) for u in measurement_basis)
    return ProtocolSpec(variant, tuple(steps), basis)


def default_states(variant: "str | Variant") -> tuple[Statevector, Statevector] | None:
    """Fixed (agent, environment) initial states, for variants that define them."""
    variant = Variant.parse(variant)
    if variant is Variant.SQ_TRIVIAL:
        return basis_state(1, "0"), basis_state(1, "0")
    if variant is Variant.SQ_PLUS:
        return basis_state(1, "0"), from_amplitudes([1, 1])
    return None


@dataclass(frozen=True)
class MeasurementRecord:
    """Labelled outcomes of one cycle, in execution order."""

    entries: tuple[tuple[str, MeasurementOutcome], ...] = ()

    def __post_init__(self):
        labels = [lab for lab, _ in self.entries]
        if len(set(labels)) != len(labels):
            raise ProtocolOrderError(f"duplicate labels in record: {labels}")

    def add(self, label: str, outcome: MeasurementOutcome) -> "MeasurementRecord":
        return MeasurementRecord(self.entries + ((label, outcome),))

    def __getitem__(self, label: str) -> MeasurementOutcome:
        for lab, out in self.entries:
            if lab == label:
                return out
        raise KeyError(label)

    def __contains__(self, label: str) -> bool:
        return any(lab == label for lab, _ in self.entries)

    @property
    def bits(self) -> tuple[str, ...]:
        return tuple(o.bits for _, o in self.entries)

    def branch_bits(self) -> str:
        return "|".join(self.bits)

    @property
    def probability(self) -> float:
        return math.prod(o.probability for _, o in self.entries)


FINAL_LABEL = {
    Variant.SQ_TRIVIAL: "M_S",
    Variant.SQ_PLUS: "M_S",
    Variant.SQ_GENERAL: "M_S",
    Variant.MQ_TOTAL: "M_S",
    Variant.MQ_PARTIAL: "M_S",
    Variant.MQ_NOMEAS: "M",
}


def feedback_correction(record: MeasurementRecord, variant: "str | Variant") -> tuple[str, str]:
    """X masks ``(agent, register)`` for the feedback step.

    Agent qubit q and register qubit q are flipped iff bit q of the final
    register readout is 1.  This sends the agent onto the environment's
    post-measurement components and returns the register to all-zero.
    """
    variant = Variant.parse(variant)
    label = FINAL_LABEL[variant]
    if label not in record:
        raise ProtocolOrderError(f"record lacks the final measurement {label}")
    final = record[label]
    if len(final.bits) != variant.width:
        raise ProtocolOrderError(f"final measurement {label} must cover all register qubits")
    return final.bits, final.bits


@dataclass
class CycleReport:
    """Result of one learning cycle.

    ``record`` holds the outcomes as read by the controller; ``collapse``
    holds the outcomes the state actually collapsed onto.  They differ only
    under readout noise.
    """

    variant: Variant
    record: MeasurementRecord
    collapse: MeasurementRecord
    final_state: Statevector
    learning_fidelity: float | None
    positive_correlation: float
    initial_overlap: float | None = None
    cycle_duration: float | None = None
    noisy: bool = False

    @property
    def reward_kind(self) -> str:
        return self.variant.reward_kind

    @property
    def reward(self) -> float:
        if self.reward_kind == "learning_fidelity":
            if self.learning_fidelity is None:
                # noise left agent and environment entangled; no product-state fidelity
                return 0.0
            return self.learning_fidelity
        return self.positive_correlation

    @property
    def branch_probability(self) -> float:
        return self.collapse.probability


def _check_inputs(spec: ProtocolSpec, agent: Statevector, environment: Statevector) -> None:
    k = spec.variant.width
    if agent.n_qubits != k or environment.n_qubits != k:
        raise StateError(
            f"{spec.variant.value} needs {k}-qubit agent and environment, "
            f"got {agent.n_qubits} and {environment.n_qubits}"
        )


def initial_joint(spec: ProtocolSpec, agent: Statevector, environment: Statevector) -> Statevector:
    _check_inputs(spec, agent, environment)
    k = spec.variant.width
    return tensor(agent, environment, basis_state(k, "0" * k))


def measure_step(spec, state, step, rng, forced):
    qubits = tuple(spec.roles.register[i] for i in step.register)
    if spec.measurement_basis is None:
        return measure(state, qubits, rng=rng, forced=forced)
    bases = [spec.measurement_basis[i] for i in step.register]
    for q, u in zip(qubits, bases):
        state = apply_single(state, q, u.conj().T)
    outcome, post = measure(state, qubits, rng=rng, forced=forced)
    for q, u in zip(qubits, bases):
        post = apply_single(post, q, u)
    return outcome, post


def apply_feedback(
    spec: ProtocolSpec, state: Statevector, record: MeasurementRecord, noise: NoiseContext | None = None
) -> Statevector:
    """Apply the X masks from :func:`feedback_correction` to agent and register."""
    agent_mask, reg_mask = feedback_correction(record, spec.variant)
    for qubits, mask in ((spec.roles.agent, agent_mask), (spec.roles.register, reg_mask)):
        for q, bit in zip(qubits, mask):
            if bit == "1":
                state = apply_single(state, q, X)
                if noise is not None:
                    state = apply_gate_noise(state, (q,), noise.model.p_single, noise.rng)
    return state


def run_steps(
    spec: ProtocolSpec,
    state: Statevector,
    rng: np.random.Generator | None = None,
    forced: Sequence[str] | None = None,
    noise: NoiseContext | None = None,
) -> tuple[Statevector, MeasurementRecord, MeasurementRecord]:
    """Execute every step of ``spec`` on the joint state.

    Returns ``(final_state, record_as_read, record_as_collapsed)``.
    """
    if (rng is None) == (forced is None):
        raise StateError("give exactly one of rng or forced")
    n_meas = len(spec.measurements)
    if forced is not None:
        forced = list(forced)
        if len(forced) != n_meas:
            raise StateError(f"{spec.variant.value} has {n_meas} measurements, got {len(forced)} forced outcomes")
        for bits, m in zip(forced, spec.measurements):
            if len(bits) != len(m.register) or set(bits) - {"0", "1"}:
                raise StateError(f"forced outcome {bits!r} does not fit measurement {m.label}")
    model = noise.model if noise is not None else None
    hw = noise.hardware if noise is not None else None
    everyone = range(state.n_qubits)
    read = MeasurementRecord()
    true = MeasurementRecord()
    m_idx = 0
    for step in spec.steps:
        if isinstance(step, Cnot):
            c, t = spec.qubit(step.control), spec.qubit(step.target)
            state = apply_cnot(state, c, t)
            if model is not None:
                state = apply_gate_noise(state, (c, t), model.p_cnot, noise.rng)
                state = dephase(state, everyone, model.dephasing_probability(hw.t_cnot), noise.rng)
        elif isinstance(step, Measure):
            outcome, state = measure_step(spec, state, step, rng, None if forced is None else forced[m_idx])
            m_idx += 1
            true = true.add(step.label, outcome)
            if model is not None:
                outcome = flip_readout(outcome, model.p_readout, noise.rng)
                state = dephase(state, everyone, model.dephasing_probability(hw.t_feedback), noise.rng)
            read = read.add(step.label, outcome)
        elif isinstance(step, Feedback):
            state = apply_feedback(spec, state, read, noise)
    return state, read, true


def run_cycle(
    spec: ProtocolSpec,
    agent: Statevector,
    environment: Statevector,
    rng: np.random.Generator | None = None,
    forced: Sequence[str] | None = None,
    noise: NoiseContext | None = None,
) -> CycleReport:
    """Run one learning cycle from a fresh all-zero register.

    Outcomes are either sampled from ``rng`` or taken from ``forced`` (one
    bitstring per measurement step, in order).
    """
    joint = initial_joint(spec, agent, environment)
    final, read, true = run_steps(spec, joint, rng=rng, forced=forced, noise=noise)
    roles = spec.roles
    try:
        lf = learning_fidelity(final, roles)
    except NotProductStateError:
        lf = None
    corr = positive_correlation(final, roles).probability_agree
    initial_overlap = None
    if not spec.variant.entangled:
        try:
            s1 = subsystem_state(final, roles.agent)
            initial_overlap = overlap_fidelity(s1, environment)
        except StateError:
            pass
    duration = None
    if noise is not None:
        from .noise import budget  # circular: noise imports this module

        duration = budget(noise.hardware, spec, noise.model).cycle_time
    return CycleReport(
        spec.variant, read, true, final, lf, corr, initial_overlap, duration, noisy=noise is not None
    )


def reset_agent(joint: Statevector, roles: Roles, rng: np.random.Generator) -> Statevector:
    """Measure the agent qubits and flip them back to all-zero."""
    outcome, post = measure(joint, roles.agent, rng=rng)
    return apply_x_mask(post, roles.agent, outcome.bits)


@dataclass
class EnvironmentSchedule:
    """Environment initial states, one per cycle."""

    states: tuple[Statevector, ...]
    generator: str = "fixed-list"
    seed: int | None = None

    def __post_init__(self):
        self.states = tuple(self.states)
        if not self.states:
            raise StateError("schedule must contain at least one environment")
        widths = {s.n_qubits for s in self.states}
        if len(widths) != 1:
            raise StateError("schedule mixes environment sizes")

    @classmethod
    def random(cls, variant: "str | Variant", n_cycles: int, seed: int) -> "EnvironmentSchedule":
        variant = Variant.parse(variant)
        rng = np.random.default_rng(seed)
        states = tuple(random_state(variant.width, rng) for _ in range(n_cycles))
        return cls(states, "seeded-random-pure-state", seed)

    def __len__(self):
        return len(self.states)

    def check(self, variant: Variant) -> None:
        if self.states[0].n_qubits != variant.width:
            raise StateError(f"{variant.value} needs {variant.width}-qubit environments")


@dataclass
class SessionReport:
    """Per-cycle reports plus aggregate figures.

    With noise attached, ``fidelities[k]`` is the overlap of cycle k's noisy
    final state with the noise-free run on the same collapse branch, and
    ``session_fidelity`` is their product.
    """

    variant: Variant
    seed: int
    cycles: list[CycleReport] = field(default_factory=list)
    fidelities: list[float] | None = None
    budget: object | None = None

    @property
    def rewards(self) -> list[float]:
        return [c.reward for c in self.cycles]

    @property
    def mean_reward(self) -> float:
        return math.fsum(self.rewards) / len(self.cycles)

    @property
    def session_fidelity(self) -> float | None:
        if self.fidelities is None:
            return None
        return math.prod(self.fidelities)


def streams(seed: int) -> tuple[np.random.Generator, np.random.Generator]:
    """Independent (sampling, noise) generators for one seed."""
    sample_ss, noise_ss = np.random.SeedSequence(seed).spawn(2)
    return np.random.default_rng(sample_ss), np.random.default_rng(noise_ss)


def reference_fidelity(spec: ProtocolSpec, agent: Statevector, environment: Statevector, noisy: CycleReport) -> float:
    """Overlap of a noisy cycle's final state with the ideal run on its collapse branch."""
    try:
        ideal = run_cycle(spec, agent, environment, forced=noisy.collapse.bits)
    except ImpossibleBranchError:
        return 0.0
    return overlap_fidelity(ideal.final_state, noisy.final_state)


def _next_agent(variant: Variant, final: Statevector, rng: np.random.Generator) -> Statevector:
    roles = variant.roles
    if variant.width == 1:
        try:
            return subsystem_state(final, roles.agent)
        except StateError:
            pass
    reset = reset_agent(final, roles, rng)
    return subsystem_state(reset, roles.agent)


def run_session(
    variant: "str | Variant",
    schedule: EnvironmentSchedule,
    agent0: Statevector,
    seed: int,
    noise: NoiseModel | None = None,
    hardware: HardwareBudget | None = None,
) -> SessionReport:
    """Run one cycle per scheduled environment, carrying the agent over.

    Single-qubit agents carry their (product) final state into the next
    cycle; two-qubit agents are reset to all-zero between cycles.
    """
    variant = Variant.parse(variant)
    schedule.check(variant)
    spec = build_protocol(variant)
    sample_rng, noise_rng = streams(seed)
    ctx = None
    report = SessionReport(variant, seed)
    if noise is not None:
        from .noise import budget

        hardware = hardware or HardwareBudget()
        ctx = NoiseContext(noise, noise_rng, hardware)
        report.fidelities = []
        report.budget = budget(hardware, spec, noise)
    agent = agent0
    for k, env in enumerate(schedule.states):
        if k > 0:
            agent = _next_agent(variant, report.cycles[-1].final_state, sample_rng)
        cyc = run_cycle(spec, agent, env, rng=sample_rng, noise=ctx)
        report.cycles.append(cyc)
        if ctx is not None:
            report.fidelities.append(reference_fidelity(spec, agent, env, cyc))
    return report
