"""Hardware error budget and Monte Carlo trajectory estimates.

:func:`budget` is the back-of-envelope calculation: durations add up,
error probabilities add linearly, and ``k`` cycles compound as
``fidelity**k``.  :func:`monte_carlo_fidelity` checks that first-order
accounting against sampled noisy trajectories.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .channels import (  # noqa: F401  (re-exported)
    HardwareBudget,
    NoiseContext,
    NoiseModel,
    apply_gate_noise,
    dephase,
    flip_readout,
)
from .errors import StateError
from .protocol import ProtocolSpec, default_states, reference_fidelity, run_cycle
from .qstate import random_state


@dataclass(frozen=True)
class BudgetReport:
    cycle_time: float
    accumulated_gate_error: float
    accumulated_readout_error: float
    estimated_cycle_fidelity: float
    max_cycles_by_coherence: int
    n_cnot: int
    n_single: int
    n_measurements: int

    def fidelity_after(self, k: int) -> float:
        """Fidelity after ``k`` cycles assuming uncorrelated errors."""
        if k < 0:
            raise StateError("cycle count must be non-negative")
        return self.estimated_cycle_fidelity**k

    def summary(self) -> str:
        return "\n".join(
            [
                f"cycle_time={self.cycle_time:g} ns",
                f"cnots={self.n_cnot} single_qubit_gates={self.n_single} measurements={self.n_measurements}",
                f"accumulated_gate_error={self.accumulated_gate_error:.4f}",
                f"accumulated_readout_error={self.accumulated_readout_error:.4f}",
                f"estimated_cycle_fidelity={self.estimated_cycle_fidelity:.4f}",
                f"max_cycles_by_coherence={self.max_cycles_by_coherence}",
            ]
        )


def budget(hw: HardwareBudget, spec: ProtocolSpec, noise: NoiseModel) -> BudgetReport:
    """Timing and error budget for one cycle of ``spec``.

    Feedback X gates are issued inside the feedback window and cost no extra
    time, but count (worst case, all flipped) toward the single-qubit error.
    Each measurement step costs one feedback latency and one readout error
    ``p_readout``.  A rotated measurement basis adds two single-qubit gates
    per measured qubit.
    """
    n_cnot = len(spec.cnots)
    measurements = spec.measurements
    n_meas = len(measurements)
    k = spec.variant.width
    n_rot = 0
    if spec.measurement_basis is not None:
        n_rot = 2 * sum(len(m.register) for m in measurements)
    n_single = 2 * k + n_rot

    if hw.sequential_cnots:
        cnot_time = n_cnot * hw.t_cnot
    else:
        cnot_time = len(spec.cnot_blocks()) * hw.t_cnot
    # rotations before and after one measurement run in parallel across qubits
    rot_time = 2 * n_meas * hw.t_single if n_rot else 0.0
    cycle_time = cnot_time + rot_time + n_meas * hw.t_feedback

    gate_err = n_cnot * noise.p_cnot + n_single * noise.p_single
    readout_err = n_meas * noise.p_readout
    fid = min(1.0, max(0.0, 1.0 - gate_err - readout_err))
    return BudgetReport(
        cycle_time=cycle_time,
        accumulated_gate_error=gate_err,
        accumulated_readout_error=readout_err,
        estimated_cycle_fidelity=fid,
        max_cycles_by_coherence=math.floor(hw.t_coh / cycle_time),
        n_cnot=n_cnot,
        n_single=n_single,
        n_measurements=n_meas,
    )


def trajectory_seed(master: int, index: int) -> int:
    """64-bit seed of trajectory/shot ``index``, derived by counter from ``master``."""
    ss = np.random.SeedSequence(master, spawn_key=(index,))
    return int(ss.generate_state(1, np.uint64)[0])


def trajectory_fidelity(spec: ProtocolSpec, noise: NoiseModel, seed: int, hardware: HardwareBudget | None = None) -> float:
    """One noisy cycle from seed-determined inputs, scored against the ideal run."""
    from .protocol import streams

    sample_rng, noise_rng = streams(seed)
    fixed = default_states(spec.variant)
    if fixed is None:
        agent = random_state(spec.variant.width, sample_rng)
        env = random_state(spec.variant.width, sample_rng)
    else:
        agent, env = fixed
    ctx = NoiseContext(noise, noise_rng, hardware or HardwareBudget())
    noisy = run_cycle(spec, agent, env, rng=sample_rng, noise=ctx)
    return reference_fidelity(spec, agent, env, noisy)


def monte_carlo_fidelity(
    spec: ProtocolSpec,
    noise: NoiseModel,
    n_traj: int,
    seed: int,
    hardware: HardwareBudget | None = None,
) -> tuple[float, float]:
    """Mean and standard error of the per-cycle trajectory fidelity.

    Trajectory ``k`` is seeded with ``trajectory_seed(seed, k)`` so any
    single trajectory can be replayed on its own.
    """
    if n_traj < 1:
        raise StateError("n_traj must be >= 1")
    f = np.array([trajectory_fidelity(spec, noise, trajectory_seed(seed, k), hardware) for k in range(n_traj)])
    mean = math.fsum(f) / n_traj
    if n_traj == 1:
        return mean, 0.0
    var = math.fsum((f - mean) ** 2) / (n_traj - 1)
    return mean, math.sqrt(var / n_traj)
