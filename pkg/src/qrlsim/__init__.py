"""Statevector simulation of measurement-feedback quantum reinforcement learning cycles."""

__version__ = "0.1.0"

from .channels import HardwareBudget, NoiseModel
from .metrics import CorrelationResult, Roles, histogram_divergence, learning_fidelity, positive_correlation
from .qstate import (
    MeasurementOutcome,
    Statevector,
    apply_cnot,
    apply_single,
    basis_state,
    branch_probabilities,
    from_amplitudes,
    measure,
    overlap_fidelity,
    tensor,
)
from .protocol import (
    CycleReport,
    EnvironmentSchedule,
    MeasurementRecord,
    ProtocolSpec,
    SessionReport,
    Variant,
    build_protocol,
    feedback_correction,
    reset_agent,
    run_cycle,
    run_session,
)
from .noise import BudgetReport, budget, monte_carlo_fidelity
