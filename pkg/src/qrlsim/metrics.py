"""Reward figures and sampled-vs-theory statistics."""
from __future__ import annotations

from dataclasses import dataclass
from typing import Mapping, Sequence

import numpy as np

from .errors import NotProductStateError, StateError
from .qstate import RENORM_WARN, Statevector, apply_single, bitstrings, reduced_density_matrix


@dataclass(frozen=True)
class Roles:
    """Qubit indices of agent, environment and register in a joint state."""

    agent: tuple[int, ...]
    environment: tuple[int, ...]
    register: tuple[int, ...]

    @classmethod
    def layout(cls, k: int) -> "Roles":
        """Standard S, E, R layout with ``k`` qubits per role."""
        return cls(tuple(range(k)), tuple(range(k, 2 * k)), tuple(range(2 * k, 3 * k)))

    @property
    def n_qubits(self) -> int:
        return len(self.agent) + len(self.environment) + len(self.register)


@dataclass(frozen=True)
class CorrelationResult:
    """Agreement statistics of local agent/environment measurements.

    ``per_branch`` holds ``(agent_bits + environment_bits, weight)`` for
    every joint outcome.
    """

    probability_agree: float
    per_branch: tuple[tuple[str, float], ...]


def _purity(rho: np.ndarray) -> float:
    return float(np.trace(rho @ rho).real)


def learning_fidelity(joint: Statevector, roles: Roles) -> float:
    """Squared overlap between the agent and environment marginal states.

    Both marginals must be pure; otherwise :class:`NotProductStateError`.
    """
    if len(roles.agent) != len(roles.environment):
        raise StateError("agent and environment must have equal qubit counts")
    rho_s = reduced_density_matrix(joint, roles.agent)
    rho_e = reduced_density_matrix(joint, roles.environment)
    for name, rho in (("agent", rho_s), ("environment", rho_e)):
        p = _purity(rho)
        if p < 1 - RENORM_WARN:
            raise NotProductStateError(f"{name} marginal is mixed (purity {p:.6f})")
    # Tr(rho_S rho_E) = |<E|S>|^2 for pure marginals
    return float(np.clip(np.trace(rho_s @ rho_e).real, 0.0, 1.0))


def positive_correlation(joint: Statevector, roles: Roles, basis: Sequence | None = None) -> CorrelationResult:
    """Probability that agent and environment read out identical bitstrings.

    ``basis`` is an optional per-qubit list of 2x2 unitaries (columns are the
    basis vectors), applied to matching agent/environment positions.
    """
    k = len(roles.agent)
    if k != len(roles.environment):
        raise StateError("agent and environment must have equal qubit counts")
    if basis is not None:
        if len(basis) != k:
            raise StateError(f"need {k} basis unitaries, got {len(basis)}")
        for q_s, q_e, u in zip(roles.agent, roles.environment, basis):
            ud = np.asarray(u, dtype=complex).conj().T
            joint = apply_single(apply_single(joint, q_s, ud), q_e, ud)
    probs = joint.probabilities().reshape((2,) * joint.n_qubits)
    keep = roles.agent + roles.environment
    others = tuple(q for q in range(joint.n_qubits) if q not in keep)
    marg = probs.sum(axis=others) if others else probs
    order = sorted(keep)
    marg = np.transpose(marg, [order.index(q) for q in keep]).reshape(2**k, 2**k)
    labels = bitstrings(k)
    per_branch = tuple((s + e, float(marg[i, j])) for i, s in enumerate(labels) for j, e in enumerate(labels))
    agree = float(np.clip(np.trace(marg), 0.0, 1.0))
    return CorrelationResult(agree, per_branch)


def histogram_divergence(observed: Mapping[str, int], expected: Mapping[str, float]) -> tuple[float, dict[str, float]]:
    """Total variation distance and per-outcome binomial z-scores.

    Outcomes absent from ``observed`` count as zero.  A z-score for an
    outcome with expected probability 0 or 1 is 0 when the count matches
    exactly and ``inf`` otherwise.
    """
    extra = set(observed) - set(expected)
    if extra:
        raise StateError(f"observed outcomes {sorted(extra)} have no expected probability")
    n = sum(observed.values())
    if n <= 0:
        raise StateError("observed counts are empty")
    tv = 0.0
    z = {}
    for key, p in expected.items():
        c = observed.get(key, 0)
        tv += abs(c / n - p)
        var = n * p * (1 - p)
        if var > 0:
            z[key] = (c - n * p) / np.sqrt(var)
        else:
            z[key] = 0.0 if np.isclose(c, n * p) else float("inf")
    return 0.5 * tv, z
