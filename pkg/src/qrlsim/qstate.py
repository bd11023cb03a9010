"""Dense statevector engine.

Qubit 0 is the most significant bit of a basis label, so the amplitude of
``|q0 q1 ... q_{n-1}>`` sits at index ``int("q0q1...", 2)``.  This matches
left-to-right ket notation: in a joint ``|S>|E>|R>`` ket the agent qubits
come first.

States are treated as immutable; every operation returns a new
:class:`Statevector`.
"""
from __future__ import annotations

import itertools
import logging
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .errors import ImpossibleBranchError, StateError

log = logging.getLogger(__name__)

ATOL = 1e-12
RENORM_WARN = 1e-9
IMPOSSIBLE = 1e-14

SQRT2_INV = 1 / np.sqrt(2)

I2 = np.eye(2, dtype=complex)
X = np.array([[0, 1], [1, 0]], dtype=complex)
Y = np.array([[0, -1j], [1j, 0]], dtype=complex)
Z = np.array([[1, 0], [0, -1]], dtype=complex)
H = np.array([[1, 1], [1, -1]], dtype=complex) * SQRT2_INV
PAULIS = {"I": I2, "X": X, "Y": Y, "Z": Z}


class Statevector:
    """Normalized complex amplitude vector over ``n_qubits`` qubits.

    Parameters
    ----------
    amplitudes : array_like
        ``2**n`` complex amplitudes. Must already be normalized; use
        :func:`from_amplitudes` for arbitrary input.
    renormalized : bool
        Set by :func:`from_amplitudes` when the input norm was off by more
        than ``RENORM_WARN``.
    """

    __slots__ = ("_amps", "n_qubits", "renormalized")

    def __init__(self, amplitudes, renormalized: bool = False):
        amps = np.array(amplitudes, dtype=complex).reshape(-1)
        n = _log2_exact(amps.size)
        amps.setflags(write=False)
        self._amps = amps
        self.n_qubits = n
        self.renormalized = renormalized

    @property
    def amplitudes(self) -> np.ndarray:
        return self._amps

    @property
    def dim(self) -> int:
        return self._amps.size

    def norm(self) -> float:
        return float(np.sqrt(np.vdot(self._amps, self._amps).real))

    def probabilities(self) -> np.ndarray:
        return np.abs(self._amps) ** 2

    def tensor(self) -> np.ndarray:
        """Amplitudes reshaped to one axis per qubit (axis 0 = qubit 0)."""
        return self._amps.reshape((2,) * self.n_qubits)

    def __eq__(self, other):
        if not isinstance(other, Statevector):
            return NotImplemented
        return self.n_qubits == other.n_qubits and np.array_equal(self._amps, other._amps)

    def __hash__(self):
        return hash(self._amps.tobytes())

    def __repr__(self):
        return f"Statevector(n_qubits={self.n_qubits}, amplitudes={np.array2string(self._amps, precision=4)})"


@dataclass(frozen=True)
class MeasurementOutcome:
    """Outcome of a projective measurement on ``qubits``.

    ``bits[i]`` is the result for ``qubits[i]``.
    """

    qubits: tuple[int, ...]
    bits: str
    probability: float

    def __post_init__(self):
        if len(self.qubits) != len(self.bits):
            raise StateError(f"bits {self.bits!r} do not match qubits {self.qubits}")
        if not -ATOL <= self.probability <= 1 + ATOL:
            raise StateError(f"probability {self.probability} outside [0, 1]")


def _log2_exact(size: int) -> int:
    if size < 2 or size & (size - 1):
        raise StateError(f"amplitude count {size} is not a power of two >= 2")
    return size.bit_length() - 1


def _check_qubit(n_qubits: int, q: int) -> None:
    if not 0 <= q < n_qubits:
        raise StateError(f"qubit index {q} out of range for {n_qubits} qubits")


def _check_qubit_list(n_qubits: int, qubits: Sequence[int]) -> tuple[int, ...]:
    qubits = tuple(int(q) for q in qubits)
    if not qubits:
        raise StateError("at least one qubit must be measured")
    if len(set(qubits)) != len(qubits):
        raise StateError(f"duplicate qubit indices in {qubits}")
    for q in qubits:
        _check_qubit(n_qubits, q)
    return qubits


def bitstrings(k: int) -> list[str]:
    """All length-``k`` bitstrings in ascending binary order."""
    return ["".join(b) for b in itertools.product("01", repeat=k)]


def basis_state(n_qubits: int, bits: str) -> Statevector:
    if n_qubits < 1:
        raise StateError("n_qubits must be positive")
    if len(bits) != n_qubits or set(bits) - {"0", "1"}:
        raise StateError(f"bitstring {bits!r} is not a {n_qubits}-qubit label")
    amps = np.zeros(2**n_qubits, dtype=complex)
    amps[int(bits, 2)] = 1.0
    return Statevector(amps)


def from_amplitudes(amplitudes) -> Statevector:
    """Build a state from arbitrary nonzero amplitudes, normalizing them.

    The returned state's ``renormalized`` flag is set when the input norm
    differed from 1 by more than ``RENORM_WARN``.
    """
    amps = np.array(amplitudes, dtype=complex).reshape(-1)
    _log2_exact(amps.size)
    norm = np.sqrt(np.vdot(amps, amps).real)
    if not np.isfinite(norm) or norm == 0:
        raise StateError("cannot normalize a zero (or non-finite) amplitude vector")
    flagged = abs(norm - 1) > RENORM_WARN
    if flagged:
        log.debug("renormalizing amplitudes with norm %.3g", norm)
    return Statevector(amps / norm, renormalized=flagged)


def random_state(n_qubits: int, rng: np.random.Generator) -> Statevector:
    """Haar-random pure state from normalized complex Gaussian amplitudes."""
    z = rng.standard_normal(2**n_qubits) + 1j * rng.standard_normal(2**n_qubits)
    return Statevector(z / np.linalg.norm(z))


def tensor(a: Statevector, *rest: Statevector) -> Statevector:
    """Kronecker product; earlier factors occupy the high-significance qubits."""
    amps = a.amplitudes
    for b in rest:
        amps = np.multiply.outer(amps, b.amplitudes).reshape(-1)
    return Statevector(amps)


def is_unitary(u, atol: float = ATOL) -> bool:
    u = np.asarray(u, dtype=complex)
    return u.shape == (2, 2) and np.allclose(u @ u.conj().T, I2, atol=atol, rtol=0)


_KNOWN_GATES = {id(g) for g in (I2, X, Y, Z, H)}


def apply_single(state: Statevector, qubit: int, u) -> Statevector:
    """Apply the 2x2 unitary ``u`` to ``qubit``."""
    _check_qubit(state.n_qubits, qubit)
    if id(u) not in _KNOWN_GATES:
        u = np.asarray(u, dtype=complex)
        if not is_unitary(u):
            raise StateError("single-qubit gate is not a 2x2 unitary")
    psi = np.tensordot(u, state.tensor(), axes=([1], [qubit]))
    psi = np.moveaxis(psi, 0, qubit)
    return Statevector(psi.reshape(-1))


def apply_x_mask(state: Statevector, qubits: Sequence[int], mask: str) -> Statevector:
    """Apply X to ``qubits[i]`` wherever ``mask[i] == '1'``."""
    for q, bit in zip(qubits, mask):
        if bit == "1":
            state = apply_single(state, q, X)
    return state


def apply_cnot(state: Statevector, control: int, target: int) -> Statevector:
    _check_qubit(state.n_qubits, control)
    _check_qubit(state.n_qubits, target)
    if control == target:
        raise StateError("CNOT control and target must differ")
    psi = state.tensor().copy()
    idx = [slice(None)] * state.n_qubits
    idx[control] = 1
    sub = psi[tuple(idx)]
    # the target axis index shifts down by one once the control axis is removed
    t_axis = target - (target > control)
    psi[tuple(idx)] = np.flip(sub, axis=t_axis)
    return Statevector(psi.reshape(-1))


def _marginal(state: Statevector, qubits: tuple[int, ...]) -> np.ndarray:
    """Marginal probabilities over ``qubits``, flattened in their listed order."""
    probs = state.probabilities().reshape((2,) * state.n_qubits)
    others = tuple(q for q in range(state.n_qubits) if q not in qubits)
    marg = probs.sum(axis=others) if others else probs
    # sum() leaves the kept axes in ascending qubit order
    order = sorted(qubits)
    marg = np.transpose(marg, [order.index(q) for q in qubits])
    return marg.reshape(-1)


def branch_probabilities(state: Statevector, qubits: Sequence[int]) -> list[MeasurementOutcome]:
    """Outcome distribution of a computational-basis measurement of ``qubits``.

    One entry per bitstring in ascending order; ``bits[i]`` refers to
    ``qubits[i]``.
    """
    qubits = _check_qubit_list(state.n_qubits, qubits)
    marg = _marginal(state, qubits)
    return [
        MeasurementOutcome(qubits, bits, float(p))
        for bits, p in zip(bitstrings(len(qubits)), marg)
    ]


def project(state: Statevector, qubits: Sequence[int], bits: str) -> tuple[float, Statevector]:
    """Project onto ``bits`` and renormalize; returns (probability, post-state)."""
    qubits = _check_qubit_list(state.n_qubits, qubits)
    if len(bits) != len(qubits) or set(bits) - {"0", "1"}:
        raise StateError(f"outcome {bits!r} does not match qubits {qubits}")
    psi = state.tensor().copy()
    keep = np.zeros_like(psi, dtype=bool)
    idx = [slice(None)] * state.n_qubits
    for q, b in zip(qubits, bits):
        idx[q] = int(b)
    keep[tuple(idx)] = True
    psi[~keep] = 0
    p = float(np.vdot(psi, psi).real)
    if p < IMPOSSIBLE:
        raise ImpossibleBranchError(f"outcome {bits} on qubits {qubits} has probability {p:.3g}")
    return p, Statevector(psi.reshape(-1) / np.sqrt(p))


def measure(
    state: Statevector,
    qubits: Sequence[int],
    rng: np.random.Generator | None = None,
    forced: str | None = None,
    basis=None,
) -> tuple[MeasurementOutcome, Statevector]:
    """Projective (Lüders) measurement of ``qubits``.

    Exactly one of ``rng`` (sample the outcome) or ``forced`` (select it)
    must be given.  Unmeasured qubits keep their relative phases; only basis
    states compatible with the outcome survive.

    ``basis`` is an optional 2x2 unitary whose columns are the measurement
    basis vectors.  It is handled by conjugation: ``U^dagger`` on each
    measured qubit, a computational-basis measurement, then ``U``.
    """
    if (rng is None) == (forced is None):
        raise StateError("give exactly one of rng or forced")
    qubits = _check_qubit_list(state.n_qubits, qubits)
    if basis is not None:
        u = np.asarray(basis, dtype=complex)
        for q in qubits:
            state = apply_single(state, q, u.conj().T)
    if forced is None:
        outcomes = branch_probabilities(state, qubits)
        cdf = np.cumsum([o.probability for o in outcomes])
        k = int(np.searchsorted(cdf, rng.random() * cdf[-1], side="right"))
        forced = outcomes[min(k, len(outcomes) - 1)].bits
    prob, post = project(state, qubits, forced)
    if basis is not None:
        for q in qubits:
            post = apply_single(post, q, u)
    return MeasurementOutcome(qubits, forced, min(prob, 1.0)), post


def inner(a: Statevector, b: Statevector) -> complex:
    if a.n_qubits != b.n_qubits:
        raise StateError(f"dimension mismatch: {a.n_qubits} vs {b.n_qubits} qubits")
    return complex(np.vdot(a.amplitudes, b.amplitudes))


def overlap_fidelity(a: Statevector, b: Statevector) -> float:
    """|<a|b>|^2, clipped to [0, 1]."""
    return float(min(1.0, abs(inner(a, b)) ** 2))


def reduced_density_matrix(state: Statevector, qubits: Sequence[int]) -> np.ndarray:
    """Partial trace keeping ``qubits`` (in the listed order)."""
    qubits = _check_qubit_list(state.n_qubits, qubits)
    others = [q for q in range(state.n_qubits) if q not in qubits]
    psi = np.transpose(state.tensor(), list(qubits) + others)
    psi = psi.reshape(2 ** len(qubits), -1)
    return psi @ psi.conj().T


def subsystem_state(state: Statevector, qubits: Sequence[int], min_purity: float = 1 - RENORM_WARN) -> Statevector:
    """Pure state of ``qubits`` when they are unentangled with the rest.

    Raises :class:`StateError` when the marginal purity is below
    ``min_purity``.
    """
    rho = reduced_density_matrix(state, qubits)
    purity = float(np.trace(rho @ rho).real)
    if purity < min_purity:
        raise StateError(f"subsystem {tuple(qubits)} is mixed (purity {purity:.6f})")
    w, v = np.linalg.eigh(rho)
    vec = v[:, -1]
    # fix the global phase so the largest component is real and positive
    k = int(np.argmax(np.abs(vec)))
    vec = vec * np.exp(-1j * np.angle(vec[k]))
    return Statevector(vec / np.linalg.norm(vec))
