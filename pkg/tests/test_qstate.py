import itertools
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from qrlsim.errors import ImpossibleBranchError, StateError
from qrlsim.qstate import (
    H,
    X,
    Z,
    apply_cnot,
    apply_single,
    basis_state,
    branch_probabilities,
    from_amplitudes,
    measure,
    overlap_fidelity,
    random_state,
    reduced_density_matrix,
    subsystem_state,
    tensor,
)

from conftest import random_amps, same_up_to_phase

SQ2 = 1 / math.sqrt(2)
seeds = st.integers(0, 2**32 - 1)


def test_basis_state_single_and_pair():
    assert np.array_equal(basis_state(1, "0").amplitudes, [1, 0])
    assert np.array_equal(basis_state(2, "00").amplitudes, [1, 0, 0, 0])


def test_basis_state_msb_first_matches_label_enumeration():
    # enumerate labels in lexicographic ket order independently of int(bits, 2)
    labels = ["".join(p) for p in itertools.product("01", repeat=3)]
    for position, label in enumerate(labels):
        amps = basis_state(3, label).amplitudes
        assert amps[position] == 1 and np.count_nonzero(amps) == 1
    assert basis_state(3, "011").amplitudes[3] == 1


@pytest.mark.parametrize("n,bits", [(2, "0"), (1, "01"), (2, "0a")])
def test_basis_state_rejects_bad_labels(n, bits):
    with pytest.raises(StateError):
        basis_state(n, bits)


def test_from_amplitudes():
    plus = from_amplitudes([SQ2, SQ2])
    assert np.allclose(plus.amplitudes, [SQ2, SQ2], atol=1e-15)
    assert not plus.renormalized
    assert np.array_equal(from_amplitudes([1, 0]).amplitudes, [1, 0])
    s = from_amplitudes([3, 4])
    norm = math.sqrt(sum(abs(a) ** 2 for a in [3, 4]))
    assert norm == 5
    assert np.allclose(s.amplitudes, [0.6, 0.8], atol=1e-15, rtol=0)
    assert s.renormalized


@pytest.mark.parametrize("amps", [[0, 0], [1, 0, 0], [1]])
def test_from_amplitudes_rejects(amps):
    with pytest.raises(StateError):
        from_amplitudes(amps)


def test_tensor_basis_and_linearity():
    assert tensor(basis_state(1, "0"), basis_state(1, "1")) == basis_state(2, "01")
    plus = from_amplitudes([1, 1])
    got = tensor(plus, basis_state(1, "0"))
    assert np.allclose(got.amplitudes, [SQ2, 0, SQ2, 0], atol=1e-15)


def test_tensor_matches_double_loop(rng):
    a, b = random_amps(rng, 1), random_amps(rng, 1)
    expected = [a[i] * b[j] for i in range(2) for j in range(2)]
    got = tensor(from_amplitudes(a), from_amplitudes(b))
    assert np.allclose(got.amplitudes, expected, atol=1e-15)
    assert got.n_qubits == 2


def test_apply_single_examples():
    assert apply_single(basis_state(1, "0"), 0, X) == basis_state(1, "1")
    assert apply_single(basis_state(2, "00"), 1, X) == basis_state(2, "01")
    plus = apply_single(basis_state(1, "0"), 0, H)
    assert np.allclose(plus.amplitudes, [SQ2, SQ2], atol=1e-15)


def test_apply_single_errors():
    with pytest.raises(StateError):
        apply_single(basis_state(2, "00"), 2, X)
    with pytest.raises(StateError):
        apply_single(basis_state(1, "0"), 0, np.array([[1, 1], [0, 1]]))


def test_cnot_makes_bell_state():
    state = tensor(from_amplitudes([1, 1]), basis_state(1, "0"))
    bell = apply_cnot(state, 0, 1)
    assert np.allclose(bell.amplitudes, [SQ2, 0, 0, SQ2], atol=1e-15)


def test_cnot_control_zero_is_identity(rng):
    target = from_amplitudes(random_amps(rng, 1))
    state = tensor(basis_state(1, "0"), target)
    assert apply_cnot(state, 0, 1) == state


def test_cnot_general_environment(rng):
    a = random_amps(rng, 1)
    out = apply_cnot(tensor(from_amplitudes(a), basis_state(1, "0")), 0, 1)
    assert np.allclose(out.amplitudes, [a[0], 0, 0, a[1]], atol=1e-15)


def test_cnot_reverse_direction():
    # control below target in significance
    assert apply_cnot(basis_state(3, "001"), 2, 0) == basis_state(3, "101")


def test_cnot_errors():
    with pytest.raises(StateError):
        apply_cnot(basis_state(2, "00"), 1, 1)
    with pytest.raises(StateError):
        apply_cnot(basis_state(2, "00"), 0, 5)


def test_branch_probabilities_examples(rng):
    bell = apply_cnot(tensor(from_amplitudes([1, 1]), basis_state(1, "0")), 0, 1)
    probs = {o.bits: o.probability for o in branch_probabilities(bell, [1])}
    assert probs == pytest.approx({"0": 0.5, "1": 0.5}, abs=1e-15)
    probs = {o.bits: o.probability for o in branch_probabilities(basis_state(2, "00"), [0, 1])}
    assert probs == {"00": 1.0, "01": 0.0, "10": 0.0, "11": 0.0}


def test_branch_probabilities_grouped_by_register(rng):
    env = random_amps(rng, 2)
    state = tensor(from_amplitudes(env), basis_state(2, "00"))
    state = apply_cnot(apply_cnot(state, 0, 2), 1, 3)
    # brute force: group |amplitude|^2 by the register bits of each label
    brute = {}
    for idx, amp in enumerate(state.amplitudes):
        reg = format(idx, "04b")[2:]
        brute[reg] = brute.get(reg, 0.0) + abs(amp) ** 2
    for o in branch_probabilities(state, [2, 3]):
        assert o.probability == pytest.approx(brute[o.bits], abs=1e-12)
        assert o.probability == pytest.approx(abs(env[int(o.bits, 2)]) ** 2, abs=1e-12)


def test_branch_probabilities_respects_listed_order():
    state = basis_state(3, "011")
    out = {o.bits: o.probability for o in branch_probabilities(state, [2, 0])}
    assert out["10"] == 1.0


def test_branch_probabilities_duplicate_index():
    with pytest.raises(StateError):
        branch_probabilities(basis_state(2, "00"), [0, 0])


def test_measure_partial_collapse_keeps_coherence(rng):
    env = random_amps(rng, 2)
    state = tensor(from_amplitudes(env), basis_state(2, "00"))
    state = apply_cnot(apply_cnot(state, 0, 2), 1, 3)
    outcome, post = measure(state, [2], forced="0")
    assert outcome.probability == pytest.approx(abs(env[0]) ** 2 + abs(env[1]) ** 2, abs=1e-12)
    expected = np.zeros(16, dtype=complex)
    expected[0b0000], expected[0b0101] = env[0], env[1]
    expected /= np.linalg.norm(expected)
    assert np.allclose(post.amplitudes, expected, atol=1e-12)


def test_measure_eigenstate():
    outcome, post = measure(basis_state(1, "0"), [0], rng=np.random.default_rng(0))
    assert outcome.bits == "0" and outcome.probability == 1.0
    assert post == basis_state(1, "0")


def test_measure_reassembly_oracle(rng):
    psi = from_amplitudes(random_amps(rng, 3))
    parts = []
    for bit in "01":
        out, post = measure(psi, [2], forced=bit)
        parts.append(math.sqrt(out.probability) * post.amplitudes)
    rebuilt = parts[0] + parts[1]
    assert abs(abs(np.vdot(rebuilt, psi.amplitudes)) - 1) < 1e-12


def test_measure_impossible_branch():
    with pytest.raises(ImpossibleBranchError):
        measure(basis_state(1, "0"), [0], forced="1")


def test_measure_needs_exactly_one_selector():
    with pytest.raises(StateError):
        measure(basis_state(1, "0"), [0])


def test_measure_rotated_basis():
    plus = from_amplitudes([1, 1])
    out, post = measure(plus, [0], forced="0", basis=H)
    assert out.probability == pytest.approx(1.0, abs=1e-12)
    assert same_up_to_phase(post, plus)


def test_measure_sampling_frequencies():
    rng = np.random.default_rng(3)
    state = from_amplitudes([0.6, 0.8])
    ones = sum(measure(state, [0], rng=rng)[0].bits == "1" for _ in range(20_000))
    sigma = math.sqrt(20_000 * 0.64 * 0.36)
    assert abs(ones - 20_000 * 0.64) < 4 * sigma


def test_overlap_fidelity():
    zero, one, plus = basis_state(1, "0"), basis_state(1, "1"), from_amplitudes([1, 1])
    assert overlap_fidelity(zero, zero) == 1
    assert overlap_fidelity(zero, one) == 0
    assert overlap_fidelity(zero, plus) == pytest.approx(abs(1 * SQ2) ** 2, abs=1e-15)
    with pytest.raises(StateError):
        overlap_fidelity(zero, basis_state(2, "00"))


def test_subsystem_state_product_and_entangled():
    psi = tensor(basis_state(1, "1"), from_amplitudes([1, 1j]))
    sub = subsystem_state(psi, [1])
    assert same_up_to_phase(sub, from_amplitudes([1, 1j]))
    bell = apply_cnot(tensor(from_amplitudes([1, 1]), basis_state(1, "0")), 0, 1)
    with pytest.raises(StateError):
        subsystem_state(bell, [0])
    assert np.allclose(reduced_density_matrix(bell, [0]), np.eye(2) / 2, atol=1e-15)


def test_states_are_immutable():
    s = basis_state(1, "0")
    with pytest.raises(ValueError):
        s.amplitudes[0] = 0


def _random_unitary(rng):
    q, r = np.linalg.qr(rng.standard_normal((2, 2)) + 1j * rng.standard_normal((2, 2)))
    return q * (np.diag(r) / abs(np.diag(r)))


@settings(max_examples=200, deadline=None)
@given(seed=seeds, n=st.integers(1, 6))
def test_gate_sequences_preserve_norm(seed, n):
    rng = np.random.default_rng(seed)
    psi = random_state(n, rng)
    for _ in range(10):
        if n > 1 and rng.random() < 0.5:
            c, t = rng.choice(n, 2, replace=False)
            psi = apply_cnot(psi, int(c), int(t))
        else:
            psi = apply_single(psi, int(rng.integers(n)), _random_unitary(rng))
        assert abs(psi.norm() - 1) <= 1e-12


@settings(max_examples=200, deadline=None)
@given(seed=seeds, n=st.integers(2, 6))
def test_unitarity_round_trips(seed, n):
    rng = np.random.default_rng(seed)
    psi = random_state(n, rng)
    u = _random_unitary(rng)
    q = int(rng.integers(n))
    back = apply_single(apply_single(psi, q, u), q, u.conj().T)
    assert np.max(np.abs(back.amplitudes - psi.amplitudes)) <= 1e-12
    c, t = (int(x) for x in rng.choice(n, 2, replace=False))
    assert np.max(np.abs(apply_cnot(apply_cnot(psi, c, t), c, t).amplitudes - psi.amplitudes)) <= 1e-12


@settings(max_examples=300, deadline=None)
@given(seed=seeds, n=st.integers(1, 6), data=st.data())
def test_measurement_completeness_and_collapse_consistency(seed, n, data):
    psi = random_state(n, np.random.default_rng(seed))
    qubits = data.draw(st.lists(st.integers(0, n - 1), min_size=1, max_size=n, unique=True))
    outcomes = branch_probabilities(psi, qubits)
    assert abs(math.fsum(o.probability for o in outcomes) - 1) <= 1e-12
    for o in outcomes:
        if o.probability < 1e-12:
            continue
        _, post = measure(psi, qubits, forced=o.bits)
        again = {x.bits: x.probability for x in branch_probabilities(post, qubits)}
        assert again[o.bits] == pytest.approx(1.0, abs=1e-12)


def test_z_phase_survives_partial_measurement():
    # relative phase on the unmeasured qubit is kept through the collapse
    psi = apply_single(tensor(from_amplitudes([1, 1]), from_amplitudes([1, 1])), 0, Z)
    _, post = measure(psi, [1], forced="0")
    assert np.allclose(post.amplitudes, [SQ2, 0, -SQ2, 0], atol=1e-15)
