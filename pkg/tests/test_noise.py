import itertools
import math
from dataclasses import replace

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from qrlsim.errors import StateError
from qrlsim.noise import (
    HardwareBudget,
    NoiseContext,
    NoiseModel,
    apply_gate_noise,
    budget,
    dephase,
    flip_readout,
    monte_carlo_fidelity,
    trajectory_seed,
)
from qrlsim.protocol import Variant, build_protocol, default_states, run_cycle, streams
from qrlsim.qstate import PAULIS, MeasurementOutcome, apply_cnot, basis_state, from_amplitudes, random_state, tensor

DEFAULT_NOISE = NoiseModel()


def bell_pair():
    return apply_cnot(tensor(from_amplitudes([1, 1]), basis_state(1, "0")), 0, 1)


# ---------------------------------------------------------------- channels


def test_noise_model_domain():
    with pytest.raises(StateError):
        NoiseModel(p_cnot=0.6)
    with pytest.raises(StateError):
        NoiseModel(p_readout=-0.1)
    with pytest.raises(StateError):
        NoiseModel(t_coh=0)
    with pytest.raises(StateError):
        HardwareBudget(t_cnot=0)
    assert NoiseModel.ideal().is_ideal and not DEFAULT_NOISE.is_ideal


def test_gate_noise_zero_is_identity(rng):
    psi = random_state(2, rng)
    for _ in range(100):
        assert apply_gate_noise(psi, (0, 1), 0.0, rng) is psi


def test_gate_noise_certain_single_qubit(rng):
    psi = random_state(1, rng)
    images = {p: PAULIS[p] @ psi.amplitudes for p in "XYZ"}
    counts = dict.fromkeys("XYZ", 0)
    n = 30_000
    for _ in range(n):
        out = apply_gate_noise(psi, (0,), 1.0, rng)
        assert out.norm() == pytest.approx(1.0, abs=1e-12)
        hit = [p for p, v in images.items() if np.allclose(out.amplitudes, v, atol=1e-12)]
        assert len(hit) == 1
        counts[hit[0]] += 1
    sigma = math.sqrt(n * (1 / 3) * (2 / 3))
    for p in "XYZ":
        assert abs(counts[p] - n / 3) <= 4 * sigma


def test_gate_noise_rejects_bad_probability(rng):
    with pytest.raises(StateError):
        apply_gate_noise(basis_state(1, "0"), (0,), 1.5, rng)


def exact_bell_channel_fidelity(p):
    """Density-matrix average over the 15 non-identity two-qubit Pauli strings."""
    b = bell_pair().amplitudes
    rho = (1 - p) * np.outer(b, b.conj())
    for a, c in itertools.product("IXYZ", repeat=2):
        if a == c == "I":
            continue
        u = np.kron(PAULIS[a], PAULIS[c])
        rho = rho + (p / 15) * u @ np.outer(b, b.conj()) @ u.conj().T
    return float(np.real(b.conj() @ rho @ b))


def test_bell_channel_against_density_matrix():
    exact = exact_bell_channel_fidelity(0.01)
    assert exact == pytest.approx(0.992, abs=1e-12)
    rng = np.random.default_rng(17)
    plus0 = tensor(from_amplitudes([1, 1]), basis_state(1, "0"))
    ideal = bell_pair().amplitudes
    n = 100_000
    f = np.empty(n)
    for i in range(n):
        out = apply_gate_noise(apply_cnot(plus0, 0, 1), (0, 1), 0.01, rng)
        f[i] = abs(np.vdot(ideal, out.amplitudes)) ** 2
    se = f.std() / math.sqrt(n)
    assert abs(f.mean() - exact) <= 4 * se + 1e-12


def test_flip_readout_zero_and_half(rng):
    out = MeasurementOutcome((0,), "1", 0.3)
    assert flip_readout(out, 0.0, rng) is out
    n = 100_000
    flips = sum(flip_readout(out, 0.5, rng).bits == "0" for _ in range(n))
    assert abs(flips - n / 2) <= 3 * math.sqrt(n / 4)
    assert flip_readout(out, 0.5, rng).probability == 0.3


def sq_plus_readout_oracle(p):
    """Exact mean learning fidelity of SQ-PLUS under misreads only.

    True branches are (0,0) and (1,1), each with weight 1/2, and leave
    S = |0>, E = R = |b> before feedback.  The feedback flips S and R iff the
    *read* M_S is 1, so the cycle succeeds iff the read M_S equals the true
    one.  M_E is never consulted.
    """
    total = 0.0
    for b in (0, 1):
        for m_e_flip, m_s_flip in itertools.product((0, 1), repeat=2):
            w = 0.5 * (p if m_e_flip else 1 - p) * (p if m_s_flip else 1 - p)
            read_s = b ^ m_s_flip
            agent = read_s
            env = b
            total += w * float(agent == env)
    return total


def test_sq_plus_readout_only():
    p = 0.01
    exact = sq_plus_readout_oracle(p)
    assert exact == pytest.approx(0.99, abs=1e-12)
    spec = build_protocol("sq-plus")
    agent, env = default_states("sq-plus")
    model = NoiseModel(0.0, 0.0, p)
    n = 20_000
    f = np.empty(n)
    for i in range(n):
        sample, noise = streams(trajectory_seed(31, i))
        f[i] = run_cycle(spec, agent, env, rng=sample, noise=NoiseContext(model, noise)).reward
    se = math.sqrt(exact * (1 - exact) / n)
    assert abs(f.mean() - exact) <= 4 * se


def test_dephasing(rng):
    m = NoiseModel(t_coh=1000.0)
    assert m.dephasing_probability(0) == 0.0
    assert m.dephasing_probability(1000.0) == pytest.approx(0.5 * (1 - math.exp(-1)))
    assert NoiseModel().dephasing_probability(1e9) == 0.0
    plus = from_amplitudes([1, 1])
    assert dephase(plus, (0,), 0.0, rng) is plus
    minus = dephase(plus, (0,), 1.0, rng)
    assert np.allclose(minus.amplitudes, [1 / math.sqrt(2), -1 / math.sqrt(2)])


def test_decoherence_lowers_fidelity():
    spec = build_protocol("mq-partial")
    off, _ = monte_carlo_fidelity(spec, NoiseModel.ideal(), 300, seed=4)
    on, _ = monte_carlo_fidelity(spec, replace(NoiseModel.ideal(), t_coh=2000.0), 300, seed=4)
    assert off == pytest.approx(1.0, abs=1e-12)
    assert on < off


# ---------------------------------------------------------------- budget


def test_budget_default_constants():
    rep = budget(HardwareBudget(), build_protocol("mq-partial"), DEFAULT_NOISE)
    assert rep.cycle_time == 4 * 50 + 2 * 110 == 420
    assert rep.n_cnot == 4 and rep.n_measurements == 2
    assert rep.accumulated_gate_error <= 0.05
    assert rep.accumulated_readout_error == pytest.approx(0.02)
    assert 0.92 <= rep.estimated_cycle_fidelity <= 0.94
    assert rep.estimated_cycle_fidelity == pytest.approx(1 - 0.04 - 0.004 - 0.02)
    assert 0.73 <= rep.fidelity_after(4) <= 0.77
    assert rep.fidelity_after(4) == pytest.approx(rep.estimated_cycle_fidelity**4)
    assert rep.max_cycles_by_coherence == 10_000 // 420 == 23
    assert "cycle_time=420 ns" in rep.summary()
    with pytest.raises(StateError):
        rep.fidelity_after(-1)


def test_budget_parallel_cnots():
    hw = HardwareBudget(sequential_cnots=False)
    assert budget(hw, build_protocol("mq-partial"), DEFAULT_NOISE).cycle_time == 2 * 50 + 2 * 110
    assert budget(hw, build_protocol("mq-nomeas"), DEFAULT_NOISE).cycle_time == 50 + 110


@pytest.mark.parametrize("variant", [v.value for v in Variant])
def test_budget_gate_error_bound_all_variants(variant):
    assert budget(HardwareBudget(), build_protocol(variant), DEFAULT_NOISE).accumulated_gate_error <= 0.05


def test_budget_rotated_basis_adds_single_qubit_gates():
    h = np.array([[1, 1], [1, -1]]) / math.sqrt(2)
    plain = budget(HardwareBudget(), build_protocol("sq-general"), DEFAULT_NOISE)
    rotated = budget(HardwareBudget(), build_protocol("sq-general", [h]), DEFAULT_NOISE)
    assert rotated.n_single == plain.n_single + 4
    assert rotated.cycle_time == plain.cycle_time + 2 * 2 * 20


probs = st.floats(0, 0.1)
durations = st.floats(1, 1000)


@settings(max_examples=200, deadline=None)
@given(p=st.tuples(probs, probs, probs), bump=st.floats(0, 0.05), which=st.integers(0, 2),
       variant=st.sampled_from(list(Variant)), k=st.integers(0, 10))
def test_budget_monotone_in_errors(p, bump, which, variant, k):
    spec = build_protocol(variant)
    lo = NoiseModel(*p)
    hi_p = list(p)
    hi_p[which] += bump
    hi = NoiseModel(*hi_p)
    a, b = budget(HardwareBudget(), spec, lo), budget(HardwareBudget(), spec, hi)
    assert b.estimated_cycle_fidelity <= a.estimated_cycle_fidelity
    assert b.fidelity_after(k) <= a.fidelity_after(k)
    assert a.fidelity_after(k + 1) <= a.fidelity_after(k)
    assert 0 <= b.estimated_cycle_fidelity <= 1


@settings(max_examples=200, deadline=None)
@given(t=st.tuples(durations, durations, durations), bump=st.floats(0, 500), which=st.integers(0, 2),
       seq=st.booleans(), variant=st.sampled_from(list(Variant)))
def test_budget_cycle_time_monotone_in_durations(t, bump, which, seq, variant):
    spec = build_protocol(variant)
    lo = HardwareBudget(*t, sequential_cnots=seq)
    hi_t = list(t)
    hi_t[which] += bump
    hi = HardwareBudget(*hi_t, sequential_cnots=seq)
    assert budget(hi, spec, DEFAULT_NOISE).cycle_time >= budget(lo, spec, DEFAULT_NOISE).cycle_time


# ---------------------------------------------------------------- Monte Carlo


def test_noiseless_monte_carlo():
    mean, se = monte_carlo_fidelity(build_protocol("mq-partial"), NoiseModel.ideal(), 200, seed=1)
    assert mean == pytest.approx(1.0, abs=1e-12)
    assert se <= 1e-12
    with pytest.raises(StateError):
        monte_carlo_fidelity(build_protocol("mq-partial"), DEFAULT_NOISE, 0, seed=1)


def test_doubled_rates_lower_fidelity():
    spec = build_protocol("mq-partial")
    base, _ = monte_carlo_fidelity(spec, DEFAULT_NOISE, 2000, seed=11)
    doubled, _ = monte_carlo_fidelity(spec, DEFAULT_NOISE.scaled(2), 2000, seed=11)
    assert doubled < base


def test_monte_carlo_reproducible_per_trajectory():
    spec = build_protocol("mq-total")
    a = monte_carlo_fidelity(spec, DEFAULT_NOISE, 50, seed=3)
    b = monte_carlo_fidelity(spec, DEFAULT_NOISE, 50, seed=3)
    assert a == b
    assert trajectory_seed(3, 7) == trajectory_seed(3, 7) != trajectory_seed(3, 8)


@pytest.mark.parametrize("variant", [v.value for v in Variant])
def test_zero_noise_trajectory_bit_identical(variant):
    spec = build_protocol(variant)
    k = spec.variant.width
    for seed in range(20):
        inputs = np.random.default_rng(seed)
        s, e = random_state(k, inputs), random_state(k, inputs)
        sample_a, noise_rng = streams(seed)
        sample_b, _ = streams(seed)
        noisy = run_cycle(spec, s, e, rng=sample_a, noise=NoiseContext(NoiseModel.ideal(), noise_rng))
        ideal = run_cycle(spec, s, e, rng=sample_b)
        assert noisy.final_state == ideal.final_state
        assert noisy.record == ideal.record == noisy.collapse


LINEAR_TRAJ = 10_000


@pytest.mark.parametrize("variant", [v.value for v in Variant])
def test_linear_regime_factor_two(variant):
    spec = build_protocol(variant)
    mean, se = monte_carlo_fidelity(spec, DEFAULT_NOISE, LINEAR_TRAJ, seed=101)
    linear = 1 - budget(HardwareBudget(), spec, DEFAULT_NOISE).estimated_cycle_fidelity
    ratio = (1 - mean) / linear
    print(f"{variant}: MC infidelity {1 - mean:.4f} +- {se:.4f}, linear {linear:.4f}, ratio {ratio:.3f}")
    assert 0.5 <= ratio <= 2.0
