"""Acceptance checks, shared by ``qrlsim selftest`` and the test suite.

Each ``check_*`` function returns a :class:`Check`; none of them raise on
failure.  Tolerances are fixed module constants.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable

import numpy as np

from .channels import HardwareBudget, NoiseContext, NoiseModel
from .harness.branches import enumerate_branches
from .harness.config import parse_config
from .harness.report import render
from .harness.runner import execute
from .metrics import histogram_divergence
from .noise import budget, monte_carlo_fidelity
from .protocol import Variant, build_protocol, default_states, initial_joint, run_cycle, run_steps
from .qstate import (
    Statevector,
    apply_cnot,
    apply_single,
    basis_state,
    branch_probabilities,
    from_amplitudes,
    measure,
    random_state,
    tensor,
)

EXACT = 1e-12
SIGMA = 4.0
N_RANDOM = 1000
N_SHOTS = 100_000
N_TRAJ = 10_000


@dataclass
class Check:
    name: str
    passed: bool
    detail: str

    def line(self) -> str:
        return f"[{'PASS' if self.passed else 'FAIL'}] {self.name}: {self.detail}"


def _amp(state: Statevector, bits: str) -> complex:
    return complex(state.amplitudes[int(bits, 2)])


def _phase_aligned_error(actual: np.ndarray, expected: np.ndarray) -> float:
    """Max entrywise error after normalizing both and removing the global phase."""
    a = actual / np.linalg.norm(actual)
    e = expected / np.linalg.norm(expected)
    k = int(np.argmax(np.abs(e)))
    phase = a[k] / e[k]
    phase /= abs(phase)
    return float(np.max(np.abs(a - phase * e)))


def _se_block(joint: Statevector, register_bits: str) -> np.ndarray:
    """S-E amplitudes of a 6-qubit joint state at a fixed register value."""
    return joint.tensor().reshape(16, 4)[:, int(register_bits, 2)]


def check_deterministic_reward(n: int = N_RANDOM, seed: int = 1) -> Check:
    rng = np.random.default_rng(seed)
    worst, leaves = 0.0, 0
    for variant in Variant:
        spec = build_protocol(variant)
        k = variant.width
        zero = "0" * k
        for _ in range(n):
            tree = enumerate_branches(spec, random_state(k, rng), random_state(k, rng))
            for leaf in tree.reachable():
                leaves += 1
                worst = max(worst, abs(leaf.reward - 1.0))
                # register back in |0...0>
                reg = leaf.post_feedback.tensor().reshape(-1, 2**k)
                worst = max(worst, abs(np.linalg.norm(reg[:, int(zero, 2)]) - 1.0))
    return Check(
        "1 deterministic reward",
        worst <= EXACT,
        f"{leaves} reachable leaves over 6 variants x {n} states, max |reward-1| = {worst:.2e} (tol {EXACT})",
    )


def _sq_general_table(a_s, b_s, a_e, b_e) -> dict[str, float]:
    # (M_E, M_S) -> probability, as tabulated for the single-qubit general case
    return {
        "0|0": abs(a_e) ** 2 * abs(a_s) ** 2,
        "0|1": abs(a_e) ** 2 * abs(b_s) ** 2,
        "1|0": abs(b_e) ** 2 * abs(b_s) ** 2,
        "1|1": abs(b_e) ** 2 * abs(a_s) ** 2,
    }


def check_branch_probabilities(n: int = N_RANDOM, shots: int = N_SHOTS, seed: int = 2) -> Check:
    spec_plus = build_protocol(Variant.SQ_PLUS)
    tree = enumerate_branches(spec_plus, *default_states(Variant.SQ_PLUS))
    p_me = {}
    for leaf in tree.leaves:
        p_me[leaf.bits[0]] = p_me.get(leaf.bits[0], 0.0) + leaf.probability
    plus_err = max(abs(p_me["0"] - 0.5), abs(p_me["1"] - 0.5))

    spec = build_protocol(Variant.SQ_GENERAL)
    rng = np.random.default_rng(seed)
    table_err = 0.0
    for _ in range(n):
        s, e = random_state(1, rng), random_state(1, rng)
        expected = _sq_general_table(*s.amplitudes, *e.amplitudes)
        got = enumerate_branches(spec, s, e).distribution()
        table_err = max(table_err, max(abs(got[b] - expected[b]) for b in expected))

    agent = from_amplitudes([0.8, 0.6j])
    env = from_amplitudes([0.6, 0.8])
    joint = initial_joint(spec, agent, env)
    counts: dict[str, int] = {}
    for _ in range(shots):
        _, read, _ = run_steps(spec, joint, rng=rng)
        key = read.branch_bits()
        counts[key] = counts.get(key, 0) + 1
    expected = _sq_general_table(*agent.amplitudes, *env.amplitudes)
    tv, z = histogram_divergence(counts, expected)
    zmax = max(abs(v) for v in z.values())
    ok = plus_err <= EXACT and table_err <= EXACT and zmax <= SIGMA
    return Check(
        "2 branch probabilities",
        ok,
        f"sq-plus |P(M_E)-1/2| = {plus_err:.1e}; sq-general table err {table_err:.1e} (tol {EXACT}); "
        f"sampled N={shots} max|z| = {zmax:.2f} (tol {SIGMA}), TV = {tv:.4f}",
    )


def _copied_env_state(env: Statevector) -> Statevector:
    """E-R state after the two E->R CNOTs; qubits (E0, E1, R0, R1)."""
    state = tensor(env, basis_state(2, "00"))
    return apply_cnot(apply_cnot(state, 0, 2), 1, 3)


def check_partial_collapse(n: int = 200, seed: int = 3) -> Check:
    rng = np.random.default_rng(seed)
    worst_state, worst_p = 0.0, 0.0
    for _ in range(n):
        env = random_state(2, rng)
        a = env.amplitudes
        outcome, post = measure(_copied_env_state(env), [2], forced="0")
        expected = np.zeros(16, dtype=complex)
        expected[int("0000", 2)] = a[0]
        expected[int("0101", 2)] = a[1]
        worst_state = max(worst_state, _phase_aligned_error(post.amplitudes, expected))
        worst_p = max(worst_p, abs(outcome.probability - (abs(a[0]) ** 2 + abs(a[1]) ** 2)))
    return Check(
        "3 partial collapse",
        worst_state <= EXACT and worst_p <= EXACT,
        f"{n} random environments: max entrywise err {worst_state:.1e}, probability err {worst_p:.1e} (tol {EXACT})",
    )


# (agent index, environment index) pairs of each pre-feedback S-E component
_PARTIAL_FORMS = {
    "00": [("00", "00"), ("01", "01")],
    "01": [("01", "00"), ("00", "01")],
    "10": [("10", "00"), ("11", "01")],
    "11": [("11", "00"), ("10", "01")],
}
_NOMEAS_FORMS = {
    "00": [("00", "00"), ("01", "01"), ("10", "10"), ("11", "11")],
    "01": [("01", "00"), ("00", "01"), ("11", "10"), ("10", "11")],
    "10": [("10", "00"), ("11", "01"), ("00", "10"), ("01", "11")],
    "11": [("11", "00"), ("10", "01"), ("01", "10"), ("00", "11")],
}


def _expected_se(forms, agent: Statevector, env: Statevector) -> np.ndarray:
    vec = np.zeros(16, dtype=complex)
    for s, e in forms:
        vec[int(s + e, 2)] = _amp(agent, s) * _amp(env, e)
    return vec


def check_branch_states(n: int = 200, seed: int = 4) -> Check:
    rng = np.random.default_rng(seed)
    worst_state, worst_corr = 0.0, 0.0
    for variant, table in ((Variant.MQ_PARTIAL, _PARTIAL_FORMS), (Variant.MQ_NOMEAS, _NOMEAS_FORMS)):
        spec = build_protocol(variant)
        for _ in range(n):
            agent, env = random_state(2, rng), random_state(2, rng)
            tree = enumerate_branches(spec, agent, env)
            for m_s, forms in table.items():
                leaf = tree[("0", m_s)] if variant is Variant.MQ_PARTIAL else tree[(m_s,)]
                actual = _se_block(leaf.pre_feedback, m_s)
                # the register must sit entirely on |m_s>
                worst_state = max(worst_state, abs(np.linalg.norm(actual) - 1.0))
                worst_state = max(worst_state, _phase_aligned_error(actual, _expected_se(forms, agent, env)))
                worst_corr = max(worst_corr, abs(leaf.positive_correlation - 1.0))
    return Check(
        "4 entangled branch states",
        worst_state <= EXACT and worst_corr <= EXACT,
        f"mq-partial (M_1=0) and mq-nomeas, {n} random inputs each: max form err {worst_state:.1e}, "
        f"max |corr-1| {worst_corr:.1e} (tol {EXACT})",
    )


def check_uniform_agent(n: int = 200, seed: int = 5) -> Check:
    rng = np.random.default_rng(seed)
    spec = build_protocol(Variant.MQ_NOMEAS)
    agent = from_amplitudes([0.5, 0.5, 0.5, 0.5])
    worst = 0.0
    for _ in range(n):
        env = random_state(2, rng)
        for leaf in enumerate_branches(spec, agent, env).reachable():
            expected = np.zeros(64, dtype=complex)
            for ij in ("00", "01", "10", "11"):
                expected[int(ij + ij + "00", 2)] = _amp(env, ij)
            worst = max(worst, float(np.max(np.abs(leaf.post_feedback.amplitudes - expected))))
    return Check(
        "5 uniform-agent replication",
        worst <= EXACT,
        f"{n} environments x 4 branches: max entrywise err {worst:.1e} (tol {EXACT})",
    )


def check_budget() -> Check:
    rep = budget(HardwareBudget(), build_protocol(Variant.MQ_PARTIAL), NoiseModel())
    f4 = rep.fidelity_after(4)
    ok = (
        abs(rep.cycle_time - 420.0) <= EXACT
        and rep.cycle_time < 500.0
        and 0.92 <= rep.estimated_cycle_fidelity <= 0.94
        and 0.73 <= f4 <= 0.77
        and rep.accumulated_gate_error <= 0.05
    )
    return Check(
        "6 budget arithmetic",
        ok,
        f"cycle_time={rep.cycle_time:g} ns (<500), per-cycle={rep.estimated_cycle_fidelity:.4f} in [0.92,0.94], "
        f"after 4={f4:.4f} in [0.73,0.77], gate error={rep.accumulated_gate_error:.3f} <= 0.05",
    )


def check_monte_carlo(n_traj: int = N_TRAJ, seed: int = 7) -> Check:
    spec = build_protocol(Variant.MQ_PARTIAL)
    noise = NoiseModel()
    mean, stderr = monte_carlo_fidelity(spec, noise, n_traj, seed)
    linear = 1.0 - budget(HardwareBudget(), spec, noise).estimated_cycle_fidelity
    mc = 1.0 - mean
    ok = 0.90 <= mean <= 0.96 and linear / 2 <= mc <= 2 * linear
    return Check(
        "7 monte carlo vs budget",
        ok,
        f"mq-partial n_traj={n_traj}: mean {mean:.4f} +/- {stderr:.4f} in [0.90,0.96]; "
        f"infidelity {mc:.4f} vs linear {linear:.4f} (factor-2 window)",
    )


def check_properties(n: int = N_RANDOM, seed: int = 8) -> Check:
    rng = np.random.default_rng(seed)
    problems = []
    worst_norm = worst_unit = worst_sum = 0.0
    for _ in range(n):
        nq = int(rng.integers(2, 7))
        psi = random_state(nq, rng)
        start = psi
        for _ in range(10):
            if rng.random() < 0.5:
                c, t = rng.choice(nq, size=2, replace=False)
                psi = apply_cnot(psi, int(c), int(t))
            else:
                u = _random_unitary(rng)
                q = int(rng.integers(nq))
                after = apply_single(psi, q, u)
                worst_unit = max(worst_unit, float(np.max(np.abs(apply_single(after, q, u.conj().T).amplitudes - psi.amplitudes))))
                psi = after
            worst_norm = max(worst_norm, abs(psi.norm() - 1))
        c, t = rng.choice(nq, size=2, replace=False)
        twice = apply_cnot(apply_cnot(start, int(c), int(t)), int(c), int(t))
        worst_unit = max(worst_unit, float(np.max(np.abs(twice.amplitudes - start.amplitudes))))
        k = int(rng.integers(1, nq + 1))
        qubits = [int(q) for q in rng.choice(nq, size=k, replace=False)]
        worst_sum = max(worst_sum, abs(math.fsum(o.probability for o in branch_probabilities(psi, qubits)) - 1))
    if max(worst_norm, worst_unit, worst_sum) > EXACT:
        problems.append(f"norm {worst_norm:.1e} unitarity {worst_unit:.1e} completeness {worst_sum:.1e}")

    mismatched = 0
    for variant in Variant:
        spec = build_protocol(variant)
        for s in range(20):
            a, e = random_state(variant.width, rng), random_state(variant.width, rng)
            ideal = run_cycle(spec, a, e, rng=np.random.default_rng(s))
            ctx = NoiseContext(NoiseModel.ideal(), np.random.default_rng(10_000 + s))
            noisy = run_cycle(spec, a, e, rng=np.random.default_rng(s), noise=ctx)
            if not np.array_equal(ideal.final_state.amplitudes, noisy.final_state.amplitudes) or ideal.record != noisy.record:
                mismatched += 1
    if mismatched:
        problems.append(f"{mismatched} zero-noise trajectories differ from ideal")

    cfg = parse_config("variant=mq-partial\nmode=noisy\nshots=50\ncycles=2\nseed=11")
    for fmt in ("csv", "json"):
        if render(execute(cfg), fmt) != render(execute(cfg), fmt):
            problems.append(f"{fmt} report not reproducible")
    return Check(
        "8 property suites",
        not problems,
        "; ".join(problems)
        or f"norm/unitarity/completeness <= {EXACT} over {n} random circuits; zero-noise bit-exact; reports reproducible",
    )


def _random_unitary(rng: np.random.Generator) -> np.ndarray:
    z = rng.standard_normal((2, 2)) + 1j * rng.standard_normal((2, 2))
    q, r = np.linalg.qr(z)
    return q * (np.diag(r) / np.abs(np.diag(r)))


CHECKS: dict[str, Callable[[], Check]] = {
    "deterministic_reward": check_deterministic_reward,
    "branch_probabilities": check_branch_probabilities,
    "partial_collapse": check_partial_collapse,
    "branch_states": check_branch_states,
    "uniform_agent": check_uniform_agent,
    "budget": check_budget,
    "monte_carlo": check_monte_carlo,
    "properties": check_properties,
}


def run_all(echo: Callable[[str], None] = print) -> list[Check]:
    results = []
    for fn in CHECKS.values():
        res = fn()
        echo(res.line())
        results.append(res)
    return results

