"""
Two-qubit agents that end up entangled with the environment
===========================================================

With two qubits per role there are three schedules.  Measuring the whole
register after the environment copy leaves S and E in a product state.
Measuring only its first qubit, or skipping the first measurement, leaves S
and E entangled, so the reward becomes the probability that S and E give
the same bitstring when both are read out.
"""

import numpy as np

from qrlsim import build_protocol, run_cycle
from qrlsim.qstate import from_amplitudes, random_state
from qrlsim.metrics import positive_correlation

rng = np.random.default_rng(11)
env = random_state(2, rng)
agent = random_state(2, rng)

for tag in ("mq-total", "mq-partial", "mq-nomeas"):
    spec = build_protocol(tag)
    cycle = run_cycle(spec, agent, env, rng=rng)
    print(f"{tag:10s} readouts {cycle.record.branch_bits():6s} reward kind {cycle.reward_kind:22s} reward {cycle.reward:.12f}")

# A uniform agent carries no information of its own.  Without the middle
# measurement the joint S-E state after feedback is sum_ij a_ij |ij>|ij>, with
# a_ij the environment's original amplitudes.
uniform = from_amplitudes([0.5, 0.5, 0.5, 0.5])
cycle = run_cycle(build_protocol("mq-nomeas"), uniform, env, rng=rng)
se = cycle.final_state.tensor().reshape(4, 4, 4)[:, :, 0]
print("\nenvironment amplitudes:", np.round(env.amplitudes, 4))
print("diagonal of S-E block :", np.round(np.diag(se), 4))
print("off-diagonal weight   :", float(np.sum(np.abs(se - np.diag(np.diag(se))) ** 2)))
print("P(S and E agree)      :", positive_correlation(cycle.final_state, spec.roles).probability_agree)
