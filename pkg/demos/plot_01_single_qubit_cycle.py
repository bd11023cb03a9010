"""
One learning cycle with single-qubit agent and environment
==========================================================

The agent S starts in some state, the environment E in another, and a
register qubit R in |0>.  A cycle copies E into R, reads R, copies S into
R, reads R again and then flips S and R wherever the last readout says 1.
Here we follow one cycle step by step and then list every possible outcome.
"""

import numpy as np

from qrlsim import build_protocol, from_amplitudes, run_cycle
from qrlsim.harness import enumerate_branches
from qrlsim.qstate import subsystem_state

# A generic environment: alpha_E = 0.6, beta_E = 0.8.  The agent is a
# different real superposition.
env = from_amplitudes([0.6, 0.8])
agent = from_amplitudes([0.8, 0.6])
spec = build_protocol("sq-general")

for step in spec.steps:
    print(step)

# Sample one cycle.  The report holds both readouts, the final joint state
# and the reward figure (learning fidelity for this variant).
rng = np.random.default_rng(3)
cycle = run_cycle(spec, agent, env, rng=rng)
print("\nreadouts:", cycle.record.branch_bits())
print("learning fidelity:", round(cycle.learning_fidelity, 12))

# After feedback the agent and the environment are the same basis state.
print("agent  :", np.round(subsystem_state(cycle.final_state, (0,)).amplitudes, 6))
print("environment:", np.round(subsystem_state(cycle.final_state, (1,)).amplitudes, 6))

# The enumerator forces every readout combination in turn.  Each reachable
# branch ends with fidelity 1; the probabilities are products of the
# squared environment and agent amplitudes.
tree = enumerate_branches(spec, agent, env)
print("\n(M_E|M_S)  probability  reward")
for leaf in tree.leaves:
    print(f"{leaf.branch_bits():>9}  {leaf.probability:11.4f}  {leaf.reward}")
print("total probability:", tree.total_probability)
