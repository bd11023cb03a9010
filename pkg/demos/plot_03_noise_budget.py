"""
Error budget against sampled noisy trajectories
===============================================

The budget adds gate and feedback durations and subtracts error
probabilities linearly.  Trajectory sampling puts random Pauli errors after
each gate and flips readout bits, then compares every noisy run with the
noise-free run on the same collapse branch.
"""

from qrlsim import build_protocol
from qrlsim.noise import HardwareBudget, NoiseModel, budget, monte_carlo_fidelity

noise = NoiseModel()  # 1% two-qubit, 0.1% single-qubit, 1% readout
hw = HardwareBudget()  # 50 ns CNOT, 110 ns feedback, 10 us coherence

for tag in ("sq-general", "mq-total", "mq-partial", "mq-nomeas"):
    spec = build_protocol(tag)
    rep = budget(hw, spec, noise)
    mean, se = monte_carlo_fidelity(spec, noise, 2000, seed=1)
    print(
        f"{tag:10s} {rep.cycle_time:5.0f} ns  budget {rep.estimated_cycle_fidelity:.3f}"
        f"  sampled {mean:.3f} +/- {se:.3f}  cycles before T_coh {rep.max_cycles_by_coherence}"
    )

# Errors are assumed independent between cycles, so the estimate after k
# cycles is the per-cycle figure to the power k.
rep = budget(hw, build_protocol("mq-partial"), noise)
for k in (1, 2, 4, 8):
    print(f"after {k} cycles: {rep.fidelity_after(k):.3f}")

# Running the two CNOT blocks in parallel shortens the cycle.
fast = budget(HardwareBudget(sequential_cnots=False), build_protocol("mq-partial"), noise)
print("parallel CNOT blocks:", fast.cycle_time, "ns")
