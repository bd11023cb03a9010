"""
Configuration files and reports
===============================

The command line tool reads flat ``key = value`` files.  The same parser
and runner are importable, which is what this script uses.  The output rows
are identical to what ``qrlsim run`` writes.
"""

from qrlsim.harness import emit_report, execute, parse_config
from qrlsim.harness.runner import enumerate_config, histogram
from qrlsim.metrics import histogram_divergence

text = """
variant = sq-general
shots = 20000
seed = 42
agent = 1, 0
environment = 0.6, 0.8
"""
cfg = parse_config(text)
report = execute(cfg)
counts = histogram(report)
print("sampled counts:", counts)

# Compare with the exact branch probabilities.
tree, exact = enumerate_config(cfg)
tv, z = histogram_divergence(counts, tree.distribution())
print("total variation:", round(tv, 5), " z-scores:", {k: round(float(v), 2) for k, v in z.items()})

# Enumeration rows (reachable branches only unless include_zero_branches).
print(emit_report(exact, "csv", None))

# Noisy sessions: four cycles each, with the default noise model.
noisy = execute(parse_config("variant = mq-partial\nmode = noisy\ncycles = 4\nshots = 200\nseed = 7\n"))
print({k: round(v, 4) for k, v in noisy.metadata["summary"].items()})
