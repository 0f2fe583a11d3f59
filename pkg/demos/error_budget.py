"""
Building a gate error budget
============================

Each error channel gets a closed-form infidelity estimate. The estimates add
up to a budget. We then spot-check one line of it against a full numerical
propagation of the Hamiltonian.
"""

# %%
import numpy as np

from gatebudget import analytic as an
from gatebudget.cli import budget_rows
from gatebudget.config import bundled_config, load_json

doc = load_json(bundled_config("budget_example.json"))
print(doc["channels"])

# %%
# The budget is a table of channel, estimate and share of the total.
rows = budget_rows(doc)
for name, formula, value, pct, flag in rows:
    print(f"{name:22s} {value:10.3e} {pct:6.1f}% {flag}")

# %%
# Heating dominates here. It also does not care about temperature,
# so cooling the mode further buys nothing on that line.
ndot = doc["channels"]["heating_2q"]["ndot"]
print(an.infid_2q_heating(ndot, 1.0, 1, 2.0))

# %%
# More loops shrink the static-shift line (the estimate is time averaged),
# while heating grows linearly with the longer gate.
for N in (1, 2, 4, 8):
    shift = an.infid_2q_static_shift(0.01, 1.0, N, 0.1, 2.0, 4.0)
    heat = an.infid_2q_heating(ndot, 1.0, N, 2.0)
    print(N, f"{shift:.3e}", f"{heat:.3e}")

# %%
# Spot check: the static shift line, propagated numerically on |dd>, n=0.
from gatebudget import GateConfig, MotionalEnsemble, SweepPlan, run_sweep
from gatebudget.hamiltonians import MotionalShift2Q
from gatebudget.quantum import DOWN

plan = SweepPlan(
    MotionalShift2Q(), GateConfig.two_qubit(), np.kron(DOWN, DOWN), MotionalEnsemble.fixed(0), (0.005, 0.01, 0.02)
)
for r in run_sweep(plan):
    print(f"delta={r.strength:g}  analytic={r.analytic:.4e}  numeric={r.numeric:.4e}  ratio={r.ratio:.4f}")
