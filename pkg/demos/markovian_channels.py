"""
Heating and motional dephasing
==============================

Both channels are Markovian. The numerics solve a Lindblad equation on the
qubits plus one motional mode, and the fidelity is taken on the qubits alone.
"""

# %%
import numpy as np

from gatebudget import GateConfig, MotionalEnsemble, SweepPlan, run_sweep_states
from gatebudget.hamiltonians import Dephasing, Heating
from gatebudget.quantum import DOWN, UP

dd = np.kron(DOWN, DOWN)
plus = np.sqrt(1 / 3) * dd + np.sqrt(2 / 3) * np.kron(UP, UP)
gate = GateConfig.two_qubit()

# %%
# Heating: the ratio numeric/analytic drifts slowly away from 1 as the rate
# grows, because the estimate is first order in the rate.
plan = SweepPlan(Heating(), gate, dd, MotionalEnsemble.fixed(0), (2.5e-4, 1e-3, 4e-3), audit="none")
for r in run_sweep_states(plan, [dd])[0]:
    print(f"ndot={r.strength:g}  I={r.numeric:.4e}  ratio={r.ratio:.4f}")

# %%
# Heating is the same at any phonon number.
for n in (0, 3):
    plan = SweepPlan(Heating(), gate, dd, MotionalEnsemble.fixed(n), (1e-3,), audit="none")
    print(n, run_sweep_states(plan, [dd])[0][0].numeric)

# %%
# Dephasing grows with n. Only the part set by the variance of S scales
# as 2n+1; the S^2 part does not, so the overall growth depends on the state.
for n in (0, 2, 5):
    plan = SweepPlan(Dephasing(), gate, dd, MotionalEnsemble.fixed(n), (1e-3,), audit="none")
    rec_dd, rec_plus = (x[0] for x in run_sweep_states(plan, [dd, plus]))
    print(n, f"dd: {rec_dd.numeric:.3e} ({rec_dd.ratio:.3f})", f"plus: {rec_plus.numeric:.3e} ({rec_plus.ratio:.3f})")
