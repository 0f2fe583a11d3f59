"""Gate error budgets for trapped-ion qubits.

Closed-form leading-order infidelities for one- and two-qubit gates, checked
against direct propagation of the error Hamiltonians and master equations.
"""
from . import analytic
from .errors import (
    ConfigError,
    GateBudgetError,
    IntegratorDivergedError,
    InvalidArgumentError,
    InvalidDimensionError,
    NumericalError,
    PositivityError,
    StepSizeError,
    TruncationError,
)
from .hamiltonians import (
    CHANNELS,
    Anharmonic,
    CrossKerr,
    Dephasing,
    ErrorChannel,
    GateConfig,
    GradInhomo2Q,
    Heating,
    Inhomo1st,
    Inhomo2nd,
    MotionalShift2Q,
    Qubit1QShift,
    TimeDependentHamiltonian,
    build_hamiltonian,
    ideal_1q,
    ideal_2q,
)
from .harness import (
    InfidelityRecord,
    SweepPlan,
    convergence_report,
    ensemble_infidelity,
    fidelity_mixed,
    fidelity_pure,
    run_sweep,
    run_sweep_states,
)
from .propagation import (
    BathSpec,
    IntegratorConfig,
    WalshSchedule,
    propagate_bath_ensemble,
    propagate_lindblad,
    propagate_pure,
)
from .quantum import DOWN, PAULI, UP, HilbertSpace, MotionalEnsemble, fock_window, spin_ops

__version__ = "0.1.0"

__all__ = [name for name in dir() if not name.startswith("_")]
