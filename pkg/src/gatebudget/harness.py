"""Numeric fidelities, sweeps pairing numerics with the closed forms, and convergence summaries."""
from __future__ import annotations

import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace
from itertools import product

import numpy as np

from . import analytic as an
from .errors import ConfigError, InvalidArgumentError, InvalidDimensionError, TruncationError
from .hamiltonians import (
    CrossKerr,
    Dephasing,
    ErrorChannel,
    GateConfig,
    GradInhomo2Q,
    Heating,
    Inhomo1st,
    Inhomo2nd,
    MotionalShift2Q,
    Anharmonic,
    Qubit1QShift,
    build_hamiltonian,
)
from .propagation import (
    BathSpec,
    IntegratorConfig,
    lindblad_sector_evolution,
    propagate_bath_ensemble,
    propagate_pure,
    pure_sector_evolution,
    walsh_sign_schedule,
)
from .quantum import PAULI, HilbertSpace, MotionalEnsemble, expval, fock_window

FIDELITY_SLACK = 1e-8
AUDIT_TOL = 1e-8
COVERAGE_TOL = 1e-6
COHERENT_TOL = 0.10
WALSH_TOL = 0.15
EXPONENT_TOL = 0.1


# ------------------------------------------------------------- fidelities


def _target(target):
    t = np.asarray(target, dtype=complex).reshape(-1)
    if not np.isclose(np.linalg.norm(t), 1.0, atol=1e-10):
        raise InvalidArgumentError("ideal target must be normalized")
    return t


def fidelity_pure(psi_final, ideal_qubit_target) -> float:
    """⟨target| Tr_motion |ψ⟩⟨ψ| |target⟩; the motional dimension is inferred."""
    t = _target(ideal_qubit_target)
    psi = np.asarray(psi_final, dtype=complex).reshape(-1)
    if psi.size % t.size:
        raise InvalidDimensionError(f"state of length {psi.size} does not factor over a {t.size}-dim qubit space")
    amps = t.conj() @ psi.reshape(t.size, -1)
    return float(np.clip(np.sum(np.abs(amps) ** 2), 0.0, 1.0))


def fidelity_mixed(rho_final, ideal_qubit_target) -> float:
    t = _target(ideal_qubit_target)
    rho = np.asarray(rho_final, dtype=complex)
    d = rho.shape[0]
    if rho.shape != (d, d) or d % t.size:
        raise InvalidDimensionError(f"density matrix of shape {rho.shape} does not factor over the qubits")
    dm = d // t.size
    red = np.trace(rho.reshape(t.size, dm, t.size, dm), axis1=1, axis2=3)
    return float(np.clip(np.real(t.conj() @ red @ t), 0.0, 1.0))


def ideal_qubit_target(gate: GateConfig, qubit_state) -> np.ndarray:
    return gate.ideal_unitary() @ np.asarray(qubit_state, dtype=complex)


def ensemble_infidelity(records, ens: MotionalEnsemble) -> float:
    """Σ_n P_n I_n over ``records`` of (n, I_n)."""
    table = {}
    for n, value in records:
        n = int(n)
        if n in table:
            raise InvalidArgumentError(f"duplicate record for n={n}")
        table[n] = float(value)
    ns, probs = ens.distribution()
    covered = sum(p for n, p in zip(ns, probs) if n in table)
    if covered < 1 - COVERAGE_TOL:
        raise TruncationError(f"records cover only {covered:.8f} of the motional distribution")
    return float(sum(p * table.get(int(n), 0.0) for n, p in zip(ns, probs)))


# ------------------------------------------------------------------ sweeps


@dataclass(frozen=True)
class SweepPlan:
    """One channel swept over strengths at fixed gate, qubit state and motion.

    ``motional_b`` is the second mode's ensemble (cross-Kerr only);
    ``walsh_k`` runs the two-qubit gate under a W(2^k - 1) sign sequence;
    ``markov_method`` picks the Lindblad equation or the averaged classical
    bath for heating and dephasing.
    """

    channel: ErrorChannel
    gate: GateConfig
    initial_qubit_state: np.ndarray
    motional: MotionalEnsemble
    sweep_values: tuple
    comparison: str = "instantaneous"
    motional_b: MotionalEnsemble | None = None
    walsh_k: int | None = None
    markov_method: str = "lindblad"
    n_samples: int = 400
    band_halfwidth: float | None = None
    seed: int = 0
    integrator: IntegratorConfig = field(default_factory=IntegratorConfig)
    audit: str = "all"

    def __post_init__(self):
        object.__setattr__(self, "sweep_values", tuple(float(v) for v in self.sweep_values))
        object.__setattr__(self, "initial_qubit_state", np.asarray(self.initial_qubit_state, dtype=complex))
        v = self.sweep_values
        if any(b <= a for a, b in zip(v[:-1], v[1:])):
            raise InvalidArgumentError("sweep values must be strictly increasing")
        if self.comparison not in ("instantaneous", "time-averaged"):
            raise InvalidArgumentError(f"unknown comparison {self.comparison!r}")
        if self.channel.gate_kind != self.gate.kind:
            raise InvalidArgumentError(f"channel {self.channel.name} needs a {self.channel.gate_kind} gate")
        if self.initial_qubit_state.shape != (self.gate.qubit_dim,):
            raise InvalidArgumentError("initial qubit state does not match the gate")
        if not np.isclose(np.linalg.norm(self.initial_qubit_state), 1.0, atol=1e-10):
            raise InvalidArgumentError("initial qubit state must be normalized")
        if isinstance(self.channel, CrossKerr) and self.motional_b is None:
            raise InvalidArgumentError("cross-Kerr sweeps need a second-mode ensemble")
        if self.walsh_k is not None:
            if not isinstance(self.channel, MotionalShift2Q):
                raise InvalidArgumentError("Walsh sweeps are defined for the static motional shift")
            if self.gate.loops != 2**self.walsh_k:
                raise InvalidArgumentError(f"Walsh order {self.walsh_k} needs {2 ** self.walsh_k} loops")
        if self.markov_method not in ("lindblad", "ensemble"):
            raise InvalidArgumentError(f"unknown Markovian method {self.markov_method!r}")
        if self.audit not in ("all", "max", "none"):
            raise InvalidArgumentError(f"unknown audit mode {self.audit!r}")

    @property
    def lambdas(self) -> an.SpinVariances:
        return an.SpinVariances.from_state(self.initial_qubit_state, self.gate.axis)


@dataclass(frozen=True)
class InfidelityRecord:
    channel: str
    strength: float
    analytic: float
    numeric: float
    n_or_nbar: float
    lambdas: an.SpinVariances
    ratio: float
    ratio_defined: bool
    truncation_audit: bool | None
    normalized_analytic: float
    normalized_numeric: float
    perturbative: bool = True

    CSV_HEADER = (
        "strength",
        "analytic",
        "numeric",
        "ratio",
        "n_or_nbar",
        "channel",
        "normalized_analytic",
        "normalized_numeric",
    )

    def csv_fields(self) -> tuple:
        return (
            self.strength,
            self.analytic,
            self.numeric,
            self.ratio,
            self.n_or_nbar,
            self.channel,
            self.normalized_analytic,
            self.normalized_numeric,
        )


def _walsh_flips(plan: SweepPlan):
    if plan.walsh_k is None:
        return None
    return walsh_sign_schedule(plan.walsh_k, plan.gate.loop_time).flips()


def _amplitude(plan: SweepPlan, ch: ErrorChannel) -> float:
    """Rough phase-space excursion used to size the Fock window."""
    g = plan.gate
    if g.kind == "two-qubit":
        # largest |S| eigenvalue is 2
        return 4 * g.omega_g / g.detuning
    if isinstance(ch, Inhomo1st):
        return 2 * abs(ch.omega_prime) / ch.omega_a
    if isinstance(ch, CrossKerr):
        return 2 * abs(ch.omega_dprime_ab) / abs(ch.omega_ab)
    return 0.0


def build_space(plan: SweepPlan, ch: ErrorChannel | None = None, scale: float = 1.0) -> HilbertSpace:
    ch = ch or plan.channel
    if isinstance(ch, Qubit1QShift):
        return HilbertSpace(plan.gate.n_qubits)
    amp = _amplitude(plan, ch)
    ens = [plan.motional] + ([plan.motional_b] if isinstance(ch, CrossKerr) else [])
    dims, offs = [], []
    for e in ens:
        ns, _ = e.distribution()
        off, d = fock_window(int(ns.min()), int(ns.max()), amp)
        dims.append(d)
        offs.append(off)
    space = HilbertSpace(plan.gate.n_qubits, tuple(dims), tuple(offs))
    return space.enlarged(scale) if scale != 1.0 else space


def _moments(ens: MotionalEnsemble):
    return ens.moments()


def analytic_value(plan: SweepPlan, ch: ErrorChannel) -> float:
    """Closed-form infidelity for ``ch`` with λ's from the plan's initial state."""
    lam = plan.lambdas
    g = plan.gate
    nbar, nbar2, nbar3 = _moments(plan.motional)
    inst = plan.comparison == "instantaneous"
    if isinstance(ch, Inhomo1st):
        return an.infid_1q_inhomo1(ch.omega_prime, ch.omega_a, nbar, lam.lam_sigma, not inst, g.gate_time)
    if isinstance(ch, Inhomo2nd):
        return an.infid_1q_inhomo2(ch.omega_dprime, g.gate_time, nbar, nbar2, lam.lam_sigma)
    if isinstance(ch, CrossKerr):
        nb = _moments(plan.motional_b)[0]
        return an.infid_1q_crosskerr(ch.omega_dprime_ab, ch.omega_ab, nbar, nb, lam.lam_sigma, not inst, g.gate_time)
    if isinstance(ch, Qubit1QShift):
        psi = plan.initial_qubit_state
        bloch = [expval(PAULI[a], psi) for a in "xyz"]
        return an.infid_1q_qubit_shift_state(ch.delta, g.omega_g, g.gate_time, bloch)
    N = g.loops
    if isinstance(ch, MotionalShift2Q):
        if plan.walsh_k is not None:
            return an.infid_2q_walsh(ch.delta, g.omega_g, plan.walsh_k, nbar, lam.lam_S, lam.lam_S2)
        return an.infid_2q_static_shift(ch.delta, g.omega_g, N, nbar, lam.lam_S, lam.lam_S2)
    if isinstance(ch, Anharmonic):
        return an.infid_2q_anharmonic(ch.epsilon, g.omega_g, N, nbar, nbar2, nbar3, lam.lam_S, lam.lam_S2)
    if isinstance(ch, GradInhomo2Q):
        return an.infid_2q_grad_inhomo(ch.omega_2g_dprime, g.omega_g, N, nbar, nbar2, lam.lam_S, lam.lam_S2)
    if isinstance(ch, Heating):
        return an.infid_2q_heating(ch.ndot, g.omega_g, N, lam.lam_S)
    if isinstance(ch, Dephasing):
        return an.infid_2q_dephasing(ch.eta, g.omega_g, N, nbar, lam.lam_S, lam.lam_S2)
    raise InvalidArgumentError(f"no closed form for {type(ch).__name__}")


def phonon_factor(plan: SweepPlan) -> float:
    """Motional dependence divided out of the normalized columns (one-qubit channels only)."""
    ch = plan.channel
    nbar, nbar2, _ = _moments(plan.motional)
    if isinstance(ch, Inhomo1st):
        return 2 * nbar + 1
    if isinstance(ch, Inhomo2nd):
        return 4 * nbar2 + 4 * nbar + 1
    if isinstance(ch, CrossKerr):
        nb = _moments(plan.motional_b)[0]
        return 2 * nbar * nb + nbar + nb
    return 1.0


def bath_kind(ch: ErrorChannel) -> str:
    if isinstance(ch, Heating):
        return "heating"
    if isinstance(ch, Dephasing):
        return "dephasing"
    raise InvalidArgumentError(f"{type(ch).__name__} is not a bath channel")


def _fock_initial(space: HilbertSpace, q, ns):
    return space.product_state(q, tuple(ns))


def numeric_infidelities(plan: SweepPlan, ch: ErrorChannel, space: HilbertSpace, states) -> list[float]:
    """Numerically propagated infidelity for each qubit state, averaged over the plan's motion.

    The Hamiltonians and baths never act on the qubits through non-commuting
    factors, so a single propagation per motional state serves every qubit state.
    """
    g = plan.gate
    states = [np.asarray(q, dtype=complex) for q in states]
    targets = [ideal_qubit_target(g, q) for q in states]
    cfg = plan.integrator
    H = build_hamiltonian(g, ch, space, _walsh_flips(plan))
    if isinstance(ch, Qubit1QShift):
        return [1.0 - fidelity_pure(propagate_pure(H, q, g.gate_time, cfg), t) for q, t in zip(states, targets)]

    if ch.markovian and plan.markov_method == "lindblad":
        ns, probs = plan.motional.distribution()
        rho_m = np.zeros((space.motion_dim,) * 2, dtype=complex)
        lo = space.fock_offsets[0]
        rho_m[ns - lo, ns - lo] = probs
        ev = lindblad_sector_evolution(H, BathSpec(bath_kind(ch), ch.strength), rho_m, g.gate_time, cfg)
        out = []
        for q, t in zip(states, targets):
            red = ev.reduced_qubit_state(q)
            out.append(float(1.0 - np.clip(np.real(t.conj() @ red @ t), 0.0, 1.0)))
        return out

    dists = [plan.motional.distribution()]
    if isinstance(ch, CrossKerr):
        dists.append(plan.motional_b.distribution())
    totals = np.zeros(len(states))
    for combo in product(*[list(zip(*d)) for d in dists]):
        ns = [int(n) for n, _ in combo]
        p = math.prod(float(pr) for _, pr in combo)
        if ch.markovian:
            width = plan.band_halfwidth or 50.0 / g.gate_time
            bath = BathSpec.with_band(bath_kind(ch), ch.strength, width)
            seed = plan.seed + 1000003 * ns[0]
            fids = [
                propagate_bath_ensemble(
                    H, bath, space.product_state(q, ns), g.gate_time, plan.n_samples, seed, t, cfg
                ).fidelity
                for q, t in zip(states, targets)
            ]
        elif H.sectors is not None:
            ev = pure_sector_evolution(H, space.fock_state(ns), g.gate_time, cfg)
            fids = [fidelity_pure(ev.state(q), t) for q, t in zip(states, targets)]
        else:
            fids = [
                fidelity_pure(propagate_pure(H, space.product_state(q, ns), g.gate_time, cfg, "full"), t)
                for q, t in zip(states, targets)
            ]
        totals += p * (1.0 - np.array(fids))
    return [float(v) for v in totals]


def numeric_value(plan: SweepPlan, ch: ErrorChannel, space: HilbertSpace) -> float:
    return numeric_infidelities(plan, ch, space, [plan.initial_qubit_state])[0]


def _record(plan: SweepPlan, ch: ErrorChannel, numeric: float, audited) -> InfidelityRecord:
    analytic = analytic_value(plan, ch)
    if numeric < -FIDELITY_SLACK or numeric > 1 + FIDELITY_SLACK:
        raise InvalidArgumentError(f"numeric infidelity {numeric} outside [0, 1]")
    numeric = min(max(numeric, 0.0), 1.0)
    defined = analytic != 0.0
    fac = phonon_factor(plan)
    norm = (lambda x: x / fac) if fac > 0 else (lambda x: math.nan)
    return InfidelityRecord(
        channel=plan.channel.name,
        strength=ch.strength,
        analytic=analytic,
        numeric=numeric,
        n_or_nbar=plan.motional.moments()[0],
        lambdas=plan.lambdas,
        ratio=numeric / analytic if defined else math.nan,
        ratio_defined=defined,
        truncation_audit=audited,
        normalized_analytic=norm(analytic),
        normalized_numeric=norm(numeric),
        perturbative=not an.outside_perturbative(analytic),
    )


def _run_point(plan: SweepPlan, strength: float, audit: bool, states) -> list[InfidelityRecord]:
    ch = plan.channel.with_strength(strength)
    try:
        space = build_space(plan, ch)
        numeric = numeric_infidelities(plan, ch, space, states)
        audited = [None] * len(states)
        if audit and space.n_modes:
            big = numeric_infidelities(plan, ch, build_space(plan, ch, 1.25), states)
            audited = [abs(b - v) < AUDIT_TOL for b, v in zip(big, numeric)]
        return [
            _record(replace(plan, initial_qubit_state=q), ch, v, a) for q, v, a in zip(states, numeric, audited)
        ]
    except Exception as exc:
        exc.strength = strength
        if hasattr(exc, "add_note"):
            exc.add_note(f"while evaluating {plan.channel.name} at strength {strength!r}")
        raise


def thread_cap() -> int:
    raw = os.environ.get("GATEBUDGET_THREADS")
    if raw is None:
        return max(1, os.cpu_count() or 1)
    try:
        n = int(raw)
    except ValueError:
        raise ConfigError(f"GATEBUDGET_THREADS must be an integer, got {raw!r}") from None
    if n < 1:
        raise ConfigError("GATEBUDGET_THREADS must be >= 1")
    return n


def run_sweep_states(plan: SweepPlan, states, max_workers: int | None = None) -> list[list[InfidelityRecord]]:
    """Like :func:`run_sweep` for several initial qubit states sharing each propagation."""
    states = [np.asarray(q, dtype=complex) for q in states]
    for q in states:
        replace(plan, initial_qubit_state=q)  # validates shape and norm
    values = plan.sweep_values
    if not values:
        return [[] for _ in states]
    audits = [plan.audit == "all" or (plan.audit == "max" and i == len(values) - 1) for i in range(len(values))]
    workers = min(max_workers or thread_cap(), len(values))
    if workers == 1:
        points = [_run_point(plan, v, a, states) for v, a in zip(values, audits)]
    else:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            points = list(pool.map(lambda va: _run_point(plan, va[0], va[1], states), zip(values, audits)))
    return [[pt[k] for pt in points] for k in range(len(states))]


def run_sweep(plan: SweepPlan, max_workers: int | None = None) -> list[InfidelityRecord]:
    """One record per strength, in sweep order."""
    return run_sweep_states(plan, [plan.initial_qubit_state], max_workers)[0]


# ------------------------------------------------------------ convergence


def fit_exponent(x, y) -> float:
    """Least-squares slope of log y against log x."""
    x, y = np.asarray(x, float), np.asarray(y, float)
    keep = (x > 0) & (y > 0)
    if keep.sum() < 2:
        raise InvalidArgumentError("need two positive points to fit an exponent")
    return float(np.polyfit(np.log(x[keep]), np.log(y[keep]), 1)[0])


@dataclass(frozen=True)
class ConvergenceSummary:
    channel: str
    max_deviation: float
    exponent: float
    expected_exponent: float
    tolerance: float
    audits_ok: bool
    passed: bool


def expected_exponent(channel_name: str) -> float:
    return 1.0 if channel_name in (Heating.name, Dephasing.name) else 2.0


def convergence_report(records, tolerance: float | None = None, walsh: bool = False) -> ConvergenceSummary:
    records = sorted(records, key=lambda r: r.strength)
    if len(records) < 4:
        raise InvalidArgumentError("convergence report needs at least 4 records")
    name = records[0].channel
    if any(r.channel != name for r in records):
        raise InvalidArgumentError("records mix channels")
    small = records[: math.ceil(len(records) / 2)]
    devs = [abs(r.ratio - 1) for r in small if r.ratio_defined]
    max_dev = max(devs) if devs else math.nan
    expo = fit_exponent([r.strength for r in records], [r.numeric for r in records])
    want = expected_exponent(name)
    tol = tolerance if tolerance is not None else (WALSH_TOL if walsh else COHERENT_TOL)
    audits = all(r.truncation_audit is not False for r in records)
    passed = bool(max_dev <= tol and abs(expo - want) <= EXPONENT_TOL and audits)
    return ConvergenceSummary(name, max_dev, expo, want, tol, audits, passed)


def with_values(plan: SweepPlan, values) -> SweepPlan:
    return replace(plan, sweep_values=tuple(values))
