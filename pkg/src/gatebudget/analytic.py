"""Closed-form leading-order infidelities.

Every function takes raw reals so the formulas stay independent of how the
spin variances were obtained; :class:`SpinVariances` computes them from an
explicit qubit state. ``nbar2``/``nbar3`` are the ensemble moments of n² and
n³ (for a Fock state |n⟩ they are n² and n³).
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import InvalidArgumentError
from .quantum import PAULI, spin_ops, variance

PERTURBATIVE_LIMIT = 0.05


@dataclass(frozen=True)
class SpinVariances:
    """λ² = ⟨A²⟩ - ⟨A⟩² for A = σ_α (one qubit) or S_α, S_α² (two qubits)."""

    lam_sigma: float = 0.0
    lam_S: float = 0.0
    lam_S2: float = 0.0

    def __post_init__(self):
        for name in ("lam_sigma", "lam_S", "lam_S2"):
            if getattr(self, name) < 0:
                raise InvalidArgumentError(f"{name} must be >= 0")

    @classmethod
    def from_state(cls, qubit_state, axis: str = "x") -> "SpinVariances":
        psi = np.asarray(qubit_state, dtype=complex)
        if psi.shape == (2,):
            return cls(lam_sigma=variance(PAULI[axis], psi))
        if psi.shape == (4,):
            s = spin_ops(2, axis)
            return cls(lam_S=variance(s, psi), lam_S2=variance(s @ s, psi))
        raise InvalidArgumentError(f"qubit state must have length 2 or 4, got {psi.shape}")


def _check_nonneg(**kw):
    for k, v in kw.items():
        if v < 0:
            raise InvalidArgumentError(f"{k} must be >= 0, got {v}")


def _check_gate(omega, N):
    if not omega > 0:
        raise InvalidArgumentError("gate Rabi frequency must be > 0")
    if N < 1:
        raise InvalidArgumentError("loop number must be >= 1")


# ----------------------------------------------------------- single qubit


def infid_1q_inhomo1(omega_prime, omega_a, nbar, lam_sigma, time_averaged=True, t_g=None) -> float:
    """First-order field gradient coupling σ_α to the motion at ω_a."""
    if not omega_a > 0:
        raise InvalidArgumentError("omega_a must be > 0")
    _check_nonneg(nbar=nbar, lam_sigma=lam_sigma)
    r2 = (omega_prime / omega_a) ** 2
    if time_averaged:
        return 2 * r2 * (2 * nbar + 1) * lam_sigma
    if t_g is None:
        raise InvalidArgumentError("the instantaneous form needs t_g")
    return 4 * r2 * math.sin(omega_a * t_g / 2) ** 2 * (2 * nbar + 1) * lam_sigma


def infid_1q_inhomo2(omega_dprime, t_g, nbar, nbar2, lam_sigma) -> float:
    """Second-order field curvature, σ_α(2n+1) shift of the Rabi frequency."""
    if not t_g > 0:
        raise InvalidArgumentError("t_g must be > 0")
    _check_nonneg(nbar=nbar, nbar2=nbar2, lam_sigma=lam_sigma)
    return omega_dprime**2 * t_g**2 * (4 * nbar2 + 4 * nbar + 1) * lam_sigma


def infid_1q_crosskerr(omega_dprime_ab, omega_ab, nbar_a, nbar_b, lam_sigma, time_averaged=True, t_g=None) -> float:
    """Spin-conditioned exchange between two uncorrelated modes a and b."""
    if omega_ab == 0:
        raise InvalidArgumentError("omega_ab must be nonzero")
    _check_nonneg(nbar_a=nbar_a, nbar_b=nbar_b, lam_sigma=lam_sigma)
    occ = 2 * nbar_a * nbar_b + nbar_a + nbar_b
    r2 = (omega_dprime_ab / omega_ab) ** 2
    if time_averaged:
        return 2 * r2 * occ * lam_sigma
    if t_g is None:
        raise InvalidArgumentError("the instantaneous form needs t_g")
    return 4 * r2 * math.sin(omega_ab * t_g / 2) ** 2 * occ * lam_sigma


def infid_1q_qubit_shift(delta, omega_1g, t, state="ground") -> float:
    """Static qubit detuning δσ_z during an x rotation, to order (δ/Ω)²."""
    if not omega_1g > 0:
        raise InvalidArgumentError("omega_1g must be > 0")
    x2 = (delta / omega_1g) ** 2
    s = math.sin(omega_1g * t)
    if state == "ground":
        return x2 * s**4
    if state in ("bloch-averaged", "averaged"):
        return 2 * x2 * s**2 / 3
    raise InvalidArgumentError(f"state must be 'ground' or 'bloch-averaged', got {state!r}")


def infid_1q_qubit_shift_state(delta, omega_1g, t, bloch) -> float:
    """Same channel for an arbitrary initial Bloch vector ``(⟨σx⟩, ⟨σy⟩, ⟨σz⟩)``.

    The next correction is (δ/Ω)³ for states with ⟨σx⟩ ≠ 0 and (δ/Ω)⁴ otherwise.
    """
    if not omega_1g > 0:
        raise InvalidArgumentError("omega_1g must be > 0")
    _, sy, sz = bloch
    x2 = (delta / omega_1g) ** 2
    s, c = math.sin(omega_1g * t), math.cos(omega_1g * t)
    return x2 * (s**2 - (c * s * sz + s**2 * sy) ** 2)


# ------------------------------------------------------------- two qubits


def infid_2q_static_shift(delta, omega_2g, N, nbar, lam_S, lam_S2) -> float:
    """Static motional frequency offset δ a†a."""
    _check_gate(omega_2g, N)
    _check_nonneg(nbar=nbar, lam_S=lam_S, lam_S2=lam_S2)
    return math.pi**2 * delta**2 / (64 * omega_2g**2) * ((2 * nbar + 1) * lam_S + lam_S2 / (4 * N))


def infid_2q_anharmonic(epsilon, omega_2g, N, nbar, nbar2, nbar3, lam_S, lam_S2) -> float:
    """Quartic trap anharmonicity 6ε(n + n²)."""
    _check_gate(omega_2g, N)
    _check_nonneg(nbar=nbar, nbar2=nbar2, nbar3=nbar3, lam_S=lam_S, lam_S2=lam_S2)
    b_s = (
        4 * (2 * nbar3 + 3 * nbar2 + 3 * nbar + 1)
        + 6 * (2 * nbar2 + 2 * nbar + 1) / N
        + 9 * (2 * nbar + 1) / (4 * N**2)
    )
    b_s2 = 3 * (11 * nbar2 + 11 * nbar + 3) / (8 * N) + 3 * (2 * nbar + 1) / (4 * N**2) + 9 / (64 * N**3)
    return 9 * math.pi**2 * epsilon**2 / (16 * omega_2g**2) * (b_s * lam_S + b_s2 * lam_S2)


def infid_2q_grad_inhomo(omega_2g_dprime, omega_2g, N, nbar, nbar2, lam_S, lam_S2) -> float:
    """Field curvature acting on the spin-dependent force."""
    _check_gate(omega_2g, N)
    _check_nonneg(nbar=nbar, nbar2=nbar2, lam_S=lam_S, lam_S2=lam_S2)
    b_s2 = 4 * nbar2 + 4 * nbar + 1 + 3 * (2 * nbar + 1) / (2 * N) + 9 / (16 * N**2)
    b_s = 4 * (2 * nbar + 1) / N
    return 9 * math.pi**2 * omega_2g_dprime**2 / (16 * omega_2g**2) * (b_s2 * lam_S2 + b_s * lam_S)


def infid_2q_heating(ndot, omega_2g, N, lam_S) -> float:
    """Motional heating at rate ṅ; independent of the motional state."""
    _check_gate(omega_2g, N)
    _check_nonneg(ndot=ndot, lam_S=lam_S)
    return math.pi * ndot * lam_S / (8 * omega_2g * math.sqrt(N))


def infid_2q_dephasing(eta, omega_2g, N, nbar, lam_S, lam_S2) -> float:
    """Motional dephasing at rate η."""
    _check_gate(omega_2g, N)
    _check_nonneg(eta=eta, nbar=nbar, lam_S=lam_S, lam_S2=lam_S2)
    return math.pi * eta / (16 * omega_2g * math.sqrt(N)) * ((2 * nbar + 1) * lam_S + 3 * lam_S2 / (16 * N))


def infid_2q_walsh(delta, omega_2g, k, nbar, lam_S, lam_S2) -> float:
    """Static shift under a W(2^k - 1) sign sequence over N = 2^k loops."""
    if int(k) != k or k < 0:
        raise InvalidArgumentError("Walsh order must be a non-negative integer")
    _check_gate(omega_2g, 1)
    _check_nonneg(nbar=nbar, lam_S=lam_S, lam_S2=lam_S2)
    x = math.pi * delta / omega_2g
    return x ** (2 * (k + 1)) * 2.0 ** (-(5 * k + 6)) * (2 * nbar + 1) * lam_S + x**2 * 2.0 ** (-(k + 8)) * lam_S2


def outside_perturbative(value: float) -> bool:
    return value > PERTURBATIVE_LIMIT
