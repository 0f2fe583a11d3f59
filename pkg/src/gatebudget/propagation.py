"""Time propagation of pure states and Lindblad master equations.

Two equivalent routes are provided for every propagation:

* ``method="full"`` integrates on the whole qubit ⊗ motion space.
* ``method="sectors"`` uses the common eigenbasis of the Hamiltonian's qubit
  factors. All Hamiltonians in this package are sums of ``q ⊗ m`` with
  commuting ``q`` (σ_α, S_α or the identity) and every bath acts on the
  motion only, so each pair of qubit sectors evolves independently on the
  motional space. This is exact, not an approximation, and much cheaper.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable

import numpy as np
from scipy.sparse.linalg import expm_multiply

from .errors import (
    IntegratorDivergedError,
    InvalidArgumentError,
    PositivityError,
    StepSizeError,
)
from .hamiltonians import Term, TimeDependentHamiltonian, motional_factor
from .quantum import check_density, check_state, partial_trace_motion

NORM_DRIFT_TOL = 1e-8
TRACE_DRIFT_TOL = 1e-8
HERMITIAN_TOL = 1e-10
POSITIVITY_TOL = 1e-6


@dataclass(frozen=True)
class IntegratorConfig:
    """Fixed-step integrator settings.

    The step is chosen so that ``h * rate <= 2π / steps_per_fastest_period``,
    where ``rate`` is the larger of the fastest rotating-frame frequency and
    a bound on ``||H(t)||``.
    """

    steps_per_fastest_period: int = 200
    scheme: str = "rk4"
    convergence_check: bool = False
    convergence_tol: float = 1e-7
    min_steps: int = 16

    def __post_init__(self):
        if self.steps_per_fastest_period < 50:
            raise InvalidArgumentError("steps_per_fastest_period must be >= 50")
        if self.scheme not in ("rk4", "expmid"):
            raise InvalidArgumentError(f"unknown integration scheme {self.scheme!r}")

    def doubled(self) -> "IntegratorConfig":
        return IntegratorConfig(
            2 * self.steps_per_fastest_period, self.scheme, False, self.convergence_tol, 2 * self.min_steps
        )


@dataclass(frozen=True)
class WalshSchedule:
    """Sign pattern of the W(2^k - 1) sequence over 2^k loops of length ``loop_time``."""

    k: int
    loop_time: float

    def __post_init__(self):
        if int(self.k) != self.k or self.k < 0:
            raise InvalidArgumentError(f"Walsh order must be a non-negative integer, got {self.k}")
        if not self.loop_time > 0:
            raise InvalidArgumentError("loop time must be > 0")

    @property
    def signs(self) -> tuple[int, ...]:
        signs = [1]
        for _ in range(self.k):
            signs = signs + [-s for s in signs]
        return tuple(signs)

    @property
    def n_segments(self) -> int:
        return 2**self.k

    @property
    def duration(self) -> float:
        return self.n_segments * self.loop_time

    def flips(self) -> list[tuple[float, int]]:
        """(start_time, sign) of every segment, as consumed by Hamiltonians."""
        return [(i * self.loop_time, s) for i, s in enumerate(self.signs)]


def walsh_sign_schedule(k: int, loop_time: float) -> WalshSchedule:
    return WalshSchedule(k, loop_time)


@dataclass(frozen=True)
class BathSpec:
    """Markovian motional bath.

    ``spectral_density`` and ``coupling`` describe the equivalent ensemble of
    classical drives. The density is folded about the band centre (ω_a for
    heating, 0 for dephasing), so a flat band of half-width W has density
    ``1/W``. With that convention ``rate = π g² S`` for heating and
    ``rate = π g² S / 2`` for dephasing.
    """

    kind: str
    rate: float
    spectral_density: float | None = None
    coupling: float | None = None
    mode: int = 0

    def __post_init__(self):
        if self.kind not in ("heating", "dephasing"):
            raise InvalidArgumentError(f"bath kind must be 'heating' or 'dephasing', got {self.kind!r}")
        if not (self.rate >= 0 and math.isfinite(self.rate)):
            raise InvalidArgumentError(f"bath rate must be finite and >= 0, got {self.rate}")
        if (self.spectral_density is None) != (self.coupling is None):
            raise InvalidArgumentError("spectral density and coupling must be given together")
        if self.spectral_density is not None:
            expected = rate_from_spectral(self.kind, self.coupling, self.spectral_density)
            if not math.isclose(expected, self.rate, rel_tol=1e-9, abs_tol=1e-300):
                raise InvalidArgumentError(
                    f"rate {self.rate} inconsistent with coupling/spectral density (expected {expected})"
                )

    @classmethod
    def from_spectral(cls, kind: str, coupling: float, spectral_density: float, mode: int = 0) -> "BathSpec":
        return cls(kind, rate_from_spectral(kind, coupling, spectral_density), spectral_density, coupling, mode)

    @classmethod
    def with_band(cls, kind: str, rate: float, half_width: float, mode: int = 0) -> "BathSpec":
        """Bath of the given rate realised by a flat band of ``half_width``."""
        s = 1.0 / half_width
        g = coupling_from_rate(kind, rate, s)
        return cls(kind, rate_from_spectral(kind, g, s), s, g, mode)

    @property
    def half_width(self) -> float | None:
        return None if self.spectral_density is None else 1.0 / self.spectral_density

    def jump_operators(self, space) -> list[tuple[float, np.ndarray]]:
        """(rate, L) pairs acting on the motional factor."""
        a, ad = space.mode_ops(self.mode)
        if self.kind == "heating":
            return [(self.rate, a), (self.rate, ad)]
        return [(self.rate, ad @ a)]


def rate_from_spectral(kind: str, coupling: float, spectral_density: float) -> float:
    if kind == "heating":
        return math.pi * coupling**2 * spectral_density
    if kind == "dephasing":
        return math.pi * coupling**2 * spectral_density / 2
    raise InvalidArgumentError(f"unknown bath kind {kind!r}")


def coupling_from_rate(kind: str, rate: float, spectral_density: float) -> float:
    if kind == "heating":
        return math.sqrt(rate / (math.pi * spectral_density))
    if kind == "dephasing":
        return math.sqrt(2 * rate / (math.pi * spectral_density))
    raise InvalidArgumentError(f"unknown bath kind {kind!r}")


# ------------------------------------------------------------- stepping


def _segments(H: TimeDependentHamiltonian, t_end: float, cfg: IntegratorConfig, extra_rate: float = 0.0):
    """(t0, t1, n_steps) intervals with edges on every sign flip."""
    rate = max(H.max_frequency, H.norm_bound, extra_rate, 1e-300)
    edges = [0.0, *H.breakpoints(t_end), t_end]
    out = []
    for t0, t1 in zip(edges[:-1], edges[1:]):
        n = math.ceil((t1 - t0) * rate * cfg.steps_per_fastest_period / (2 * math.pi))
        out.append((t0, t1, max(n, cfg.min_steps)))
    return out


def _rk4(rhs: Callable, y: np.ndarray, segments, eps: float = 1e-12) -> np.ndarray:
    for t0, t1, n in segments:
        h = (t1 - t0) / n
        # evaluate just inside the segment so sign lookups never straddle a flip
        lo, hi = t0 + eps * h, t1 - eps * h
        for i in range(n):
            t = t0 + i * h
            k1 = rhs(max(t, lo), y)
            k2 = rhs(t + 0.5 * h, y + (0.5 * h) * k1)
            k3 = rhs(t + 0.5 * h, y + (0.5 * h) * k2)
            k4 = rhs(min(t + h, hi), y + h * k3)
            y = y + (h / 6.0) * (k1 + 2 * k2 + 2 * k3 + k4)
    return y


def _expmid(gen: Callable, y: np.ndarray, segments) -> np.ndarray:
    """Exponential midpoint rule; ``gen(t)`` returns the generator matrix G with dy/dt = G y."""
    for t0, t1, n in segments:
        h = (t1 - t0) / n
        for i in range(n):
            y = expm_multiply(h * gen(t0 + (i + 0.5) * h), y)
    return y


def _check_norm(psi: np.ndarray) -> np.ndarray:
    norm = np.linalg.norm(psi)
    if abs(norm - 1.0) > NORM_DRIFT_TOL:
        raise IntegratorDivergedError(f"norm drifted to {norm:.12g}")
    return psi / norm


# ------------------------------------------------------------ pure states


def _pure_full(H, psi0, t_g, cfg):
    segs = _segments(H, t_g, cfg)
    if cfg.scheme == "expmid":
        return _expmid(lambda t: -1j * H(t), psi0, segs)
    return _rk4(lambda t, y: -1j * H.apply(t, y), psi0, segs)


def _pure_sectors(H, psi0, t_g, cfg):
    dec = H.sectors
    dq, dm = H.space.qubit_dim, H.space.motion_dim
    phi = dec.basis.conj().T @ psi0.reshape(dq, dm)  # rows: motional amplitudes per eigenvector
    segs = _segments(H, t_g, cfg)
    out = np.empty_like(phi)
    for s in range(dec.n_sectors):
        rows = np.flatnonzero(dec.labels == s)
        block = phi[rows].T.copy()  # (dm, k)
        if np.any(block):
            hs = H.sector_terms(s)
            if cfg.scheme == "expmid":
                block = _expmid(lambda t: -1j * hs(t), block, segs)
            else:
                block = _rk4(lambda t, y: -1j * hs.apply(t, y), block, segs)
        out[rows] = block.T
    return (dec.basis @ out).reshape(-1)


@dataclass
class PureSectorEvolution:
    """Evolved motional state of every sector for a product initial state ``|ψ⟩ ⊗ |φ⟩``."""

    H: TimeDependentHamiltonian
    motion: np.ndarray  # (n_sectors, motion_dim)

    def state(self, qubit_state) -> np.ndarray:
        dec = self.H.sectors
        c = dec.basis.conj().T @ np.asarray(qubit_state, dtype=complex)
        rows = c[:, None] * self.motion[dec.labels]
        return (dec.basis @ rows).reshape(-1)


def pure_sector_evolution(
    H: TimeDependentHamiltonian,
    motion_state,
    t_g: float,
    cfg: IntegratorConfig | None = None,
) -> PureSectorEvolution:
    """Propagate ``|ψ⟩ ⊗ motion_state`` for all qubit states ψ at once."""
    cfg = cfg or IntegratorConfig()
    dec = H.sectors
    if dec is None:
        raise InvalidArgumentError("Hamiltonian qubit factors do not commute")
    phi0 = check_state(motion_state, H.space.motion_dim)
    if not t_g > 0:
        raise InvalidArgumentError("propagation time must be > 0")

    def run(c):
        segs = _segments(H, t_g, c)
        out = []
        for s in range(dec.n_sectors):
            hs = H.sector_terms(s)
            if c.scheme == "expmid":
                y = _expmid(lambda t: -1j * hs(t), phi0, segs)
            else:
                y = _rk4(lambda t, y: -1j * hs.apply(t, y), phi0, segs)
            out.append(_check_norm(y))
        return np.array(out)

    phis = run(cfg)
    if cfg.convergence_check:
        err = np.max(np.linalg.norm(run(cfg.doubled()) - phis, axis=1))
        if err > cfg.convergence_tol:
            raise StepSizeError(f"doubling the step count moved the state by {err:.3g}")
    return PureSectorEvolution(H, phis)


def propagate_pure(
    H: TimeDependentHamiltonian,
    psi0,
    t_g: float,
    cfg: IntegratorConfig | None = None,
    method: str = "auto",
) -> np.ndarray:
    """ψ(t_g) under H(t) starting from ``psi0`` at t = 0."""
    cfg = cfg or IntegratorConfig()
    psi0 = check_state(psi0, H.space.dim)
    if not t_g > 0:
        raise InvalidArgumentError("propagation time must be > 0")
    if method == "auto":
        method = "sectors" if H.sectors is not None else "full"
    if method == "sectors" and H.sectors is None:
        raise InvalidArgumentError("Hamiltonian qubit factors do not commute; use method='full'")
    run = {"full": _pure_full, "sectors": _pure_sectors}[method]
    psi = _check_norm(run(H, psi0, t_g, cfg))
    if cfg.convergence_check:
        fine = _check_norm(run(H, psi0, t_g, cfg.doubled()))
        err = np.linalg.norm(fine - psi)
        if err > cfg.convergence_tol:
            raise StepSizeError(f"doubling the step count moved the state by {err:.3g}")
    return psi


# ------------------------------------------------------------- Lindblad


def _lindblad_full(H, bath, rho0, t_g, cfg):
    space = H.space
    eye_q = np.eye(space.qubit_dim, dtype=complex)
    jumps = [(r, np.kron(eye_q, L)) for r, L in bath.jump_operators(space) if r > 0]
    k = sum((r * (L.conj().T @ L) for r, L in jumps), np.zeros((space.dim,) * 2, dtype=complex))

    def rhs(t, rho):
        g = H(t) - 0.5j * k
        out = -1j * (g @ rho - rho @ g.conj().T)
        for r, L in jumps:
            out += r * (L @ rho @ L.conj().T)
        return out

    return _rk4(rhs, rho0, _segments(H, t_g, cfg))


def _jump_applier(L: np.ndarray):
    """Return X -> L X L† for stacked X."""
    lf, ldf = motional_factor(L), motional_factor(L.conj().T)

    def apply(x):
        tmp = np.zeros_like(x)
        lf.left(x, 1.0, tmp)
        out = np.zeros_like(x)
        ldf.right(tmp, 1.0, out)
        return out

    return apply


def _sector_pair_rhs(H, bath, pairs):
    """RHS for stacked motional blocks X_b evolving as
    dX_b = -i(H_{s_b} X_b - X_b H_{s'_b}) - ½{K, X_b} + Σ r L X_b L†, K = Σ r L†L."""
    space = H.space
    jumps = [(r, L) for r, L in bath.jump_operators(space) if r > 0]
    dm = space.motion_dim
    k = sum((r * (L.conj().T @ L) for r, L in jumps), np.zeros((dm, dm), dtype=complex))
    kf = motional_factor(k)
    sector_h = [H.sector_terms(s) for s in range(H.sectors.n_sectors)]
    left = [np.array([b for b, p in enumerate(pairs) if p[0] == s]) for s in range(len(sector_h))]
    right = [np.array([b for b, p in enumerate(pairs) if p[1] == s]) for s in range(len(sector_h))]
    appliers = [(r, _jump_applier(L)) for r, L in jumps]

    def rhs(t, x):
        out = np.zeros_like(x)
        for s, hs in enumerate(sector_h):
            if len(left[s]):
                out[left[s]] += -1j * hs.left(t, x[left[s]])
            if len(right[s]):
                out[right[s]] += 1j * hs.right(t, x[right[s]])
        if jumps:
            kf.left(x, -0.5, out)
            kf.right(x, -0.5, out)
        for r, apply in appliers:
            out += r * apply(x)
        return out

    return rhs


def _lindblad_sectors(H, bath, rho0, t_g, cfg):
    dec = H.sectors
    dq, dm = H.space.qubit_dim, H.space.motion_dim
    v = np.kron(dec.basis, np.eye(dm))
    r4 = (v.conj().T @ rho0 @ v).reshape(dq, dm, dq, dm)
    idx = [(i, j) for i in range(dq) for j in range(i, dq)]
    pairs = [(dec.labels[i], dec.labels[j]) for i, j in idx]
    x = np.array([r4[i, :, j, :] for i, j in idx])
    x = _rk4(_sector_pair_rhs(H, bath, pairs), x, _segments(H, t_g, cfg))
    out = np.empty_like(r4)
    for b, (i, j) in enumerate(idx):
        out[i, :, j, :] = x[b]
        out[j, :, i, :] = x[b].conj().T
    out = out.reshape(dq * dm, dq * dm)
    return v @ out @ v.conj().T


def _check_density_run(rho):
    tr = np.trace(rho).real
    if abs(tr - 1.0) > TRACE_DRIFT_TOL:
        raise IntegratorDivergedError(f"trace drifted to {tr:.12g}")
    if np.max(np.abs(rho - rho.conj().T)) > HERMITIAN_TOL:
        raise IntegratorDivergedError("density matrix lost Hermiticity")
    rho = 0.5 * (rho + rho.conj().T)
    if np.linalg.eigvalsh(rho).min() < -POSITIVITY_TOL:
        raise PositivityError("density matrix developed a negative eigenvalue")
    return rho


def propagate_lindblad(
    H: TimeDependentHamiltonian,
    bath: BathSpec,
    rho0,
    t_g: float,
    cfg: IntegratorConfig | None = None,
    method: str = "auto",
) -> np.ndarray:
    """ρ(t_g) for dρ/dt = -i[H, ρ] + Σ r (L ρ L† - ½{L†L, ρ})."""
    cfg = cfg or IntegratorConfig()
    rho0 = check_density(rho0, H.space.dim)
    if not t_g > 0:
        raise InvalidArgumentError("propagation time must be > 0")
    if method == "auto":
        method = "sectors" if H.sectors is not None else "full"
    if method == "sectors" and H.sectors is None:
        raise InvalidArgumentError("Hamiltonian qubit factors do not commute; use method='full'")
    run = {"full": _lindblad_full, "sectors": _lindblad_sectors}[method]
    rho = _check_density_run(run(H, bath, rho0, t_g, cfg))
    if cfg.convergence_check:
        fine = _check_density_run(run(H, bath, rho0, t_g, cfg.doubled()))
        err = np.max(np.abs(fine - rho))
        if err > cfg.convergence_tol:
            raise StepSizeError(f"doubling the step count moved ρ by {err:.3g}")
    return rho


@dataclass
class SectorEvolution:
    """Evolved motional blocks for a product initial state ``|ψ⟩⟨ψ| ⊗ ρ_m``.

    Because every block of such a state starts proportional to ``ρ_m``, one
    propagation per pair of sectors serves every initial qubit state.
    """

    H: TimeDependentHamiltonian
    blocks: dict[tuple[int, int], np.ndarray]

    def _coeffs(self, qubit_state):
        return self.H.sectors.basis.conj().T @ np.asarray(qubit_state, dtype=complex)

    def reduced_qubit_state(self, qubit_state) -> np.ndarray:
        """Tr_motion ρ(t) in the computational qubit basis."""
        dec = self.H.sectors
        c = self._coeffs(qubit_state)
        lab = dec.labels
        tr = np.array([[np.trace(self.block(lab[i], lab[j])) for j in range(len(c))] for i in range(len(c))])
        red = np.outer(c, c.conj()) * tr
        return dec.basis @ red @ dec.basis.conj().T

    def density_matrix(self, qubit_state) -> np.ndarray:
        dec = self.H.sectors
        c = self._coeffs(qubit_state)
        dq, dm = len(c), self.H.space.motion_dim
        r4 = np.empty((dq, dm, dq, dm), dtype=complex)
        for i in range(dq):
            for j in range(dq):
                r4[i, :, j, :] = c[i] * np.conj(c[j]) * self.block(dec.labels[i], dec.labels[j])
        v = np.kron(dec.basis, np.eye(dm))
        return v @ r4.reshape(dq * dm, dq * dm) @ v.conj().T

    def block(self, s: int, sp: int) -> np.ndarray:
        if (s, sp) in self.blocks:
            return self.blocks[(s, sp)]
        return self.blocks[(sp, s)].conj().T


def lindblad_sector_evolution(
    H: TimeDependentHamiltonian,
    bath: BathSpec,
    rho_motion,
    t_g: float,
    cfg: IntegratorConfig | None = None,
) -> SectorEvolution:
    """Propagate ``|ψ⟩⟨ψ| ⊗ rho_motion`` for all qubit states ψ at once."""
    cfg = cfg or IntegratorConfig()
    dec = H.sectors
    if dec is None:
        raise InvalidArgumentError("Hamiltonian qubit factors do not commute")
    rho_motion = check_density(rho_motion, H.space.motion_dim)
    pairs = [(s, sp) for s in range(dec.n_sectors) for sp in range(s, dec.n_sectors)]

    def run(c):
        x0 = np.array([rho_motion] * len(pairs))
        return _rk4(_sector_pair_rhs(H, bath, pairs), x0, _segments(H, t_g, c))

    x = run(cfg)
    if cfg.convergence_check:
        err = np.max(np.abs(run(cfg.doubled()) - x))
        if err > cfg.convergence_tol:
            raise StepSizeError(f"doubling the step count moved the blocks by {err:.3g}")
    for b, (s, sp) in enumerate(pairs):
        if s == sp:
            _check_density_run(x[b])
    return SectorEvolution(H, {p: x[b] for b, p in enumerate(pairs)})


# --------------------------------------------------- ensemble of baths


@dataclass(frozen=True)
class EnsembleResult:
    fidelity: float
    stderr: float
    samples: np.ndarray
    frequencies: np.ndarray


def propagate_bath_ensemble(
    Hg: TimeDependentHamiltonian,
    bath: BathSpec,
    psi0,
    t_g: float,
    n_samples: int,
    seed: int,
    target,
    cfg: IntegratorConfig | None = None,
) -> EnsembleResult:
    """Average fidelity over classical drives ``g cos(ωt) M`` with ω drawn from a flat band.

    Heating uses the rotating-frame drive ``g(a† e^{iνt} + a e^{-iνt})`` with
    detuning ν = ω_a - ω uniform in [-W, W]; dephasing uses ``g cos(ωt) a†a``
    with ω uniform in [-W, W]. ``target`` is the ideal qubit-factor state.
    """
    cfg = cfg or IntegratorConfig()
    if bath.spectral_density is None:
        raise InvalidArgumentError("ensemble propagation needs a bath with spectral fields")
    if n_samples < 100:
        raise InvalidArgumentError("ensemble propagation needs n_samples >= 100")
    dec = Hg.sectors
    if dec is None:
        raise InvalidArgumentError("gate Hamiltonian qubit factors do not commute")
    space = Hg.space
    psi0 = check_state(psi0, space.dim)
    target = np.asarray(target, dtype=complex)
    rng = np.random.default_rng(seed)
    w = bath.half_width
    freqs = rng.uniform(-w, w, n_samples)
    g = bath.coupling
    a, ad = space.mode_ops(bath.mode)
    if bath.kind == "heating":
        m, amp = ad, g
    else:
        m, amp = ad @ a, 0.5 * g
    mf, mdf = motional_factor(m), motional_factor(m.conj().T)

    dq, dm = space.qubit_dim, space.motion_dim
    phi = dec.basis.conj().T @ psi0.reshape(dq, dm)
    probe = TimeDependentHamiltonian(space, [*Hg.terms, Term(amp * np.eye(dq), m, freq=w)], Hg.sign_schedule, check=False)
    segs = _segments(probe, t_g, cfg)
    out = np.empty((n_samples, dq, dm), dtype=complex)
    for s in range(dec.n_sectors):
        rows = np.flatnonzero(dec.labels == s)
        hs = Hg.sector_terms(s)
        y0 = np.broadcast_to(phi[rows].T, (n_samples, dm, len(rows))).copy()

        def rhs(t, y, hs=hs):
            ph = (amp * np.exp(1j * freqs * t))[:, None, None]
            noise = np.zeros_like(y)
            mf.left(y, 1.0, noise)
            noise_d = np.zeros_like(y)
            mdf.left(y, 1.0, noise_d)
            return -1j * (hs.left(t, y) + ph * noise + np.conj(ph) * noise_d)

        y = _rk4(rhs, y0, segs)
        out[:, rows, :] = y.transpose(0, 2, 1)
    psi = np.einsum("ij,bjm->bim", dec.basis, out)
    norms = np.linalg.norm(psi.reshape(n_samples, -1), axis=1)
    if np.max(np.abs(norms - 1.0)) > NORM_DRIFT_TOL:
        raise IntegratorDivergedError(f"ensemble norm drifted by {np.max(np.abs(norms - 1)):.3g}")
    amps = np.einsum("i,bim->bm", target.conj(), psi) / norms[:, None]
    fids = np.sum(np.abs(amps) ** 2, axis=1)
    stderr = float(np.std(fids, ddof=1) / math.sqrt(n_samples))
    return EnsembleResult(float(np.mean(fids)), stderr, fids, freqs)


def qubit_fidelity(state, target, space) -> float:
    """⟨target| Tr_motion(state) |target⟩ for a pure state or density matrix."""
    red = partial_trace_motion(state, space)
    target = np.asarray(target, dtype=complex)
    return float(np.real(np.vdot(target, red @ target)))
