"""Rotating-frame Hamiltonians for the ideal gates and each error mechanism.

Units: ħ = 1 and every parameter is an angular frequency. A Hamiltonian is a
sum of factored terms ``q ⊗ m``; a term is either static (``q ⊗ m``, both
Hermitian) or rotating (``q ⊗ m e^{iωt} + q ⊗ m† e^{-iωt}``). Terms marked
``signed`` are multiplied by the current sign of a Walsh schedule.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field, fields, replace
from functools import cached_property
from typing import ClassVar, Sequence

import numpy as np
from scipy.linalg import expm

from .errors import InvalidArgumentError
from .quantum import PAULI, HilbertSpace, is_hermitian, spin_ops


@dataclass(frozen=True)
class GateConfig:
    """Ideal gate parameters.

    One-qubit gates default to ``omega_g * gate_time = angle = π/4``. Two-qubit
    gates default to ``detuning = 4 Ω √N`` and ``gate_time = 2πN/Δ``, which
    gives a geometric phase of π/8.
    """

    kind: str
    omega_g: float = 1.0
    axis: str = "x"
    loops: int = 1
    detuning: float | None = None
    gate_time: float | None = None
    angle: float = math.pi / 4

    def __post_init__(self):
        if self.kind not in ("one-qubit", "two-qubit"):
            raise InvalidArgumentError(f"gate kind must be 'one-qubit' or 'two-qubit', got {self.kind!r}")
        if self.axis not in PAULI:
            raise InvalidArgumentError(f"axis must be x, y or z, got {self.axis!r}")
        if not self.omega_g > 0:
            raise InvalidArgumentError("gate Rabi frequency must be > 0")
        if self.kind == "one-qubit":
            if self.gate_time is None:
                object.__setattr__(self, "gate_time", self.angle / self.omega_g)
            if not self.gate_time > 0:
                raise InvalidArgumentError("gate time must be > 0")
            return
        if int(self.loops) != self.loops or self.loops < 1:
            raise InvalidArgumentError(f"loops must be a positive integer, got {self.loops}")
        if self.detuning is None:
            object.__setattr__(self, "detuning", 4.0 * self.omega_g * math.sqrt(self.loops))
        if self.gate_time is None:
            object.__setattr__(self, "gate_time", 2 * math.pi * self.loops / self.detuning)
        if not (self.detuning > 0 and self.gate_time > 0):
            raise InvalidArgumentError("detuning and gate time must be > 0")
        closure = self.detuning * self.gate_time / (2 * math.pi * self.loops)
        if abs(closure - 1.0) > 1e-9:
            raise InvalidArgumentError("two-qubit gate must satisfy detuning * gate_time = 2πN")

    @classmethod
    def one_qubit(cls, omega_g=1.0, axis="x", angle=math.pi / 4) -> "GateConfig":
        return cls("one-qubit", omega_g=omega_g, axis=axis, angle=angle)

    @classmethod
    def two_qubit(cls, omega_g=1.0, loops=1, axis="x") -> "GateConfig":
        return cls("two-qubit", omega_g=omega_g, axis=axis, loops=loops)

    @property
    def n_qubits(self) -> int:
        return 1 if self.kind == "one-qubit" else 2

    @property
    def qubit_dim(self) -> int:
        return 2**self.n_qubits

    @property
    def geometric_phase(self) -> float:
        if self.kind != "two-qubit":
            raise InvalidArgumentError("geometric phase is defined for two-qubit gates only")
        return 2 * math.pi * self.loops * self.omega_g**2 / self.detuning**2

    @property
    def loop_time(self) -> float:
        return 2 * math.pi / self.detuning

    @property
    def spin_op(self) -> np.ndarray:
        return spin_ops(self.n_qubits, self.axis)

    def ideal_unitary(self) -> np.ndarray:
        """Exact target propagator on the qubit factor."""
        s = self.spin_op
        if self.kind == "one-qubit":
            return expm(-1j * self.omega_g * self.gate_time * s)
        return expm(1j * self.geometric_phase * (s @ s))


# ---------------------------------------------------------------- channels


@dataclass(frozen=True)
class ErrorChannel:
    """Base for one error mechanism; subclasses name their strength field."""

    name: ClassVar[str] = ""
    gate_kind: ClassVar[str] = ""
    strength_field: ClassVar[str] = ""
    markovian: ClassVar[bool] = False
    n_modes: ClassVar[int] = 1

    def __post_init__(self):
        for f in fields(self):
            v = getattr(self, f.name)
            if not math.isfinite(v):
                raise InvalidArgumentError(f"{self.name}.{f.name} must be finite, got {v}")
        if self.markovian and self.strength < 0:
            raise InvalidArgumentError(f"{self.name} rate must be >= 0")

    @property
    def strength(self) -> float:
        return getattr(self, self.strength_field)

    def with_strength(self, value: float) -> "ErrorChannel":
        return replace(self, **{self.strength_field: float(value)})

    def params(self) -> dict:
        return {f.name: getattr(self, f.name) for f in fields(self)}


@dataclass(frozen=True)
class Qubit1QShift(ErrorChannel):
    name: ClassVar[str] = "qubit_shift_1q"
    gate_kind: ClassVar[str] = "one-qubit"
    strength_field: ClassVar[str] = "delta"
    n_modes: ClassVar[int] = 0
    delta: float = 0.0


@dataclass(frozen=True)
class Inhomo1st(ErrorChannel):
    name: ClassVar[str] = "inhomo1_1q"
    gate_kind: ClassVar[str] = "one-qubit"
    strength_field: ClassVar[str] = "omega_prime"
    omega_prime: float = 0.0
    omega_a: float = 20.0

    def __post_init__(self):
        super().__post_init__()
        if not self.omega_a > 0:
            raise InvalidArgumentError("mode frequency omega_a must be > 0")


@dataclass(frozen=True)
class Inhomo2nd(ErrorChannel):
    name: ClassVar[str] = "inhomo2_1q"
    gate_kind: ClassVar[str] = "one-qubit"
    strength_field: ClassVar[str] = "omega_dprime"
    omega_dprime: float = 0.0


@dataclass(frozen=True)
class CrossKerr(ErrorChannel):
    name: ClassVar[str] = "cross_kerr_1q"
    gate_kind: ClassVar[str] = "one-qubit"
    strength_field: ClassVar[str] = "omega_dprime_ab"
    n_modes: ClassVar[int] = 2
    omega_dprime_ab: float = 0.0
    omega_ab: float = 10.0

    def __post_init__(self):
        super().__post_init__()
        if self.omega_ab == 0:
            raise InvalidArgumentError("mode splitting omega_ab must be nonzero")


@dataclass(frozen=True)
class MotionalShift2Q(ErrorChannel):
    name: ClassVar[str] = "motional_shift_2q"
    gate_kind: ClassVar[str] = "two-qubit"
    strength_field: ClassVar[str] = "delta"
    delta: float = 0.0


@dataclass(frozen=True)
class Anharmonic(ErrorChannel):
    name: ClassVar[str] = "anharmonic_2q"
    gate_kind: ClassVar[str] = "two-qubit"
    strength_field: ClassVar[str] = "epsilon"
    epsilon: float = 0.0


@dataclass(frozen=True)
class GradInhomo2Q(ErrorChannel):
    name: ClassVar[str] = "grad_inhomo_2q"
    gate_kind: ClassVar[str] = "two-qubit"
    strength_field: ClassVar[str] = "omega_2g_dprime"
    omega_2g_dprime: float = 0.0


@dataclass(frozen=True)
class Heating(ErrorChannel):
    name: ClassVar[str] = "heating_2q"
    gate_kind: ClassVar[str] = "two-qubit"
    strength_field: ClassVar[str] = "ndot"
    markovian: ClassVar[bool] = True
    ndot: float = 0.0


@dataclass(frozen=True)
class Dephasing(ErrorChannel):
    name: ClassVar[str] = "dephasing_2q"
    gate_kind: ClassVar[str] = "two-qubit"
    strength_field: ClassVar[str] = "eta"
    markovian: ClassVar[bool] = True
    eta: float = 0.0


CHANNELS: dict[str, type[ErrorChannel]] = {
    cls.__name__: cls
    for cls in (
        Qubit1QShift,
        Inhomo1st,
        Inhomo2nd,
        CrossKerr,
        MotionalShift2Q,
        Anharmonic,
        GradInhomo2Q,
        Heating,
        Dephasing,
    )
}


# ------------------------------------------------------------- Hamiltonian


@dataclass(frozen=True)
class Term:
    qubit_op: np.ndarray
    motion_op: np.ndarray
    freq: float | None = None
    signed: bool = False

    @property
    def rotating(self) -> bool:
        return self.freq is not None


@dataclass
class SectorDecomposition:
    """Block structure of a Hamiltonian whose qubit factors all commute.

    ``basis[:, i]`` is a common eigenvector of every qubit factor; basis
    vectors sharing the same eigenvalues form one sector, and within a
    sector the Hamiltonian acts on the motion alone.
    """

    basis: np.ndarray
    labels: np.ndarray
    eigenvalues: np.ndarray  # (n_sectors, n_terms)

    @property
    def n_sectors(self) -> int:
        return len(self.eigenvalues)


class TimeDependentHamiltonian:
    """H(t) as a list of factored terms on a :class:`HilbertSpace`."""

    def __init__(self, space: HilbertSpace, terms: Sequence[Term], sign_schedule=None, check=True):
        self.space = space
        self.terms = tuple(terms)
        # (start_time, sign) pairs sorted by time; the first segment starts at 0
        self.sign_schedule = tuple((float(t), int(s)) for t, s in sign_schedule) if sign_schedule else ()
        if any(s not in (1, -1) for _, s in self.sign_schedule):
            raise InvalidArgumentError("sign schedule entries must be +1 or -1")
        for term in self.terms:
            if term.qubit_op.shape != (space.qubit_dim,) * 2 or term.motion_op.shape != (space.motion_dim,) * 2:
                raise InvalidArgumentError("term does not match the Hilbert space")
        if check:
            self.check_hermitian()

    def sign(self, t: float) -> int:
        s = 1
        for start, sgn in self.sign_schedule:
            if t >= start:
                s = sgn
            else:
                break
        return s

    def breakpoints(self, t_end: float) -> list[float]:
        return sorted({t for t, _ in self.sign_schedule if 0.0 < t < t_end})

    def coefficients(self, t: float) -> list[tuple[complex, complex]]:
        """Scalar multipliers of ``(q⊗m, q⊗m†)`` for each term at time t."""
        sgn = self.sign(t)
        out = []
        for term in self.terms:
            s = sgn if term.signed else 1
            if term.rotating:
                ph = np.exp(1j * term.freq * t)
                out.append((s * ph, s * np.conj(ph)))
            else:
                out.append((s, 0.0))
        return out

    @cached_property
    def _full_ops(self) -> list[tuple[np.ndarray, np.ndarray | None]]:
        ops = []
        for term in self.terms:
            x = np.kron(term.qubit_op, term.motion_op)
            ops.append((x, np.kron(term.qubit_op, term.motion_op.conj().T) if term.rotating else None))
        return ops

    def __call__(self, t: float) -> np.ndarray:
        h = np.zeros((self.space.dim,) * 2, dtype=complex)
        for (c, cc), (x, xd) in zip(self.coefficients(t), self._full_ops):
            h += c * x
            if xd is not None:
                h += cc * xd
        return h

    def apply(self, t: float, psi: np.ndarray) -> np.ndarray:
        out = np.zeros_like(psi)
        for (c, cc), (x, xd) in zip(self.coefficients(t), self._full_ops):
            out += c * (x @ psi)
            if xd is not None:
                out += cc * (xd @ psi)
        return out

    @cached_property
    def norm_bound(self) -> float:
        """Upper bound on max_t ||H(t)||₂ from row-sum norms of the terms."""
        total = 0.0
        for term in self.terms:
            nq = np.abs(term.qubit_op).sum(axis=1).max()
            nm = np.abs(term.motion_op).sum(axis=1).max()
            if term.rotating:
                nm = max(nm, np.abs(term.motion_op).sum(axis=0).max())
            total += (2.0 if term.rotating else 1.0) * nq * nm
        return float(total)

    @property
    def max_frequency(self) -> float:
        return max((abs(t.freq) for t in self.terms if t.rotating), default=0.0)

    def check_hermitian(self, n_samples: int = 16, horizon: float | None = None, seed: int = 0):
        rng = np.random.default_rng(seed)
        f = self.max_frequency
        horizon = horizon or (20 * math.pi / f if f > 0 else 1.0)
        for t in rng.uniform(0.0, horizon, n_samples):
            if not is_hermitian(self(t)):
                raise InvalidArgumentError(f"H(t) is not Hermitian at t={t:.6g}")

    @cached_property
    def sectors(self) -> SectorDecomposition | None:
        """Common eigenbasis of the qubit factors, or None if they do not commute."""
        qops = [t.qubit_op for t in self.terms]
        dq = self.space.qubit_dim
        if not qops:
            return SectorDecomposition(np.eye(dq, dtype=complex), np.zeros(dq, dtype=int), np.zeros((1, 0)))
        for i, a in enumerate(qops):
            if not is_hermitian(a):
                return None
            for b in qops[i + 1 :]:
                if np.max(np.abs(a @ b - b @ a)) > 1e-12:
                    return None
        weights = np.random.default_rng(12345).uniform(1.0, 2.0, len(qops))
        _, vecs = np.linalg.eigh(sum(w * q for w, q in zip(weights, qops)))
        evs = np.array([np.real(np.diag(vecs.conj().T @ q @ vecs)) for q in qops]).T  # (dq, n_terms)
        for q in qops:
            d = vecs.conj().T @ q @ vecs
            if np.max(np.abs(d - np.diag(np.diag(d)))) > 1e-10:
                return None
        keys = [tuple(np.round(row, 9)) for row in evs]
        uniq = sorted(set(keys), key=keys.index)
        labels = np.array([uniq.index(k) for k in keys])
        return SectorDecomposition(vecs, labels, np.array(uniq, dtype=float).reshape(len(uniq), len(qops)))

    def sector_terms(self, sector: int) -> "MotionalHamiltonian":
        dec = self.sectors
        if dec is None:
            raise InvalidArgumentError("Hamiltonian has no sector decomposition")
        return MotionalHamiltonian(self, dec.eigenvalues[sector])


class SparseMonomial:
    """Matrix with at most one nonzero per row and column (ladder, number and diagonal operators).

    Products with such a matrix cost O(d²) instead of O(d³).
    """

    def __init__(self, rows, cols, vals, dim):
        self.rows, self.cols, self.vals, self.dim = rows, cols, vals, dim
        # constant-offset diagonals (ladder, number operators) index with plain slices
        n = len(rows)
        self._slices = None
        if n and np.all(np.diff(rows) == 1) and np.all(cols - rows == cols[0] - rows[0]):
            self._slices = (slice(rows[0], rows[0] + n), slice(cols[0], cols[0] + n))
        self._r = self._slices[0] if self._slices else rows
        self._c = self._slices[1] if self._slices else cols

    @classmethod
    def from_dense(cls, m: np.ndarray) -> "SparseMonomial | None":
        rows, cols = np.nonzero(m)
        if len(np.unique(rows)) != len(rows) or len(np.unique(cols)) != len(cols):
            return None
        return cls(rows, cols, m[rows, cols].astype(complex), m.shape[0])

    def adjoint(self) -> "SparseMonomial":
        return SparseMonomial(self.cols, self.rows, self.vals.conj(), self.dim)

    def add_to(self, h: np.ndarray, c: complex):
        h[self.rows, self.cols] += c * self.vals

    def left(self, x: np.ndarray, c: complex, out: np.ndarray):
        """out += c M x, with the motion on axis -2 of ``x``."""
        out[..., self._r, :] += (c * self.vals)[:, None] * x[..., self._c, :]

    def right(self, x: np.ndarray, c: complex, out: np.ndarray):
        """out += c x M, with the motion on axis -1 of ``x``."""
        out[..., :, self._c] += x[..., :, self._r] * (c * self.vals)


class _Dense:
    def __init__(self, m: np.ndarray):
        self.m = m

    def adjoint(self) -> "_Dense":
        return _Dense(self.m.conj().T)

    def add_to(self, h, c):
        h += c * self.m

    def left(self, x, c, out):
        out += c * (self.m @ x)

    def right(self, x, c, out):
        out += c * (x @ self.m)


def motional_factor(m: np.ndarray):
    return SparseMonomial.from_dense(m) or _Dense(m)


class MotionalHamiltonian:
    """H restricted to one qubit sector: a time-dependent operator on the motion."""

    def __init__(self, parent: TimeDependentHamiltonian, qvals: np.ndarray):
        self.parent = parent
        self.qvals = np.asarray(qvals, dtype=float)
        self.dim = parent.space.motion_dim
        # per term: None when the qubit factor vanishes in this sector, else (M, M† or None)
        self.ops = []
        for q, term in zip(self.qvals, parent.terms):
            if q == 0.0:
                self.ops.append(None)
                continue
            m = motional_factor(q * term.motion_op)
            self.ops.append((m, m.adjoint() if term.rotating else None))

    def _pieces(self, t):
        for (c, cc), op in zip(self.parent.coefficients(t), self.ops):
            if op is None:
                continue
            yield c, op[0]
            if op[1] is not None:
                yield cc, op[1]

    def __call__(self, t: float) -> np.ndarray:
        h = np.zeros((self.dim, self.dim), dtype=complex)
        for c, m in self._pieces(t):
            m.add_to(h, c)
        return h

    def left(self, t: float, x: np.ndarray) -> np.ndarray:
        """H_s(t) @ x for ``x`` of shape (..., dim, k)."""
        out = np.zeros(x.shape, dtype=complex)
        for c, m in self._pieces(t):
            m.left(x, c, out)
        return out

    def right(self, t: float, x: np.ndarray) -> np.ndarray:
        """x @ H_s(t) for ``x`` of shape (..., k, dim)."""
        out = np.zeros(x.shape, dtype=complex)
        for c, m in self._pieces(t):
            m.right(x, c, out)
        return out

    def apply(self, t: float, y: np.ndarray) -> np.ndarray:
        if y.ndim == 1:
            return self.left(t, y[:, None])[:, 0]
        return self.left(t, y)


# ----------------------------------------------------------------- builders


def _motion_eye(space: HilbertSpace) -> np.ndarray:
    return np.eye(space.motion_dim, dtype=complex)


def _require(cfg: GateConfig, kind: str, space: HilbertSpace | None = None, n_modes: int | None = None):
    if cfg.kind != kind:
        raise InvalidArgumentError(f"{kind} Hamiltonian needs a {kind} GateConfig, got {cfg.kind}")
    if space is not None:
        if space.n_qubits != cfg.n_qubits:
            raise InvalidArgumentError(f"space has {space.n_qubits} qubits, gate needs {cfg.n_qubits}")
        if n_modes is not None and space.n_modes < n_modes:
            raise InvalidArgumentError(f"space has {space.n_modes} modes, channel needs {n_modes}")


def _ideal_1q_terms(cfg: GateConfig, space: HilbertSpace) -> list[Term]:
    return [Term(cfg.omega_g * cfg.spin_op, _motion_eye(space))]


def ideal_1q(cfg: GateConfig, space: HilbertSpace) -> TimeDependentHamiltonian:
    _require(cfg, "one-qubit", space)
    return TimeDependentHamiltonian(space, _ideal_1q_terms(cfg, space))


def error_1q_inhomo1(cfg: GateConfig, ch: Inhomo1st, space: HilbertSpace) -> TimeDependentHamiltonian:
    """H_1g + Ω′ σ_α (a† e^{iω_a t} + a e^{-iω_a t})."""
    _require(cfg, "one-qubit", space, 1)
    _, ad = space.mode_ops(0)
    terms = _ideal_1q_terms(cfg, space) + [Term(ch.omega_prime * cfg.spin_op, ad, freq=ch.omega_a)]
    return TimeDependentHamiltonian(space, terms)


def error_1q_inhomo2(cfg: GateConfig, ch: Inhomo2nd, space: HilbertSpace) -> TimeDependentHamiltonian:
    """H_1g + Ω″ σ_α (2a†a + 1)."""
    _require(cfg, "one-qubit", space, 1)
    a, ad = space.mode_ops(0)
    m = 2 * (ad @ a) + _motion_eye(space)
    terms = _ideal_1q_terms(cfg, space) + [Term(ch.omega_dprime * cfg.spin_op, m)]
    return TimeDependentHamiltonian(space, terms)


def error_1q_crosskerr(cfg: GateConfig, ch: CrossKerr, space: HilbertSpace) -> TimeDependentHamiltonian:
    """H_1g + Ω″_ab σ_α (a†b e^{iω_ab t} + a b† e^{-iω_ab t})."""
    _require(cfg, "one-qubit", space, 2)
    a, ad = space.mode_ops(0)
    b, _ = space.mode_ops(1)
    terms = _ideal_1q_terms(cfg, space) + [Term(ch.omega_dprime_ab * cfg.spin_op, ad @ b, freq=ch.omega_ab)]
    return TimeDependentHamiltonian(space, terms)


def error_1q_qubit_shift(cfg: GateConfig, ch: Qubit1QShift, space: HilbertSpace | None = None):
    """Ω σ_x + δ σ_z on the qubit alone."""
    _require(cfg, "one-qubit")
    if cfg.axis != "x":
        raise InvalidArgumentError("the static qubit-shift channel is defined for an x-polarized drive")
    space = space or HilbertSpace(1)
    eye = _motion_eye(space)
    terms = [Term(cfg.omega_g * PAULI["x"], eye), Term(ch.delta * PAULI["z"], eye)]
    return TimeDependentHamiltonian(space, terms)


def _ideal_2q_terms(cfg: GateConfig, space: HilbertSpace) -> list[Term]:
    _, ad = space.mode_ops(0)
    return [Term(cfg.omega_g * cfg.spin_op, ad, freq=cfg.detuning, signed=True)]


def ideal_2q(cfg: GateConfig, space: HilbertSpace, sign_schedule=None) -> TimeDependentHamiltonian:
    """Ω S_α (a† e^{iΔt} + a e^{-iΔt}), sign-flipped per ``sign_schedule``."""
    _require(cfg, "two-qubit", space, 1)
    return TimeDependentHamiltonian(space, _ideal_2q_terms(cfg, space), sign_schedule)


def error_2q(cfg: GateConfig, ch: ErrorChannel, space: HilbertSpace, sign_schedule=None):
    """Ideal two-qubit drive plus one coherent error term."""
    _require(cfg, "two-qubit", space, 1)
    a, ad = space.mode_ops(0)
    num = ad @ a
    eye_q = np.eye(space.qubit_dim, dtype=complex)
    terms = _ideal_2q_terms(cfg, space)
    if isinstance(ch, MotionalShift2Q):
        terms.append(Term(ch.delta * eye_q, num))
    elif isinstance(ch, Anharmonic):
        terms.append(Term(6 * ch.epsilon * eye_q, num + num @ num))
    elif isinstance(ch, GradInhomo2Q):
        # a†a a† e^{iΔt} + a a† a e^{-iΔt}; the second is the adjoint of the first
        terms.append(Term(3 * ch.omega_2g_dprime * cfg.spin_op, num @ ad, freq=cfg.detuning, signed=True))
    else:
        raise InvalidArgumentError(f"{type(ch).__name__} is not a coherent two-qubit channel")
    return TimeDependentHamiltonian(space, terms, sign_schedule)


def build_hamiltonian(cfg: GateConfig, ch: ErrorChannel | None, space: HilbertSpace, sign_schedule=None):
    """Total coherent Hamiltonian for ``ch``; Markovian channels return the ideal drive."""
    if ch is not None and ch.gate_kind != cfg.kind:
        raise InvalidArgumentError(f"channel {ch.name} needs a {ch.gate_kind} gate, got {cfg.kind}")
    if cfg.kind == "one-qubit":
        if ch is None:
            return ideal_1q(cfg, space)
        builders = {
            Inhomo1st: error_1q_inhomo1,
            Inhomo2nd: error_1q_inhomo2,
            CrossKerr: error_1q_crosskerr,
            Qubit1QShift: error_1q_qubit_shift,
        }
        return builders[type(ch)](cfg, ch, space)
    if ch is None or ch.markovian:
        return ideal_2q(cfg, space, sign_schedule)
    return error_2q(cfg, ch, space, sign_schedule)
