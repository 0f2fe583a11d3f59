"""Dense operators and states on qubit ⊗ truncated-Fock spaces.

Basis ordering is ``qubits ⊗ mode_a ⊗ mode_b``. Qubit basis states are
``|↑⟩ = (1, 0)`` and ``|↓⟩ = (0, 1)`` so that ``σ_z|↓⟩ = -|↓⟩``. Each
motional mode keeps a contiguous window of Fock states
``offset, offset + 1, ..., offset + dim - 1``; an offset of zero is
the usual ``|0⟩ ... |dim-1⟩`` truncation.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import reduce

import numpy as np

from .errors import InvalidArgumentError, InvalidDimensionError, TruncationError

QUBITS = 0  # slot index of the qubit factor; modes are slots 1, 2, ...

PAULI = {
    "x": np.array([[0, 1], [1, 0]], dtype=complex),
    "y": np.array([[0, -1j], [1j, 0]], dtype=complex),
    "z": np.array([[1, 0], [0, -1]], dtype=complex),
}
UP = np.array([1, 0], dtype=complex)
DOWN = np.array([0, 1], dtype=complex)

HERMITIAN_RTOL = 1e-12
NORM_TOL = 1e-10
CLAMP = 1e-12


@dataclass(frozen=True)
class HilbertSpace:
    """Qubit register tensored with one or two truncated motional modes.

    ``fock_dims`` may be empty for qubit-only problems.
    """

    n_qubits: int
    fock_dims: tuple[int, ...] = ()
    fock_offsets: tuple[int, ...] = field(default=())

    def __post_init__(self):
        if self.n_qubits not in (1, 2):
            raise InvalidArgumentError(f"n_qubits must be 1 or 2, got {self.n_qubits}")
        dims = tuple(int(d) for d in self.fock_dims)
        if len(dims) > 2:
            raise InvalidArgumentError("at most two motional modes are supported")
        if any(d < 2 for d in dims):
            raise InvalidDimensionError(f"every fock_dim must be >= 2, got {dims}")
        offsets = tuple(int(o) for o in self.fock_offsets) or (0,) * len(dims)
        if len(offsets) != len(dims) or any(o < 0 for o in offsets):
            raise InvalidArgumentError(f"bad fock_offsets {self.fock_offsets} for dims {dims}")
        object.__setattr__(self, "fock_dims", dims)
        object.__setattr__(self, "fock_offsets", offsets)

    @property
    def qubit_dim(self) -> int:
        return 2**self.n_qubits

    @property
    def motion_dim(self) -> int:
        return math.prod(self.fock_dims)

    @property
    def dim(self) -> int:
        return self.qubit_dim * self.motion_dim

    @property
    def n_modes(self) -> int:
        return len(self.fock_dims)

    @property
    def subsystem_dims(self) -> tuple[int, ...]:
        return (self.qubit_dim, *self.fock_dims)

    def fock_numbers(self, mode: int = 0) -> np.ndarray:
        """Phonon numbers represented by the basis states of ``mode``."""
        return self.fock_offsets[mode] + np.arange(self.fock_dims[mode])

    def fock_state(self, ns) -> np.ndarray:
        """Motional-factor vector for the product Fock state ``|n_a⟩|n_b⟩``."""
        ns = (ns,) if np.isscalar(ns) else tuple(ns)
        if len(ns) != self.n_modes:
            raise InvalidArgumentError(f"need {self.n_modes} phonon numbers, got {ns}")
        vecs = []
        for mode, n in enumerate(ns):
            k = int(n) - self.fock_offsets[mode]
            if not 0 <= k < self.fock_dims[mode]:
                raise TruncationError(f"|{n}⟩ lies outside the Fock window of mode {mode}")
            v = np.zeros(self.fock_dims[mode], dtype=complex)
            v[k] = 1.0
            vecs.append(v)
        return reduce(np.kron, vecs, np.ones(1, dtype=complex))

    def product_state(self, qubit_state, ns=None) -> np.ndarray:
        qubit_state = np.asarray(qubit_state, dtype=complex)
        if qubit_state.shape != (self.qubit_dim,):
            raise InvalidDimensionError(
                f"qubit state has shape {qubit_state.shape}, expected ({self.qubit_dim},)"
            )
        if self.n_modes == 0:
            return qubit_state.copy()
        return np.kron(qubit_state, self.fock_state(ns))

    def mode_ops(self, mode: int = 0) -> tuple[np.ndarray, np.ndarray]:
        """Lowering and raising operators of ``mode`` on the motional factor."""
        a, ad = ladder_ops(self.fock_dims[mode], self.fock_offsets[mode])
        ops = []
        for op in (a, ad):
            factors = [np.eye(d, dtype=complex) for d in self.fock_dims]
            factors[mode] = op
            ops.append(reduce(np.kron, factors))
        return ops[0], ops[1]

    def enlarged(self, factor: float = 1.25) -> "HilbertSpace":
        """Same space with each Fock window widened by ``factor``, split evenly
        between the low side (where room exists) and the high side."""
        dims, offsets = [], []
        for d, o in zip(self.fock_dims, self.fock_offsets):
            extra = max(1, math.ceil((factor - 1.0) * d))
            down = min(o, extra // 2)
            dims.append(d + extra)
            offsets.append(o - down)
        return HilbertSpace(self.n_qubits, tuple(dims), tuple(offsets))


def ladder_ops(dim: int, offset: int = 0) -> tuple[np.ndarray, np.ndarray]:
    """Truncated lowering/raising matrices with ``a[k-1, k] = sqrt(offset + k)``."""
    if int(dim) != dim or dim < 2:
        raise InvalidDimensionError(f"ladder operators need dim >= 2, got {dim}")
    a = np.diag(np.sqrt(np.arange(1, dim) + float(offset))).astype(complex)
    a = np.pad(a, ((0, 1), (1, 0)))
    return a, a.conj().T


def spin_ops(n_qubits: int, axis: str) -> np.ndarray:
    """σ_α for one qubit, or the collective S_α = σ_α⊗I + I⊗σ_α for two."""
    if axis not in PAULI:
        raise InvalidArgumentError(f"axis must be one of x, y, z; got {axis!r}")
    s = PAULI[axis]
    if n_qubits == 1:
        return s.copy()
    if n_qubits == 2:
        eye = np.eye(2, dtype=complex)
        return np.kron(s, eye) + np.kron(eye, s)
    raise InvalidArgumentError(f"n_qubits must be 1 or 2, got {n_qubits}")


def embed(op, space: HilbertSpace, slot: int = QUBITS) -> np.ndarray:
    """Kronecker ``op`` into ``slot`` of ``space`` with identities elsewhere."""
    op = np.asarray(op, dtype=complex)
    dims = space.subsystem_dims
    if not 0 <= slot < len(dims):
        raise InvalidArgumentError(f"slot {slot} out of range for {len(dims)} subsystems")
    if op.shape != (dims[slot], dims[slot]):
        raise InvalidArgumentError(
            f"operator of shape {op.shape} does not fit slot {slot} of dimension {dims[slot]}"
        )
    factors = [np.eye(d, dtype=complex) for d in dims]
    factors[slot] = op
    return reduce(np.kron, factors)


def is_hermitian(op, rtol: float = HERMITIAN_RTOL) -> bool:
    op = np.asarray(op)
    scale = max(np.max(np.abs(op)), 1.0) if op.size else 1.0
    return bool(np.max(np.abs(op - op.conj().T), initial=0.0) < rtol * scale)


def check_state(psi, dim: int | None = None, tol: float = NORM_TOL) -> np.ndarray:
    psi = np.asarray(psi, dtype=complex)
    if psi.ndim != 1 or (dim is not None and psi.shape[0] != dim):
        raise InvalidDimensionError(f"state has shape {psi.shape}, expected ({dim},)")
    if abs(np.linalg.norm(psi) - 1.0) > tol:
        raise InvalidArgumentError(f"state is not normalized (norm {np.linalg.norm(psi):.3g})")
    return psi


def check_density(rho, dim: int | None = None, tol: float = NORM_TOL) -> np.ndarray:
    rho = np.asarray(rho, dtype=complex)
    if rho.ndim != 2 or rho.shape[0] != rho.shape[1]:
        raise InvalidDimensionError(f"density matrix must be square, got {rho.shape}")
    if dim is not None and rho.shape[0] != dim:
        raise InvalidDimensionError(f"density matrix has dimension {rho.shape[0]}, expected {dim}")
    if np.max(np.abs(rho - rho.conj().T)) > tol:
        raise InvalidArgumentError("density matrix is not Hermitian")
    if abs(np.trace(rho).real - 1.0) > tol:
        raise InvalidArgumentError(f"density matrix trace is {np.trace(rho).real:.12g}")
    if np.linalg.eigvalsh(rho).min() < -1e-8:
        raise InvalidArgumentError("density matrix has negative eigenvalues")
    return rho


def normalize(psi) -> np.ndarray:
    psi = np.asarray(psi, dtype=complex)
    return psi / np.linalg.norm(psi)


def variance(op, psi) -> float:
    """⟨A²⟩ - ⟨A⟩² for Hermitian ``op``; round-off within ±1e-12 of zero is snapped to 0."""
    op = np.asarray(op, dtype=complex)
    if not is_hermitian(op):
        raise InvalidArgumentError("variance requires a Hermitian operator")
    psi = check_state(psi, op.shape[0])
    a_psi = op @ psi
    mean = np.vdot(psi, a_psi).real
    var = np.vdot(a_psi, a_psi).real - mean**2
    if var < -CLAMP:
        raise ArithmeticError(f"negative variance {var:.3g}")
    return 0.0 if var <= CLAMP else float(var)


def expval(op, psi) -> float:
    psi = np.asarray(psi, dtype=complex)
    return np.vdot(psi, np.asarray(op) @ psi).real


@dataclass(frozen=True)
class MotionalEnsemble:
    """Initial phonon distribution: a Fock state, a thermal state, or explicit P_n."""

    kind: str = "fixed"
    n: int = 0
    nbar: float = 0.0
    probs: tuple[tuple[int, float], ...] = ()

    def __post_init__(self):
        if self.kind not in ("fixed", "thermal", "explicit"):
            raise InvalidArgumentError(f"unknown ensemble kind {self.kind!r}")
        if self.kind == "fixed" and (int(self.n) != self.n or self.n < 0):
            raise InvalidArgumentError(f"fixed phonon number must be a non-negative integer, got {self.n}")
        if self.kind == "thermal" and not (self.nbar >= 0 and math.isfinite(self.nbar)):
            raise InvalidArgumentError(f"thermal nbar must be >= 0, got {self.nbar}")
        if self.kind == "explicit":
            if not self.probs:
                raise InvalidArgumentError("explicit ensemble needs at least one (n, P_n) pair")
            if any(p < 0 or int(n) != n or n < 0 for n, p in self.probs):
                raise InvalidArgumentError("explicit ensemble needs integer n >= 0 and P_n >= 0")
            object.__setattr__(self, "probs", tuple((int(n), float(p)) for n, p in self.probs))

    @classmethod
    def fixed(cls, n: int) -> "MotionalEnsemble":
        return cls(kind="fixed", n=int(n))

    @classmethod
    def thermal(cls, nbar: float) -> "MotionalEnsemble":
        return cls(kind="thermal", nbar=float(nbar))

    @classmethod
    def explicit(cls, probs) -> "MotionalEnsemble":
        items = probs.items() if isinstance(probs, dict) else probs
        return cls(kind="explicit", probs=tuple(items))

    def distribution(self, max_n: int | None = None, tail: float = 1e-10):
        """Phonon numbers and renormalized probabilities after truncation."""
        if self.kind == "fixed":
            ns, ps = np.array([self.n]), np.array([1.0])
        elif self.kind == "thermal":
            ratio = self.nbar / (self.nbar + 1.0)
            # P(n >= M) = ratio**M
            needed = 1 if ratio == 0 else max(1, math.ceil(math.log(tail) / math.log(ratio)))
            if max_n is None:
                max_n = needed - 1
            elif ratio ** (max_n + 1) >= tail:
                raise TruncationError(
                    f"thermal tail beyond n={max_n} is {ratio ** (max_n + 1):.3g} for nbar={self.nbar}"
                )
            ns = np.arange(max_n + 1)
            ps = ratio**ns / (self.nbar + 1.0)
        else:
            merged: dict[int, float] = {}
            for n, p in self.probs:
                merged[n] = merged.get(n, 0.0) + p
            ns = np.array(sorted(merged))
            ps = np.array([merged[n] for n in ns])
            if max_n is not None and ps[ns > max_n].sum() >= tail:
                raise TruncationError(f"explicit distribution has weight beyond n={max_n}")
        if max_n is not None:
            keep = ns <= max_n
            ns, ps = ns[keep], ps[keep]
        return ns, ps / ps.sum()

    def moments(self, max_n: int | None = None) -> tuple[float, float, float]:
        return ensemble_moments(self, max_n)

    @property
    def n_max(self) -> int:
        return int(self.distribution()[0].max())


def ensemble_moments(ens: MotionalEnsemble, max_n: int | None = None) -> tuple[float, float, float]:
    """(n̄, mean of n², mean of n³).

    Untruncated thermal states use the closed forms of the geometric
    distribution; everything else sums the (truncated) distribution.
    """
    if ens.kind == "fixed":
        n = float(ens.n)
        return n, n**2, n**3
    if ens.kind == "thermal" and max_n is None:
        m = ens.nbar
        return m, 2 * m**2 + m, 6 * m**3 + 6 * m**2 + m
    ns, ps = ens.distribution(max_n)
    ns = ns.astype(float)
    return tuple(float(np.sum(ps * ns**k)) for k in (1, 2, 3))


def fock_window(n_lo: int, n_hi: int, amplitude: float) -> tuple[int, int]:
    """(offset, dim) of a Fock window holding every state reachable from
    ``|n_lo⟩ ... |n_hi⟩`` by displacements up to ``amplitude``."""
    amplitude = abs(float(amplitude))
    # margins from a leak study: displaced Fock tails below 1e-10 at α ≤ 1, n ≤ 200
    pad = 8 + 4 * amplitude + 2 * amplitude * max(n_hi, 1) ** 0.25
    lo = max(0.0, math.sqrt(n_lo) - amplitude) ** 2 - pad
    hi = (math.sqrt(n_hi) + amplitude) ** 2 + pad
    offset = max(0, math.floor(lo))
    return offset, max(2, math.ceil(hi) - offset + 1)


def purity(rho) -> float:
    rho = np.asarray(rho)
    return float(np.real(np.trace(rho @ rho)))


def partial_trace_motion(psi_or_rho, space: HilbertSpace) -> np.ndarray:
    """Reduced qubit density matrix of a full-space state or density matrix."""
    x = np.asarray(psi_or_rho, dtype=complex)
    dq, dm = space.qubit_dim, space.motion_dim
    if x.ndim == 1:
        m = x.reshape(dq, dm)
        return m @ m.conj().T
    return np.einsum("imjm->ij", x.reshape(dq, dm, dq, dm))
