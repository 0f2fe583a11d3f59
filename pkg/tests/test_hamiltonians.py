import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from scipy.linalg import expm

from gatebudget.errors import InvalidArgumentError
from gatebudget.hamiltonians import (
    CHANNELS,
    Anharmonic,
    CrossKerr,
    Dephasing,
    GateConfig,
    GradInhomo2Q,
    Heating,
    Inhomo1st,
    Inhomo2nd,
    MotionalShift2Q,
    Qubit1QShift,
    SparseMonomial,
    build_hamiltonian,
    ideal_1q,
    ideal_2q,
    motional_factor,
)
from gatebudget.quantum import DOWN, PAULI, HilbertSpace, embed, is_hermitian, ladder_ops

from conftest import DD, random_state


def test_gate_defaults():
    g1 = GateConfig.one_qubit()
    assert g1.omega_g * g1.gate_time == pytest.approx(math.pi / 4)
    g2 = GateConfig.two_qubit(loops=4)
    assert g2.detuning == pytest.approx(8.0)
    assert g2.gate_time == pytest.approx(2 * math.pi * 4 / 8.0)
    assert g2.geometric_phase == pytest.approx(math.pi / 8)


def test_gate_rejects_open_loops():
    with pytest.raises(InvalidArgumentError):
        GateConfig("two-qubit", detuning=4.0, gate_time=1.0)
    with pytest.raises(InvalidArgumentError):
        GateConfig("two-qubit", omega_g=0.0)


def test_ideal_1q_is_time_independent():
    sp = HilbertSpace(1, (3,))
    H = ideal_1q(GateConfig.one_qubit(), sp)
    assert np.allclose(H(0.0), H(7.3))
    down = sp.product_state(DOWN, (0,))
    assert np.vdot(down, H(0.0) @ down) == 0


def test_ideal_1q_gives_equal_superposition():
    u = expm(-1j * (math.pi / 4) * PAULI["x"])
    out = u @ DOWN
    assert np.abs(out) ** 2 == pytest.approx([0.5, 0.5])
    assert np.allclose(GateConfig.one_qubit().ideal_unitary(), u)


def test_inhomo1_form_and_sign_flip():
    sp = HilbertSpace(1, (6,))
    g = GateConfig.one_qubit()
    ch = Inhomo1st(omega_prime=0.1, omega_a=20.0)
    H = build_hamiltonian(g, ch, sp)
    a, ad = sp.mode_ops()
    sx = embed(PAULI["x"], sp)
    motion = np.kron(np.eye(2), a + ad)
    assert np.allclose(H(0.0), sx + 0.1 * sx @ motion)
    err = lambda t: H(t) - sx
    assert np.allclose(err(math.pi / 20.0), -err(0.0))


def test_zero_strength_channels_reduce_to_ideal():
    sp1, sp2 = HilbertSpace(1, (5, 5)), HilbertSpace(2, (5,))
    g1, g2 = GateConfig.one_qubit(), GateConfig.two_qubit()
    for cls in CHANNELS.values():
        ch = cls()
        if ch.gate_kind == "one-qubit":
            sp = sp1 if cls is CrossKerr else HilbertSpace(1, (5,))
            ideal = ideal_1q(g1, sp)
            H = build_hamiltonian(g1, ch, sp)
        else:
            ideal = ideal_2q(g2, sp2)
            H = build_hamiltonian(g2, ch, sp2)
        for t in (0.0, 0.37, 1.9):
            assert np.allclose(H(t), ideal(t)), cls.__name__


def test_inhomo2_diagonal_two_n_plus_one():
    sp = HilbertSpace(1, (7,))
    H = build_hamiltonian(GateConfig.one_qubit(), Inhomo2nd(omega_dprime=0.3), sp)
    err = H(0.0) - ideal_1q(GateConfig.one_qubit(), sp)(0.0)
    up = slice(0, 7)
    assert np.allclose(np.diag(err[up, 7:]), 0.3 * (2 * np.arange(7) + 1))
    assert np.allclose(H(0.0) @ ideal_1q(GateConfig.one_qubit(), sp)(0.0), ideal_1q(GateConfig.one_qubit(), sp)(0.0) @ H(0.0))


def test_cross_kerr_conserves_total_phonons():
    sp = HilbertSpace(1, (4, 4))
    H = build_hamiltonian(GateConfig.one_qubit(), CrossKerr(omega_dprime_ab=0.2, omega_ab=10.0), sp)
    na = np.kron(np.eye(2), np.kron(np.diag(np.arange(4)), np.eye(4)))
    nb = np.kron(np.eye(2), np.kron(np.eye(4), np.diag(np.arange(4))))
    ntot = na + nb
    for t in np.linspace(0, 3, 7):
        assert np.allclose(H(t) @ ntot, ntot @ H(t))


def test_ideal_2q_closes_loop_and_entangles_mid_gate():
    g = GateConfig.two_qubit()
    sp = HilbertSpace(2, (30,))
    H = ideal_2q(g, sp)
    psi0 = sp.product_state(DD, (0,))
    from gatebudget.propagation import propagate_pure
    from gatebudget.quantum import partial_trace_motion, purity

    out = propagate_pure(H, psi0, g.gate_time)
    target = np.kron(expm(1j * math.pi / 8 * g.spin_op @ g.spin_op) @ DD, sp.fock_state((0,)))
    assert abs(np.vdot(target, out)) ** 2 == pytest.approx(1.0, abs=1e-6)
    mid = propagate_pure(H, psi0, g.gate_time / 2)
    assert purity(partial_trace_motion(mid, sp)) < 0.99


def test_two_qubit_error_diagonals():
    sp = HilbertSpace(2, (9,))
    g = GateConfig.two_qubit()
    ideal = ideal_2q(g, sp)(0.2)
    n = np.arange(9)
    err = build_hamiltonian(g, MotionalShift2Q(delta=0.03), sp)(0.2) - ideal
    assert np.allclose(np.diag(err)[:9], 0.03 * n)
    err = build_hamiltonian(g, Anharmonic(epsilon=0.01), sp)(0.2) - ideal
    assert np.allclose(np.diag(err)[:9], 6 * 0.01 * (n + n**2))


def test_markovian_channels_build_ideal_drive():
    sp = HilbertSpace(2, (6,))
    g = GateConfig.two_qubit()
    for ch in (Heating(ndot=0.1), Dephasing(eta=0.1)):
        assert np.allclose(build_hamiltonian(g, ch, sp)(0.4), ideal_2q(g, sp)(0.4))


def test_qubit_shift_rotation_axis():
    g = GateConfig.one_qubit()
    for d in (0.3, 1.0):
        H = build_hamiltonian(g, Qubit1QShift(delta=d), HilbertSpace(1))(0.0)
        w = math.hypot(1.0, d)
        nvec = np.array([1.0, 0.0, d]) / w
        rot = math.cos(w * 0.8) * np.eye(2) - 1j * math.sin(w * 0.8) * sum(c * PAULI[a] for c, a in zip(nvec, "xyz"))
        assert np.allclose(expm(-0.8j * H), rot)
    H1 = build_hamiltonian(g, Qubit1QShift(delta=1.0), HilbertSpace(1))(0.0)
    assert np.linalg.eigvalsh(H1) == pytest.approx([-math.sqrt(2), math.sqrt(2)])


def test_qubit_shift_needs_x_drive():
    with pytest.raises(InvalidArgumentError):
        build_hamiltonian(GateConfig.one_qubit(axis="y"), Qubit1QShift(delta=0.1), HilbertSpace(1))


def test_channel_gate_mismatch():
    with pytest.raises(InvalidArgumentError):
        build_hamiltonian(GateConfig.one_qubit(), Heating(ndot=0.1), HilbertSpace(1, (4,)))


def test_negative_rate_rejected():
    with pytest.raises(InvalidArgumentError):
        Heating(ndot=-1.0)


@pytest.mark.parametrize("ch", [MotionalShift2Q(0.05), Anharmonic(0.01), GradInhomo2Q(0.02)])
def test_two_qubit_hamiltonians_hermitian(ch):
    sp = HilbertSpace(2, (8,), (3,))
    H = build_hamiltonian(GateConfig.two_qubit(loops=2), ch, sp, [(0.0, 1), (1.5, -1)])
    for t in np.linspace(0, 3, 11):
        assert is_hermitian(H(t))


def test_walsh_sign_applies_to_drive_only():
    sp = HilbertSpace(2, (6,))
    g = GateConfig.two_qubit(loops=2)
    sched = [(0.0, 1), (g.loop_time, -1)]
    H = build_hamiltonian(g, MotionalShift2Q(0.1), sp, sched)
    Hp = build_hamiltonian(g, MotionalShift2Q(0.1), sp)
    t = g.loop_time * 1.3
    static = build_hamiltonian(g, MotionalShift2Q(0.1), sp)(t) - ideal_2q(g, sp)(t)
    assert np.allclose(H(t) - static, -(Hp(t) - static))


def test_sector_decomposition_two_qubit():
    H = build_hamiltonian(GateConfig.two_qubit(), GradInhomo2Q(0.01), HilbertSpace(2, (6,)))
    dec = H.sectors
    assert dec.n_sectors == 3
    assert sorted(np.round(dec.eigenvalues[:, 0], 9)) == [-2.0, 0.0, 2.0]


@given(st.integers(0, 2**31 - 1))
def test_sector_apply_matches_dense(seed):
    rng = np.random.default_rng(seed)
    sp = HilbertSpace(2, (7,), (2,))
    H = build_hamiltonian(GateConfig.two_qubit(), Anharmonic(0.02), sp)
    t = rng.uniform(0, 3)
    dec = H.sectors
    phi = random_state(rng, 7)
    for s in range(dec.n_sectors):
        q = dec.basis[:, np.flatnonzero(dec.labels == s)[0]]
        full = H(t) @ np.kron(q, phi)
        assert np.allclose(full, np.kron(q, H.sector_terms(s).apply(t, phi)))


@given(st.integers(0, 2**31 - 1))
def test_sparse_monomial_products(seed):
    rng = np.random.default_rng(seed)
    a, ad = ladder_ops(6, 3)
    m = ad @ np.diag(rng.normal(size=6)) @ ad
    sm = SparseMonomial.from_dense(m)
    x = rng.normal(size=(6, 6)) + 1j * rng.normal(size=(6, 6))
    out = np.zeros_like(x)
    sm.left(x, 0.7, out)
    assert np.allclose(out, 0.7 * m @ x)
    out = np.zeros_like(x)
    sm.right(x, 0.7, out)
    assert np.allclose(out, 0.7 * x @ m)
    assert SparseMonomial.from_dense(a + ad) is None
    f = motional_factor(a + ad)
    out = np.zeros_like(x)
    f.left(x, 1.0, out)
    assert np.allclose(out, (a + ad) @ x)
