import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from scipy.linalg import expm

from gatebudget import analytic as an
from gatebudget.errors import InvalidArgumentError
from gatebudget.quantum import DOWN, PAULI, UP

from conftest import DD, MINUS, MIXED_1Q, PLUS

pos = st.floats(1e-6, 1.0)
occ = st.integers(0, 200)
lam = st.floats(0.0, 4.0)

# Frozen oracle values. Numeric ones come from propagation at the stated
# point (see test_harness for the live comparison).
HEATING_1E3 = math.pi * 1e-3 * 2 / 8
STATIC_SHIFT_005 = math.pi**2 * 0.0025 / 64 * 3
CROSS_KERR_NUMERIC_1_1 = 8.007757623170741e-4


def test_spin_variances_of_reference_states():
    assert an.SpinVariances.from_state(DOWN).lam_sigma == pytest.approx(1.0)
    assert an.SpinVariances.from_state(MIXED_1Q).lam_sigma == pytest.approx(0.25)
    v = an.SpinVariances.from_state(DD)
    assert (v.lam_S, v.lam_S2) == pytest.approx((2.0, 4.0))
    for psi in (PLUS, MINUS):
        v = an.SpinVariances.from_state(psi)
        assert v.lam_S >= 0 and v.lam_S2 >= 0


def test_eigenstate_has_zero_variance():
    plus_x = (UP + DOWN) / math.sqrt(2)
    assert an.SpinVariances.from_state(plus_x).lam_sigma == 0.0
    v = an.SpinVariances.from_state(np.kron(plus_x, plus_x))
    assert v.lam_S == 0.0 and v.lam_S2 == 0.0


def test_inhomo1_values():
    assert an.infid_1q_inhomo1(0.0, 20, 3, 1) == 0
    assert an.infid_1q_inhomo1(0.1, 20, 3, 0) == 0
    assert an.infid_1q_inhomo1(0.2, 20, 0, 1) == pytest.approx(2e-4)
    # instantaneous form with sin² = 1/2 reproduces the averaged one
    t = math.pi / 2 / 20
    assert an.infid_1q_inhomo1(0.2, 20, 0, 1, False, t) == pytest.approx(2e-4)


def test_inhomo2_values():
    assert an.infid_1q_inhomo2(0.0, 1, 5, 25, 1) == 0
    assert an.infid_1q_inhomo2(1e-2, 1.0, 100, 100**2, 1) == pytest.approx(4.0401)
    n = 7
    assert an.infid_1q_inhomo2(0.01, 2.0, n, n * n, 0.5) == pytest.approx(1e-4 * 4 * (2 * n + 1) ** 2 * 0.5)


def test_crosskerr_values():
    assert an.infid_1q_crosskerr(0.1, 10, 0, 0, 1) == 0
    assert an.infid_1q_crosskerr(0.0, 10, 1, 1, 1) == 0
    val = an.infid_1q_crosskerr(0.1, 10, 1, 1, 1)
    assert val == pytest.approx(8e-4)
    assert val == pytest.approx(CROSS_KERR_NUMERIC_1_1, rel=0.01)


def test_static_shift_values():
    assert an.infid_2q_static_shift(0.0, 1, 1, 0, 2, 4) == 0
    assert an.infid_2q_static_shift(0.05, 1, 1, 0, 2, 4) == pytest.approx(STATIC_SHIFT_005)
    assert STATIC_SHIFT_005 == pytest.approx(1.157e-3, rel=1e-3)
    # many loops remove the phase term and leave the displacement term alone
    big = an.infid_2q_static_shift(0.05, 1, 10**9, 3, 2, 4)
    disp = math.pi**2 * 0.0025 / 64 * 7 * 2
    assert big == pytest.approx(disp, rel=1e-8)


def test_anharmonic_ground_state_brackets():
    pre = 9 * math.pi**2 * 1e-6 / 16
    ls, ls2 = 0.7, 1.3
    want = pre * (ls * (4 + 6 + 9 / 4) + ls2 * (9 / 8 + 3 / 4 + 9 / 64))
    assert an.infid_2q_anharmonic(1e-3, 1, 1, 0, 0, 0, ls, ls2) == pytest.approx(want)


def test_grad_inhomo_ground_state_brackets():
    pre = 9 * math.pi**2 * 1e-6 / 16
    ls, ls2 = 0.7, 1.3
    want = pre * (ls2 * (1 + 3 / 2 + 9 / 16) + 4 * ls)
    assert an.infid_2q_grad_inhomo(1e-3, 1, 1, 0, 0, ls, ls2) == pytest.approx(want)


def test_heating_value_and_temperature_independence():
    assert an.infid_2q_heating(0.0, 1, 1, 2) == 0
    assert an.infid_2q_heating(1e-3, 1, 1, 2) == pytest.approx(HEATING_1E3)
    assert HEATING_1E3 == pytest.approx(7.854e-4, rel=1e-4)


def test_dephasing_scaling_with_n():
    ls, ls2 = 2.0, 4.0
    r = an.infid_2q_dephasing(1e-3, 1, 1, 50, ls, ls2) / an.infid_2q_dephasing(1e-3, 1, 1, 0, ls, ls2)
    assert r == pytest.approx((101 * ls + 3 * ls2 / 16) / (ls + 3 * ls2 / 16))
    assert an.infid_2q_dephasing(0.0, 1, 1, 5, ls, ls2) == 0


def test_qubit_shift_values():
    assert an.infid_1q_qubit_shift(0.0, 1, 0.3) == 0
    assert an.infid_1q_qubit_shift(0.3, 1, math.pi) == pytest.approx(0, abs=1e-30)
    assert an.infid_1q_qubit_shift(0.05, 1, math.pi / 2) == pytest.approx(0.0025)


def test_qubit_shift_against_exact_rotation():
    d, t = 0.05, math.pi / 2
    u = expm(-1j * t * (PAULI["x"] + d * PAULI["z"]))
    ui = expm(-1j * t * PAULI["x"])
    exact = 1 - abs(np.vdot(ui @ DOWN, u @ DOWN)) ** 2
    assert abs(exact - an.infid_1q_qubit_shift(d, 1, t)) < 5 * d**4


@given(st.floats(0.001, 0.1), st.floats(0, math.pi), st.integers(0, 2**31 - 1))
def test_qubit_shift_general_state(d, t, seed):
    rng = np.random.default_rng(seed)
    psi = rng.normal(size=2) + 1j * rng.normal(size=2)
    psi /= np.linalg.norm(psi)
    bloch = [np.vdot(psi, PAULI[a] @ psi).real for a in "xyz"]
    u = expm(-1j * t * (PAULI["x"] + d * PAULI["z"]))
    ui = expm(-1j * t * PAULI["x"])
    exact = 1 - abs(np.vdot(ui @ psi, u @ psi)) ** 2
    # states off the y-z great circle pick up a third-order term
    assert abs(exact - an.infid_1q_qubit_shift_state(d, 1, t, bloch)) < 2 * d**3


def test_qubit_shift_state_matches_named_forms():
    for t in np.linspace(0, math.pi, 9):
        g = an.infid_1q_qubit_shift_state(0.05, 1, t, (0, 0, -1))
        assert g == pytest.approx(an.infid_1q_qubit_shift(0.05, 1, t), abs=1e-15)


def test_walsh_k0_reduces_to_static_shift():
    for d, n, ls, ls2 in [(0.05, 0, 2, 4), (0.01, 30, 0.5, 1.2), (0.2, 3, 1, 0)]:
        assert an.infid_2q_walsh(d, 1, 0, n, ls, ls2) == pytest.approx(an.infid_2q_static_shift(d, 1, 1, n, ls, ls2), rel=1e-14)
    assert an.infid_2q_walsh(0.0, 1, 2, 3, 2, 4) == 0


def test_walsh_displacement_term_order():
    # the residual-displacement part scales as δ^(2k+2)
    for k in (1, 2):
        f = lambda d: an.infid_2q_walsh(d, 1, k, 5, 2, 0)
        assert f(0.02) / f(0.01) == pytest.approx(2 ** (2 * k + 2))


@given(pos, occ, lam, lam)
def test_coherent_formulas_quadratic(x, n, ls, ls2):
    for f in (
        lambda s: an.infid_1q_inhomo1(s, 20, n, ls),
        lambda s: an.infid_1q_inhomo2(s, 1.0, n, n * n, ls),
        lambda s: an.infid_1q_crosskerr(s, 10, n, n, ls),
        lambda s: an.infid_2q_static_shift(s, 1, 2, n, ls, ls2),
        lambda s: an.infid_2q_anharmonic(s, 1, 2, n, n**2, n**3, ls, ls2),
        lambda s: an.infid_2q_grad_inhomo(s, 1, 2, n, n**2, ls, ls2),
    ):
        assert f(2 * x) == pytest.approx(4 * f(x), rel=1e-12, abs=1e-300)
        assert f(x) >= 0


@given(pos, occ, lam, lam, st.integers(1, 8))
def test_markovian_formulas_linear(x, n, ls, ls2, N):
    assert an.infid_2q_heating(2 * x, 1, N, ls) == pytest.approx(2 * an.infid_2q_heating(x, 1, N, ls))
    f = lambda s: an.infid_2q_dephasing(s, 1, N, n, ls, ls2)
    assert f(2 * x) == pytest.approx(2 * f(x), rel=1e-12, abs=1e-300)


@given(occ, lam, lam)
def test_more_loops_never_hurt_static_shift(n, ls, ls2):
    vals = [an.infid_2q_static_shift(0.01, 1, N, n, ls, ls2) for N in (1, 2, 4, 8)]
    assert all(b <= a + 1e-18 for a, b in zip(vals, vals[1:]))


def test_argument_validation():
    with pytest.raises(InvalidArgumentError):
        an.infid_1q_inhomo1(0.1, 0.0, 0, 1)
    with pytest.raises(InvalidArgumentError):
        an.infid_1q_inhomo1(0.1, 20, 0, 1, time_averaged=False)
    with pytest.raises(InvalidArgumentError):
        an.infid_2q_heating(0.1, 1, 0, 1)
    with pytest.raises(InvalidArgumentError):
        an.infid_2q_walsh(0.1, 1, 1.5, 0, 1, 1)
    with pytest.raises(InvalidArgumentError):
        an.infid_1q_qubit_shift(0.1, 1, 0.2, state="excited")
    with pytest.raises(InvalidArgumentError):
        an.SpinVariances(lam_S=-1.0)


def test_perturbative_flag():
    assert an.outside_perturbative(0.06)
    assert not an.outside_perturbative(0.05)
