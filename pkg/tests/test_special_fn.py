import math

import mpmath as mp
import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from famed import _kernels
from famed.errors import OnBranchCut, PoleProximity, TooCloseToCut
from famed.special_fn import (
    QuantumParams,
    bloch_wigner,
    cont_L,
    cont_L_prime,
    cont_L_second,
    cut_distance,
    faddeev_phi_b,
    li2,
    log_faddeev,
    mod_2pi_i,
    phi_semiclassical_residual,
    phi_semiclassical_residual_hbar,
)

PI = math.pi
rng = np.random.default_rng(20261017)


def _off_cut(n, lo=-4, hi=4, delta=0.05):
    pts = []
    while len(pts) < n:
        y = complex(rng.uniform(lo, hi), rng.uniform(-3 * PI, 3 * PI))
        if cut_distance(y) > delta and abs(y.real) > delta:
            pts.append(y)
    return np.array(pts)


def test_li2_against_mpmath():
    zs = [0.3 + 0.1j, -2.5 + 0.7j, 5 - 3j, 0.99j, -10.0, 1.0, 0.5, 3 + 1e-3j, -0.7 - 0.7j]
    for z in zs:
        assert abs(li2(z) - complex(mp.polylog(2, z))) < 1e-13
    assert abs(li2(1.0) - PI ** 2 / 6) < 1e-15


def test_li2_cut():
    with pytest.raises(OnBranchCut):
        li2(2.0)


def test_li2_inversion_grid():
    zs = np.array([complex(r * math.cos(t), r * math.sin(t))
                   for r in np.linspace(0.2, 5, 10) for t in np.linspace(0.1, 2 * PI - 0.1, 12)])
    lhs = li2(1 / zs)
    rhs = -li2(zs) - PI ** 2 / 6 - 0.5 * np.log(-zs) ** 2
    assert zs.size >= 100
    assert np.max(np.abs(lhs - rhs)) < 1e-12


def test_L_matches_li2_in_strip():
    y = np.array([complex(a, b) for a in np.linspace(-3, 3, 11) for b in np.linspace(-3, 3, 11)])
    assert np.max(np.abs(cont_L(y) - li2(-np.exp(y)))) < 1e-12


def test_L_functional_equation_grid():
    y = _off_cut(120)
    y = y[y.real > 0]
    left = cont_L(y + 2j * PI)
    right = cont_L(y) - 2j * PI * (y + 1j * PI)
    assert np.max(np.abs(left - right)) < 1e-10
    # left half plane: plain periodicity
    z = -np.abs(_off_cut(100).real) + 1j * _off_cut(100).imag
    assert np.max(np.abs(cont_L(z + 2j * PI) - cont_L(z))) < 1e-10


def test_L_derivatives_finite_difference():
    y = _off_cut(50, delta=0.2)
    h = 1e-5
    fd = (cont_L(y + h) - cont_L(y - h)) / (2 * h)
    assert np.max(np.abs(fd - cont_L_prime(y))) < 1e-6
    fd2 = (cont_L_prime(y + h) - cont_L_prime(y - h)) / (2 * h)
    assert np.max(np.abs(fd2 - cont_L_second(y))) < 1e-6


def test_L_near_cut_raises():
    with pytest.raises(TooCloseToCut):
        cont_L(1e-4 + 4j)


def test_bloch_wigner_identity_grid():
    y = _off_cut(150)
    lhs = cont_L(y).imag - cont_L_prime(y).imag * np.log(np.abs(-np.exp(y)))
    assert np.max(np.abs(lhs - bloch_wigner(-np.exp(y)))) < 1e-10


def test_bloch_wigner_values():
    z = np.exp(1j * PI / 3)
    assert abs(bloch_wigner(z) - 1.0149416064096536) < 1e-13
    assert bloch_wigner(0.5) == 0.0
    # five-fold symmetry of D under z -> 1/(1-z) -> (z-1)/z
    zz = 0.3 + 0.8j
    assert abs(bloch_wigner(zz) - bloch_wigner(1 / (1 - zz))) < 1e-13
    assert abs(bloch_wigner(zz) - bloch_wigner((zz - 1) / zz)) < 1e-13


def test_bloch_wigner_mpmath():
    for z in (0.2 + 0.9j, -1.5 + 0.3j, 2 + 2j):
        ref = mp.im(mp.polylog(2, z)) + mp.arg(1 - z) * mp.log(abs(z))
        assert abs(bloch_wigner(z) - float(ref)) < 1e-13


# -- Phi_b ------------------------------------------------------------------------

def _phi_b_mpmath(z, b):
    """The defining integral on the line Im w = eps (no residues crossed for eps small)."""
    eps = min(b, 1 / b) * 0.4

    def f(t):
        w = t + 1j * eps
        return mp.exp(-2j * z * w) / (mp.sinh(b * w) * mp.sinh(w / b) * w)

    val = mp.quad(f, [-mp.inf, -5, 0, 5, mp.inf])
    return complex(mp.exp(val / 4))


@pytest.mark.parametrize("z", [0.1 + 0.05j, -0.3 + 0.2j, 0.4 - 0.1j])
def test_phi_b_integral_oracle(z):
    mp.mp.dps = 20
    b = 0.8
    assert abs(faddeev_phi_b(z, b) - _phi_b_mpmath(z, b)) < 1e-7


def test_phi_1_closed_form():
    # b = 1: Phi_1(z) = exp(i/2pi (Li2(e^{2 pi z}) + 2 pi z log(1 - e^{2 pi z})))
    for z in (0.1 + 0.2j, -0.3 + 0.1j, 0.05 - 0.3j, -0.2 - 0.15j):
        u = mp.exp(2 * mp.pi * z)
        ref = mp.exp(1j / (2 * mp.pi) * (mp.polylog(2, u) + 2 * mp.pi * z * mp.log(1 - u)))
        assert abs(faddeev_phi_b(z, 1.0) - complex(ref)) < 1e-9


def _strip_grid(b, n=120):
    q = QuantumParams.from_b(b)
    half = q.c_b * 0.8
    return np.array([complex(rng.uniform(-3, 3), rng.uniform(-half, half)) for _ in range(n)])


@pytest.mark.parametrize("b", [0.5, 0.8, 1.0])
def test_phi_b_inversion(b):
    z = _strip_grid(b)
    lhs = log_faddeev(z, b) + log_faddeev(-z, b)
    rhs = 1j * PI / 12 * (b * b + 1 / b ** 2) + 1j * PI * z * z
    assert np.max(np.abs(mod_2pi_i(lhs - rhs))) < 1e-9


@pytest.mark.parametrize("b", [0.5, 0.8, 1.0])
def test_phi_b_unitarity(b):
    z = _strip_grid(b)
    val = faddeev_phi_b(z, b)
    assert np.max(np.abs(np.conj(val) * faddeev_phi_b(np.conj(z), b) - 1)) < 1e-9


@pytest.mark.parametrize("b", [0.6, 1.0])
def test_phi_b_functional_equation(b):
    z = _strip_grid(b, 100) * 0.5
    for beta in (b, 1 / b):
        lhs = log_faddeev(z - 0.5j * beta, b)
        rhs = np.log(1 + np.exp(2 * PI * beta * z)) + log_faddeev(z + 0.5j * beta, b)
        assert np.max(np.abs(mod_2pi_i(lhs - rhs))) < 1e-9


def test_phi_b_asymptotics():
    b = 0.7
    assert abs(faddeev_phi_b(-12 + 0.1j, b) - 1) < 1e-8
    z = 12 + 0.1j
    ratio = faddeev_phi_b(z, b) / np.exp(1j * PI / 12 * (b * b + b ** -2) + 1j * PI * z * z)
    assert abs(ratio - 1) < 1e-8


def test_phi_b_b_inverse_symmetry():
    z = _strip_grid(0.6, 30) * 0.5
    assert np.max(np.abs(mod_2pi_i(log_faddeev(z, 0.6) - log_faddeev(z, 1 / 0.6)))) < 1e-12


def test_phi_b_pole():
    q = QuantumParams.from_b(0.8)
    with pytest.raises(PoleProximity):
        log_faddeev(1j * q.c_b + 1e-13, 0.8)


def test_quantum_params():
    q = QuantumParams.from_hbar(1 / 8)
    assert abs((q.b + 1 / q.b) ** -2 - 1 / 8) < 1e-15
    with pytest.raises(ValueError):
        QuantumParams.from_hbar(0.5)


@pytest.mark.skipif(not _kernels.USE_NUMBA, reason="FAMED_NO_NUMBA set")
def test_backends_agree():
    z = _strip_grid(0.6, 60)
    assert np.max(np.abs(log_faddeev(z, 0.6, "numpy") - log_faddeev(z, 0.6, "numba"))) < 1e-12


def test_semiclassical_scaling():
    y = np.array([0.3 + 0.5j, -1.2 + 2.0j, 1.5 - 2.5j, -0.7 - 1.1j, 2.0 + 0.3j])
    r = [phi_semiclassical_residual(y, b) / b ** 2 for b in (0.2, 0.1, 0.05)]
    assert np.all(r[0] / r[2] < 2) and np.all(r[2] / r[0] < 2)


def test_semiclassical_hbar_form():
    y = np.array([0.3 + 0.5j, -1.2 + 2.0j, 1.5 - 2.5j])
    r = [np.max(phi_semiclassical_residual_hbar(y, h)) for h in (1 / 16, 1 / 64)]
    assert r[1] < r[0]


@settings(max_examples=100, deadline=None)
@given(st.floats(-20, 20), st.floats(-20, 20))
def test_mod_2pi_i_representative(a, b):
    m = mod_2pi_i(complex(a, b))
    assert -PI < m.imag <= PI + 1e-12
    k = (b - m.imag) / (2 * PI)
    assert abs(k - round(k)) < 1e-9 and m.real == a
