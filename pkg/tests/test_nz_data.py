from fractions import Fraction

import pytest
from hypothesis import given, settings, strategies as st

from famed.errors import SymplecticViolation
from famed.exact_linalg import RationalMatrix
from famed.nz_data import (
    Flattening,
    build_gluing_matrices,
    nz_pair_for,
    omega,
    reduce_nz,
    solve_strong_flattening,
    symplectic_check,
    verify_flattening,
)
from famed.triangulation_core import PeripheralCurve


def test_fig8_nz_pair(fig8):
    P = nz_pair_for(fig8, fig8.longitude)
    assert P.A == RationalMatrix([[1, -2], [-1, -2]])
    assert P.B == RationalMatrix([[-1, -1], [1, -1]])
    assert P.nu == (-1, -1)
    GM = build_gluing_matrices(fig8)
    assert GM.N == 2


def test_fig8_symplectic(fig8):
    rep = symplectic_check(fig8, nz_pair_for(fig8, fig8.longitude))
    assert rep["row_pairings_zero"]
    assert rep["meridian_edge_pairings"] == [0, 0]
    assert abs(rep["omega_m_l"]) == 2


def test_symplectic_rejects_bad_meridian(fig8):
    bad = PeripheralCurve((1, 0), (0, 0), (0, 0))
    with pytest.raises(SymplecticViolation):
        symplectic_check(fig8, nz_pair_for(fig8, fig8.longitude), bad)


def test_reduce_nz_fig8(fig8):
    from famed.face_kernel import build_face_matrices, reduce_kernel

    G = reduce_kernel(build_face_matrices(fig8)).G
    R = reduce_nz(nz_pair_for(fig8, fig8.longitude), G)
    assert R.d == 2 and R.pivots == (0, 1)
    assert R.EB_top == RationalMatrix.identity(2)
    assert R.Etilde is not None and R.Etilde.ncols == 0
    assert R.Eprime == RationalMatrix([[Fraction(-1, 2), Fraction(1, 2)], [Fraction(-1, 2), Fraction(-1, 2)]])


def test_strong_flattening_exact(fig8):
    F = solve_strong_flattening(fig8, 1)
    assert verify_flattening(fig8, F, [fig8.longitude, fig8.meridian])
    assert all(a + b + c == 1 for a, b, c in zip(F.f, F.fp, F.fpp))
    broken = Flattening((F.f[0] + 1,) + F.f[1:], F.fp, F.fpp)
    assert not verify_flattening(fig8, broken, [fig8.longitude, fig8.meridian])


def test_many_flattenings(fig8):
    Fs = solve_strong_flattening(fig8, 6)
    assert len({F.as_vector().__repr__() for F in Fs}) == len(Fs)
    for F in Fs:
        assert verify_flattening(fig8, F, [fig8.longitude, fig8.meridian])


vecs = st.lists(st.integers(-5, 5), min_size=4, max_size=4)


@settings(max_examples=300, deadline=None)
@given(vecs, vecs, vecs, st.integers(-3, 3))
def test_omega_bilinear_antisymmetric(r, s, t, c):
    assert omega(r, s) == -omega(s, r)
    assert omega(r, r) == 0
    rs = [a + c * b for a, b in zip(s, t)]
    assert omega(r, rs) == omega(r, s) + c * omega(r, t)


@settings(max_examples=200, deadline=None)
@given(st.lists(st.integers(-2, 2), min_size=2, max_size=2), st.lists(st.integers(-2, 2), min_size=2, max_size=2))
def test_edge_row_combinations_stay_isotropic(fig8, a, b):
    """Any combination of edge rows pairs to zero with any other."""
    from famed.nz_data import _edge_rows_ab

    E = _edge_rows_ab(fig8)
    u = [a[0] * x + a[1] * y for x, y in zip(E[0], E[1])]
    v = [b[0] * x + b[1] * y for x, y in zip(E[0], E[1])]
    assert omega(u, v) == 0
