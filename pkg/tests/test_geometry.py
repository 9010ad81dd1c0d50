import cmath
import math

import numpy as np
import pytest

from famed.errors import ContinuationBreakdown
from famed.geometry import (
    ShapeAssignment,
    deform_path,
    dwl_dwm,
    gluing_jacobian,
    gluing_residual,
    holonomy,
    nz_potential,
    nz_potential_at,
    solve_near,
    solve_structure,
    volume,
)
from famed.nz_data import nz_pair_for
from famed.special_fn import li2

from conftest import VOL_41


def _volume_series(z, terms=4000):
    """Independent oracle: D(z) = Im Li2(z) + arg(1-z) log|z| with Li2 from its power series on |z| = 1."""
    # on the unit circle Im Li2(e^{it}) = Clausen sum_k sin(kt)/k^2
    t = cmath.phase(z)
    k = np.arange(1, terms + 1)
    return float(np.sum(np.sin(k * t) / k ** 2)) + 1.0 / (3 * terms ** 2)


def test_complete_structure(fig8):
    cs = solve_structure(fig8)
    z = cs.shapes.z
    assert np.max(np.abs(z - cmath.exp(1j * math.pi / 3))) < 1e-12
    assert cs.residual < 1e-12
    assert abs(volume(cs.shapes) - VOL_41) < 1e-12
    assert cs.shapes.geometric_flags() == ["geometric", "geometric"]
    assert abs(2 * _volume_series(z[0]) - VOL_41) < 1e-7


def test_polynomial_identities(fig8):
    S = solve_structure(fig8).shapes
    assert S.polynomial_residual() < 1e-14
    assert np.allclose(S.z * S.zp * S.zpp, -1)


def test_holonomies_vanish(fig8):
    S = solve_structure(fig8).shapes
    assert abs(holonomy(S, fig8.meridian)) < 1e-12
    assert abs(holonomy(S, fig8.longitude)) < 1e-12


def test_jacobian_finite_difference(fig8):
    P = nz_pair_for(fig8, fig8.longitude)
    y = solve_structure(fig8, 0.05j).shapes.y + np.array([0.1, -0.05j])
    J = gluing_jacobian(P, y)
    h = 1e-6
    for k in range(2):
        e = np.zeros(2)
        e[k] = h
        fd = (gluing_residual(P, y + e, 0.05j) - gluing_residual(P, y - e, 0.05j)) / (2 * h)
        assert np.max(np.abs(fd - J[:, k])) < 1e-6


@pytest.mark.parametrize("xi", [0.05j, -0.05j, 0.1j, 0.2j])
def test_cone_structures(fig8, xi):
    cs = solve_structure(fig8, xi)
    assert cs.residual < 1e-12
    assert abs(holonomy(cs.shapes, fig8.longitude) - xi) < 1e-12
    # cone volume decreases away from the complete structure
    assert volume(cs.shapes) < VOL_41


def test_meridian_path(fig8):
    path = deform_path(fig8, "m", 0.1, steps=20)
    assert len(path) == 21
    assert np.max(path.residuals) < 1e-12
    end = path.samples[-1]
    assert abs(holonomy(end, fig8.meridian) - 0.1) < 1e-12
    again = solve_near(fig8, "m", 0.1, path.samples[-2])
    assert np.max(np.abs(again.z - end.z)) < 1e-10


def test_radius_guard(fig8):
    with pytest.raises(ContinuationBreakdown):
        deform_path(fig8, "m", 2.0)


def test_conjugate_branch(fig8):
    S = solve_structure(fig8).shapes
    C = S.conjugate()
    P = nz_pair_for(fig8, fig8.longitude)
    # logs agree modulo 2 pi i
    assert np.max(np.abs(np.exp(gluing_residual(P, C.y, 0.0)) - 1)) < 1e-12
    assert abs(volume(C) + VOL_41) < 1e-12


def test_nz_potential_derivative(fig8):
    path = deform_path(fig8, "m", 0.1, steps=4)
    tab = nz_potential(fig8, path)
    assert abs(tab.phi[0] - 1j * VOL_41) < 1e-12
    h = 1e-3
    for w, wl in zip(tab.wm[1:], tab.wl[1:]):
        f = [nz_potential_at(fig8, w + k * h) for k in (-2, -1, 1, 2)]
        d = (f[0] - 8 * f[1] + 8 * f[2] - f[3]) / (12 * h)
        assert abs(d - wl / 2) < 1e-8


def test_dwl_dwm_matches_path(fig8):
    path = deform_path(fig8, "m", 0.02, steps=2)
    wl = [holonomy(S, fig8.longitude) for S in path.samples]
    fd = (wl[2] - wl[0]) / 0.02
    assert abs(dwl_dwm(fig8, path.samples[1]) - fd) < 1e-3
    # 2 sqrt(-3) at the complete structure, up to sign
    assert abs(abs(dwl_dwm(fig8, path.samples[0])) - 2 * math.sqrt(3)) < 1e-12


def test_shape_from_y_round_trip():
    z = np.array([0.3 + 0.7j, -1.2 + 0.1j])
    assert np.allclose(ShapeAssignment.from_y(ShapeAssignment(z).y).z, z)
    assert abs(li2(0.5) - 0.5822405264650125) < 1e-15
