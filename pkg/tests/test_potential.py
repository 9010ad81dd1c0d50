from fractions import Fraction

import numpy as np
import pytest

from famed.errors import BandViolation, CutProximity
from famed.geometry import dwl_dwm, holonomy, solve_near, solve_structure, volume
from famed.nz_data import solve_strong_flattening
from famed.potential import (
    R_factor,
    W_exact,
    W_identity_residual,
    concavity_scan,
    critical_point,
    critical_value_identity,
    eval_J,
    eval_S,
    fiber_critical_point,
    gradient_closed_form,
    h_factor,
    hessian_jones_residual,
    hessian_one_loop_check,
    j_coordinates,
    w_of_x,
    x_of_wx,
)
from famed.triangulation_core import AngleStructure, in_angle_space

from conftest import VOL_41

XIS = [0.0, 0.05j, -0.05j, 0.1j, -0.1j]


def test_context_fig8(ctx):
    assert ctx.d == 2 and ctx.pivots == (0, 1)
    assert np.allclose(ctx.EB, np.eye(2))
    assert np.allclose(ctx.G, np.diag([-1, 2]))
    assert np.allclose(ctx.C, [-1, 1])
    assert ctx.C0 == 0
    assert ctx.exact["famed_lm"]


@pytest.mark.parametrize("xi", XIS)
def test_critical_points(ctx, fig8, xi):
    S = solve_structure(fig8, xi).shapes
    x = critical_point(ctx, S)
    v = eval_S(ctx, x, xi)
    assert np.max(np.abs(v.gradient)) < 1e-10
    assert np.max(np.abs(gradient_closed_form(ctx, S, xi))) < 1e-10
    if xi.real == 0:
        assert abs(v.value.real + volume(S)) < 1e-9


def test_gradient_and_hessian_finite_difference(ctx):
    x = np.array([0.2 + 0.1j, -0.3 + 0.05j])
    v = eval_S(ctx, x, 0.03j)
    h = 1e-6
    for k in range(2):
        e = np.zeros(2)
        e[k] = h
        fd = (eval_S(ctx, x + e, 0.03j).value - eval_S(ctx, x - e, 0.03j).value) / (2 * h)
        assert abs(fd - v.gradient[k]) < 1e-8
        fdg = (eval_S(ctx, x + e, 0.03j).gradient - eval_S(ctx, x - e, 0.03j).gradient) / (2 * h)
        assert np.max(np.abs(fdg - v.hessian[:, k])) < 1e-7


def test_W_identity_exact(ctx):
    for rows in ([[Fraction(1, 3)] * 3] * 2,
                 [[Fraction(1, 2), Fraction(1, 4), Fraction(1, 4)]] * 2):
        alpha = AngleStructure.from_pi_fractions(rows)
        assert in_angle_space(ctx.T, alpha)
        assert W_identity_residual(ctx, alpha) == [0, 0]
        assert all(isinstance(v, Fraction) for v in W_exact(ctx, alpha))


def test_critical_value_identity_off_critical(ctx):
    rng = np.random.default_rng(3)
    for _ in range(20):
        x = rng.uniform(-1, 1, 2) + 1j * rng.uniform(-0.3, 0.3, 2)
        assert abs(critical_value_identity(ctx, x, 0.04)) < 1e-10


def test_hessian_one_loop(ctx, fig8):
    chk = hessian_one_loop_check(ctx, solve_strong_flattening(fig8, 1), xis=(0, 0.05j, -0.05j, 0.1j))
    assert chk.nondegenerate
    assert chk.spread < 1e-6
    assert abs(abs(chk.det_hess[0]) - 3.0) < 1e-12


def test_hessian_jones(ctx):
    assert hessian_jones_residual(ctx, 0.05) < 1e-5


def test_concavity(ctx):
    rep = concavity_scan(ctx, ctx.v_of(ctx.alpha0), radius=2, n=9)
    assert rep.strict and rep.concave
    assert rep.max_diagonal < 0
    with pytest.raises(BandViolation):
        concavity_scan(ctx, np.array([3.0, 3.0]))


def test_cut_proximity(ctx):
    # y = phi(x) lands on the cut i[pi, inf) when Im x puts Im y above pi
    x = ctx.x_of_y(np.array([0.0 + 4j, 0.0 + 4j]))
    with pytest.raises(CutProximity):
        eval_S(ctx, x)


def test_j_coordinates_round_trip(ctx):
    jc = j_coordinates(ctx)
    x = np.array([0.3 + 0.1j, -0.2 + 0.4j])
    w = w_of_x(ctx, x)
    xhat = x[list(jc.others)]
    assert np.allclose(x_of_wx(ctx, w, xhat), x)


def test_fiber_critical_point(ctx, fig8):
    base = solve_structure(fig8, 0.0, "m").shapes
    S = solve_near(fig8, "m", 0.05, base)
    xc = critical_point(ctx, S)
    jc = j_coordinates(ctx)
    xh = fiber_critical_point(ctx, w_of_x(ctx, xc), xc[list(jc.others)] + 0.05)
    assert np.allclose(xh, xc[list(jc.others)], atol=1e-10)
    assert abs(eval_J(ctx, 0.0, [critical_point(ctx, base)[1]]).value.real + VOL_41) < 1e-9


def test_J_gradient_is_half_longitude(ctx, fig8):
    base = solve_structure(fig8, 0.0, "m").shapes
    S = solve_near(fig8, "m", 0.04, base)
    x = critical_point(ctx, S)
    jc = j_coordinates(ctx)
    g = eval_J(ctx, w_of_x(ctx, x), x[list(jc.others)]).gradient
    # dJ/dw at the fiber critical point is proportional to the longitude holonomy
    wl = holonomy(S, fig8.longitude)
    assert abs(g[0]) > 0 and abs(abs(g[0]) - abs(wl) / 2) < 1e-9


def test_h_and_R(fig8):
    S = solve_structure(fig8).shapes
    F = solve_strong_flattening(fig8, 1)
    assert np.isfinite(abs(h_factor(S.y)))
    assert abs(R_factor(S, F)) > 0
    assert abs(dwl_dwm(fig8, S)) > 0
