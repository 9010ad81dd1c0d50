import numpy as np
import pytest

from famed.errors import MalformedInput
from famed.geometry import deform_path, solve_structure
from famed.nz_data import Flattening, solve_strong_flattening
from famed.one_loop import change_of_curve_check, one_loop_invariant


def test_tau_fig8(fig8):
    S = solve_structure(fig8).shapes
    F = solve_strong_flattening(fig8, 1)
    tm = one_loop_invariant(fig8, S, F, "m")
    # the adjoint torsion of 4_1 at the complete structure is -sqrt(-3)/2 up to sign
    assert abs(tm.modulus - np.sqrt(3) / 2) < 1e-12
    assert tm.both_signs()[0] == -tm.both_signs()[1]


def test_tau_independent_of_flattening(fig8):
    S = solve_structure(fig8).shapes
    mods = [one_loop_invariant(fig8, S, F, "m").modulus for F in solve_strong_flattening(fig8, 5)]
    assert max(mods) - min(mods) < 1e-12


def test_conventions_reported(fig8):
    S = solve_structure(fig8).shapes
    F = solve_strong_flattening(fig8, 1)
    nz = one_loop_invariant(fig8, S, F, "m", "nz")
    lit = one_loop_invariant(fig8, S, F, "m", "literal")
    assert nz.convention == "nz" and lit.convention == "literal"
    # same modulus on 4_1, different phase
    assert abs(nz.modulus - lit.modulus) < 1e-12
    assert abs(nz.tau - lit.tau) > 1e-3


def test_bad_flattening(fig8):
    S = solve_structure(fig8).shapes
    with pytest.raises(MalformedInput):
        one_loop_invariant(fig8, S, Flattening((1, 1), (0, 0), (0, 0)))


def test_change_of_curve(fig8):
    path = deform_path(fig8, "m", 0.1, steps=20)
    F = solve_strong_flattening(fig8, 1)
    worst = 0.0
    for i, S in enumerate(path.samples):
        tl, tm = one_loop_invariant(fig8, S, F, "l"), one_loop_invariant(fig8, S, F, "m")
        worst = max(worst, change_of_curve_check(path, fig8, tl, tm, i))
    assert worst < 1e-10
    # the path difference is second order in the step
    S = path.samples[5]
    r = change_of_curve_check(path, fig8, one_loop_invariant(fig8, S, F, "l"),
                              one_loop_invariant(fig8, S, F, "m"), 5, derivative="path")
    assert r < 1e-3
