"""The 1-loop invariant of shapes on an ordered triangulation, and the
change-of-curve consistency check."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import MalformedInput, SingularShape
from .geometry import DeformationPath, ShapeAssignment, dwl_dwm, holonomy
from .nz_data import Flattening, build_gluing_matrices, build_nz_pair, verify_flattening
from .triangulation_core import OrderedTriangulation, PeripheralCurve

# "nz": B = G'' - G' (the convention of the gluing equations); "literal": B = G'' - G
CONVENTIONS = ("nz", "literal")


@dataclass(frozen=True)
class OneLoopValue:
    tau: complex  # one representative; -tau is equally valid
    curve: str
    flattening: Flattening
    convention: str

    @property
    def modulus(self) -> float:
        return abs(self.tau)

    def both_signs(self) -> tuple[complex, complex]:
        return (self.tau, -self.tau)


def _curve(T, curve):
    if isinstance(curve, PeripheralCurve):
        return curve, "custom"
    return (T.longitude, "l") if curve == "l" else (T.meridian, "m")


def one_loop_matrices(T: OrderedTriangulation, curve="l", convention: str = "nz"):
    cv, _ = _curve(T, curve)
    GM = build_gluing_matrices(T, cv)
    A = (GM.G - GM.Gp).to_numpy()
    if convention == "nz":
        B = build_nz_pair(GM).B.to_numpy()
    elif convention == "literal":
        B = (GM.Gpp - GM.G).to_numpy()
    else:
        raise ValueError(f"unknown convention {convention!r}")
    return A, B


def one_loop_invariant(T: OrderedTriangulation, S: ShapeAssignment, F: Flattening,
                       curve="l", convention: str = "nz") -> OneLoopValue:
    """(1/2) det(A diag(z'') + B diag(z)^-1) prod z^f'' z''^-f."""
    cv, tag = _curve(T, curve)
    if not verify_flattening(T, F, [T.longitude, T.meridian]):
        raise MalformedInput("flattening does not satisfy the strong flattening equations")
    z = np.asarray(S.z, dtype=complex)
    if np.any(np.abs(z) < 1e-14) or np.any(np.abs(z - 1) < 1e-14):
        raise SingularShape("a shape parameter is 0 or 1")
    zpp = S.zpp
    A, B = one_loop_matrices(T, cv, convention)
    M = A * zpp[None, :] + B / z[None, :]
    f, fpp = np.array(F.f), np.array(F.fpp)
    tau = 0.5 * np.linalg.det(M) * np.prod(z ** fpp * zpp ** (-f))
    return OneLoopValue(complex(tau), tag, F, convention)


def change_of_curve_check(path: DeformationPath, T: OrderedTriangulation, tau_l: OneLoopValue,
                          tau_m: OneLoopValue, index: int = 0, derivative: str = "analytic") -> float:
    """| |tau_m| - |dw_m/dw_l| |tau_l| | / |tau_m| at path sample `index`.

    dw_l/dw_m comes from the gluing Jacobians ("analytic") or from a central
    (one-sided at the ends) difference of the holonomies along the path ("path").
    """
    if tau_l.modulus == 0 or tau_m.modulus == 0:
        raise ValueError("the 1-loop invariant must be nonzero")
    if derivative == "analytic":
        d = dwl_dwm(T, path.samples[index])
    elif derivative == "path":
        d = _path_derivative(path, T, index)
    else:
        raise ValueError(f"unknown derivative {derivative!r}")
    return abs(tau_m.modulus - tau_l.modulus / abs(d)) / tau_m.modulus


def _path_derivative(path, T, i):
    wm = np.array([holonomy(S, T.meridian) for S in path.samples])
    wl = np.array([holonomy(S, T.longitude) for S in path.samples])
    n = len(wm)
    if n < 2:
        raise ValueError("need at least two path samples")
    if 0 < i < n - 1:
        return (wl[i + 1] - wl[i - 1]) / (wm[i + 1] - wm[i - 1])
    if i == 0:
        if n > 2:
            return (-3 * wl[0] + 4 * wl[1] - wl[2]) / (-3 * wm[0] + 4 * wm[1] - wm[2])
        return (wl[1] - wl[0]) / (wm[1] - wm[0])
    return (wl[-1] - wl[-2]) / (wm[-1] - wm[-2])
