"""Potential functions of the partition integral.

With y = phi(x) = (EB)_top^T x - i(pi - a0),

    S~(x; xi) = -(i/2) y^T Q y - (i/2) sum((eps-1)/2) y_k^2 + i sum L(y_k)
                - x^T (E'_top (nu - i u~) - (EB)_top G pi),      u~ = (0, ..., xi)

and S(x; lam) = S~(x; i lam). J is S~(.; 0) written in the coordinates
(w, x-hat) where w = sum C_k x_k - C is the meridian holonomy.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from fractions import Fraction

import numpy as np

from .errors import BandViolation, CutProximity, DegeneratePivot, NoConvergence, NotFamed, TooCloseToCut
from .famed_check import check_all
from .geometry import ShapeAssignment, dwl_dwm
from .nz_data import Flattening, nz_pair_for
from .one_loop import one_loop_invariant
from .special_fn import DEFAULT_DELTA, bloch_wigner, cont_L, cont_L_prime, li2
from .triangulation_core import (
    AngleStructure,
    OrderedTriangulation,
    angle_of_shape,
    angular_holonomy,
    shape_angles,
)

PI = np.pi


def _f(M) -> np.ndarray:
    return np.array(M.to_numpy(), dtype=float)


@dataclass(frozen=True)
class PotentialContext:
    T: OrderedTriangulation
    Q: np.ndarray
    G: np.ndarray  # script G = Q + (E + Id)/2
    EB: np.ndarray  # (EB)_top, d x N
    Ep: np.ndarray  # E'_top, d x N
    nu: np.ndarray  # radians
    eps: np.ndarray
    pivots: tuple[int, ...]
    alpha0: AngleStructure
    a0: np.ndarray  # angle paired with z
    app0: np.ndarray  # angle paired with z''
    C: np.ndarray | None  # meridian coefficients, -2 x last column of E'_top
    C0: complex  # the constant -i mu(alpha0)
    meridian_sign: int  # -1 when the stored meridian had to be reversed
    exact: dict

    @property
    def N(self) -> int:
        return self.Q.shape[0]

    @property
    def d(self) -> int:
        return self.EB.shape[0]

    @property
    def offset(self) -> np.ndarray:
        return -1j * (PI - self.a0)

    def phi(self, x) -> np.ndarray:
        x = np.asarray(x, dtype=complex)
        return x @ self.EB + self.offset

    def x_of_y(self, y) -> np.ndarray:
        """Inverse of phi on its image (reads the pivot coordinates)."""
        y = np.asarray(y, dtype=complex)
        return y[..., list(self.pivots)] - self.offset[list(self.pivots)]

    def v_of(self, alpha: AngleStructure) -> np.ndarray:
        a = shape_angles(self.T, alpha)[:, 0]
        return (a - self.a0)[list(self.pivots)]

    def linear_term(self, xi: complex = 0.0) -> np.ndarray:
        """E'_top (nu - i u~) - (EB)_top G pi."""
        u = np.zeros(self.N, dtype=complex)
        u[-1] = xi
        return self.Ep @ (self.nu - 1j * u) - self.EB @ self.G @ np.full(self.N, PI)

    def lam(self, alpha: AngleStructure) -> float:
        return angular_holonomy(self.T, alpha, self.T.longitude)

    def mu(self, alpha: AngleStructure) -> float:
        return self.meridian_sign * angular_holonomy(self.T, alpha, self.T.meridian)


def build_context(T: OrderedTriangulation, alpha0: AngleStructure | None = None) -> PotentialContext:
    cert, ctx = check_all(T)
    if not cert.famed_l:
        raise NotFamed("the triangulation is not generalized FAMED with respect to l")
    R, K = ctx["nz_reduction"], ctx["kernel"]
    if alpha0 is None:
        alpha0 = ctx["angles"].structure
    sa = shape_angles(T, alpha0)
    P = nz_pair_for(T, T.longitude)
    if R.d == 0:
        raise NotFamed("(EB) has rank 0; the potential has no variables")
    C = None
    sign = -1 if cert.witnesses.get("meridian_flipped") else 1
    if R.Eprime is not None:
        C = -2.0 * _f(R.Eprime_top)[:, -1]
    mu0 = sign * angular_holonomy(T, alpha0, T.meridian)
    exact = {"EB_top": R.EB_top, "Ep_top": R.Eprime_top, "G": K.G, "Q": K.Q, "famed_lm": cert.famed_lm,
             "det_E": R.E.det(), "det_E1E2": K.det_E1E2}
    return PotentialContext(
        T=T, Q=_f(K.Q), G=_f(K.G), EB=_f(R.EB_top), Ep=_f(R.Eprime_top),
        nu=PI * np.array(P.nu, dtype=float), eps=np.array(T.signs, dtype=float),
        pivots=tuple(R.pivots), alpha0=alpha0, a0=sa[:, 0], app0=sa[:, 2],
        C=C, C0=-1j * mu0, meridian_sign=sign, exact=exact,
    )


@dataclass(frozen=True)
class PotentialValue:
    value: complex
    gradient: np.ndarray
    hessian: np.ndarray
    y: np.ndarray


def _L(y, delta):
    try:
        return cont_L(y, delta), cont_L_prime(y, delta)
    except TooCloseToCut as exc:
        raise CutProximity(str(exc)) from exc


def eval_S(ctx: PotentialContext, x, xi: complex = 0.0, delta: float | None = DEFAULT_DELTA) -> PotentialValue:
    """S~(x; xi) with closed-form gradient and Hessian."""
    x = np.asarray(x, dtype=complex)
    y = ctx.phi(x)
    L, Lp = _L(y, delta)
    M = ctx.Q + np.diag((ctx.eps - 1) / 2)
    K = ctx.linear_term(xi)
    val = -0.5j * y @ M @ y + 1j * np.sum(L) - x @ K
    grad = ctx.EB @ (-1j * (M @ y) + 1j * Lp) - K
    hess = -1j * ctx.EB @ (ctx.G - np.diag(1.0 / (1.0 + np.exp(y)))) @ ctx.EB.T
    return PotentialValue(complex(val), grad, hess, y)


def eval_S_lambda(ctx: PotentialContext, x, lam: float, delta: float | None = DEFAULT_DELTA) -> PotentialValue:
    """S(x; lam) = S~(x; i lam)."""
    return eval_S(ctx, x, 1j * lam, delta)


def gradient_closed_form(ctx: PotentialContext, S: ShapeAssignment, xi: complex = 0.0) -> np.ndarray:
    """-i[(EB) G Log z + (EB) Log z''] - E'(nu - i u~) evaluated on shapes."""
    logz, logzpp = np.log(S.z), np.log(S.zpp)
    u = np.zeros(ctx.N, dtype=complex)
    u[-1] = xi
    return -1j * (ctx.EB @ ctx.G @ logz + ctx.EB @ logzpp) - ctx.Ep @ (ctx.nu - 1j * u)


def critical_point(ctx: PotentialContext, S: ShapeAssignment) -> np.ndarray:
    return ctx.x_of_y(S.y)


# -- W(alpha) ---------------------------------------------------------------------

def W_exact(ctx: PotentialContext, alpha: AngleStructure) -> list[Fraction]:
    """W(alpha) / pi = G (1 - a) - a'' in exact arithmetic (angles in units of pi)."""
    if alpha.exact is None:
        raise ValueError("W_exact needs an angle structure with exact entries")
    T = ctx.T
    a, app = [], []
    for t in range(T.N):
        a.append(alpha.exact[t][angle_of_shape(T.signs[t], 0)])
        app.append(alpha.exact[t][angle_of_shape(T.signs[t], 2)])
    G = ctx.exact["G"]
    Ga = G.apply([1 - v for v in a])
    return [g - v for g, v in zip(Ga, app)]


def W_identity_residual(ctx: PotentialContext, alpha: AngleStructure) -> list[Fraction]:
    """-(EB) W - [E'(nu + u) - (EB) G pi], all divided by pi; zero exactly."""
    if alpha.exact is None:
        raise ValueError("needs exact angles")
    N = ctx.N
    W = W_exact(ctx, alpha)
    EB, Ep, G = ctx.exact["EB_top"], ctx.exact["Ep_top"], ctx.exact["G"]
    lam = _exact_holonomy(ctx, alpha, ctx.T.longitude)
    nu_u = [Fraction(int(v)) for v in np.rint(ctx.nu / PI)]
    nu_u[-1] += lam
    lhs = [-v for v in EB.apply(W)]
    rhs = [p - q for p, q in zip(Ep.apply(nu_u), EB.apply(G.apply([Fraction(1)] * N)))]
    return [l - r for l, r in zip(lhs, rhs)]


def _exact_holonomy(ctx, alpha, curve) -> Fraction:
    T = ctx.T
    tot = Fraction(0)
    for t in range(T.N):
        for s, coeffs in enumerate((curve.c, curve.cp, curve.cpp)):
            tot += coeffs[t] * alpha.exact[t][angle_of_shape(T.signs[t], s)]
    return tot


# -- J -------------------------------------------------------------------------------

@dataclass(frozen=True)
class JCoordinates:
    p: int  # index of the eliminated variable (first nonzero C)
    others: tuple[int, ...]
    Linv: np.ndarray  # x = Linv @ (w, xhat) + shift
    shift: np.ndarray


def j_coordinates(ctx: PotentialContext) -> JCoordinates:
    if ctx.C is None or not np.any(np.abs(ctx.C) > 1e-14):
        raise DegeneratePivot("all meridian coefficients C_k vanish")
    C = ctx.C
    p = int(np.flatnonzero(np.abs(C) > 1e-14)[0])
    others = tuple(k for k in range(ctx.d) if k != p)
    d = ctx.d
    Linv = np.zeros((d, d))
    Linv[p, 0] = 1.0 / C[p]
    for j, k in enumerate(others, start=1):
        Linv[k, j] = 1.0
        Linv[p, j] = -C[k] / C[p]
    shift = np.zeros(d, dtype=complex)
    shift[p] = ctx.C0 / C[p]
    return JCoordinates(p, others, Linv, shift)


def x_of_wx(ctx: PotentialContext, w: complex, xhat) -> np.ndarray:
    jc = j_coordinates(ctx)
    z = np.concatenate([[w], np.asarray(xhat, dtype=complex).ravel()])
    return jc.Linv @ z + jc.shift


def w_of_x(ctx: PotentialContext, x) -> complex:
    return complex(np.dot(ctx.C, x) - ctx.C0)


def eval_J(ctx: PotentialContext, w: complex, xhat, delta: float | None = DEFAULT_DELTA) -> PotentialValue:
    """J(w, x-hat) with gradient and Hessian in the (w, x-hat) coordinates."""
    jc = j_coordinates(ctx)
    x = x_of_wx(ctx, w, xhat)
    s = eval_S(ctx, x, 0.0, delta)
    return PotentialValue(s.value, jc.Linv.T @ s.gradient, jc.Linv.T @ s.hessian @ jc.Linv, s.y)


def fiber_critical_point(ctx: PotentialContext, w: complex, xhat0, tol: float = 1e-13, max_iter: int = 50):
    """Newton for d J / d x-hat = 0 at fixed w."""
    xh = np.array(xhat0, dtype=complex).ravel()
    if xh.size == 0:
        return xh
    for _ in range(max_iter):
        jv = eval_J(ctx, w, xh, None)
        g = jv.gradient[1:]
        if np.max(np.abs(g)) < tol:
            return xh
        xh = xh - np.linalg.solve(jv.hessian[1:, 1:], g)
    raise NoConvergence(f"fiber Newton stalled at |grad| = {np.max(np.abs(g)):.3g}")


# -- Hessian versus the 1-loop invariant ------------------------------------------

@dataclass(frozen=True)
class HessianCheck:
    xis: tuple[complex, ...]
    det_hess: tuple[complex, ...]
    ratios: tuple[float, ...]
    spread: float  # max relative deviation of the ratio from its mean

    @property
    def nondegenerate(self) -> bool:
        return all(abs(h) > 1e-12 for h in self.det_hess)


def hessian_one_loop_check(ctx: PotentialContext, F: Flattening, xis=(0.0, 0.01j, 0.02j)) -> HessianCheck:
    """|det Hess S~| / |(prod z'')^-1 prod z^-f'' z''^f tau| across cone deformations."""
    from .geometry import solve_structure

    f, fpp = np.array(F.f), np.array(F.fpp)
    dets, ratios = [], []
    seed = None
    for xi in xis:
        S = solve_structure(ctx.T, xi, "l", seed).shapes
        seed = S
        x = critical_point(ctx, S)
        H = eval_S(ctx, x, xi).hessian
        dH = complex(np.linalg.det(H))
        tau = one_loop_invariant(ctx.T, S, F, "l").tau
        pref = np.prod(S.zpp) ** -1 * np.prod(S.z ** (-fpp) * S.zpp ** f)
        dets.append(dH)
        ratios.append(abs(dH) / abs(pref * tau))
    r = np.array(ratios)
    spread = float(np.max(np.abs(r - r.mean())) / r.mean())
    return HessianCheck(tuple(complex(x) for x in xis), tuple(dets), tuple(float(v) for v in r), spread)


def hessian_jones_residual(ctx: PotentialContext, w: complex = 0.05) -> float:
    """Relative residual of det Hess S~ = (i / 2 C_p^2)(dw_l/dw_m) det Hess_xhat J
    at the critical point over meridian holonomy w."""
    from .geometry import solve_near, solve_structure

    base = solve_structure(ctx.T, 0.0, "m").shapes
    S = solve_near(ctx.T, "m", w, base)
    x = critical_point(ctx, S)
    from .geometry import holonomy

    xi = holonomy(S, ctx.T.longitude)
    lhs = complex(np.linalg.det(eval_S(ctx, x, xi).hessian))
    jc = j_coordinates(ctx)
    wv = w_of_x(ctx, x)
    xhat = x[list(jc.others)]
    HJ = eval_J(ctx, wv, xhat).hessian[1:, 1:]
    detJ = complex(np.linalg.det(HJ)) if HJ.size else 1.0
    rhs = 1j / (2 * ctx.C[jc.p] ** 2) * dwl_dwm(ctx.T, S) * detJ
    return abs(lhs - rhs) / abs(lhs)


# -- concavity and the critical-value identity -----------------------------------------

@dataclass(frozen=True)
class ConcavityReport:
    strict: bool  # contour strictly inside the band product
    max_eigenvalue: float
    max_diagonal: float  # max over grid and k of Im(1 / (1 + e^{-y_k}))
    points: int

    @property
    def concave(self) -> bool:
        tol = 1e-12
        return self.max_eigenvalue < -tol if self.strict else self.max_eigenvalue < tol


def concavity_scan(ctx: PotentialContext, v, radius: float = 3.0, n: int = 21) -> ConcavityReport:
    """Hessian of Re S~ in the real directions on the horizontal plane R^d + i v."""
    v = np.asarray(v, dtype=float)
    im_y = v @ ctx.EB - (PI - ctx.a0)
    tol = 1e-12
    if np.any(im_y < -PI - tol) or np.any(im_y > tol):
        raise BandViolation("the plane leaves the band product -pi <= Im y <= 0")
    strict = bool(np.all(im_y > -PI + tol) and np.all(im_y < -tol))
    ax = np.linspace(-radius, radius, n)
    emax, dmax, cnt = -np.inf, -np.inf, 0
    for h in itertools.product(ax, repeat=ctx.d):
        y = ctx.phi(np.array(h) + 1j * v)
        diag = np.imag(1.0 / (1.0 + np.exp(-y)))
        H = ctx.EB @ np.diag(diag) @ ctx.EB.T
        emax = max(emax, float(np.max(np.linalg.eigvalsh(H))))
        dmax = max(dmax, float(np.max(diag)))
        cnt += 1
    return ConcavityReport(strict, emax, dmax, cnt)


def critical_value_identity(ctx: PotentialContext, x, lam: float) -> float:
    """Re S(x) + sum D(z_k) - sum h_l d/dh_l Re S(x), with h = Re x and z = -e^{phi(x)}.

    Every non-dilogarithm term of Re S is linear in h and Re(i L(y)) = -D(-e^y) + Re(y) Re(i L'(y)),
    so this vanishes identically.
    """
    s = eval_S_lambda(ctx, x, lam)
    z = -np.exp(s.y)
    h = np.real(x)
    # d/dh Re S = Re dS/dx for holomorphic S
    return float(s.value.real + np.sum(bloch_wigner(z)) - h @ np.real(s.gradient))


# -- auxiliary prefactor functions --------------------------------------------------

def h_factor(y, delta: float | None = DEFAULT_DELTA) -> complex:
    """h(y) = exp(sum (i y_k / 2 pi) L'(y_k) - (i / pi) L(y_k))."""
    y = np.asarray(y, dtype=complex)
    L, Lp = _L(y, delta)
    return complex(np.exp(np.sum(1j * y / (2 * PI) * Lp - 1j / PI * L)))


def R_factor(S: ShapeAssignment, F: Flattening) -> complex:
    z, zpp = S.z, S.zpp
    f, fpp = np.array(F.f), np.array(F.fpp)
    e = np.sum(-1j * (np.log(z) - 1j * PI) * np.log(1 - z) / (2 * PI) - 1j / PI * li2(z))
    return complex(np.exp(e) / np.prod(z ** (-fpp) * zpp ** (f - 1)))


__all__ = [
    "PotentialContext", "PotentialValue", "build_context", "eval_S", "eval_S_lambda", "eval_J",
    "gradient_closed_form", "critical_point", "W_exact", "W_identity_residual", "j_coordinates",
    "x_of_wx", "w_of_x", "fiber_critical_point", "dwl_dwm", "HessianCheck", "hessian_one_loop_check",
    "hessian_jones_residual", "ConcavityReport", "concavity_scan", "critical_value_identity",
    "h_factor", "R_factor",
]
