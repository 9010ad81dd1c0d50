"""Quadrature of the partition and Jones integrals, and the asymptotic fits.

Both integrals run over horizontal planes with the trapezoid rule. The points
form a lattice, so each y_k = phi_k(x) takes few distinct values and Phi_b is
evaluated once per value. Overall constants (D_1 and friends) are never
resolved; only moduli, ratios and slopes are meaningful.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np

from . import _kernels
from .errors import DimensionTooLarge, InsufficientSamples, TailBoundExceeded
from .geometry import solve_near, solve_structure, volume
from .potential import (
    PotentialContext,
    critical_point,
    eval_S,
    eval_S_lambda,
    h_factor,
    j_coordinates,
)
from .special_fn import QuantumParams, log_faddeev
from .triangulation_core import AngleStructure

PI = math.pi
DEFAULT_HBARS = (1 / 8, 1 / 12, 1 / 16, 1 / 24, 1 / 32)
MAX_DIM = 3


@dataclass(frozen=True)
class QuadratureSpec:
    step: float = 0.3  # grid spacing in units of sqrt(hbar)
    half_width: float | None = None  # None: chosen from the decay of the integrand
    tail_log: float = 30.0  # truncate where the integrand is e^-tail_log below its peak
    tail_tol: float = 1e-10
    backend: str | None = None

    def halved(self) -> "QuadratureSpec":
        return QuadratureSpec(self.step / 2, self.half_width, self.tail_log, self.tail_tol, self.backend)


@dataclass(frozen=True)
class QuadratureResult:
    value: complex  # (1 / 2 pi sqrt(hbar))^d times the integral, up to the unresolved constant
    log_modulus: float
    tail: float  # largest boundary value relative to the peak
    half_width: float
    step: float
    points: int


# -- lattice integrand ---------------------------------------------------------

def _denominator(M) -> int:
    den = 1
    for row in M:
        for v in row:
            den = math.lcm(den, Fraction(v).limit_denominator(10**6).denominator)
    return den


@dataclass(frozen=True)
class _Affine:
    """x(t) = x0 + P t for real t; y = phi(x(t)); exponent pieces of the integrand."""

    x0: np.ndarray
    P: np.ndarray  # d x m
    K: np.ndarray  # linear term of S~


def _exponent_parts(ctx: PotentialContext, aff: _Affine, hbar: float):
    """quad, lin, const of (1/2 pi hbar)(-(i/2) y^T M y - x^T K) as a function of t."""
    M = ctx.Q + np.diag((ctx.eps - 1) / 2)
    Y = ctx.EB.T @ aff.P  # N x m
    y0 = ctx.phi(aff.x0)
    s = 1.0 / (2 * PI * hbar)
    quad = s * (-0.5j) * (Y.T @ M @ Y)
    lin = s * (-1j * (Y.T @ M @ y0) - aff.P.T @ aff.K)
    const = s * (-0.5j * (y0 @ M @ y0) - aff.x0 @ aff.K)
    return quad, lin, const, Y, y0


def _grid(m: int, n: int) -> np.ndarray:
    ax = np.arange(-n, n + 1)
    if m == 0:
        return np.zeros((1, 0), dtype=np.int64)
    return np.array(list(itertools.product(ax, repeat=m)), dtype=np.int64)


def _log_phi_lattice(Y, y0, J, h, b, hbar, backend):
    """sum_k log Phi_b(y_k / 2 pi sqrt(hbar)) at y = y0 + Y (J h), evaluated per distinct value."""
    den = _denominator(Y)
    Yi = np.rint(Y * den).astype(np.int64)
    tot = np.zeros(J.shape[0], dtype=complex)
    scale = 1.0 / (2 * PI * math.sqrt(hbar))
    for k in range(Y.shape[0]):
        idx = J @ Yi[k]
        uniq, inv = np.unique(idx, return_inverse=True)
        vals = log_faddeev((y0[k] + uniq * (h / den)) * scale, b, backend)
        tot += np.asarray(vals).ravel()[inv.ravel()]
    return tot


def _log_integrand_at(ctx, aff, hbar, b, t):
    quad, lin, const, Y, y0 = _exponent_parts(ctx, aff, hbar)
    t = np.asarray(t, dtype=float)
    y = y0 + Y @ t
    e = const + lin @ t + t @ quad @ t
    return complex(e - np.sum(log_faddeev(y / (2 * PI * math.sqrt(hbar)), b)))


def _auto_half_width(ctx, aff, hbar, b, tail_log, start=2.0, stepr=0.5, rmax=200.0) -> float:
    """Smallest radius where all probe directions sit tail_log below the centre value."""
    m = aff.P.shape[1]
    if m == 0:
        return 0.0
    c = _log_integrand_at(ctx, aff, hbar, b, np.zeros(m)).real
    dirs = []
    for v in itertools.product((-1, 0, 1), repeat=m):
        if any(v):
            v = np.array(v, dtype=float)
            dirs.append(v / np.max(np.abs(v)))
    r = start
    while r < rmax:
        worst = max(_log_integrand_at(ctx, aff, hbar, b, r * v).real for v in dirs)
        if worst < c - tail_log:
            return r
        r += stepr
    return rmax


def _lattice_quadrature(ctx, aff: _Affine, hbar: float, spec: QuadratureSpec) -> QuadratureResult:
    m = aff.P.shape[1]
    b = QuantumParams.from_hbar(hbar).b
    h = spec.step * math.sqrt(hbar)
    K = spec.half_width if spec.half_width is not None else _auto_half_width(ctx, aff, hbar, b, spec.tail_log)
    n = int(math.ceil(K / h)) if m else 0
    J = _grid(m, n)
    quad, lin, const, Y, y0 = _exponent_parts(ctx, aff, hbar)
    phi_log = _log_phi_lattice(Y, y0, J, h, b, hbar, spec.backend)
    t = J * h
    # normalise by the centre value so nothing overflows
    ref = _log_integrand_at(ctx, aff, hbar, b, np.zeros(m)).real if m else 0.0
    f = _kernels.gaussian_terms(t.astype(complex), phi_log, quad, lin, const - ref, spec.backend)
    total = np.sum(f) * h ** m
    mags = np.abs(f)
    peak = float(np.max(mags))
    edge = np.any(np.abs(J) == n, axis=1) if m else np.zeros(1, bool)
    tail = float(np.max(mags[edge]) / peak) if m and peak > 0 else 0.0
    pref = (2 * PI * math.sqrt(hbar)) ** (-ctx.d)
    logmod = math.log(abs(total)) + ref + math.log(pref) if total != 0 else -math.inf
    return QuadratureResult(complex(pref * total * math.exp(ref)), logmod, tail, float(K), h, int(J.shape[0]))


# -- partition function ------------------------------------------------------------

def _check_dim(d):
    if d > MAX_DIM:
        raise DimensionTooLarge(f"N - 2n = {d} exceeds the desk-scale limit {MAX_DIM}")


def partition_center(ctx: PotentialContext, alpha: AngleStructure) -> np.ndarray:
    """Real part of the critical point for lambda(alpha); the grid is centred there."""
    try:
        S = solve_structure(ctx.T, 1j * ctx.lam(alpha), "l").shapes
        return np.real(critical_point(ctx, S))
    except Exception:  # no cone structure nearby: centre at the origin
        return np.zeros(ctx.d)


def partition_modulus(ctx: PotentialContext, alpha: AngleStructure, hbar: float,
                      spec: QuadratureSpec = QuadratureSpec(), v=None, center=None) -> QuadratureResult:
    """|Z_hbar(X, alpha)| up to the unresolved constant, on the plane R^d + i v (default v_alpha)."""
    _check_dim(ctx.d)
    v = ctx.v_of(alpha) if v is None else np.asarray(v, dtype=float)
    c = partition_center(ctx, alpha) if center is None else np.asarray(center, dtype=float)
    aff = _Affine(c + 1j * v, np.eye(ctx.d), ctx.linear_term(1j * ctx.lam(alpha)))
    res = _lattice_quadrature(ctx, aff, hbar, spec)
    if res.tail > spec.tail_tol:
        raise TailBoundExceeded(f"boundary/peak = {res.tail:.3g} > {spec.tail_tol}")
    return res


# -- Jones function ------------------------------------------------------------------

def jones_value(ctx: PotentialContext, hbar: float, w: complex, spec: QuadratureSpec = QuadratureSpec(),
                alpha: AngleStructure | None = None, center=None) -> QuadratureResult:
    """The fiber integral at fixed meridian holonomy w, including the 1/C_p Jacobian."""
    _check_dim(ctx.d)
    if ctx.d - 1 > 2:
        raise DimensionTooLarge("fiber dimension exceeds 2")
    jc = j_coordinates(ctx)
    alpha = ctx.alpha0 if alpha is None else alpha
    vhat = ctx.v_of(alpha)[list(jc.others)]
    if center is None:
        center = _fiber_center(ctx, w)
    xhat0 = np.asarray(center, dtype=float) + 1j * vhat
    x0 = jc.Linv @ np.concatenate([[w], xhat0]) + jc.shift
    aff = _Affine(x0, jc.Linv[:, 1:], ctx.linear_term(0.0))
    res = _lattice_quadrature(ctx, aff, hbar, spec)
    jac = 1.0 / ctx.C[jc.p]
    return QuadratureResult(res.value * jac, res.log_modulus + math.log(abs(jac)), res.tail,
                            res.half_width, res.step, res.points)


def _fiber_center(ctx, w):
    jc = j_coordinates(ctx)
    try:
        base = solve_structure(ctx.T, 0.0, "m").shapes
        S = solve_near(ctx.T, "m", ctx.meridian_sign * w, base) if w != 0 else base
        x = critical_point(ctx, S)
        return np.real(x[list(jc.others)])
    except Exception:
        return np.zeros(ctx.d - 1)


def jones_modulus(ctx, hbar, w, spec: QuadratureSpec = QuadratureSpec(), alpha=None) -> float:
    return math.exp(jones_value(ctx, hbar, w, spec, alpha).log_modulus)


def laplace_identity(ctx: PotentialContext, alpha: AngleStructure, hbar: float,
                     spec: QuadratureSpec = QuadratureSpec()) -> dict:
    """|Z| from the d-dimensional quadrature against |int J(w) e^{lam (w + C)/4 pi hbar} dw|
    from a trapezoid over w in R + i mu(alpha).

    Both sides use the same centre and spacing; their relative difference is returned.
    """
    jc = j_coordinates(ctx)
    lam = ctx.lam(alpha)
    mu = ctx.mu(alpha)
    h = spec.step * math.sqrt(hbar)
    Z = partition_modulus(ctx, alpha, hbar, spec)
    c = partition_center(ctx, alpha)
    wc = float(np.real(np.dot(ctx.C, c)))
    # w range: enough to cover the support of Z's integrand
    Kw = Z.half_width * float(np.sum(np.abs(ctx.C)))
    nw = int(math.ceil(Kw / h))
    fspec = QuadratureSpec(spec.step, Z.half_width, spec.tail_log, 1.0, spec.backend)
    chat = c[list(jc.others)]
    acc = 0.0 + 0.0j
    for j in range(-nw, nw + 1):
        w = wc + j * h + 1j * mu
        r = jones_value(ctx, hbar, w, fspec, alpha, center=chat)
        acc += r.value * np.exp(lam * (w + ctx.C0) / (4 * PI * hbar))
    rhs = abs(acc * h)
    lhs = abs(Z.value)
    return {"log_Z": Z.log_modulus, "log_laplace": math.log(rhs), "relative": abs(rhs - lhs) / lhs}


# -- fits ------------------------------------------------------------------------------

@dataclass
class AsymptoticFit:
    hbars: list[float]
    log_values: list[float]
    scaled: list[float]  # 2 pi hbar (log|value| - power log hbar)
    slope: float  # extrapolated limit of the scaled values
    error: float
    power: float
    prefactor_ratios: list[float] = field(default_factory=list)
    drift: float | None = None
    monotone: bool | None = None

    def to_json(self) -> dict:
        return {
            "hbar": self.hbars, "log_modulus": self.log_values, "scaled": self.scaled,
            "slope": self.slope, "error": self.error, "power": self.power,
            "prefactor_ratios": self.prefactor_ratios, "drift": self.drift, "monotone": self.monotone,
        }


def _extrapolate(hs, s, deg):
    V = np.vander(np.asarray(hs), deg + 1, increasing=True)
    coef, *_ = np.linalg.lstsq(V, np.asarray(s), rcond=None)
    return float(coef[0])


def volume_slope_fit(samples, power: float = 0.0, volume_ref: float | None = None,
                     prefactor: float | None = None) -> AsymptoticFit:
    """Extrapolate 2 pi hbar log|value| to hbar = 0 from (hbar, log|value|) samples.

    log|value| = -V / 2 pi hbar + power log hbar + c + O(hbar), so
    2 pi hbar (log|value| - power log hbar) = -V + 2 pi c hbar + O(hbar^2).
    """
    samples = sorted(samples, key=lambda s: -s[0])
    if len(samples) < 4:
        raise InsufficientSamples(f"need at least 4 samples, got {len(samples)}")
    hs = [float(h) for h, _ in samples]
    lv = [float(v) for _, v in samples]
    s = [2 * PI * h * (v - power * math.log(h)) for h, v in zip(hs, lv)]
    full = _extrapolate(hs, s, 2)
    lin_small = _extrapolate(hs[1:], s[1:], 1)
    fit = AsymptoticFit(hs, lv, s, full, abs(full - lin_small), power)
    V = -full if volume_ref is None else volume_ref
    if prefactor:
        rat = [math.exp(v - power * math.log(h) + V / (2 * PI * h)) / prefactor for h, v in zip(hs, lv)]
        fit.prefactor_ratios = rat
        fit.drift = float((max(rat) - min(rat)) / np.mean(rat))
    if volume_ref is not None:
        errs = [abs(x + volume_ref) for x in s]
        fit.monotone = all(e2 <= e1 + 1e-12 for e1, e2 in zip(errs, errs[1:]))
    return fit


def partition_prefactor(ctx: PotentialContext, alpha: AngleStructure) -> tuple[float, float]:
    """(cone volume, |h(y^c)| / sqrt|det Hess S~|) at the critical point for lambda(alpha)."""
    lam = ctx.lam(alpha)
    S = solve_structure(ctx.T, 1j * lam, "l").shapes
    x = critical_point(ctx, S)
    H = eval_S(ctx, x, 1j * lam).hessian
    return volume(S), abs(h_factor(S.y)) / math.sqrt(abs(np.linalg.det(H)))


def partition_fit(ctx, alpha, hbars=DEFAULT_HBARS, spec: QuadratureSpec = QuadratureSpec()) -> AsymptoticFit:
    vol, pref = partition_prefactor(ctx, alpha)
    samples = [(h, partition_modulus(ctx, alpha, h, spec).log_modulus) for h in hbars]
    # (1/2 pi sqrt hbar)^d against the Gaussian (2 pi hbar)^{d/2}: no net power of hbar
    return volume_slope_fit(samples, 0.0, vol, pref * (2 * PI) ** (-ctx.d / 2))


def jones_fit(ctx, w: complex = 0.0, hbars=DEFAULT_HBARS, spec: QuadratureSpec = QuadratureSpec()) -> AsymptoticFit:
    samples = [(h, jones_value(ctx, h, w, spec).log_modulus) for h in hbars]
    # one fewer Gaussian direction than the 1/(2 pi sqrt hbar)^d normalisation
    return volume_slope_fit(samples, -0.5)


# -- saddle diagnostics -----------------------------------------------------------------

def saddle_diagnostics(ctx: PotentialContext, alpha: AngleStructure, radius: float = 2.0, n: int = 21) -> dict:
    lam = ctx.lam(alpha)
    S = solve_structure(ctx.T, 1j * lam, "l").shapes
    x = critical_point(ctx, S)
    val = eval_S_lambda(ctx, x, lam)
    grad = float(np.max(np.abs(val.gradient)))
    # strict maximum of Re S on the horizontal plane through the critical point
    ax = np.linspace(-radius, radius, n)
    worst = -math.inf
    for t in itertools.product(ax, repeat=ctx.d):
        t = np.array(t)
        if np.max(np.abs(t)) < 1e-12:
            continue
        try:
            r = eval_S_lambda(ctx, x + t, lam).value.real
        except Exception:
            continue
        worst = max(worst, r - val.value.real)
    H = val.hessian
    detH = complex(np.linalg.det(H))
    g = h_factor(S.y)
    return {
        "critical_gradient": grad,
        "critical_value": val.value.real,
        "volume": volume(S),
        "contour_offset": [float(v) for v in np.imag(x)],
        "v_alpha": [float(v) for v in ctx.v_of(alpha)],
        "strict_maximum": bool(worst < 0),
        "max_excess": float(worst),
        "hessian_det": [detH.real, detH.imag],
        "hessian_cond": float(np.linalg.cond(H)),
        "h_at_critical": abs(g),
        "geometric": S.geometric_flags(),
        "passed": bool(grad < 1e-9 and worst < 0 and abs(detH) > 1e-12 and abs(g) > 0),
    }


def nz_decay_rate(T, w: complex) -> float:
    """Re(i phi(w)) from the independently integrated NZ potential."""
    from .geometry import nz_potential_at

    return float((1j * nz_potential_at(T, w)).real)


__all__ = [
    "QuadratureSpec", "QuadratureResult", "partition_modulus", "jones_value", "jones_modulus",
    "laplace_identity", "AsymptoticFit", "volume_slope_fit", "partition_fit", "jones_fit",
    "partition_prefactor", "saddle_diagnostics", "nz_decay_rate", "DEFAULT_HBARS",
]
