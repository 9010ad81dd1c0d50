"""Dilogarithm, its continuation L off the two vertical cuts, Bloch-Wigner D,
and Faddeev's quantum dilogarithm.

Everything is vectorised over numpy arrays and runs in double precision.
Logs of Phi_b are returned modulo 2*pi*i; compare them with `mod_2pi_i`.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from . import _kernels
from .errors import OnBranchCut, PoleProximity, TooCloseToCut

PI = math.pi
PI2_6 = PI * PI / 6.0
DEFAULT_DELTA = 1e-3


def _bernoulli(n: int) -> list[float]:
    from fractions import Fraction
    from math import comb

    B = [Fraction(1)]
    for m in range(1, n + 1):
        B.append(-sum(comb(m + 1, k) * B[k] for k in range(m)) / (m + 1))
    return [float(x) for x in B]


# coefficients B_n / (n+1)! of Li2(z) = sum c_n u^(n+1), u = -Log(1-z)
_LI2_COEF = np.array([b / math.factorial(n + 1) for n, b in enumerate(_bernoulli(40))])


def _li2_series(v):
    u = -np.log1p(-v)
    acc = np.zeros_like(u)
    for c in _LI2_COEF[::-1]:
        if c != 0.0:
            acc = acc * u + c
        else:
            acc = acc * u
    return acc * u


def _li2_unchecked(z):
    """Principal Li2; on (1, inf) the sign of the imaginary zero picks the side."""
    z = np.asarray(z, dtype=complex)
    out = np.empty(z.shape, dtype=complex)
    flat, res = z.ravel(), out.ravel()
    zero = flat == 0
    one = flat == 1
    res[zero] = 0.0
    res[one] = PI2_6
    rest = ~(zero | one)
    w = flat[rest]
    val = np.zeros(w.shape, dtype=complex)
    sign = np.ones(w.shape)

    big = np.abs(w) > 1.0
    # Li2(z) = -Li2(1/z) - pi^2/6 - Log(-z)^2/2
    lmz = np.log(-w[big])
    val[big] = -PI2_6 - 0.5 * lmz * lmz
    sign[big] = -1.0
    # signed zeros carry the side of the cut through 1/z and Log(-z)
    w = np.where(big, 1.0 / np.where(big, w, 1.0), w)

    refl = w.real > 0.5
    # Li2(w) = -Li2(1-w) + pi^2/6 - Log(w) Log(1-w)
    wr = w[refl]
    val[refl] += sign[refl] * (PI2_6 - np.log(wr) * np.log1p(-wr))
    s2 = np.where(refl, -sign, sign)
    v = np.where(refl, 1.0 - w, w)
    val += s2 * _li2_series(v)
    res[rest] = val
    return out


def li2(z):
    """Principal dilogarithm, cut along [1, inf)."""
    z = np.asarray(z, dtype=complex)
    if np.any((z.imag == 0) & (z.real > 1)):
        raise OnBranchCut("Li2 is not defined on (1, inf)")
    r = _li2_unchecked(z)
    return r if r.ndim else complex(r)


# -- continuation of Li2(-e^y) -------------------------------------------------

def cut_distance(y):
    """Distance from y to i(-inf, -pi] u i[pi, inf)."""
    y = np.asarray(y, dtype=complex)
    a = np.abs(y.imag)
    return np.where(a >= PI, np.abs(y.real), np.hypot(y.real, a - PI))


def _check_cut(y, delta):
    if delta is None:
        return
    d = cut_distance(y)
    if np.any(d < delta):
        raise TooCloseToCut(f"min distance to the cuts {float(np.min(d)):.3g} < {delta}")


def _reduce(y):
    """y = y0 + 2 pi i k with Im y0 in (-pi, pi]."""
    k = np.ceil((y.imag - PI) / (2 * PI))
    y0 = y - 2j * PI * k
    # guard against rounding past the top edge
    over = y0.imag > PI
    k = np.where(over, k + 1, k)
    y0 = np.where(over, y0 - 2j * PI, y0)
    return y0, k


def _neg_exp(y0):
    """-e^{y0}; on the edge Im y0 = pi the value sits just below the real axis,
    which is where it lands when Im y tends to pi from inside the strip."""
    w = -np.exp(y0)
    edge = y0.imag == PI
    out = np.empty(w.shape, dtype=complex)
    out.real = np.where(edge, np.exp(y0.real), w.real)
    out.imag = np.where(edge, -0.0, w.imag)
    return out


def cont_L(y, delta: float | None = DEFAULT_DELTA):
    """Analytic continuation L of Li2(-e^y) to C minus the two vertical cuts."""
    y = np.asarray(y, dtype=complex)
    _check_cut(y, delta)
    y0, k = _reduce(y)
    w = _neg_exp(y0)
    base = _li2_unchecked(w)
    right = y.real > 0
    out = np.where(right, base - 2j * PI * k * y0 + 2 * PI * PI * k * k, base)
    return out if out.ndim else complex(out)


def cont_L_prime(y, delta: float | None = DEFAULT_DELTA):
    """L'(y): continuation of -Log(1 + e^y)."""
    y = np.asarray(y, dtype=complex)
    _check_cut(y, delta)
    y0, k = _reduce(y)
    ey = np.exp(y0)
    edge = y0.imag == PI
    one_p = np.where(edge, (1.0 - np.exp(y0.real)) + 0j, 1.0 + ey)
    base = -np.log(one_p)
    # on the edge with Re y > 0, 1 + e^y < 0 approached from above: Log = log|.| + i pi
    base = np.where(edge & (y0.real > 0), -(np.log(np.abs(one_p)) + 1j * PI), base)
    right = y.real > 0
    out = np.where(right, base - 2j * PI * k, base)
    return out if out.ndim else complex(out)


def cont_L_second(y):
    """L''(y) = -1 / (1 + e^{-y}); 2 pi i periodic."""
    y = np.asarray(y, dtype=complex)
    out = -1.0 / (1.0 + np.exp(-y))
    return out if out.ndim else complex(out)


def bloch_wigner(z):
    """D(z) = Im Li2(z) + arg(1 - z) log|z|, zero on the real line."""
    z = np.asarray(z, dtype=complex)
    real = z.imag == 0
    zz = np.where(real, 0.5 + 0.5j, z)
    d = _li2_unchecked(zz).imag + np.angle(1.0 - zz) * np.log(np.abs(zz))
    out = np.where(real, 0.0, d)
    return out if out.ndim else float(out)


# -- Faddeev's quantum dilogarithm --------------------------------------------

@dataclass(frozen=True)
class QuantumParams:
    hbar: float
    b: float

    @classmethod
    def from_hbar(cls, hbar: float) -> "QuantumParams":
        if not hbar > 0 or hbar > 0.25:
            raise ValueError("need 0 < hbar <= 1/4 for a real b")
        s = 1.0 / math.sqrt(hbar)  # b + 1/b
        b = (s - math.sqrt(s * s - 4.0)) / 2.0
        return cls(hbar, b)

    @classmethod
    def from_b(cls, b: float) -> "QuantumParams":
        if not b > 0:
            raise ValueError("b must be positive")
        b = min(b, 1.0 / b)
        return cls((b + 1.0 / b) ** -2, b)

    @property
    def c_b(self) -> float:
        return 0.5 * (self.b + 1.0 / self.b)


def _log1p_exp(x):
    """Log(1 + e^x) modulo 2 pi i, stable for large Re x."""
    big = x.real > 0
    xs = np.where(big, -x, x)
    return np.where(big, x, 0.0) + np.log1p(np.exp(xs))


POLE_TOL = 1e-10


@lru_cache(maxsize=64)
def _phi_grid(b: float):
    # poles of the integrand closest to the real line: 0 and i pi b (b <= 1)
    eps = PI * b / 2.0
    h = 2 * PI * eps / 64.0
    rate = 1.0 / b  # lower bound on the exponential decay after reduction
    W = (40.0 + 3.0 * math.log(max(1.0, 1.0 / eps))) / rate
    n = int(math.ceil(W / h))
    w, g = _kernels.phi_nodes(b, eps, h, n)
    return w, g


def _shift_strip(u, acc, beta, half):
    """Move Im u into [-half, half] by steps of beta using the functional equation."""
    k = np.rint(u.imag / beta).astype(int)
    kmax = int(np.max(np.abs(k))) if k.size else 0
    sgn = np.sign(k)
    base = 2 * PI * beta * u
    for j in range(kmax):
        act = j < np.abs(k)
        if not np.any(act):
            break
        # up: -Log(1 + e^{2 pi beta u - i pi beta^2 (2j+1)}); down: +Log(1 + e^{... + i pi beta^2 (2j+1)})
        x = base - sgn * 1j * PI * beta * beta * (2 * j + 1)
        t = 1.0 + np.exp(np.where(x.real > 0, -x, x))
        if np.any(act & (np.abs(t) < POLE_TOL)):
            raise PoleProximity("argument is within tolerance of a pole or zero of Phi_b")
        acc = acc - np.where(act, sgn * _log1p_exp(x), 0.0)
    u = u - 1j * beta * k
    return u, acc


def log_faddeev(z, b: float, backend: str | None = None):
    """Log Phi_b(z), modulo 2 pi i."""
    b = min(b, 1.0 / b)
    z = np.asarray(z, dtype=complex)
    u = z.ravel().copy()
    acc = np.zeros(u.shape, dtype=complex)
    u, acc = _shift_strip(u, acc, 1.0 / b, 0.5 / b)
    u, acc = _shift_strip(u, acc, b, 0.5 * b)
    # inversion to Re u <= 0 keeps exp(-2 i u w) bounded near the line
    flip = u.real > 0
    u = np.where(flip, -u, u)
    w, g = _phi_grid(float(b))
    val = _kernels.line_sum(u, w, g, backend)
    cst = 1j * PI * (b * b + 1.0 / (b * b)) / 12.0
    val = np.where(flip, cst + 1j * PI * u * u - val, val)
    out = (acc + val).reshape(z.shape)
    return out if out.ndim else complex(out)


def faddeev_phi_b(z, q: QuantumParams | float, backend: str | None = None):
    b = q.b if isinstance(q, QuantumParams) else float(q)
    r = np.exp(log_faddeev(z, b, backend))
    return r if np.ndim(r) else complex(r)


def mod_2pi_i(x):
    """Representative of x modulo 2 pi i with imaginary part in (-pi, pi]."""
    x = np.asarray(x, dtype=complex)
    im = x.imag - 2 * PI * np.ceil((x.imag - PI) / (2 * PI))
    out = x.real + 1j * im
    return out if out.ndim else complex(out)


def phi_semiclassical_residual(z, b: float, delta: float | None = DEFAULT_DELTA):
    """|Log Phi_b(z / 2 pi b) + (i / 2 pi b^2) L(z)| (b-form)."""
    z = np.asarray(z, dtype=complex)
    d = log_faddeev(z / (2 * PI * b), b) + 1j / (2 * PI * b * b) * cont_L(z, delta)
    return np.abs(mod_2pi_i(d))


def phi_semiclassical_residual_hbar(z, hbar: float, delta: float | None = DEFAULT_DELTA):
    """Residual of the hbar form
    Phi_b(z / 2 pi sqrt(hbar)) ~ exp(-(i z / 2 pi) L'(z) + (i / pi) L(z) - (i / 2 pi hbar) L(z)).

    Uses 1/b^2 = 1/hbar - 2 - b^2 when collecting the L(z) terms.
    """
    q = QuantumParams.from_hbar(hbar)
    z = np.asarray(z, dtype=complex)
    L = cont_L(z, delta)
    Lp = cont_L_prime(z, delta)
    approx = -1j * z / (2 * PI) * Lp + 1j / PI * L - 1j / (2 * PI * hbar) * L
    d = log_faddeev(z / (2 * PI * math.sqrt(hbar)), q.b) - approx
    return np.abs(mod_2pi_i(d))
