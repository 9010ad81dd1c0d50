"""Gluing-equation solver, volumes, holonomies, deformation paths and the
Neumann-Zagier potential.

Unknowns are y = Log z - i pi, so z = -e^y, Log z'' = Log(1 + e^{-y}) and
Log z' = -Log(1 + e^y) on the geometric strip.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import BranchJump, ContinuationBreakdown, DegenerateShape, NoConvergence
from .nz_data import NzPair, nz_pair_for
from .special_fn import bloch_wigner
from .triangulation_core import OrderedTriangulation, PeripheralCurve

NEWTON_TOL = 1e-13
DEFAULT_RADIUS = 0.3


@dataclass(frozen=True)
class ShapeAssignment:
    z: np.ndarray

    @classmethod
    def from_y(cls, y) -> "ShapeAssignment":
        return cls(-np.exp(np.asarray(y, dtype=complex)))

    @property
    def N(self) -> int:
        return self.z.size

    @property
    def zp(self) -> np.ndarray:
        return 1.0 / (1.0 - self.z)

    @property
    def zpp(self) -> np.ndarray:
        return (self.z - 1.0) / self.z

    @property
    def y(self) -> np.ndarray:
        return np.log(self.z) - 1j * np.pi

    def logs(self) -> np.ndarray:
        """(N, 3) principal logs of z, z', z''."""
        return np.log(np.stack([self.z, self.zp, self.zpp], axis=1))

    def polynomial_residual(self) -> float:
        z, zp, zpp = self.z, self.zp, self.zpp
        return float(max(np.max(np.abs(z * (1 - zpp) - 1)), np.max(np.abs(zp * (1 - z) - 1)),
                         np.max(np.abs(zpp * (1 - zp) - 1))))

    def conjugate(self) -> "ShapeAssignment":
        return ShapeAssignment(np.conj(self.z))

    def geometric_flags(self, tol: float = 1e-12) -> list[str]:
        return ["geometric" if v > tol else ("flat" if v > -tol else "negative") for v in self.z.imag]


@dataclass(frozen=True)
class ConeStructure:
    xi: complex
    shapes: ShapeAssignment
    residual: float
    iterations: int
    jacobian_cond: float


def _arrays(P: NzPair):
    A = np.array(P.A.to_numpy(), dtype=float)
    B = np.array(P.B.to_numpy(), dtype=float)
    nu = np.array(P.nu, dtype=float)
    return A, B, nu


def gluing_residual(P: NzPair, y, xi: complex) -> np.ndarray:
    A, B, nu = _arrays(P)
    y = np.asarray(y, dtype=complex)
    u = np.zeros(P.N, dtype=complex)
    u[-1] = xi
    return A @ (y + 1j * np.pi) + B @ np.log(1.0 + np.exp(-y)) - 1j * np.pi * nu - u


def gluing_jacobian(P: NzPair, y) -> np.ndarray:
    """A diag(dLog z/dy) + B diag(dLog z''/dy) with dLog z/dy = 1, dLog z''/dy = -1/(1+e^y)."""
    A, B, _ = _arrays(P)
    return A - B * (1.0 / (1.0 + np.exp(np.asarray(y, dtype=complex))))[None, :]


def _newton(P: NzPair, y0, xi, max_iter=60, tol=NEWTON_TOL, guard=1e-8):
    y = np.array(y0, dtype=complex)
    for it in range(max_iter + 1):
        F = gluing_residual(P, y, xi)
        r = float(np.max(np.abs(F)))
        if r < tol:
            return y, r, it
        if it == max_iter:
            break
        J = gluing_jacobian(P, y)
        try:
            d = np.linalg.solve(J, -F)
        except np.linalg.LinAlgError as exc:
            raise NoConvergence("singular gluing Jacobian") from exc
        lam = 1.0
        while lam > 1e-6:
            yn = y + lam * d
            z = -np.exp(yn)
            if np.all(np.abs(z) > guard) and np.all(np.abs(z - 1) > guard) and \
                    np.max(np.abs(gluing_residual(P, yn, xi))) < max(r, tol) * (1 - 0.25 * lam) + 1e-300:
                break
            lam /= 2
        else:
            z = -np.exp(y + d)
            if np.any(np.abs(z) < guard) or np.any(np.abs(z - 1) < guard):
                raise DegenerateShape("iterate approached 0 or 1")
            raise NoConvergence(f"damping failed at residual {r:.3g}")
        y = yn
    raise NoConvergence(f"residual {r:.3g} after {max_iter} iterations")


def solve_gluing(P: NzPair, xi: complex = 0.0, seed: ShapeAssignment | None = None,
                 retries: int = 8, rng_seed: int = 0) -> ConeStructure:
    """Solve A Log z + B Log z'' = i pi nu + (0, ..., 0, xi)."""
    seeds = [np.full(P.N, 1j) if seed is None else np.asarray(seed.z, dtype=complex)]
    rng = np.random.default_rng(rng_seed)
    for _ in range(retries):
        seeds.append(rng.uniform(-1, 2, P.N) + 1j * rng.uniform(0.1, 2, P.N))
    last = None
    for s in seeds:
        try:
            y, r, it = _newton(P, np.log(s) - 1j * np.pi, xi)
        except (NoConvergence, DegenerateShape) as exc:
            last = exc
            continue
        S = ShapeAssignment.from_y(y)
        cond = float(np.linalg.cond(gluing_jacobian(P, y)))
        return ConeStructure(complex(xi), S, r, it, cond)
    raise last


def solve_structure(T: OrderedTriangulation, xi: complex = 0.0, curve: str = "l",
                    seed: ShapeAssignment | None = None) -> ConeStructure:
    cv = T.longitude if curve == "l" else T.meridian
    return solve_gluing(nz_pair_for(T, cv), xi, seed)


def dwl_dwm(T: OrderedTriangulation, S: ShapeAssignment) -> complex:
    """d w_l / d w_m at shapes S from the two gluing Jacobians."""
    Jm = gluing_jacobian(nz_pair_for(T, T.meridian), S.y)
    Jl = gluing_jacobian(nz_pair_for(T, T.longitude), S.y)
    e = np.zeros(S.N)
    e[-1] = 1.0
    dy = np.linalg.solve(Jm, e)
    return complex(Jl[-1] @ dy)


def volume(S: ShapeAssignment) -> float:
    return float(np.sum(bloch_wigner(S.z)))


def holonomy(S: ShapeAssignment, sigma: PeripheralCurve) -> complex:
    C = np.array([sigma.c, sigma.cp, sigma.cpp], dtype=float).T
    return complex(np.sum(C * S.logs()))


# -- continuation -------------------------------------------------------------

@dataclass(frozen=True)
class DeformationPath:
    curve: str
    target: complex
    params: np.ndarray  # w values along the segment
    samples: tuple[ShapeAssignment, ...]
    residuals: np.ndarray = field(repr=False)

    def __len__(self) -> int:
        return len(self.samples)


def _continue(P, y, w_from, w_to, min_step, jump):
    """Natural-parameter continuation from w_from to w_to with step halving."""
    t, dt = 0.0, 1.0
    yprev, tprev = None, None
    while t < 1.0 - 1e-15:
        dt = min(dt, 1.0 - t)
        tn = t + dt
        # secant predictor
        guess = y if yprev is None else y + (y - yprev) * (dt / (t - tprev))
        try:
            yn, r, _ = _newton(P, guess, w_from + tn * (w_to - w_from))
            ok = np.max(np.abs(yn - guess)) < jump * max(dt, 1e-3) + 1e-9 or dt <= min_step * 4
        except (NoConvergence, DegenerateShape):
            ok = False
        if not ok:
            dt /= 2
            if dt < min_step:
                raise ContinuationBreakdown(f"step underflow at w = {w_from + t * (w_to - w_from)}")
            continue
        if np.max(np.abs(yn - y)) > 0.5:
            raise BranchJump("consecutive samples differ by more than the jump bound")
        yprev, tprev, y, t = y, t, yn, tn
        dt = min(2 * dt, 1.0)
    return y, r


def deform_path(T: OrderedTriangulation, curve: str = "m", target: complex = 0.1, steps: int = 20,
                radius: float = DEFAULT_RADIUS, start: ConeStructure | None = None,
                min_step: float = 1e-6, jump: float = 50.0) -> DeformationPath:
    """Shapes along w = t * target, t = 0, 1/steps, ..., 1, from the complete structure."""
    if abs(target) > radius:
        raise ContinuationBreakdown(f"|target| = {abs(target):.3g} exceeds the continuation radius {radius}")
    cv = T.meridian if curve == "m" else T.longitude
    P = nz_pair_for(T, cv)
    base = start or solve_gluing(P, 0.0)
    y = base.shapes.y
    ws = [0.0 + 0j]
    samples = [base.shapes]
    res = [base.residual]
    if target == 0:
        return DeformationPath(curve, complex(target), np.array(ws), tuple(samples), np.array(res))
    for k in range(1, steps + 1):
        w0, w1 = target * (k - 1) / steps, target * k / steps
        y, r = _continue(P, y, w0, w1, min_step, jump)
        ws.append(complex(w1))
        samples.append(ShapeAssignment.from_y(y))
        res.append(r)
    return DeformationPath(curve, complex(target), np.array(ws), tuple(samples), np.array(res))


def solve_near(T: OrderedTriangulation, curve: str, w: complex, seed: ShapeAssignment) -> ShapeAssignment:
    cv = T.meridian if curve == "m" else T.longitude
    P = nz_pair_for(T, cv)
    y, _, _ = _newton(P, seed.y, w)
    return ShapeAssignment.from_y(y)


# -- Neumann-Zagier potential -----------------------------------------------------

@dataclass(frozen=True)
class PotentialTable:
    wm: np.ndarray
    wl: np.ndarray
    phi: np.ndarray
    volume: float
    anchor: complex  # i Vol; the Chern-Simons part is not computed


def _wl_along(T, base: ShapeAssignment, w_end: complex, t_nodes: np.ndarray) -> np.ndarray:
    """Longitude holonomy at w_m = t * w_end for increasing t (solved by continuation)."""
    P = nz_pair_for(T, T.meridian)
    y = base.y
    w_prev = 0.0
    out = []
    for t in t_nodes:
        y, _ = _continue(P, y, w_prev, t * w_end, 1e-8, 50.0)
        w_prev = t * w_end
        out.append(holonomy(ShapeAssignment.from_y(y), T.longitude))
    return np.array(out)


def nz_potential(T: OrderedTriangulation, path: DeformationPath, order: int = 24) -> PotentialTable:
    """phi(w) = i Vol + (1/2) int_0^w w_l(t) dt at every sample of a meridian path.

    Each integral is a Gauss-Legendre rule on the straight segment [0, w], so the
    samples are independent of one another and can be finite-differenced.
    """
    if path.curve != "m":
        raise ValueError("nz_potential needs a meridian path")
    base = path.samples[0]
    vol = volume(base)
    x, wts = np.polynomial.legendre.leggauss(order)
    t = (x + 1) / 2
    wts = wts / 2
    phi, wl = [], []
    for w, S in zip(path.params, path.samples):
        wl.append(holonomy(S, T.longitude))
        if w == 0:
            phi.append(1j * vol)
            continue
        vals = _wl_along(T, base, w, t)
        phi.append(1j * vol + 0.5 * w * np.sum(wts * vals))
    return PotentialTable(np.array(path.params), np.array(wl), np.array(phi), vol, 1j * vol)


def nz_potential_at(T: OrderedTriangulation, w: complex, order: int = 24) -> complex:
    base = solve_structure(T, 0.0, "m").shapes
    x, wts = np.polynomial.legendre.leggauss(order)
    vals = _wl_along(T, base, w, (x + 1) / 2)
    return 1j * volume(base) + 0.5 * w * np.sum(wts / 2 * vals)
