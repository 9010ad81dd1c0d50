"""Neumann-Zagier matrices, their E-reduction, symplectic checks and flattenings."""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from fractions import Fraction

import numpy as np

from .errors import (
    DependentRowViolation,
    NoIntegerSolution,
    NoRationalSolution,
    NotAGeneratorPair,
    RankDeficient,
    SymplecticViolation,
)
from .exact_linalg import (
    RationalMatrix,
    in_row_space,
    integer_solve,
    row_equivalent,
    rref_with_witness,
    solve_left,
)
from .triangulation_core import OrderedTriangulation, PeripheralCurve


@dataclass(frozen=True)
class GluingMatrices:
    G: RationalMatrix
    Gp: RationalMatrix
    Gpp: RationalMatrix
    curve: PeripheralCurve  # the curve in the last row

    @property
    def N(self) -> int:
        return self.G.nrows


def _edge_rows_ab(T: OrderedTriangulation) -> list[list[int]]:
    inc = T.incidence
    return [list(inc[i, :, 0] - inc[i, :, 1]) + list(inc[i, :, 2] - inc[i, :, 1]) for i in range(T.N)]


def curve_row_ab(curve: PeripheralCurve) -> list[int]:
    """Row of (A|B) for a peripheral curve: coefficients of Log z and Log z''."""
    c, cp, cpp = map(np.asarray, (curve.c, curve.cp, curve.cpp))
    return [int(x) for x in c - cp] + [int(x) for x in cpp - cp]


def curve_constant(curve: PeripheralCurve) -> int:
    """Holonomy = row . (Log z | Log z'') + i pi * constant."""
    return int(sum(curve.cp))


def build_gluing_matrices(T: OrderedTriangulation, curve: PeripheralCurve | None = None) -> GluingMatrices:
    curve = T.longitude if curve is None else curve
    N = T.N
    inc = T.incidence
    rows = [[], [], []]
    for s in range(3):
        for i in range(N - 1):
            rows[s].append([int(x) for x in inc[i, :, s]])
    rows[0].append(list(curve.c))
    rows[1].append(list(curve.cp))
    rows[2].append(list(curve.cpp))
    er = _edge_rows_ab(T)
    kept = RationalMatrix(er[: N - 1], ncols=2 * N)
    if N > 1 and kept.rank() != N - 1:
        raise DependentRowViolation("kept edge rows are not independent")
    if in_row_space(er[N - 1], kept) is None if N > 1 else any(er[0]):
        raise DependentRowViolation("dropped edge row is not a combination of the kept rows")
    return GluingMatrices(*(RationalMatrix(r, ncols=N) for r in rows), curve=curve)


@dataclass(frozen=True)
class NzPair:
    A: RationalMatrix
    B: RationalMatrix
    nu: tuple[int, ...]  # nu / pi

    @property
    def N(self) -> int:
        return self.A.nrows

    @property
    def AB(self) -> RationalMatrix:
        return RationalMatrix.hstack(self.A, self.B)


def build_nz_pair(GM: GluingMatrices) -> NzPair:
    N = GM.N
    A = GM.G - GM.Gp
    B = GM.Gpp - GM.Gp
    nu = []
    for j in range(N):
        s = int(sum(GM.Gp.row(j)))
        nu.append((2 - s) if j < N - 1 else -s)
    P = NzPair(A, B, tuple(nu))
    if P.AB.rank() != N:
        raise RankDeficient("rank(A|B) < N; peripheral data is invalid")
    return P


def nz_pair_for(T: OrderedTriangulation, curve: PeripheralCurve | None = None) -> NzPair:
    return build_nz_pair(build_gluing_matrices(T, curve))


@dataclass(frozen=True)
class NzReduction:
    E: RationalMatrix
    EB: RationalMatrix
    EA: RationalMatrix
    rankB: int  # N - 2n
    pivots: tuple[int, ...]  # pivot columns of (EB)_{N-2n}
    Etilde: RationalMatrix | None
    Eprime: RationalMatrix | None

    @property
    def N(self) -> int:
        return self.E.nrows

    @property
    def d(self) -> int:
        return self.rankB

    @property
    def EB_top(self) -> RationalMatrix:
        return self.EB.block(0, self.d, 0, self.N)

    @property
    def EA_top(self) -> RationalMatrix:
        return self.EA.block(0, self.d, 0, self.N)

    @property
    def EA_bot(self) -> RationalMatrix:
        return self.EA.block(self.d, self.N, 0, self.N)

    @property
    def E_top(self) -> RationalMatrix:
        return self.E.block(0, self.d, 0, self.N)

    @property
    def E_bot(self) -> RationalMatrix:
        return self.E.block(self.d, self.N, 0, self.N)

    @property
    def Eprime_top(self) -> RationalMatrix | None:
        return None if self.Eprime is None else self.Eprime.block(0, self.d, 0, self.N)


def solve_etilde(EB_top, EA_top, EA_bot, scriptG) -> RationalMatrix | None:
    """E~ with EA_top + E~ EA_bot = EB_top G, or None."""
    d, N = EB_top.shape
    rhs = EB_top @ scriptG - EA_top
    if EA_bot.nrows == 0:
        return RationalMatrix.zeros(d, 0) if rhs.is_zero() else None
    try:
        return solve_left(EA_bot, rhs)
    except NoRationalSolution:
        return None


def reduce_nz(P: NzPair, scriptG: RationalMatrix | None = None) -> NzReduction:
    N = P.N
    w = rref_with_witness(RationalMatrix.hstack(P.B, P.A))
    E = w.E
    EB, EA = E @ P.B, E @ P.A
    d = P.B.rank()
    pivots = tuple(p for p in w.pivots if p < N)
    assert len(pivots) == d
    assert EB.block(d, N, 0, N).is_zero()
    Et = Ep = None
    if scriptG is not None:
        Et = solve_etilde(EB.block(0, d, 0, N), EA.block(0, d, 0, N), EA.block(d, N, 0, N), scriptG)
        if Et is not None:
            top = RationalMatrix.hstack(RationalMatrix.identity(d), Et)
            bot = RationalMatrix.hstack(RationalMatrix.zeros(N - d, d), RationalMatrix.identity(N - d))
            Ep = RationalMatrix.vstack(top, bot) @ E
    return NzReduction(E, EB, EA, d, pivots, Et, Ep)


def omega(r, s) -> Fraction:
    """Neumann-Zagier symplectic form on rows (r_A | r_B)."""
    n = len(r) // 2
    return sum((Fraction(r[i]) * s[n + i] - Fraction(r[n + i]) * s[i] for i in range(n)), Fraction(0))


def symplectic_check(T: OrderedTriangulation, P: NzPair, meridian: PeripheralCurve | None = None) -> dict:
    meridian = T.meridian if meridian is None else meridian
    rows = [list(r) for r in P.AB.rows]
    N = P.N
    for i, j in itertools.combinations(range(N), 2):
        if omega(rows[i], rows[j]) != 0:
            raise SymplecticViolation(f"rows {i},{j} pair to {omega(rows[i], rows[j])}")
    m = curve_row_ab(meridian)
    # all edge rows, including the dropped one
    edge_pairs = [omega(m, e) for e in _edge_rows_ab(T)]
    if any(edge_pairs):
        raise SymplecticViolation(f"meridian pairs nontrivially with edges: {edge_pairs}")
    ml = omega(m, rows[-1])
    if abs(ml) != 2:
        raise NotAGeneratorPair(f"omega(m, l) = {ml}, expected +-2")
    return {
        "row_pairings_zero": True,
        "meridian_edge_pairings": [int(x) for x in edge_pairs],
        "omega_m_l": int(ml),
        "intersection_l_m": int(-ml // 2),
    }


# -- flattenings -------------------------------------------------------------

@dataclass(frozen=True)
class Flattening:
    f: tuple[int, ...]
    fp: tuple[int, ...]
    fpp: tuple[int, ...]

    def as_vector(self) -> list[int]:
        return list(self.f) + list(self.fp) + list(self.fpp)


def _flattening_system(T: OrderedTriangulation, curves: list[PeripheralCurve]):
    N = T.N
    inc = T.incidence
    rows, rhs = [], []
    for i in range(N - 1):
        rows.append([int(x) for s in range(3) for x in inc[i, :, s]])
        rhs.append(2)
    for cv in curves:
        rows.append(list(cv.c) + list(cv.cp) + list(cv.cpp))
        rhs.append(0)
    for j in range(N):
        r = [0] * (3 * N)
        r[j] = r[N + j] = r[2 * N + j] = 1
        rows.append(r)
        rhs.append(1)
    return RationalMatrix(rows, ncols=3 * N), rhs


def verify_flattening(T: OrderedTriangulation, F: Flattening, curves: list[PeripheralCurve]) -> bool:
    M, rhs = _flattening_system(T, curves)
    return M.apply(F.as_vector()) == [Fraction(x) for x in rhs]


def solve_strong_flattening(T: OrderedTriangulation, count: int = 1) -> list[Flattening] | Flattening:
    """Integer flattening with longitude and meridian rows zero.

    With count > 1, returns that many distinct solutions (shifts along the
    integer kernel lattice, smallest coefficients first).
    """
    N = T.N
    M, rhs = _flattening_system(T, [T.longitude, T.meridian])
    try:
        x0, kernel = integer_solve(M, rhs)
    except NoRationalSolution as exc:
        raise NoIntegerSolution(str(exc)) from exc

    def mk(x):
        return Flattening(tuple(x[:N]), tuple(x[N:2 * N]), tuple(x[2 * N:]))

    if count == 1:
        return mk(x0)
    out = [mk(x0)]
    bound = 1
    seen = {tuple(x0)}
    while len(out) < count and kernel:
        for coeffs in itertools.product(range(-bound, bound + 1), repeat=len(kernel)):
            x = [x0[i] + sum(c * k[i] for c, k in zip(coeffs, kernel)) for i in range(3 * N)]
            if tuple(x) not in seen:
                seen.add(tuple(x))
                out.append(mk(x))
                if len(out) == count:
                    break
        bound *= 2
    return out
