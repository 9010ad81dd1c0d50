"""Decide the generalized FAMED conditions with exact certificates."""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Any

import numpy as np

from .errors import MalformedInput
from .exact_linalg import RationalMatrix, as_matrix, frac_str, in_row_space, row_equivalent, rref_with_witness
from .face_kernel import FaceMatrices, KernelReduction, build_face_matrices, reduce_kernel
from .nz_data import (
    NzPair,
    _edge_rows_ab,
    build_nz_pair,
    build_gluing_matrices,
    curve_constant,
    curve_row_ab,
    omega,
    reduce_nz,
    solve_etilde,
)
from .triangulation_core import ANGLE_OF_EDGE, AngleStructure, OrderedTriangulation


# -- exact simplex -----------------------------------------------------------

def _simplex(T, basis, ncols, allowed):
    """Maximise the objective stored in the last row of tableau T (Bland's rule)."""
    m = len(T) - 1
    while True:
        obj = T[-1]
        enter = next((j for j in range(ncols) if allowed[j] and obj[j] < 0), None)
        if enter is None:
            return "optimal"
        best = None
        for i in range(m):
            if T[i][enter] > 0:
                ratio = T[i][-1] / T[i][enter]
                if best is None or ratio < best[0] or (ratio == best[0] and basis[i] < basis[best[1]]):
                    best = (ratio, i)
        if best is None:
            return "unbounded"
        _pivot(T, best[1], enter)
        basis[best[1]] = enter


def _pivot(T, r, c):
    inv = 1 / T[r][c]
    T[r] = [x * inv for x in T[r]]
    for i in range(len(T)):
        if i != r and T[i][c] != 0:
            f = T[i][c]
            T[i] = [x - f * y for x, y in zip(T[i], T[r])]


def lp_max(c, A, b):
    """max c.x s.t. A x = b, x >= 0, exact. Returns (status, x, y, value).

    y is the dual vector (c_B B^-1) so that y A >= c and y b = value at optimum.
    """
    A = [[Fraction(v) for v in row] for row in A]
    b = [Fraction(v) for v in b]
    c = [Fraction(v) for v in c]
    m, n = len(A), len(c)
    for i in range(m):
        if b[i] < 0:
            A[i] = [-v for v in A[i]]
            b[i] = -b[i]
    # phase 1 with artificials n..n+m-1; the last m+... columns track B^-1 via identity
    T = [A[i] + [Fraction(int(i == k)) for k in range(m)] + [b[i]] for i in range(m)]
    T.append([-sum(A[i][j] for i in range(m)) for j in range(n)] + [Fraction(0)] * m + [-sum(b)])
    basis = [n + i for i in range(m)]
    _simplex(T, basis, n + m, [True] * (n + m))
    if T[-1][-1] != 0:
        # Farkas vector from the phase-1 duals
        y = [T[-1][n + i] for i in range(m)]
        return "infeasible", None, y, None
    # drive artificials out of the basis; drop redundant rows
    rows_keep = list(range(m))
    for i in range(m):
        if basis[i] >= n:
            j = next((j for j in range(n) if T[i][j] != 0), None)
            if j is None:
                rows_keep.remove(i)
            else:
                _pivot(T, i, j)
                basis[i] = j
    T = [T[i] for i in rows_keep] + [T[-1]]
    basis = [basis[i] for i in rows_keep]
    # phase 2 objective
    obj = [-cj for cj in c] + [Fraction(0)] * m + [Fraction(0)]
    for i, bi in enumerate(basis):
        if obj[bi] != 0:
            f = obj[bi]
            obj = [x - f * y for x, y in zip(obj, T[i])]
    T[-1] = obj
    status = _simplex(T, basis, n + m, [True] * n + [False] * m)
    if status != "optimal":
        return status, None, None, None
    x = [Fraction(0)] * n
    for i, bi in enumerate(basis):
        if bi < n:
            x[bi] = T[i][-1]
    # duals: reduced costs of the artificial (identity) columns
    y_full = [Fraction(0)] * m
    for i in range(m):
        y_full[i] = T[-1][n + i]
    value = sum((ci * xi for ci, xi in zip(c, x)), Fraction(0))
    return "optimal", x, y_full, value


# -- input bundle --------------------------------------------------------------

@dataclass(frozen=True)
class FamedData:
    """Everything the FAMED clauses look at, detached from the triangulation."""

    N: int
    face: FaceMatrices
    nz: NzPair
    angle_counts: np.ndarray  # (edges, N, 3) counts of a, b, c corners
    edge_rows: tuple[tuple[int, ...], ...]  # all edge rows of (A|B)
    meridian_row: tuple[int, ...]
    meridian_const: int
    name: str = ""

    @classmethod
    def from_triangulation(cls, T: OrderedTriangulation) -> "FamedData":
        counts = np.zeros((T.num_edges, T.N, 3), dtype=np.int64)
        for i, edges in enumerate(T.edge_classes):
            for t, e in edges:
                counts[i, t, ANGLE_OF_EDGE[e]] += 1
        return cls(
            N=T.N,
            face=build_face_matrices(T),
            nz=build_nz_pair(build_gluing_matrices(T)),
            angle_counts=counts,
            edge_rows=tuple(tuple(r) for r in _edge_rows_ab(T)),
            meridian_row=tuple(curve_row_ab(T.meridian)),
            meridian_const=curve_constant(T.meridian),
            name=T.name,
        )

    @classmethod
    def from_matrices(cls, data: dict) -> "FamedData":
        """Matrix-level input (format 'famed-matrices'), used for synthetic fixtures."""
        try:
            N = int(data["N"])
            X = tuple(as_matrix(x) for x in data["X"])
            signs = [int(s) for s in data["signs"]]
            A = as_matrix(data["A"])
            B = as_matrix(data["B"])
            nu = tuple(int(v) for v in data["nu"])
            counts = np.array(data["edge_angle_counts"], dtype=np.int64)
            edge_rows = tuple(tuple(Fraction(v) for v in r) for r in data["edge_rows"])
            mer = data["meridian"]
            mrow, mconst = tuple(int(v) for v in mer["row"]), int(mer.get("constant", 0))
        except (KeyError, TypeError, ValueError) as exc:
            raise MalformedInput(f"bad matrix-level input: {exc}") from exc
        if len(X) != 4 or any(x.shape != (N, 2 * N) for x in X) or A.shape != (N, N) or B.shape != (N, N):
            raise MalformedInput("matrix shapes do not match N")
        if counts.shape[1:] != (N, 3):
            raise MalformedInput("edge_angle_counts must be (edges, N, 3)")
        Em = RationalMatrix.diag(signs)
        face = FaceMatrices(
            X,
            RationalMatrix.vstack(X[0] - X[1] + X[2], X[2] - X[3]),
            RationalMatrix.vstack(RationalMatrix.zeros(N, N), Em),
            Em,
            tuple((0, j) for j in range(2 * N)),
            tuple(str(j) for j in range(2 * N)),
        )
        return cls(N, face, NzPair(A, B, nu), counts, edge_rows, mrow, mconst, str(data.get("name", "")))


def load_input(text: str):
    """Parse either a triangulation file or a matrix-level fixture."""
    from .triangulation_core import parse_triangulation

    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise MalformedInput(f"not JSON: {exc}") from exc
    if isinstance(data, dict) and data.get("format") == "famed-matrices":
        return FamedData.from_matrices(data)
    return parse_triangulation(data)


# -- certificate ----------------------------------------------------------------

L_CLAUSES = ("angle_structures", "nullity", "delta_rows", "gluing_rows")
LM_CLAUSES = ("last_column_zero", "meridian_match")

@dataclass
class FamedCertificate:
    clauses: dict[str, bool | None] = field(default_factory=dict)
    witnesses: dict[str, Any] = field(default_factory=dict)

    @property
    def famed_l(self) -> bool:
        return all(self.clauses.get(k) for k in L_CLAUSES)

    @property
    def famed_lm(self) -> bool:
        return self.famed_l and all(self.clauses.get(k) for k in LM_CLAUSES)

    def to_json(self) -> dict:
        return {
            "clauses": dict(sorted(self.clauses.items())),
            "famed_l": self.famed_l,
            "famed_lm": self.famed_lm,
            "witnesses": self.witnesses,
        }


def _m(M: RationalMatrix) -> list[list[str]]:
    return M.to_strings()


def _v(v) -> list[str]:
    return [frac_str(Fraction(x)) for x in v]


@dataclass(frozen=True)
class AngleResult:
    feasible: bool
    structure: AngleStructure | None
    min_angle: Fraction | None  # in units of pi
    dual: list[Fraction] | None


def angle_polytope_feasible(data) -> AngleResult:
    """Maximise the smallest angle over the angle polytope (exact, units of pi)."""
    if isinstance(data, OrderedTriangulation):
        data = FamedData.from_triangulation(data)
    counts = data.angle_counts
    E, N = counts.shape[0], data.N
    # variables: slack s (3N) >= 0 and t >= 0; angle = s + t
    nv = 3 * N + 1
    A, b = [], []
    for j in range(N):
        row = [0] * nv
        row[3 * j: 3 * j + 3] = [1, 1, 1]
        row[-1] = 3
        A.append(row)
        b.append(1)
    for i in range(E):
        row = [0] * nv
        for j in range(N):
            for k in range(3):
                row[3 * j + k] = int(counts[i, j, k])
        row[-1] = int(counts[i].sum())
        A.append(row)
        b.append(2)
    c = [0] * (3 * N) + [1]
    status, x, y, val = lp_max(c, A, b)
    if status != "optimal" or val <= 0:
        return AngleResult(False, None, val, y)
    t = x[-1]
    ang = [[x[3 * j + k] + t for k in range(3)] for j in range(N)]
    return AngleResult(True, AngleStructure.from_pi_fractions(ang), t, y)


def _verify_angles(data: FamedData, ang) -> bool:
    ang = [[Fraction(v) for v in r] for r in ang]
    if any(v <= 0 for r in ang for v in r) or any(sum(r) != 1 for r in ang):
        return False
    for i in range(data.angle_counts.shape[0]):
        w = sum(int(data.angle_counts[i, j, k]) * ang[j][k] for j in range(data.N) for k in range(3))
        if w != 2:
            return False
    return True


def _clause4_matrices(R, G: RationalMatrix):
    N, d = R.N, R.d
    Z = RationalMatrix.zeros(N - d, N)
    M1 = RationalMatrix.vstack(
        RationalMatrix.hstack(R.EB_top, R.EA_top), RationalMatrix.hstack(Z, R.EA_bot)
    )
    M2 = RationalMatrix.vstack(
        RationalMatrix.hstack(R.EB_top, R.EB_top @ G), RationalMatrix.hstack(Z, R.EA_bot)
    )
    return M1, M2


def check_famed_l(data) -> tuple[FamedCertificate, dict]:
    """Clauses 1-4. Returns the certificate and the intermediate reductions."""
    if isinstance(data, OrderedTriangulation):
        data = FamedData.from_triangulation(data)
    cert = FamedCertificate()
    N = data.N
    ang = angle_polytope_feasible(data)
    cert.clauses["angle_structures"] = ang.feasible
    cert.witnesses["angle_structure_pi"] = (
        [_v(r) for r in ang.structure.exact] if ang.feasible else None
    )
    cert.witnesses["angle_lp_dual"] = _v(ang.dual) if ang.dual is not None else None

    K = reduce_kernel(data.face)
    nullB = N - data.nz.B.rank()
    cert.clauses["nullity"] = nullB == 2 * K.n and 2 * K.n < N
    cert.witnesses["nullity_A_face"] = K.n
    cert.witnesses["nullity_B"] = nullB

    R = reduce_nz(data.nz, K.G)
    cert.witnesses["E"] = _m(R.E)
    cert.witnesses["pivots"] = list(R.pivots)
    cert.witnesses["scriptG"] = _m(K.G)
    cert.witnesses["Q"] = _m(K.Q)
    if cert.clauses["nullity"]:
        delta = K.delta_block
        c3 = row_equivalent(R.EA_bot, delta)
        cert.clauses["delta_rows"] = c3
        cert.witnesses["rref_EA_2n"] = _m(rref_with_witness(R.EA_bot).R)
        cert.witnesses["rref_delta"] = _m(rref_with_witness(delta).R)
    else:
        cert.clauses["delta_rows"] = False
    M1, M2 = _clause4_matrices(R, K.G)
    cert.clauses["gluing_rows"] = row_equivalent(M1, M2)
    cert.witnesses["rref_clause4"] = _m(rref_with_witness(M2).R)
    cert.witnesses["Etilde"] = _m(R.Etilde) if R.Etilde is not None else None
    return cert, {"data": data, "kernel": K, "nz_reduction": R, "angles": ang}


@dataclass(frozen=True)
class MatchReport:
    matched: bool
    k: Fraction | None
    coefficients: list[Fraction] | None  # on the edge rows
    residual: list[Fraction]
    target_row: list[Fraction]


def meridian_holonomy_match(C, pivots, data: FamedData, meridian_row=None, meridian_const=None) -> MatchReport:
    """Is H(m) = sum C_i Log z_{k_i} + k pi i modulo edge relations?"""
    N = data.N
    mrow = list(data.meridian_row if meridian_row is None else meridian_row)
    mconst = data.meridian_const if meridian_const is None else meridian_const
    target = [Fraction(0)] * (2 * N)
    for ci, ki in zip(C, pivots):
        target[ki] = Fraction(ci)
    resid = [Fraction(a) - b for a, b in zip(mrow, target)]
    edges = [list(r) for r in data.edge_rows]
    if not any(resid):
        return MatchReport(True, Fraction(mconst), [Fraction(0)] * len(edges), resid, target)
    coeffs = in_row_space(resid, RationalMatrix(edges, ncols=2 * N))
    if coeffs is None:
        return MatchReport(False, None, None, resid, target)
    # each edge row evaluates to i nu_e on solutions
    nus = _edge_nus(data)
    k = sum((c * nu for c, nu in zip(coeffs, nus)), Fraction(0)) + mconst
    return MatchReport(True, k, coeffs, resid, target)


def _edge_nus(data: FamedData) -> list[Fraction]:
    """nu/pi for every edge row of (A|B) (all N of them)."""
    nus = list(data.nz.nu[: data.N - 1])
    # all edge rows sum to zero and their right-hand sides sum to 2N - 2N = 0
    nus.append(-sum(nus))
    return [Fraction(v) for v in nus]


def check_famed_lm(data, cert: FamedCertificate | None = None, ctx: dict | None = None) -> tuple[FamedCertificate, dict]:
    if isinstance(data, OrderedTriangulation):
        data = FamedData.from_triangulation(data)
    if cert is None or ctx is None:
        cert, ctx = check_famed_l(data)
    R = ctx["nz_reduction"]
    N, d = R.N, R.d
    n2 = N - d
    if n2 == 0:
        cert.clauses["last_column_zero"] = True
        cert.witnesses["E_2n_last_column"] = []
    else:
        last = R.E_bot.col(N - 1)
        cert.clauses["last_column_zero"] = all(v == 0 for v in last)
        cert.witnesses["E_2n_last_column"] = _v(last)
    if R.Eprime is None:
        cert.clauses["meridian_match"] = False
        cert.witnesses["C"] = None
        return cert, ctx
    C = [Fraction(-2) * v for v in R.Eprime_top.col(N - 1)]
    cert.witnesses["C"] = _v(C)
    rep = meridian_holonomy_match(C, R.pivots, data)
    flipped = False
    ml = omega(list(data.meridian_row), list(data.nz.AB.row(N - 1)))
    if ml == 2:
        # orientation with i(l, m) = +1 needs the opposite meridian
        flipped = True
        rep = meridian_holonomy_match(
            C, R.pivots, data, [-x for x in data.meridian_row], -data.meridian_const
        )
    cert.clauses["meridian_match"] = rep.matched
    cert.witnesses["meridian_flipped"] = flipped
    cert.witnesses["k"] = frac_str(rep.k) if rep.matched else None
    cert.witnesses["edge_coefficients"] = _v(rep.coefficients) if rep.matched else None
    cert.witnesses["match_residual_row"] = _v(rep.residual)
    ctx["match"] = rep
    return cert, ctx


def check_all(data) -> tuple[FamedCertificate, dict]:
    cert, ctx = check_famed_l(data)
    return check_famed_lm(ctx["data"], cert, ctx)


def verify_certificate(data, cert_json: dict) -> bool:
    """Re-check stored witnesses without re-running any search."""
    if isinstance(data, OrderedTriangulation):
        data = FamedData.from_triangulation(data)
    w = cert_json["witnesses"]
    cl = cert_json["clauses"]
    ok = True
    if cl["angle_structures"]:
        ok &= _verify_angles(data, w["angle_structure_pi"])
    K = reduce_kernel(data.face)
    ok &= (w["nullity_A_face"] == K.n) and (w["nullity_B"] == data.N - data.nz.B.rank())
    E = as_matrix(w["E"])
    RB = E @ data.nz.B
    RA = E @ data.nz.A
    R = RationalMatrix.hstack(RB, RA)
    ok &= E.det() != 0 and rref_with_witness(R).R == R
    if cl.get("delta_rows"):
        ok &= as_matrix(w["rref_EA_2n"]) == as_matrix(w["rref_delta"])
    if cl.get("gluing_rows") and w.get("Etilde") is not None:
        Et = as_matrix(w["Etilde"]) if w["Etilde"] else RationalMatrix.zeros(len(w["pivots"]), 0)
        d = len(w["pivots"])
        N = data.N
        lhs = RA.block(0, d, 0, N)
        if Et.ncols:
            lhs = lhs + Et @ RA.block(d, N, 0, N)
        ok &= lhs == RB.block(0, d, 0, N) @ as_matrix(w["scriptG"])
    if cl.get("meridian_match"):
        C = [Fraction(x) for x in w["C"]]
        sign = -1 if w["meridian_flipped"] else 1
        mrow = [sign * x for x in data.meridian_row]
        target = [Fraction(0)] * (2 * data.N)
        for ci, ki in zip(C, w["pivots"]):
            target[ki] = ci
        coeffs = [Fraction(x) for x in w["edge_coefficients"]]
        comb = [sum((c * r[j] for c, r in zip(coeffs, data.edge_rows)), Fraction(0)) for j in range(2 * data.N)]
        ok &= [Fraction(a) - b for a, b in zip(mrow, target)] == comb
        nus = _edge_nus(data)
        k = sum((c * nu for c, nu in zip(coeffs, nus)), Fraction(0)) + sign * data.meridian_const
        ok &= k == Fraction(w["k"])
    return bool(ok)
