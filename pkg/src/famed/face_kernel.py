"""Face adjacency matrices and the reduced kinematical-kernel data (delta block, G, Q)."""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction

from .exact_linalg import RationalMatrix, two_sided_reduce
from .triangulation_core import OrderedTriangulation


@dataclass(frozen=True)
class FaceMatrices:
    X: tuple[RationalMatrix, RationalMatrix, RationalMatrix, RationalMatrix]
    A: RationalMatrix  # 2N x 2N
    B: RationalMatrix  # 2N x N
    E: RationalMatrix  # N x N sign matrix
    face_order: tuple[tuple[int, int], ...]  # representative (tet, face) per column
    labels: tuple[str, ...]


def face_columns(T: OrderedTriangulation, order: str = "canonical"):
    """Column index for every (tet, face), plus representatives and labels."""
    col = {}
    for j, (p, q) in enumerate(T.face_classes):
        col[p] = col[q] = j
    reps = [p for p, _ in T.face_classes]
    labels = [str(j) for j in range(len(reps))]
    if order == "labels":
        if T.face_labels is None:
            raise ValueError("triangulation carries no face labels")
        perm = {col[(t, k)]: new for new, (_, t, k) in enumerate(T.face_labels)}
        col = {key: perm[j] for key, j in col.items()}
        reps = [(t, k) for _, t, k in T.face_labels]
        labels = [l for l, _, _ in T.face_labels]
    elif order != "canonical":
        raise ValueError(order)
    return col, tuple(reps), tuple(labels)


def build_face_matrices(T: OrderedTriangulation, order: str = "canonical") -> FaceMatrices:
    N = T.N
    col, reps, labels = face_columns(T, order)
    X = []
    for k in range(4):
        rows = [[0] * (2 * N) for _ in range(N)]
        for i in range(N):
            rows[i][col[(i, k)]] = 1
        X.append(RationalMatrix(rows, ncols=2 * N))
    top = X[0] - X[1] + X[2]
    bot = X[2] - X[3]
    A = RationalMatrix.vstack(top, bot)
    E = RationalMatrix.diag(list(T.signs))
    B = RationalMatrix.vstack(RationalMatrix.zeros(N, N), E)
    return FaceMatrices(tuple(X), A, B, E, reps, labels)


@dataclass(frozen=True)
class KernelReduction:
    r: int
    n: int
    E1: RationalMatrix
    E2: RationalMatrix
    X0E2_r: RationalMatrix
    X0E2_n: RationalMatrix
    E1B_r: RationalMatrix
    E1B_n: RationalMatrix
    G: RationalMatrix  # script G
    Q: RationalMatrix

    @property
    def delta_block(self) -> RationalMatrix:
        """The 2n x N stacked matrix whose rows are imposed by delta functions."""
        return RationalMatrix.vstack(self.X0E2_n.T, self.E1B_n)

    @property
    def det_E1E2(self) -> Fraction:
        return self.E1.det() * self.E2.det()


def reduce_kernel(F: FaceMatrices) -> KernelReduction:
    N = F.E.nrows
    w = two_sided_reduce(F.A)
    r = w.r
    n = 2 * N - r
    X0E2 = F.X[0] @ w.E2
    E1B = w.E1 @ F.B
    Xr, Xn = X0E2.block(0, N, 0, r), X0E2.block(0, N, r, 2 * N)
    Br, Bn = E1B.block(0, r, 0, N), E1B.block(r, 2 * N, 0, N)
    P = Xr @ Br
    Q = P + P.T
    half = (F.E + RationalMatrix.identity(N)).scale(Fraction(1, 2))
    return KernelReduction(r, n, w.E1, w.E2, Xr, Xn, Br, Bn, Q + half, Q)
