"""Matrix-level fixtures that no bundled triangulation provides.

The only one needed so far passes the longitude conditions with n = 1 but has
a nonzero last column in E_{2n}, so it is FAMED for l and not for (l, m).
It is assembled backwards from the reduced form, so every clause holds or
fails by construction and the checker has to rediscover that.
"""

from __future__ import annotations

import json

import numpy as np

from .exact_linalg import RationalMatrix, rref_with_witness
from .face_kernel import FaceMatrices, reduce_kernel


def _random_face_data(rng, N):
    while True:
        X = []
        for _ in range(4):
            rows = np.zeros((N, 2 * N), dtype=int)
            rows[np.arange(N), rng.integers(0, 2 * N, size=N)] = 1
            X.append(RationalMatrix(rows.tolist(), ncols=2 * N))
        signs = [int(s) for s in rng.choice([-1, 1], size=N)]
        Em = RationalMatrix.diag(signs)
        A = RationalMatrix.vstack(X[0] - X[1] + X[2], X[2] - X[3])
        B = RationalMatrix.vstack(RationalMatrix.zeros(N, N), Em)
        F = FaceMatrices(tuple(X), A, B, Em, tuple((0, j) for j in range(2 * N)), ())
        if A.rank() != 2 * N - 1:
            continue
        K = reduce_kernel(F)
        if K.delta_block.rank() == 2:
            return X, signs, F, K


def last_column_failure(seed: int = 7) -> dict:
    rng = np.random.default_rng(seed)
    N = 3
    X, signs, F, K = _random_face_data(rng, N)
    D = rref_with_witness(K.delta_block)
    Dr, piv = D.R, D.pivots
    eb = RationalMatrix([[1, int(rng.integers(-2, 3)), int(rng.integers(-2, 3))]])
    g = eb @ K.G
    Et = g.take_cols(list(piv))
    ea = g - Et @ Dr
    EB = RationalMatrix.vstack(eb, RationalMatrix.zeros(2, N))
    EA = RationalMatrix.vstack(ea, Dr)
    # unimodular E whose bottom rows have a nonzero last entry
    E = RationalMatrix([[1, 0, 0], [1, 1, 0], [0, 1, 1]])
    Ei = E.inverse()
    A, B = Ei @ EA, Ei @ EB
    AB = RationalMatrix.hstack(A, B)
    edge_rows = [list(AB.row(0)), list(AB.row(1))]
    edge_rows.append([-(a + b) for a, b in zip(*edge_rows)])
    counts = np.zeros((N, N, 3), dtype=int)
    for i in range(N):
        counts[i, i] = 2
    return {
        "format": "famed-matrices",
        "name": "synthetic-last-column",
        "N": N,
        "signs": signs,
        "X": [x.to_strings() for x in X],
        "A": A.to_strings(),
        "B": B.to_strings(),
        "nu": [2, 2, 0],
        "edge_angle_counts": counts.tolist(),
        "edge_rows": [[str(v) for v in r] for r in edge_rows],
        "meridian": {"row": [0] * (2 * N), "constant": 0},
    }


if __name__ == "__main__":
    print(json.dumps(last_column_failure(), indent=1))
