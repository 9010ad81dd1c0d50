"""Exact rational matrices with recorded elimination witnesses.

Everything here is Fraction based. Matrices are small (at most a few dozen
rows), so clarity wins over speed.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from math import gcd
from typing import Iterable, Sequence

import numpy as np

from .errors import DimensionMismatch, NoIntegerSolution, NoRationalSolution


def to_fraction(x) -> Fraction:
    if isinstance(x, Fraction):
        return x
    if isinstance(x, str):
        return Fraction(x.strip())
    if isinstance(x, (int, np.integer)):
        return Fraction(int(x))
    if isinstance(x, float):
        if not x.is_integer():
            raise TypeError(f"refusing inexact float entry {x!r}")
        return Fraction(int(x))
    return Fraction(x)


def frac_str(q: Fraction) -> str:
    return f"{q.numerator}" if q.denominator == 1 else f"{q.numerator}/{q.denominator}"


class RationalMatrix:
    """Immutable dense matrix over Q."""

    __slots__ = ("_rows", "_nrows", "_ncols")

    def __init__(self, rows: Iterable[Iterable], ncols: int | None = None):
        data = tuple(tuple(to_fraction(v) for v in r) for r in rows)
        if data:
            widths = {len(r) for r in data}
            if len(widths) != 1:
                raise DimensionMismatch("ragged rows")
            (w,) = widths
            if ncols is not None and ncols != w:
                raise DimensionMismatch(f"expected {ncols} columns, got {w}")
            ncols = w
        self._rows = data
        self._nrows = len(data)
        self._ncols = 0 if ncols is None else ncols

    # construction
    @classmethod
    def zeros(cls, m: int, n: int) -> "RationalMatrix":
        return cls([[0] * n for _ in range(m)], ncols=n)

    @classmethod
    def identity(cls, n: int) -> "RationalMatrix":
        return cls([[1 if i == j else 0 for j in range(n)] for i in range(n)], ncols=n)

    @classmethod
    def diag(cls, entries: Sequence) -> "RationalMatrix":
        n = len(entries)
        return cls([[entries[i] if i == j else 0 for j in range(n)] for i in range(n)], ncols=n)

    @classmethod
    def column(cls, entries: Sequence) -> "RationalMatrix":
        return cls([[e] for e in entries], ncols=1)

    @classmethod
    def hstack(cls, *blocks: "RationalMatrix") -> "RationalMatrix":
        m = blocks[0].nrows
        if any(b.nrows != m for b in blocks):
            raise DimensionMismatch("hstack row counts differ")
        rows = [sum((b._rows[i] for b in blocks), ()) for i in range(m)]
        return cls(rows, ncols=sum(b.ncols for b in blocks))

    @classmethod
    def vstack(cls, *blocks: "RationalMatrix") -> "RationalMatrix":
        n = blocks[0].ncols
        if any(b.ncols != n for b in blocks):
            raise DimensionMismatch("vstack column counts differ")
        return cls([r for b in blocks for r in b._rows], ncols=n)

    # shape and access
    @property
    def shape(self) -> tuple[int, int]:
        return (self._nrows, self._ncols)

    @property
    def nrows(self) -> int:
        return self._nrows

    @property
    def ncols(self) -> int:
        return self._ncols

    @property
    def rows(self) -> tuple[tuple[Fraction, ...], ...]:
        return self._rows

    def __getitem__(self, ij):
        i, j = ij
        return self._rows[i][j]

    def row(self, i: int) -> tuple[Fraction, ...]:
        return self._rows[i]

    def col(self, j: int) -> tuple[Fraction, ...]:
        return tuple(r[j] for r in self._rows)

    def block(self, r0: int, r1: int, c0: int, c1: int) -> "RationalMatrix":
        return RationalMatrix([r[c0:c1] for r in self._rows[r0:r1]], ncols=c1 - c0)

    def take_rows(self, idx: Sequence[int]) -> "RationalMatrix":
        return RationalMatrix([self._rows[i] for i in idx], ncols=self._ncols)

    def take_cols(self, idx: Sequence[int]) -> "RationalMatrix":
        return RationalMatrix([[r[j] for j in idx] for r in self._rows], ncols=len(idx))

    # arithmetic
    @property
    def T(self) -> "RationalMatrix":
        return RationalMatrix(
            [[self._rows[i][j] for i in range(self._nrows)] for j in range(self._ncols)],
            ncols=self._nrows,
        )

    def __matmul__(self, other: "RationalMatrix") -> "RationalMatrix":
        if self._ncols != other._nrows:
            raise DimensionMismatch(f"{self.shape} @ {other.shape}")
        cols = other.T._rows
        return RationalMatrix(
            [[sum((a * b for a, b in zip(r, c)), Fraction(0)) for c in cols] for r in self._rows],
            ncols=other._ncols,
        )

    def __add__(self, other: "RationalMatrix") -> "RationalMatrix":
        if self.shape != other.shape:
            raise DimensionMismatch(f"{self.shape} + {other.shape}")
        return RationalMatrix(
            [[a + b for a, b in zip(r, s)] for r, s in zip(self._rows, other._rows)],
            ncols=self._ncols,
        )

    def __sub__(self, other: "RationalMatrix") -> "RationalMatrix":
        return self + other.scale(-1)

    def __neg__(self) -> "RationalMatrix":
        return self.scale(-1)

    def scale(self, c) -> "RationalMatrix":
        c = to_fraction(c)
        return RationalMatrix([[c * a for a in r] for r in self._rows], ncols=self._ncols)

    def apply(self, v: Sequence) -> list[Fraction]:
        if len(v) != self._ncols:
            raise DimensionMismatch("vector length")
        v = [to_fraction(x) for x in v]
        return [sum((a * b for a, b in zip(r, v)), Fraction(0)) for r in self._rows]

    def __eq__(self, other) -> bool:
        return isinstance(other, RationalMatrix) and self.shape == other.shape and self._rows == other._rows

    def __hash__(self) -> int:
        return hash((self.shape, self._rows))

    def __repr__(self) -> str:
        return f"RationalMatrix({self.to_strings()})"

    # predicates / conversions
    def is_zero(self) -> bool:
        return all(a == 0 for r in self._rows for a in r)

    def is_integral(self) -> bool:
        return all(a.denominator == 1 for r in self._rows for a in r)

    def to_strings(self) -> list[list[str]]:
        return [[frac_str(a) for a in r] for r in self._rows]

    def to_int_lists(self) -> list[list[int]]:
        if not self.is_integral():
            raise ValueError("matrix has non-integer entries")
        return [[int(a) for a in r] for r in self._rows]

    def to_numpy(self) -> np.ndarray:
        return np.array([[float(a) for a in r] for r in self._rows], dtype=float).reshape(self.shape)

    def rank(self) -> int:
        return len(rref_with_witness(self).pivots)

    def det(self) -> Fraction:
        if self._nrows != self._ncols:
            raise DimensionMismatch("det of non-square matrix")
        a = [list(r) for r in self._rows]
        n = self._nrows
        d = Fraction(1)
        for c in range(n):
            p = next((i for i in range(c, n) if a[i][c] != 0), None)
            if p is None:
                return Fraction(0)
            if p != c:
                a[c], a[p] = a[p], a[c]
                d = -d
            d *= a[c][c]
            for i in range(c + 1, n):
                if a[i][c] != 0:
                    f = a[i][c] / a[c][c]
                    a[i] = [x - f * y for x, y in zip(a[i], a[c])]
        return d

    def inverse(self) -> "RationalMatrix":
        if self._nrows != self._ncols:
            raise DimensionMismatch("inverse of non-square matrix")
        w = rref_with_witness(self)
        if len(w.pivots) != self._nrows:
            raise NoRationalSolution("matrix is singular")
        return w.E


def as_matrix(x) -> RationalMatrix:
    return x if isinstance(x, RationalMatrix) else RationalMatrix(x)


@dataclass(frozen=True)
class RrefWitness:
    input: RationalMatrix
    R: RationalMatrix
    E: RationalMatrix
    pivots: tuple[int, ...]

    @property
    def rank(self) -> int:
        return len(self.pivots)

    def verify(self) -> bool:
        return self.E @ self.input == self.R and self.E.det() != 0 and rref_with_witness(self.R).R == self.R


def rref_with_witness(M) -> RrefWitness:
    """Gauss-Jordan with the first nonzero entry as pivot; E records the row operations."""
    M = as_matrix(M)
    m, n = M.shape
    a = [list(r) for r in M.rows]
    e = [[Fraction(int(i == j)) for j in range(m)] for i in range(m)]
    pivots = []
    r = 0
    for c in range(n):
        if r == m:
            break
        p = next((i for i in range(r, m) if a[i][c] != 0), None)
        if p is None:
            continue
        if p != r:
            a[r], a[p] = a[p], a[r]
            e[r], e[p] = e[p], e[r]
        inv = 1 / a[r][c]
        if inv != 1:
            a[r] = [x * inv for x in a[r]]
            e[r] = [x * inv for x in e[r]]
        for i in range(m):
            if i != r and a[i][c] != 0:
                f = a[i][c]
                a[i] = [x - f * y for x, y in zip(a[i], a[r])]
                e[i] = [x - f * y for x, y in zip(e[i], e[r])]
        pivots.append(c)
        r += 1
    return RrefWitness(M, RationalMatrix(a, ncols=n), RationalMatrix(e, ncols=m), tuple(pivots))


@dataclass(frozen=True)
class TwoSidedWitness:
    E1: RationalMatrix
    E2: RationalMatrix
    r: int

    def verify(self, M: RationalMatrix) -> bool:
        m, n = M.shape
        target = RationalMatrix(
            [[1 if (i == j and i < self.r) else 0 for j in range(n)] for i in range(m)], ncols=n
        )
        return self.E1 @ M @ self.E2 == target and self.E1.det() != 0 and self.E2.det() != 0


def two_sided_reduce(M) -> TwoSidedWitness:
    """E1 M E2 = [[I_r, 0], [0, 0]]. Invertible M gets E1 = M^-1, E2 = Id."""
    M = as_matrix(M)
    m, n = M.shape
    w = rref_with_witness(M)
    r = w.rank
    if m == n and r == n:
        return TwoSidedWitness(w.E, RationalMatrix.identity(n), r)
    # clear the non-pivot columns against the pivot columns, then move pivots to the front
    C = [[Fraction(int(i == j)) for j in range(n)] for i in range(n)]
    piv = set(w.pivots)
    for j in range(n):
        if j in piv:
            continue
        for row_i, pc in enumerate(w.pivots):
            f = w.R[row_i, j]
            if f != 0:
                C[pc][j] -= f
    order = list(w.pivots) + [j for j in range(n) if j not in piv]
    P = [[Fraction(int(order[j] == i)) for j in range(n)] for i in range(n)]
    E2 = RationalMatrix(C, ncols=n) @ RationalMatrix(P, ncols=n)
    return TwoSidedWitness(w.E, E2, r)


def row_equivalent(M1, M2) -> bool:
    M1, M2 = as_matrix(M1), as_matrix(M2)
    if M1.shape != M2.shape:
        raise DimensionMismatch(f"{M1.shape} vs {M2.shape}")
    return rref_with_witness(M1).R == rref_with_witness(M2).R


def kernel_basis(M) -> list[list[Fraction]]:
    """Rational basis of {x : Mx = 0}."""
    M = as_matrix(M)
    w = rref_with_witness(M)
    n = M.ncols
    piv = list(w.pivots)
    basis = []
    for f in (j for j in range(n) if j not in piv):
        v = [Fraction(0)] * n
        v[f] = Fraction(1)
        for i, pc in enumerate(piv):
            v[pc] = -w.R[i, f]
        basis.append(v)
    return basis


def solve_rational(M, b) -> list[Fraction]:
    """One rational solution of Mx = b (free variables set to 0)."""
    M = as_matrix(M)
    b = [to_fraction(x) for x in b]
    if len(b) != M.nrows:
        raise DimensionMismatch("rhs length")
    w = rref_with_witness(RationalMatrix.hstack(M, RationalMatrix.column(b)))
    n = M.ncols
    if n in w.pivots:
        raise NoRationalSolution("inconsistent system")
    x = [Fraction(0)] * n
    for i, pc in enumerate(w.pivots):
        x[pc] = w.R[i, n]
    return x


def solve_left(X, Y) -> RationalMatrix:
    """Some Z with Z X = Y."""
    X, Y = as_matrix(X), as_matrix(Y)
    cols = [solve_rational(X.T, Y.row(i)) for i in range(Y.nrows)]
    return RationalMatrix(cols, ncols=X.nrows)


def in_row_space(v: Sequence, M) -> list[Fraction] | None:
    """Coefficients c with c M = v, or None."""
    M = as_matrix(M)
    try:
        return solve_rational(M.T, v)
    except NoRationalSolution:
        return None


# -- integer solutions -----------------------------------------------------

def _xgcd(a: int, b: int) -> tuple[int, int, int]:
    x0, x1, y0, y1 = 1, 0, 0, 1
    while b:
        q, a, b = a // b, b, a % b
        x0, x1 = x1, x0 - q * x1
        y0, y1 = y1, y0 - q * y1
    return a, x0, y0


def column_hermite(M: list[list[int]]) -> tuple[list[list[int]], list[list[int]], int]:
    """Integer column reduction M U = H (lower echelon); returns (H, U, rank)."""
    m = len(M)
    n = len(M[0]) if m else 0
    H = [list(r) for r in M]
    U = [[int(i == j) for j in range(n)] for i in range(n)]

    def colop(j, k, a, b, c, d):
        # (col_j, col_k) <- (a col_j + b col_k, c col_j + d col_k)
        for T in (H, U):
            for r in T:
                x, y = r[j], r[k]
                r[j], r[k] = a * x + b * y, c * x + d * y

    piv = 0
    for i in range(m):
        if piv == n:
            break
        for k in range(piv + 1, n):
            if H[i][k] == 0:
                continue
            x, y = H[i][piv], H[i][k]
            g, s, t = _xgcd(x, y)
            colop(piv, k, s, t, -y // g, x // g)
        if H[i][piv] == 0:
            continue
        if H[i][piv] < 0:
            for T in (H, U):
                for r in T:
                    r[piv] = -r[piv]
        piv += 1
    return H, U, piv


def integer_solve(M, b) -> tuple[list[int], list[list[int]]]:
    """Integer solution of Mx = b plus a Z-basis of the integer kernel.

    The rational system is checked first so the two failure modes stay distinct.
    """
    M = as_matrix(M)
    b = [to_fraction(x) for x in b]
    solve_rational(M, b)  # raises NoRationalSolution
    # clear denominators row by row
    rows, rhs = [], []
    for r, bi in zip(M.rows, b):
        den = 1
        for q in (*r, bi):
            den = den * q.denominator // gcd(den, q.denominator)
        rows.append([int(q * den) for q in r])
        rhs.append(int(bi * den))
    H, U, rank = column_hermite(rows)
    n = M.ncols
    # forward substitution in the echelon H
    y = [0] * n
    col = 0
    for i in range(len(H)):
        acc = rhs[i] - sum(H[i][j] * y[j] for j in range(col))
        if col < rank and H[i][col] != 0:
            if acc % H[i][col]:
                raise NoIntegerSolution(f"row {i}: {acc} not divisible by {H[i][col]}")
            y[col] = acc // H[i][col]
            col += 1
        elif acc != 0:
            raise NoIntegerSolution(f"row {i} inconsistent over Z")
    x = [sum(U[i][j] * y[j] for j in range(n)) for i in range(n)]
    kernel = [[U[i][j] for i in range(n)] for j in range(rank, n)]
    assert M.apply(x) == b
    return x, kernel
