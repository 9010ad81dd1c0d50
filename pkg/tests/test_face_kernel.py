from fractions import Fraction

from famed.exact_linalg import RationalMatrix
from famed.face_kernel import build_face_matrices, reduce_kernel

X0 = [[0, 1, 0, 0], [0, 0, 1, 0]]
X1 = [[0, 0, 0, 1], [1, 0, 0, 0]]
X2 = [[0, 0, 1, 0], [0, 1, 0, 0]]
X3 = [[1, 0, 0, 0], [0, 0, 0, 1]]
A = [[0, 1, 1, -1], [-1, 1, 1, 0], [-1, 0, 1, 0], [0, 1, 0, -1]]
B = [[0, 0], [0, 0], [1, 0], [0, -1]]
E = [[1, 0], [0, -1]]


def test_fig8_face_matrices(fig8):
    F = build_face_matrices(fig8, "labels")
    assert [x.to_int_lists() for x in F.X] == [X0, X1, X2, X3]
    assert F.A.to_int_lists() == A
    assert F.B.to_int_lists() == B
    assert F.E.to_int_lists() == E
    assert F.labels == ("A", "B", "C", "D")


def test_each_face_appears_twice(fig8):
    F = build_face_matrices(fig8)
    total = F.X[0] + F.X[1] + F.X[2] + F.X[3]
    assert all(s == 2 for s in [sum(c) for c in zip(*total.rows)])


def test_kernel_reduction_fig8(fig8):
    K = reduce_kernel(build_face_matrices(fig8))
    assert (K.r, K.n) == (4, 0)
    assert K.delta_block.nrows == 0
    assert K.Q == RationalMatrix([[-2, 0], [0, 2]])
    assert K.G == RationalMatrix([[-1, 0], [0, 2]])
    assert K.G == K.Q + RationalMatrix.diag([1, 0])
    assert K.Q == K.Q.T
    assert K.det_E1E2 != 0


def test_kernel_reduction_independent_of_face_order(fig8):
    a = reduce_kernel(build_face_matrices(fig8, "canonical"))
    b = reduce_kernel(build_face_matrices(fig8, "labels"))
    assert a.G == b.G and a.Q == b.Q
    assert a.det_E1E2 in (b.det_E1E2, -b.det_E1E2)
    assert isinstance(a.det_E1E2, Fraction)
